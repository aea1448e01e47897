// io.hpp - MetaImage volumes, deformation fields and landmark lists.
//
// Only axis-aligned, uncompressed, little-endian 3D MetaImage files are handled. One-file .mha
// (ElementDataFile = LOCAL) and .mhd + raw pairs are both read; writing picks the layout from
// the file extension.

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ngfreg/evaluation.hpp"
#include "ngfreg/geometry.hpp"

namespace ngfreg {

enum class ElementType { Int16, Float32, Float64 };

std::string to_metaimage_name(ElementType t);
std::size_t element_size(ElementType t);

class VolumeIoError : public std::runtime_error {
  public:
    enum class Kind { Io, MalformedHeader, TruncatedPayload, UnsupportedElementType, Unsupported, ChannelMismatch };

    VolumeIoError(Kind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

// Voxel payload converted to double, channel-interleaved per voxel.
struct RawVolume {
    Grid3 grid;
    int channels = 1;
    ElementType element_type = ElementType::Float64;
    std::vector<double> data;
};

RawVolume read_metaimage(const std::filesystem::path &path);
void write_metaimage(const std::filesystem::path &path, const RawVolume &vol);

template <class Real>
Image3<Real> read_volume(const std::filesystem::path &path);

// Float images are written as MET_FLOAT, double images as MET_DOUBLE.
template <class Real>
void write_volume(const Image3<Real> &img, const std::filesystem::path &path);

// Three interleaved channels holding world coordinates of y on the deformation grid.
template <class Real>
DeformationField<Real> read_deformation(const std::filesystem::path &path);

template <class Real>
void write_deformation(const DeformationField<Real> &y, const std::filesystem::path &path);

class LandmarkParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Whitespace-separated triples, one per line; blank lines and '#' comments are skipped. The
// result is in world millimeters.
LandmarkSet read_landmarks(const std::filesystem::path &path, LandmarkFrame frame, const Grid3 &image_grid);
LandmarkSet parse_landmarks(const std::string &text, LandmarkFrame frame, const Grid3 &image_grid);
void write_landmarks(const std::filesystem::path &path, const LandmarkSet &set);

} // namespace ngfreg
