#include "ngfreg/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace ngfreg {

static_assert(std::endian::native == std::endian::little, "MetaImage payloads are read as little-endian");

namespace fs = std::filesystem;
using Kind = VolumeIoError::Kind;

std::string to_metaimage_name(ElementType t) {
    switch(t) {
    case ElementType::Int16: return "MET_SHORT";
    case ElementType::Float32: return "MET_FLOAT";
    case ElementType::Float64: return "MET_DOUBLE";
    }
    return "MET_UNKNOWN";
}

std::size_t element_size(ElementType t) {
    switch(t) {
    case ElementType::Int16: return 2;
    case ElementType::Float32: return 4;
    case ElementType::Float64: return 8;
    }
    return 0;
}

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if(b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_numbers(const std::string &key, const std::string &value, std::size_t expected) {
    std::istringstream is(value);
    std::vector<double> out;
    std::string tok;
    while(is >> tok) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch(const std::exception &) {
            used = 0;
        }
        if(used != tok.size()) throw VolumeIoError(Kind::MalformedHeader, "Non-numeric value in " + key + ": '" + tok + "'");
        out.push_back(v);
    }
    if(out.size() != expected)
        throw VolumeIoError(Kind::MalformedHeader, key + " needs " + std::to_string(expected) + " values, got " +
                                                       std::to_string(out.size()));
    return out;
}

bool parse_bool(const std::string &key, const std::string &value) {
    if(value == "True" || value == "true" || value == "1") return true;
    if(value == "False" || value == "false" || value == "0") return false;
    throw VolumeIoError(Kind::MalformedHeader, "Expected True/False for " + key + ", got '" + value + "'");
}

ElementType parse_element_type(const std::string &value) {
    if(value == "MET_SHORT") return ElementType::Int16;
    if(value == "MET_FLOAT") return ElementType::Float32;
    if(value == "MET_DOUBLE") return ElementType::Float64;
    throw VolumeIoError(Kind::UnsupportedElementType, "Unsupported ElementType '" + value +
                                                          "' (MET_SHORT, MET_FLOAT and MET_DOUBLE are supported)");
}

std::string format_numbers(const double *v, int n) {
    std::ostringstream os;
    os << std::setprecision(17);
    for(int i = 0; i < n; ++i) os << (i ? " " : "") << v[i];
    return os.str();
}

template <class T>
void decode(const std::vector<char> &bytes, std::vector<double> &out) {
    const std::size_t n = bytes.size() / sizeof(T);
    out.resize(n);
    for(std::size_t i = 0; i < n; ++i) {
        T v;
        std::memcpy(&v, bytes.data() + i * sizeof(T), sizeof(T));
        out[i] = static_cast<double>(v);
    }
}

template <class T>
void encode(const std::vector<double> &in, std::vector<char> &bytes) {
    bytes.resize(in.size() * sizeof(T));
    for(std::size_t i = 0; i < in.size(); ++i) {
        const T v = static_cast<T>(in[i]);
        std::memcpy(bytes.data() + i * sizeof(T), &v, sizeof(T));
    }
}

} // namespace

RawVolume read_metaimage(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if(!in) throw VolumeIoError(Kind::Io, "Cannot open '" + path.string() + "'");

    std::map<std::string, std::string> header;
    std::string data_file;
    std::string line;
    while(std::getline(in, line)) {
        const auto eq = line.find('=');
        if(eq == std::string::npos) {
            if(trim(line).empty()) continue;
            throw VolumeIoError(Kind::MalformedHeader, "Header line without '=': '" + trim(line) + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if(key == "ElementDataFile") {
            data_file = value;
            break;
        }
        header[key] = value;
    }
    if(data_file.empty()) throw VolumeIoError(Kind::MalformedHeader, "Missing ElementDataFile in '" + path.string() + "'");

    const auto require = [&](const std::string &key) -> const std::string & {
        const auto it = header.find(key);
        if(it == header.end()) throw VolumeIoError(Kind::MalformedHeader, "Missing header field " + key);
        return it->second;
    };

    if(parse_numbers("NDims", require("NDims"), 1)[0] != 3.0)
        throw VolumeIoError(Kind::Unsupported, "Only 3D volumes are supported");
    if(auto it = header.find("CompressedData"); it != header.end() && parse_bool(it->first, it->second))
        throw VolumeIoError(Kind::Unsupported, "Compressed MetaImage payloads are not supported");
    for(const char *key : {"BinaryDataByteOrderMSB", "ElementByteOrderMSB"})
        if(auto it = header.find(key); it != header.end() && parse_bool(it->first, it->second))
            throw VolumeIoError(Kind::Unsupported, "Big-endian MetaImage payloads are not supported");
    if(auto it = header.find("TransformMatrix"); it != header.end()) {
        const auto m = parse_numbers("TransformMatrix", it->second, 9);
        for(int r = 0; r < 3; ++r)
            for(int c = 0; c < 3; ++c)
                if(std::abs(m[3 * r + c] - (r == c ? 1.0 : 0.0)) > 1e-6)
                    throw VolumeIoError(Kind::Unsupported, "Only axis-aligned volumes (identity TransformMatrix) are supported");
    }

    const auto dims = parse_numbers("DimSize", require("DimSize"), 3);
    std::vector<double> spacing{1.0, 1.0, 1.0};
    if(auto it = header.find("ElementSpacing"); it != header.end()) spacing = parse_numbers(it->first, it->second, 3);
    std::vector<double> origin{0.0, 0.0, 0.0};
    for(const char *key : {"Offset", "Origin", "Position"})
        if(auto it = header.find(key); it != header.end()) {
            origin = parse_numbers(key, it->second, 3);
            break;
        }

    RawVolume vol;
    Index3 idims{};
    for(int d = 0; d < 3; ++d) {
        if(dims[d] < 1 || dims[d] != std::floor(dims[d]))
            throw VolumeIoError(Kind::MalformedHeader, "DimSize entries must be positive integers");
        if(!(spacing[d] > 0.0)) throw VolumeIoError(Kind::MalformedHeader, "ElementSpacing entries must be > 0");
        idims[d] = static_cast<std::int64_t>(dims[d]);
    }
    vol.grid = Grid3(idims, {spacing[0], spacing[1], spacing[2]}, {origin[0], origin[1], origin[2]});
    if(auto it = header.find("ElementNumberOfChannels"); it != header.end()) {
        const double c = parse_numbers(it->first, it->second, 1)[0];
        if(c < 1 || c != std::floor(c)) throw VolumeIoError(Kind::MalformedHeader, "Bad ElementNumberOfChannels");
        vol.channels = static_cast<int>(c);
    }
    vol.element_type = parse_element_type(require("ElementType"));

    const std::size_t expected = vol.grid.size() * static_cast<std::size_t>(vol.channels) * element_size(vol.element_type);
    std::vector<char> bytes(expected);
    std::size_t got = 0;
    if(data_file == "LOCAL") {
        in.read(bytes.data(), static_cast<std::streamsize>(expected));
        got = static_cast<std::size_t>(in.gcount());
    } else {
        const fs::path raw = path.parent_path() / data_file;
        std::ifstream rin(raw, std::ios::binary);
        if(!rin) throw VolumeIoError(Kind::Io, "Cannot open data file '" + raw.string() + "'");
        rin.read(bytes.data(), static_cast<std::streamsize>(expected));
        got = static_cast<std::size_t>(rin.gcount());
    }
    if(got != expected)
        throw VolumeIoError(Kind::TruncatedPayload, "Truncated payload in '" + path.string() + "': expected " +
                                                        std::to_string(expected) + " bytes, found " + std::to_string(got));

    switch(vol.element_type) {
    case ElementType::Int16: decode<std::int16_t>(bytes, vol.data); break;
    case ElementType::Float32: decode<float>(bytes, vol.data); break;
    case ElementType::Float64: decode<double>(bytes, vol.data); break;
    }
    return vol;
}

void write_metaimage(const fs::path &path, const RawVolume &vol) {
    if(vol.data.size() != vol.grid.size() * static_cast<std::size_t>(vol.channels))
        throw VolumeIoError(Kind::ChannelMismatch, "Payload length does not match grid and channel count");

    const bool split = path.extension() == ".mhd";
    const fs::path raw_path = fs::path(path).replace_extension(".raw");

    std::ostringstream hdr;
    const double dims[3] = {static_cast<double>(vol.grid.dim(0)), static_cast<double>(vol.grid.dim(1)),
                            static_cast<double>(vol.grid.dim(2))};
    hdr << "ObjectType = Image\n"
        << "NDims = 3\n"
        << "BinaryData = True\n"
        << "BinaryDataByteOrderMSB = False\n"
        << "CompressedData = False\n"
        << "TransformMatrix = 1 0 0 0 1 0 0 0 1\n"
        << "Offset = " << format_numbers(vol.grid.origin().data(), 3) << "\n"
        << "CenterOfRotation = 0 0 0\n"
        << "ElementSpacing = " << format_numbers(vol.grid.spacing().data(), 3) << "\n"
        << "DimSize = " << format_numbers(dims, 3) << "\n";
    if(vol.channels != 1) hdr << "ElementNumberOfChannels = " << vol.channels << "\n";
    hdr << "ElementType = " << to_metaimage_name(vol.element_type) << "\n"
        << "ElementDataFile = " << (split ? raw_path.filename().string() : std::string("LOCAL")) << "\n";

    std::vector<char> bytes;
    switch(vol.element_type) {
    case ElementType::Int16: encode<std::int16_t>(vol.data, bytes); break;
    case ElementType::Float32: encode<float>(vol.data, bytes); break;
    case ElementType::Float64: encode<double>(vol.data, bytes); break;
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if(!out) throw VolumeIoError(Kind::Io, "Cannot write '" + path.string() + "'");
    const std::string h = hdr.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    if(split) {
        std::ofstream rout(raw_path, std::ios::binary | std::ios::trunc);
        if(!rout) throw VolumeIoError(Kind::Io, "Cannot write '" + raw_path.string() + "'");
        rout.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if(!rout) throw VolumeIoError(Kind::Io, "Write failed for '" + raw_path.string() + "'");
    } else {
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    if(!out) throw VolumeIoError(Kind::Io, "Write failed for '" + path.string() + "'");
}

template <class Real>
Image3<Real> read_volume(const fs::path &path) {
    auto raw = read_metaimage(path);
    if(raw.channels != 1)
        throw VolumeIoError(Kind::ChannelMismatch, "'" + path.string() + "' has " + std::to_string(raw.channels) +
                                                       " channels; a scalar volume is required");
    Image3<Real> img(raw.grid);
    for(std::size_t n = 0; n < raw.data.size(); ++n) img.values[n] = static_cast<Real>(raw.data[n]);
    return img;
}

template <class Real>
void write_volume(const Image3<Real> &img, const fs::path &path) {
    RawVolume raw;
    raw.grid = img.grid;
    raw.element_type = sizeof(Real) == 4 ? ElementType::Float32 : ElementType::Float64;
    raw.data.assign(img.values.begin(), img.values.end());
    write_metaimage(path, raw);
}

template <class Real>
DeformationField<Real> read_deformation(const fs::path &path) {
    auto raw = read_metaimage(path);
    if(raw.channels != 3)
        throw VolumeIoError(Kind::ChannelMismatch, "Deformation file '" + path.string() + "' has " +
                                                       std::to_string(raw.channels) + " channels, expected 3");
    DeformationField<Real> y(raw.grid);
    for(std::size_t n = 0; n < y.size(); ++n)
        for(int d = 0; d < 3; ++d) y[d][n] = static_cast<Real>(raw.data[3 * n + static_cast<std::size_t>(d)]);
    return y;
}

template <class Real>
void write_deformation(const DeformationField<Real> &y, const fs::path &path) {
    RawVolume raw;
    raw.grid = y.grid;
    raw.channels = 3;
    raw.element_type = sizeof(Real) == 4 ? ElementType::Float32 : ElementType::Float64;
    raw.data.resize(3 * y.size());
    for(std::size_t n = 0; n < y.size(); ++n)
        for(int d = 0; d < 3; ++d) raw.data[3 * n + static_cast<std::size_t>(d)] = static_cast<double>(y[d][n]);
    write_metaimage(path, raw);
}

LandmarkSet parse_landmarks(const std::string &text, LandmarkFrame frame, const Grid3 &image_grid) {
    LandmarkSet set;
    set.frame = frame;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while(std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if(hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<double> v;
        std::string tok;
        while(ls >> tok) {
            std::size_t used = 0;
            double x = 0.0;
            try {
                x = std::stod(tok, &used);
            } catch(const std::exception &) {
                used = 0;
            }
            if(used != tok.size() || !std::isfinite(x))
                throw LandmarkParseError("Landmark line " + std::to_string(line_no) + ": non-numeric value '" + tok + "'");
            v.push_back(x);
        }
        if(v.empty()) continue;
        if(v.size() != 3)
            throw LandmarkParseError("Landmark line " + std::to_string(line_no) + ": expected 3 values, got " +
                                     std::to_string(v.size()));
        set.points.push_back({v[0], v[1], v[2]});
    }
    return to_world(set, image_grid);
}

LandmarkSet read_landmarks(const fs::path &path, LandmarkFrame frame, const Grid3 &image_grid) {
    std::ifstream in(path);
    if(!in) throw VolumeIoError(Kind::Io, "Cannot open landmark file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_landmarks(ss.str(), frame, image_grid);
}

void write_landmarks(const fs::path &path, const LandmarkSet &set) {
    std::ofstream out(path);
    if(!out) throw VolumeIoError(Kind::Io, "Cannot write landmark file '" + path.string() + "'");
    out << std::setprecision(17);
    for(const auto &p : set.points) out << p[0] << " " << p[1] << " " << p[2] << "\n";
}

#define NGFREG_INSTANTIATE(Real)                                                              \
    template Image3<Real> read_volume<Real>(const fs::path &);                                \
    template void write_volume<Real>(const Image3<Real> &, const fs::path &);                 \
    template DeformationField<Real> read_deformation<Real>(const fs::path &);                 \
    template void write_deformation<Real>(const DeformationField<Real> &, const fs::path &);

NGFREG_INSTANTIATE(float)
NGFREG_INSTANTIATE(double)

} // namespace ngfreg
