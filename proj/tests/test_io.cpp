#include <doctest.h>

#include <cstring>
#include <random>

#include "ngfreg/io.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace ngfreg;

namespace {

template <class T>
std::string bytes_of(const std::vector<T> &v) {
    std::string s(v.size() * sizeof(T), '\0');
    std::memcpy(s.data(), v.data(), s.size());
    return s;
}

std::string header(const std::string &dims, const std::string &type, const std::string &extra = "") {
    return "ObjectType = Image\nNDims = 3\nDimSize = " + dims + "\nElementSpacing = 1 1 1\nOffset = 0 0 0\n" + extra +
           "ElementType = " + type + "\nElementDataFile = LOCAL\n";
}

VolumeIoError::Kind kind_of(const std::filesystem::path &p) {
    try {
        read_metaimage(p);
    } catch(const VolumeIoError &e) {
        return e.kind();
    }
    FAIL("expected a VolumeIoError");
    return VolumeIoError::Kind::Io;
}

} // namespace

TEST_CASE("volume round-trips") {
    TempDir dir;
    std::mt19937_64 rng(1);
    const Grid3 g({8, 8, 8}, {0.97, 1.25, 2.5}, {-120.5, 33.0, 1e-3});
    Image3<double> img(g);
    img.values = oracle::random_vector(rng, g.size(), -1e6, 1e6);
    img.values[5] = 1.0 / 3.0;
    img.values[6] = -0.0;

    for(const std::string name : {"a.mha", "b.mhd"}) {
        write_volume(img, dir / name);
        const auto back = read_volume<double>(dir / name);
        CHECK(back.grid == g);
        CHECK(std::memcmp(back.values.data(), img.values.data(), img.values.size() * sizeof(double)) == 0);
    }
    CHECK(std::filesystem::exists(dir / "b.raw"));

    const auto imgf = img.cast<float>();
    write_volume(imgf, dir / "f.mha");
    CHECK(read_metaimage(dir / "f.mha").element_type == ElementType::Float32);
    CHECK(read_volume<float>(dir / "f.mha").values == imgf.values);
}

TEST_CASE("header parsing") {
    TempDir dir;
    SUBCASE("spacing and offset") {
        dir.write("h.mha", header("2 2 2", "MET_DOUBLE") + bytes_of(std::vector<double>(8, 1.0)));
        const auto v = read_metaimage(dir / "h.mha");
        CHECK(v.grid.spacing() == Vec3{1, 1, 1});
        CHECK(v.grid.origin() == Vec3{0, 0, 0});
    }
    SUBCASE("signed 16-bit voxels are promoted") {
        const std::vector<std::int16_t> raw{-32768, -1, 0, 1, 2, 3, 4, 32767};
        dir.write("s.mha", header("2 2 2", "MET_SHORT") + bytes_of(raw));
        const auto f = read_volume<float>(dir / "s.mha");
        const auto d = read_volume<double>(dir / "s.mha");
        for(std::size_t i = 0; i < raw.size(); ++i) {
            CHECK(f.values[i] == static_cast<float>(raw[i]));
            CHECK(d.values[i] == static_cast<double>(raw[i]));
        }
    }
    SUBCASE("truncated payload") {
        dir.write("t.mha", header("2 2 2", "MET_DOUBLE") + bytes_of(std::vector<double>(7, 1.0)));
        CHECK(kind_of(dir / "t.mha") == VolumeIoError::Kind::TruncatedPayload);
    }
    SUBCASE("malformed header") {
        dir.write("m1.mha", header("2 2", "MET_DOUBLE") + bytes_of(std::vector<double>(8, 1.0)));
        CHECK(kind_of(dir / "m1.mha") == VolumeIoError::Kind::MalformedHeader);
        dir.write("m2.mha", header("2 x 2", "MET_DOUBLE"));
        CHECK(kind_of(dir / "m2.mha") == VolumeIoError::Kind::MalformedHeader);
        dir.write("m3.mha", "NDims = 3\nDimSize = 2 2 2\nElementType = MET_DOUBLE\n");
        CHECK(kind_of(dir / "m3.mha") == VolumeIoError::Kind::MalformedHeader);
        dir.write("m4.mha", "ObjectType = Image\nnonsense line\n");
        CHECK(kind_of(dir / "m4.mha") == VolumeIoError::Kind::MalformedHeader);
    }
    SUBCASE("unsupported element type") {
        dir.write("u.mha", header("2 2 2", "MET_UCHAR") + std::string(8, '\0'));
        CHECK(kind_of(dir / "u.mha") == VolumeIoError::Kind::UnsupportedElementType);
    }
    SUBCASE("unsupported layouts") {
        dir.write("c.mha", header("2 2 2", "MET_DOUBLE", "CompressedData = True\n"));
        CHECK(kind_of(dir / "c.mha") == VolumeIoError::Kind::Unsupported);
        dir.write("b.mha", header("2 2 2", "MET_DOUBLE", "BinaryDataByteOrderMSB = True\n"));
        CHECK(kind_of(dir / "b.mha") == VolumeIoError::Kind::Unsupported);
        dir.write("r.mha", header("2 2 2", "MET_DOUBLE", "TransformMatrix = 0 1 0 1 0 0 0 0 1\n"));
        CHECK(kind_of(dir / "r.mha") == VolumeIoError::Kind::Unsupported);
    }
    SUBCASE("missing file") { CHECK(kind_of(dir / "absent.mha") == VolumeIoError::Kind::Io); }
}

TEST_CASE("deformation files") {
    TempDir dir;
    std::mt19937_64 rng(2);
    const Grid3 g({5, 4, 3}, {2, 2, 3}, {1, 2, 3});
    const auto id = make_identity<double>(g);
    write_deformation(id, dir / "id.mha");
    const auto back = read_deformation<double>(dir / "id.mha");
    CHECK(back.grid == g);
    for(int d = 0; d < 3; ++d) CHECK(back[d] == id[d]);
    CHECK(read_metaimage(dir / "id.mha").channels == 3);

    auto y = id;
    for(int d = 0; d < 3; ++d)
        for(auto &v : y[d]) v += std::uniform_real_distribution<double>(-3, 3)(rng);
    write_deformation(y, dir / "y.mhd");
    const auto yb = read_deformation<double>(dir / "y.mhd");
    for(int d = 0; d < 3; ++d) CHECK(yb[d] == y[d]);

    const auto yf = y.cast<float>();
    write_deformation(yf, dir / "yf.mha");
    const auto yfb = read_deformation<float>(dir / "yf.mha");
    for(int d = 0; d < 3; ++d) CHECK(yfb[d] == yf[d]);

    // Channel-interleaved layout: voxel 0 holds (x, y, z) first.
    const auto raw = read_metaimage(dir / "y.mhd");
    CHECK(raw.data[0] == y[0][0]);
    CHECK(raw.data[1] == y[1][0]);
    CHECK(raw.data[2] == y[2][0]);
    CHECK(raw.data[3] == y[0][1]);

    Image3<double> scalar(g);
    write_volume(scalar, dir / "s.mha");
    try {
        read_deformation<double>(dir / "s.mha");
        FAIL("expected a channel mismatch");
    } catch(const VolumeIoError &e) {
        CHECK(e.kind() == VolumeIoError::Kind::ChannelMismatch);
    }
    CHECK_THROWS_AS(read_volume<double>(dir / "y.mhd"), VolumeIoError);
}

TEST_CASE("landmark files") {
    const Grid3 unit({10, 10, 10}, {1, 1, 1});
    CHECK(parse_landmarks("1 1 1\n", LandmarkFrame::VoxelIndex1Based, unit).points[0] == Vec3{0, 0, 0});
    const Grid3 dirlab({10, 10, 10}, {0.97, 0.97, 2.5});
    const auto s = parse_landmarks("2 3 4", LandmarkFrame::VoxelIndex1Based, dirlab);
    CHECK(s.points[0][0] == doctest::Approx(0.97));
    CHECK(s.points[0][1] == doctest::Approx(1.94));
    CHECK(s.points[0][2] == doctest::Approx(7.5));
    CHECK(parse_landmarks("", LandmarkFrame::WorldMm, unit).count() == 0);
    CHECK(parse_landmarks("# header\n\n  1.5\t2 -3 # trailing\n", LandmarkFrame::WorldMm, unit).points[0] == Vec3{1.5, 2, -3});
    CHECK_THROWS_AS(parse_landmarks("1 2 x\n", LandmarkFrame::WorldMm, unit), LandmarkParseError);
    CHECK_THROWS_AS(parse_landmarks("1 2\n", LandmarkFrame::WorldMm, unit), LandmarkParseError);
    CHECK_THROWS_AS(parse_landmarks("1 2 3 4\n", LandmarkFrame::WorldMm, unit), LandmarkParseError);

    TempDir dir;
    LandmarkSet w;
    w.points = {{0.1, 0.2, 0.3}, {1.0 / 3.0, -7, 1e-9}};
    write_landmarks(dir / "l.txt", w);
    const auto r = read_landmarks(dir / "l.txt", LandmarkFrame::WorldMm, unit);
    CHECK(r.points == w.points);
    CHECK_THROWS_AS(read_landmarks(dir / "none.txt", LandmarkFrame::WorldMm, unit), VolumeIoError);
}
