#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "doctest.h"
#include "lgenet/cloud.hpp"
#include "lgenet/synth.hpp"

using namespace lgenet;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("lgenet_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string read_file(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("ascii cloud: smallest valid file parses") {
    TempDir dir;
    const auto p = dir.file("two.txt");
    std::ofstream(p) << "x y z intensity return_count label\n"
                     << "1.0 2.0 3.0 0.5 1 0\n"
                     << "4.0e0 5.5 -6.25 1.5E-1 2 8\n";
    auto cloud = read_cloud(p);
    REQUIRE(cloud.size() == 2);
    CHECK(cloud.xyz[3] == 4.0);
    CHECK(cloud.xyz[5] == -6.25);
    CHECK(cloud.intensity[1] == doctest::Approx(0.15));
    CHECK(cloud.return_count[1] == 2);
    CHECK(cloud.label[1] == 8);
    CHECK(cloud.has_intensity);
    CHECK(cloud.has_label);
    CHECK_FALSE(cloud.has_segment);
}

TEST_CASE("ascii cloud: malformed row reports the line number") {
    TempDir dir;
    const auto p = dir.file("bad.txt");
    std::ofstream(p) << "x y z\n1 2 3\n4 oops 6\n";
    CHECK_THROWS_WITH_AS(read_cloud(p), doctest::Contains(":3"), Error);
}

TEST_CASE("ascii cloud: unknown column rejected") {
    TempDir dir;
    const auto p = dir.file("bad2.txt");
    std::ofstream(p) << "x y z color\n1 2 3 4\n";
    CHECK_THROWS_WITH_AS(read_cloud(p), doctest::Contains("unknown column"), Error);
}

TEST_CASE("ascii round trip is identity on values") {
    PointCloud cloud;
    cloud.resize(3);
    cloud.xyz = {1.0 / 3.0, -2.75, 3.14159265358979, 1e-8, 2e9, -0.0625, 7, 8, 9};
    cloud.intensity = {0.123456789012345, 0.5, 1.0};
    cloud.return_count = {1, 2, 3};
    cloud.label = {0, 255, 3};
    cloud.segment = {5, kNoSegment, 0};
    cloud.has_intensity = cloud.has_return_count = cloud.has_label = cloud.has_segment = true;

    TempDir dir;
    const auto p = dir.file("rt.txt");
    write_cloud(cloud, p, CloudFormat::kAscii);
    auto back = read_cloud(p);
    CHECK(back.xyz == cloud.xyz);
    CHECK(back.intensity == cloud.intensity);
    CHECK(back.return_count == cloud.return_count);
    CHECK(back.label == cloud.label);
    CHECK(back.segment == cloud.segment);
}

TEST_CASE("binary round trip is bit-exact") {
    SynthSceneInfo info;
    auto cloud = synth_scene(3, 24.0, 2.0, &info);
    cloud.segment.assign(static_cast<size_t>(cloud.size()), 7);
    cloud.has_segment = true;
    TempDir dir;
    const auto p1 = dir.file("a.bin");
    const auto p2 = dir.file("b.bin");
    write_cloud(cloud, p1, CloudFormat::kBinary);
    auto back = read_cloud(p1);
    CHECK(back.xyz == cloud.xyz);
    CHECK(back.intensity == cloud.intensity);
    CHECK(back.return_count == cloud.return_count);
    CHECK(back.label == cloud.label);
    CHECK(back.segment == cloud.segment);
    write_cloud(back, p2, CloudFormat::kBinary);
    CHECK(read_file(p1) == read_file(p2));  // byte-identical re-serialization
}

TEST_CASE("manifest: ISPRS-style 9-class manifest loads with C=9") {
    TempDir dir;
    const auto cp = dir.file("tile.txt");
    std::ofstream(cp) << "x y z\n0 0 0\n";
    DatasetManifest m;
    m.classes = {"powerline", "low_vegetation", "impervious_surface", "car",
                 "fence_hedge", "roof", "facade", "shrub", "tree"};
    m.intensity_max = 1023.0;
    m.train_files = {"tile.txt"};
    const auto mp = dir.file("manifest.json");
    m.save(mp);
    auto loaded = DatasetManifest::load(mp);
    CHECK(loaded.num_classes() == 9);
    CHECK(loaded.classes[0] == "powerline");
    CHECK(loaded.classes[8] == "tree");
    CHECK(loaded.intensity_max == 1023.0);
    CHECK(std::filesystem::exists(loaded.resolve(loaded.train_files[0])));
}

TEST_CASE("manifest: missing file and too-few classes rejected") {
    TempDir dir;
    DatasetManifest m;
    m.classes = {"a", "b"};
    m.train_files = {"absent.txt"};
    const auto mp = dir.file("manifest.json");
    m.save(mp);
    CHECK_THROWS_WITH_AS(DatasetManifest::load(mp), doctest::Contains("missing"), Error);

    DatasetManifest m2;
    m2.classes = {"only"};
    const auto mp2 = dir.file("manifest2.json");
    m2.save(mp2);
    CHECK_THROWS_AS(DatasetManifest::load(mp2), Error);
}

TEST_CASE("synth: deterministic per seed, byte-identical files") {
    auto a = synth_scene(7, 30.0, 3.0);
    auto b = synth_scene(7, 30.0, 3.0);
    CHECK(a.xyz == b.xyz);
    CHECK(a.intensity == b.intensity);
    CHECK(a.label == b.label);
    TempDir dir;
    write_cloud(a, dir.file("a.bin"), CloudFormat::kBinary);
    write_cloud(b, dir.file("b.bin"), CloudFormat::kBinary);
    CHECK(read_file(dir.file("a.bin")) == read_file(dir.file("b.bin")));
    auto c = synth_scene(8, 30.0, 3.0);
    CHECK(a.xyz != c.xyz);
}

TEST_CASE("synth: wire points are strictly above the ground beneath them") {
    SynthSceneInfo info;
    auto cloud = synth_scene(11, 40.0, 3.0, &info);
    for (int64_t i = 0; i < cloud.size(); ++i) {
        if (cloud.label[static_cast<size_t>(i)] != kWire) continue;
        const double* p = cloud.point(i);
        CHECK(p[2] > info.ground_height(p[0], p[1]) + 5.0);
    }
}

TEST_CASE("synth: class histogram imbalanced by design (ground >= 5x wires)") {
    auto cloud = synth_scene(13, 40.0, 4.0);
    int64_t counts[4] = {0, 0, 0, 0};
    for (int32_t l : cloud.label) ++counts[l];
    CHECK(counts[kGround] >= 5 * counts[kWire]);
    for (int c = 0; c < 4; ++c) CHECK(counts[c] > 0);  // all four classes present
}

TEST_CASE("synth: every point lies on its generating primitive") {
    SynthSceneInfo info;
    auto cloud = synth_scene(17, 36.0, 3.0, &info);
    const double bound = 5.0 * info.surface_noise + 1e-9;  // jitter bound
    for (int64_t i = 0; i < cloud.size(); ++i) {
        const double* p = cloud.point(i);
        const int32_t cls = cloud.label[static_cast<size_t>(i)];
        if (cls == kGround) {
            CHECK(std::abs(p[2] - info.ground_height(p[0], p[1])) <= bound);
        } else if (cls == kWire) {
            // distance to the closest point on any wire polyline
            double best = 1e300;
            for (const auto& w : info.wires) {
                for (int s = 0; s <= 200; ++s) {
                    const double t = s / 200.0;
                    const double wx = w.a[0] + t * (w.b[0] - w.a[0]);
                    const double wy = w.a[1] + t * (w.b[1] - w.a[1]);
                    const double wz =
                        w.a[2] + t * (w.b[2] - w.a[2]) - 4.0 * w.sag * t * (1.0 - t);
                    const double d2 = (p[0] - wx) * (p[0] - wx) + (p[1] - wy) * (p[1] - wy) +
                                      (p[2] - wz) * (p[2] - wz);
                    best = std::min(best, d2);
                }
            }
            CHECK(std::sqrt(best) <= 0.35);  // strand spacing + jitter
        } else if (cls == kTree) {
            double best = 1e300;
            for (const auto& tr : info.trees) {
                const double nx = (p[0] - tr.cx) / tr.rx;
                const double ny = (p[1] - tr.cy) / tr.ry;
                const double nz = (p[2] - tr.cz) / tr.rz;
                best = std::min(best, nx * nx + ny * ny + nz * nz);
            }
            CHECK(best <= 1.3);  // inside (or a jitter away from) some canopy
        }
    }
}

TEST_CASE("synth: rejects degenerate extent and density") {
    CHECK_THROWS_WITH_AS(synth_scene(1, 8.0, 3.0), doctest::Contains("too small"), Error);
    CHECK_THROWS_AS(synth_scene(1, 30.0, 0.0), Error);
}

TEST_CASE("synth: intensity in [0,1] and labels within the class set") {
    auto cloud = synth_scene(19, 24.0, 3.0);
    for (double v : cloud.intensity) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    for (int32_t l : cloud.label) {
        CHECK(l >= 0);
        CHECK(l <= 3);
    }
}
