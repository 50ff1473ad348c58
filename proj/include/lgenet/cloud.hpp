#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lgenet/tensor.hpp"

namespace lgenet {

constexpr uint32_t kNoSegment = 0xffffffffu;

// Point cloud with per-point attributes. Attribute arrays always have length
// N; the has_* flags record which columns were actually present in the
// source (and which get written back out).
struct PointCloud {
    std::vector<double> xyz;            // 3N, meters
    std::vector<double> intensity;      // raw sensor values
    std::vector<uint8_t> return_count;
    std::vector<int32_t> label;         // 255 = unlabeled
    std::vector<uint32_t> segment;      // kNoSegment = unassigned
    bool has_intensity = false;
    bool has_return_count = false;
    bool has_label = false;
    bool has_segment = false;

    int64_t size() const { return static_cast<int64_t>(xyz.size() / 3); }

    void resize(int64_t n) {
        xyz.resize(static_cast<size_t>(3 * n), 0.0);
        intensity.resize(static_cast<size_t>(n), 0.0);
        return_count.resize(static_cast<size_t>(n), 1);
        label.resize(static_cast<size_t>(n), 255);
        segment.resize(static_cast<size_t>(n), kNoSegment);
    }

    const double* point(int64_t i) const { return &xyz[static_cast<size_t>(3 * i)]; }
    double* point(int64_t i) { return &xyz[static_cast<size_t>(3 * i)]; }

    // Subset by point indices, preserving order and column flags.
    PointCloud select(const std::vector<int32_t>& indices) const;
};

enum class CloudFormat { kAscii, kBinary };

// ASCII: header line of column names from
// {x, y, z, intensity, return_count, label, segment}, then whitespace-
// separated rows. Binary: magic "LGEPCv01", little-endian u64 point count,
// column descriptor table, packed per-column data.
PointCloud read_cloud(const std::string& path);
void write_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format);

struct DatasetManifest {
    std::vector<std::string> classes;
    double intensity_max = 1.0;
    std::string crs = "local";
    std::string units = "m";
    std::vector<std::string> train_files;
    std::vector<std::string> test_files;
    std::string base_dir;  // directory of the manifest file, for relative paths

    static DatasetManifest load(const std::string& path);
    void save(const std::string& path) const;

    int num_classes() const { return static_cast<int>(classes.size()); }
    std::string resolve(const std::string& file) const;
};

}  // namespace lgenet
