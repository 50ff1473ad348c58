#include "lgenet/cloud.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lgenet {

namespace {

constexpr char kMagic[8] = {'L', 'G', 'E', 'P', 'C', 'v', '0', '1'};

enum class ColType : uint8_t { kF64 = 0, kU8 = 1, kI32 = 2, kU32 = 3 };

const std::array<std::string, 7> kKnownColumns = {
    "x", "y", "z", "intensity", "return_count", "label", "segment"};

bool parse_double(std::string_view tok, double& out) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && p == last;
}

bool parse_i64(std::string_view tok, int64_t& out) {
    // integer columns also tolerate a plain float-formatted value (e.g. "2.0")
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(first, last, out);
    if (ec == std::errc() && p == last) return true;
    double d;
    if (!parse_double(tok, d)) return false;
    out = static_cast<int64_t>(d);
    return static_cast<double>(out) == d;
}

PointCloud read_ascii(std::istream& in, const std::string& path) {
    std::string line;
    check(static_cast<bool>(std::getline(in, line)), path + ": empty file");
    std::istringstream hs(line);
    std::vector<std::string> columns;
    std::string name;
    while (hs >> name) {
        bool known = false;
        for (const auto& k : kKnownColumns) known = known || k == name;
        check(known, path + ": unknown column '" + name + "' in header");
        columns.push_back(name);
    }
    for (const char* req : {"x", "y", "z"})
        check(std::find(columns.begin(), columns.end(), req) != columns.end(),
              path + ": header is missing required column '" + std::string(req) + "'");

    PointCloud cloud;
    std::vector<std::string_view> toks;
    std::string row;
    int64_t line_no = 1;
    while (std::getline(in, row)) {
        ++line_no;
        toks.clear();
        size_t i = 0;
        while (i < row.size()) {
            while (i < row.size() && std::isspace(static_cast<unsigned char>(row[i]))) ++i;
            size_t j = i;
            while (j < row.size() && !std::isspace(static_cast<unsigned char>(row[j]))) ++j;
            if (j > i) toks.emplace_back(row.data() + i, j - i);
            i = j;
        }
        if (toks.empty()) continue;
        check(toks.size() == columns.size(),
              path + ":" + std::to_string(line_no) + ": expected " +
                  std::to_string(columns.size()) + " values, got " +
                  std::to_string(toks.size()));
        const int64_t n = cloud.size();
        cloud.resize(n + 1);
        for (size_t c = 0; c < columns.size(); ++c) {
            const std::string& col = columns[c];
            const std::string where = path + ":" + std::to_string(line_no);
            if (col == "x" || col == "y" || col == "z" || col == "intensity") {
                double v;
                check(parse_double(toks[c], v),
                      where + ": malformed value '" + std::string(toks[c]) + "'");
                if (col == "x") cloud.xyz[static_cast<size_t>(3 * n)] = v;
                else if (col == "y") cloud.xyz[static_cast<size_t>(3 * n + 1)] = v;
                else if (col == "z") cloud.xyz[static_cast<size_t>(3 * n + 2)] = v;
                else cloud.intensity[static_cast<size_t>(n)] = v;
            } else {
                int64_t v;
                check(parse_i64(toks[c], v),
                      where + ": malformed value '" + std::string(toks[c]) + "'");
                if (col == "return_count") {
                    check(v >= 0 && v <= 255, where + ": return_count out of range");
                    cloud.return_count[static_cast<size_t>(n)] = static_cast<uint8_t>(v);
                } else if (col == "label") {
                    check(v >= 0 && v <= 255, where + ": label out of range");
                    cloud.label[static_cast<size_t>(n)] = static_cast<int32_t>(v);
                } else {
                    check(v >= 0 && v <= static_cast<int64_t>(kNoSegment),
                          where + ": segment out of range");
                    cloud.segment[static_cast<size_t>(n)] = static_cast<uint32_t>(v);
                }
            }
        }
    }
    for (const auto& col : columns) {
        if (col == "intensity") cloud.has_intensity = true;
        if (col == "return_count") cloud.has_return_count = true;
        if (col == "label") cloud.has_label = true;
        if (col == "segment") cloud.has_segment = true;
    }
    return cloud;
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void write_raw_vec(std::ostream& out, const std::vector<T>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
T read_raw(std::istream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    check(static_cast<bool>(in), path + ": truncated binary cloud");
    return v;
}

template <typename T>
void read_raw_vec(std::istream& in, std::vector<T>& v, const std::string& path) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
    check(static_cast<bool>(in), path + ": truncated binary cloud");
}

PointCloud read_binary(std::istream& in, const std::string& path) {
    char magic[8];
    in.read(magic, 8);
    check(static_cast<bool>(in) && std::memcmp(magic, kMagic, 8) == 0,
          path + ": bad magic, not an LGEPCv01 cloud");
    const uint64_t n = read_raw<uint64_t>(in, path);
    const uint32_t ncols = read_raw<uint32_t>(in, path);
    struct Col {
        std::string name;
        ColType type;
    };
    std::vector<Col> cols;
    for (uint32_t c = 0; c < ncols; ++c) {
        const uint8_t len = read_raw<uint8_t>(in, path);
        std::string nm(len, '\0');
        in.read(nm.data(), len);
        const auto type = static_cast<ColType>(read_raw<uint8_t>(in, path));
        bool known = false;
        for (const auto& k : kKnownColumns) known = known || k == nm;
        check(known, path + ": unknown column '" + nm + "'");
        cols.push_back({std::move(nm), type});
    }
    PointCloud cloud;
    cloud.resize(static_cast<int64_t>(n));
    std::vector<double> coord(n);
    for (const auto& col : cols) {
        if (col.name == "x" || col.name == "y" || col.name == "z") {
            check(col.type == ColType::kF64, path + ": coordinate column must be f64");
            read_raw_vec(in, coord, path);
            const int off = col.name == "x" ? 0 : (col.name == "y" ? 1 : 2);
            for (uint64_t i = 0; i < n; ++i)
                cloud.xyz[static_cast<size_t>(3 * i) + static_cast<size_t>(off)] = coord[i];
        } else if (col.name == "intensity") {
            check(col.type == ColType::kF64, path + ": intensity column must be f64");
            read_raw_vec(in, cloud.intensity, path);
            cloud.has_intensity = true;
        } else if (col.name == "return_count") {
            check(col.type == ColType::kU8, path + ": return_count column must be u8");
            read_raw_vec(in, cloud.return_count, path);
            cloud.has_return_count = true;
        } else if (col.name == "label") {
            check(col.type == ColType::kI32, path + ": label column must be i32");
            read_raw_vec(in, cloud.label, path);
            cloud.has_label = true;
        } else {
            check(col.type == ColType::kU32, path + ": segment column must be u32");
            read_raw_vec(in, cloud.segment, path);
            cloud.has_segment = true;
        }
    }
    return cloud;
}

}  // namespace

PointCloud PointCloud::select(const std::vector<int32_t>& indices) const {
    PointCloud out;
    out.resize(static_cast<int64_t>(indices.size()));
    out.has_intensity = has_intensity;
    out.has_return_count = has_return_count;
    out.has_label = has_label;
    out.has_segment = has_segment;
    for (size_t r = 0; r < indices.size(); ++r) {
        const auto i = static_cast<size_t>(indices[r]);
        out.xyz[3 * r + 0] = xyz[3 * i + 0];
        out.xyz[3 * r + 1] = xyz[3 * i + 1];
        out.xyz[3 * r + 2] = xyz[3 * i + 2];
        out.intensity[r] = intensity[i];
        out.return_count[r] = return_count[i];
        out.label[r] = label[i];
        out.segment[r] = segment[i];
    }
    return out;
}

PointCloud read_cloud(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(static_cast<bool>(in), path + ": cannot open");
    char magic[8] = {0};
    in.read(magic, 8);
    in.clear();
    in.seekg(0);
    if (std::memcmp(magic, kMagic, 8) == 0) return read_binary(in, path);
    return read_ascii(in, path);
}

void write_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format) {
    std::ofstream out(path, std::ios::binary);
    check(static_cast<bool>(out), path + ": cannot open for writing");
    const int64_t n = cloud.size();
    std::vector<std::string> cols = {"x", "y", "z"};
    if (cloud.has_intensity) cols.push_back("intensity");
    if (cloud.has_return_count) cols.push_back("return_count");
    if (cloud.has_label) cols.push_back("label");
    if (cloud.has_segment) cols.push_back("segment");

    if (format == CloudFormat::kAscii) {
        std::string header;
        for (const auto& c : cols) {
            if (!header.empty()) header += ' ';
            header += c;
        }
        out << header << '\n';
        char buf[64];
        for (int64_t i = 0; i < n; ++i) {
            std::string row;
            for (const auto& c : cols) {
                if (!row.empty()) row += ' ';
                if (c == "x" || c == "y" || c == "z" || c == "intensity") {
                    const double v = c == "x"   ? cloud.xyz[static_cast<size_t>(3 * i)]
                                     : c == "y" ? cloud.xyz[static_cast<size_t>(3 * i + 1)]
                                     : c == "z" ? cloud.xyz[static_cast<size_t>(3 * i + 2)]
                                                : cloud.intensity[static_cast<size_t>(i)];
                    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
                    row.append(buf, static_cast<size_t>(len));
                } else if (c == "return_count") {
                    row += std::to_string(cloud.return_count[static_cast<size_t>(i)]);
                } else if (c == "label") {
                    row += std::to_string(cloud.label[static_cast<size_t>(i)]);
                } else {
                    row += std::to_string(cloud.segment[static_cast<size_t>(i)]);
                }
            }
            out << row << '\n';
        }
        return;
    }

    out.write(kMagic, 8);
    write_raw<uint64_t>(out, static_cast<uint64_t>(n));
    write_raw<uint32_t>(out, static_cast<uint32_t>(cols.size()));
    for (const auto& c : cols) {
        write_raw<uint8_t>(out, static_cast<uint8_t>(c.size()));
        out.write(c.data(), static_cast<std::streamsize>(c.size()));
        ColType t = ColType::kF64;
        if (c == "return_count") t = ColType::kU8;
        else if (c == "label") t = ColType::kI32;
        else if (c == "segment") t = ColType::kU32;
        write_raw<uint8_t>(out, static_cast<uint8_t>(t));
    }
    std::vector<double> coord(static_cast<size_t>(n));
    for (const auto& c : cols) {
        if (c == "x" || c == "y" || c == "z") {
            const int off = c == "x" ? 0 : (c == "y" ? 1 : 2);
            for (int64_t i = 0; i < n; ++i)
                coord[static_cast<size_t>(i)] =
                    cloud.xyz[static_cast<size_t>(3 * i) + static_cast<size_t>(off)];
            write_raw_vec(out, coord);
        } else if (c == "intensity") {
            write_raw_vec(out, cloud.intensity);
        } else if (c == "return_count") {
            write_raw_vec(out, cloud.return_count);
        } else if (c == "label") {
            write_raw_vec(out, cloud.label);
        } else {
            write_raw_vec(out, cloud.segment);
        }
    }
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream in(path);
    check(static_cast<bool>(in), path + ": cannot open manifest");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(path + ": manifest parse error: " + e.what());
    }
    DatasetManifest m;
    check(j.contains("classes") && j["classes"].is_array(),
          path + ": manifest needs a 'classes' array");
    for (const auto& c : j["classes"]) m.classes.push_back(c.get<std::string>());
    check(m.classes.size() >= 2, path + ": manifest needs at least 2 classes");
    if (j.contains("intensity_max")) m.intensity_max = j["intensity_max"].get<double>();
    check(m.intensity_max > 0.0, path + ": intensity_max must be positive");
    if (j.contains("crs")) m.crs = j["crs"].get<std::string>();
    if (j.contains("units")) m.units = j["units"].get<std::string>();
    if (j.contains("train"))
        for (const auto& f : j["train"]) m.train_files.push_back(f.get<std::string>());
    if (j.contains("test"))
        for (const auto& f : j["test"]) m.test_files.push_back(f.get<std::string>());
    m.base_dir = std::filesystem::path(path).parent_path().string();
    for (const auto& f : m.train_files)
        check(std::filesystem::exists(m.resolve(f)), path + ": missing train file " + f);
    for (const auto& f : m.test_files)
        check(std::filesystem::exists(m.resolve(f)), path + ": missing test file " + f);
    return m;
}

void DatasetManifest::save(const std::string& path) const {
    nlohmann::json j;
    j["classes"] = classes;
    j["intensity_max"] = intensity_max;
    j["crs"] = crs;
    j["units"] = units;
    j["train"] = train_files;
    j["test"] = test_files;
    std::ofstream out(path);
    check(static_cast<bool>(out), path + ": cannot write manifest");
    out << j.dump(2) << '\n';
}

std::string DatasetManifest::resolve(const std::string& file) const {
    std::filesystem::path p(file);
    if (p.is_absolute() || base_dir.empty()) return file;
    return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace lgenet
