#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "osteorad/error.hpp"
#include "osteorad/grid.hpp"

namespace osteorad {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Anatomical class ids. 0-5 are produced by the segmentation network,
/// 6-8 only appear after soft-tissue subdivision.
enum class Tissue : std::uint8_t {
    BG = 0,  // background
    TC = 1,  // tibia cortical
    TT = 2,  // tibia trabecular
    FC = 3,  // fibula cortical
    FT = 4,  // fibula trabecular
    ST = 5,  // soft tissue (undivided)
    SK = 6,  // skin
    MT = 7,  // myotendinous
    AT = 8,  // adipose
};

inline constexpr int kNumClasses = 9;
inline constexpr int kMaxClassId = 8;

constexpr std::uint8_t id(Tissue t) noexcept { return static_cast<std::uint8_t>(t); }

inline constexpr std::array<std::string_view, kNumClasses> kTissueNames = {"BG", "TC", "TT", "FC", "FT",
                                                                           "ST", "SK", "MT", "AT"};

inline std::string_view tissue_name(int class_id) {
    if (class_id < 0 || class_id > kMaxClassId) throw ConfigError("class id out of range: " + std::to_string(class_id));
    return kTissueNames[static_cast<std::size_t>(class_id)];
}

inline int tissue_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kTissueNames.size(); ++i) {
        if (kTissueNames[i] == name) return static_cast<int>(i);
    }
    throw ConfigError("unknown region name '" + std::string(name) + "'");
}

using HUImage = Grid<std::int16_t>;
using NormImage = Grid<double>;
using FilteredImage = Grid<double>;
using LabelMap = Grid<std::uint8_t>;
using BinaryMask = Grid<std::uint8_t>;

struct RegionMask {
    BinaryMask mask;
    int region_id = 0;

    int width() const noexcept { return mask.width(); }
    int height() const noexcept { return mask.height(); }
    std::size_t count() const noexcept {
        return static_cast<std::size_t>(std::count_if(mask.data().begin(), mask.data().end(),
                                                      [](std::uint8_t v) { return v != 0; }));
    }
};

inline std::size_t count_true(const BinaryMask& m) {
    return static_cast<std::size_t>(std::count_if(m.data().begin(), m.data().end(), [](std::uint8_t v) { return v; }));
}

/// Throws DataError unless every id is in 0..8.
inline void validate_label_map(const LabelMap& map) {
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (map[i] > kMaxClassId) {
            throw DataError("label id " + std::to_string(map[i]) + " out of range at pixel " + std::to_string(i));
        }
    }
}

inline RegionMask extract_region_mask(const LabelMap& map, int region) {
    if (region < 1 || region > kMaxClassId) throw ConfigError("region must be in 1..8, got " + std::to_string(region));
    BinaryMask m(map.width(), map.height(), map.voxel_size_um(), std::uint8_t{0});
    bool any = false;
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (map[i] == region) {
            m[i] = 1;
            any = true;
        }
    }
    if (!any) throw EmptyRegionError("empty region " + std::string(tissue_name(region)));
    return RegionMask{std::move(m), region};
}

/// Mask of all pixels whose label is in `ids`; may be empty.
inline BinaryMask mask_of(const LabelMap& map, std::initializer_list<int> ids) {
    BinaryMask m(map.width(), map.height(), map.voxel_size_um(), std::uint8_t{0});
    for (std::size_t i = 0; i < map.size(); ++i) {
        for (int c : ids) {
            if (map[i] == c) {
                m[i] = 1;
                break;
            }
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Raster I/O: <name>.raw (int16 LE) or <name>.mask.raw (uint8) + <name>.meta.json
// ---------------------------------------------------------------------------

struct RasterMeta {
    int width = 0;
    int height = 0;
    double voxel_size_um = 0.0;
};

/// `a/b.raw` and `a/b.mask.raw` both map to `a/b.meta.json`.
inline fs::path sidecar_for(const fs::path& raw) {
    std::string name = raw.filename().string();
    for (std::string_view suffix : {std::string_view(".mask.raw"), std::string_view(".raw")}) {
        if (name.size() > suffix.size() && name.ends_with(suffix)) {
            name.resize(name.size() - suffix.size());
            return raw.parent_path() / (name + ".meta.json");
        }
    }
    return raw.parent_path() / (name + ".meta.json");
}

inline RasterMeta read_sidecar(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing sidecar " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        RasterMeta meta{j.at("width").get<int>(), j.at("height").get<int>(), j.at("voxel_size_um").get<double>()};
        if (meta.width <= 0 || meta.height <= 0) throw DataError("non-positive dimensions in " + path.string());
        if (!(meta.voxel_size_um > 0)) throw DataError("non-positive voxel size in " + path.string());
        return meta;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed sidecar " + path.string() + ": " + e.what());
    }
}

inline void write_sidecar(const fs::path& path, const RasterMeta& meta) {
    nlohmann::ordered_json j;
    j["width"] = meta.width;
    j["height"] = meta.height;
    j["voxel_size_um"] = meta.voxel_size_um;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline std::vector<unsigned char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

inline void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline HUImage decode_hu(const std::vector<unsigned char>& bytes, const RasterMeta& meta) {
    const std::size_t n = static_cast<std::size_t>(meta.width) * static_cast<std::size_t>(meta.height);
    if (bytes.size() != n * 2) {
        throw DataError("length mismatch: expected " + std::to_string(n * 2) + " bytes, got " +
                        std::to_string(bytes.size()));
    }
    std::vector<std::int16_t> px(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto u = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
        px[i] = static_cast<std::int16_t>(u);
    }
    return HUImage(meta.width, meta.height, meta.voxel_size_um, std::move(px));
}

inline HUImage load_hu_image(const fs::path& raw, const fs::path& sidecar) {
    const RasterMeta meta = read_sidecar(sidecar);
    return decode_hu(read_bytes(raw), meta);
}

inline HUImage load_hu_image(const fs::path& raw) { return load_hu_image(raw, sidecar_for(raw)); }

inline void write_hu_image(const HUImage& img, const fs::path& raw) {
    std::vector<unsigned char> bytes(img.size() * 2);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const auto u = static_cast<std::uint16_t>(img[i]);
        bytes[2 * i] = static_cast<unsigned char>(u & 0xFF);
        bytes[2 * i + 1] = static_cast<unsigned char>(u >> 8);
    }
    write_bytes(raw, bytes);
    write_sidecar(sidecar_for(raw), {img.width(), img.height(), img.voxel_size_um()});
}

inline LabelMap load_label_map(const fs::path& raw, const fs::path& sidecar) {
    const RasterMeta meta = read_sidecar(sidecar);
    auto bytes = read_bytes(raw);
    const std::size_t n = static_cast<std::size_t>(meta.width) * static_cast<std::size_t>(meta.height);
    if (bytes.size() != n) {
        throw DataError("length mismatch: expected " + std::to_string(n) + " bytes, got " +
                        std::to_string(bytes.size()));
    }
    LabelMap map(meta.width, meta.height, meta.voxel_size_um, std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
    validate_label_map(map);
    return map;
}

inline LabelMap load_label_map(const fs::path& raw) { return load_label_map(raw, sidecar_for(raw)); }

inline void write_label_map(const LabelMap& map, const fs::path& raw) {
    write_bytes(raw, std::vector<unsigned char>(map.data().begin(), map.data().end()));
    const fs::path meta = sidecar_for(raw);
    if (!fs::exists(meta)) write_sidecar(meta, {map.width(), map.height(), map.voxel_size_um()});
}

// ---------------------------------------------------------------------------
// Cohort manifest
// ---------------------------------------------------------------------------

enum class Group { Control = 0, Osteoporosis = 1 };

inline std::string_view group_name(Group g) { return g == Group::Osteoporosis ? "osteoporosis" : "control"; }

inline Group group_from_name(std::string_view s) {
    if (s == "osteoporosis") return Group::Osteoporosis;
    if (s == "control") return Group::Control;
    throw DataError("unknown group label '" + std::string(s) + "'");
}

struct SliceRef {
    fs::path image;
    fs::path mask;  // empty when no mask is provided
};

enum class Split { Unassigned, Train, Test };

struct PatientEntry {
    std::string patient_id;
    Group group = Group::Control;
    std::vector<std::pair<std::string, double>> covariates;
    std::vector<SliceRef> slices;
    Split split = Split::Unassigned;
};

struct CohortManifest {
    fs::path base_dir;
    std::vector<PatientEntry> patients;

    const PatientEntry& patient(std::string_view id) const {
        for (const auto& p : patients) {
            if (p.patient_id == id) return p;
        }
        throw DataError("unknown patient_id '" + std::string(id) + "'");
    }

    fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }
};

inline CohortManifest parse_manifest(const nlohmann::json& j, const fs::path& base_dir, bool check_files = true) {
    CohortManifest m;
    m.base_dir = base_dir;
    std::unordered_set<std::string> seen;
    try {
        for (const auto& pj : j.at("patients")) {
            PatientEntry p;
            p.patient_id = pj.at("patient_id").get<std::string>();
            if (!seen.insert(p.patient_id).second) throw DataError("duplicate patient_id '" + p.patient_id + "'");
            p.group = group_from_name(pj.at("group").get<std::string>());
            if (pj.contains("covariates")) {
                for (const auto& [k, v] : pj.at("covariates").items()) p.covariates.emplace_back(k, v.get<double>());
            }
            if (pj.contains("split")) {
                const auto s = pj.at("split").get<std::string>();
                if (s == "train") p.split = Split::Train;
                else if (s == "test") p.split = Split::Test;
                else throw DataError("unknown split '" + s + "' for patient " + p.patient_id);
            }
            for (const auto& sj : pj.value("slices", nlohmann::json::array())) {
                SliceRef ref;
                if (sj.is_string()) {
                    ref.image = sj.get<std::string>();
                } else {
                    ref.image = sj.at("image").get<std::string>();
                    if (sj.contains("mask")) ref.mask = sj.at("mask").get<std::string>();
                }
                p.slices.push_back(std::move(ref));
            }
            m.patients.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed manifest: ") + e.what());
    }
    if (check_files) {
        for (const auto& p : m.patients) {
            for (const auto& s : p.slices) {
                for (const fs::path& f : {s.image, s.mask}) {
                    if (f.empty()) continue;
                    const fs::path r = m.resolve(f);
                    if (!fs::exists(r)) throw DataError("unresolvable slice path " + r.string());
                }
            }
        }
    }
    return m;
}

inline CohortManifest load_manifest(const fs::path& path, bool check_files = true) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest " + path.string() + ": " + e.what());
    }
    return parse_manifest(j, path.parent_path(), check_files);
}

inline nlohmann::ordered_json manifest_to_json(const CohortManifest& m) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["patients"] = nlohmann::ordered_json::array();
    for (const auto& p : m.patients) {
        nlohmann::ordered_json pj;
        pj["patient_id"] = p.patient_id;
        pj["group"] = group_name(p.group);
        if (p.split != Split::Unassigned) pj["split"] = p.split == Split::Train ? "train" : "test";
        pj["covariates"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : p.covariates) pj["covariates"][k] = v;
        pj["slices"] = nlohmann::ordered_json::array();
        for (const auto& s : p.slices) {
            nlohmann::ordered_json sj;
            sj["image"] = s.image.generic_string();
            if (!s.mask.empty()) sj["mask"] = s.mask.generic_string();
            pj["slices"].push_back(std::move(sj));
        }
        j["patients"].push_back(std::move(pj));
    }
    return j;
}

inline void write_manifest(const CohortManifest& m, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << manifest_to_json(m).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Feature tables
// ---------------------------------------------------------------------------

struct RowKey {
    std::string patient_id;
    int slice_index = 0;
    std::string region;

    friend bool operator==(const RowKey&, const RowKey&) = default;
};

/// Filter and feature class encoded in a canonical column name.
struct ColumnProvenance {
    std::string filter;
    std::string feature_class;
    std::string name;
};

/// Splits `<FILTER>_<CLASS>_<NAME>` (or `shape2D_<NAME>`).
inline ColumnProvenance column_provenance(std::string_view column) {
    const auto a = column.find('_');
    if (a == std::string_view::npos) return {"", "", std::string(column)};
    if (column.substr(0, a) == "shape2D") return {"", "shape2D", std::string(column.substr(a + 1))};
    const auto b = column.find('_', a + 1);
    if (b == std::string_view::npos) return {std::string(column.substr(0, a)), "", std::string(column.substr(a + 1))};
    return {std::string(column.substr(0, a)), std::string(column.substr(a + 1, b - a - 1)),
            std::string(column.substr(b + 1))};
}

/// Row-major named feature matrix keyed by (patient, slice, region).
class FeatureTable {
public:
    FeatureTable() = default;
    explicit FeatureTable(std::vector<std::string> names) : names_(std::move(names)) {}

    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<RowKey>& keys() const noexcept { return keys_; }
    std::size_t rows() const noexcept { return keys_.size(); }
    std::size_t cols() const noexcept { return names_.size(); }

    void add_row(RowKey key, std::span<const double> values) {
        if (values.size() != names_.size()) {
            throw DataError("row has " + std::to_string(values.size()) + " values, table has " +
                            std::to_string(names_.size()) + " columns");
        }
        keys_.push_back(std::move(key));
        values_.insert(values_.end(), values.begin(), values.end());
    }

    double at(std::size_t row, std::size_t col) const { return values_[row * names_.size() + col]; }
    double& at(std::size_t row, std::size_t col) { return values_[row * names_.size() + col]; }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(values_).subspan(r * names_.size(), names_.size());
    }
    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows());
        for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
        return out;
    }

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (names_[i] == name) return i;
        }
        return std::nullopt;
    }

    std::size_t column_index(std::string_view name) const {
        if (auto i = find(name)) return *i;
        throw DataError("feature column '" + std::string(name) + "' not present");
    }

    /// New table restricted to `cols`, in the given order.
    FeatureTable select_columns(const std::vector<std::string>& cols) const {
        std::vector<std::size_t> idx;
        idx.reserve(cols.size());
        for (const auto& c : cols) idx.push_back(column_index(c));
        FeatureTable out(cols);
        std::vector<double> buf(cols.size());
        for (std::size_t r = 0; r < rows(); ++r) {
            for (std::size_t k = 0; k < idx.size(); ++k) buf[k] = at(r, idx[k]);
            out.add_row(keys_[r], buf);
        }
        return out;
    }

    template <typename Pred>
    FeatureTable filter_rows(Pred&& keep) const {
        FeatureTable out(names_);
        for (std::size_t r = 0; r < rows(); ++r) {
            if (keep(keys_[r])) out.add_row(keys_[r], row(r));
        }
        return out;
    }

    friend bool operator==(const FeatureTable&, const FeatureTable&) = default;

private:
    std::vector<std::string> names_;
    std::vector<RowKey> keys_;
    std::vector<double> values_;
};

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw DataError("cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

inline void write_feature_table(const FeatureTable& table, std::ostream& out) {
    out << "patient_id,slice_index,region";
    for (const auto& n : table.names()) out << ',' << n;
    out << '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto& k = table.keys()[r];
        out << k.patient_id << ',' << k.slice_index << ',' << k.region;
        for (double v : table.row(r)) out << ',' << format_double(v);
        out << '\n';
    }
}

inline void write_feature_table(const FeatureTable& table, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_feature_table(table, out);
}

inline FeatureTable read_feature_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty feature table");
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "patient_id" || header[1] != "slice_index" || header[2] != "region") {
        throw DataError("feature table header must start with patient_id,slice_index,region");
    }
    std::vector<std::string> names;
    for (std::size_t i = 3; i < header.size(); ++i) names.emplace_back(header[i]);
    FeatureTable table(names);
    std::vector<double> buf(names.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != names.size() + 3) {
            throw DataError("feature table line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(names.size() + 3));
        }
        for (std::size_t i = 0; i < names.size(); ++i) buf[i] = parse_double(cells[i + 3]);
        table.add_row(RowKey{std::string(cells[0]), static_cast<int>(parse_double(cells[1])), std::string(cells[2])},
                      buf);
    }
    return table;
}

inline FeatureTable read_feature_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open feature table " + path.string());
    return read_feature_table(in);
}

}  // namespace osteorad
