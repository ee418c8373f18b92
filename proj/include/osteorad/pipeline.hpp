#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "osteorad/classifiers/classifier.hpp"
#include "osteorad/hash.hpp"
#include "osteorad/imaging.hpp"
#include "osteorad/mask_postprocess.hpp"
#include "osteorad/metrics.hpp"
#include "osteorad/parallel.hpp"
#include "osteorad/phantom.hpp"
#include "osteorad/preprocess.hpp"
#include "osteorad/radiomics/extract.hpp"
#include "osteorad/rng.hpp"
#include "osteorad/selection.hpp"
#include "osteorad/soft_tissue.hpp"
#include "osteorad/stats.hpp"

namespace osteorad::pipeline {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class Level { Image, Patient };

inline std::string_view level_name(Level l) { return l == Level::Patient ? "patient" : "image"; }

inline Level level_from_name(std::string_view s) {
    if (s == "image") return Level::Image;
    if (s == "patient") return Level::Patient;
    throw ConfigError("unknown level '" + std::string(s) + "' (expected image or patient)");
}

struct Config {
    fs::path output_dir = "osteorad_run";
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0: hardware concurrency
    fs::path manifest;     // ignored when a phantom cohort is configured
    std::optional<phantom::CohortParams> phantom;
    double test_fraction = 0.2;  // only for manifests without split fields
    int clip_lo = preprocess::kDefaultClipLo;
    int clip_hi = preprocess::kDefaultClipHi;
    bool postprocess = false;
    postprocess::Options postprocess_options;
    bool soft_tissue = true;
    soft::Params soft_tissue_params;
    std::vector<std::string> regions{"TT"};
    radiomics::ExtractOptions extract;
    Level level = Level::Image;
    std::size_t expected_slices = 0;  // patient level: warn when a patient has another count
    selection::SelectionOptions selection;
    ml::ClassifierSpec classifier = ml::default_spec(ml::Family::LogisticRegression);
    bool stats = false;
    int hl_groups = 10;

    void validate() const {
        if (clip_lo >= clip_hi) throw ConfigError("clip_lo must be below clip_hi");
        if (regions.empty()) throw ConfigError("at least one feature region is required");
        if (!manifest.empty() && phantom) throw ConfigError("cohort must name either a manifest or a phantom, not both");
        if (manifest.empty() && !phantom) throw ConfigError("cohort must name a manifest or a phantom");
        if (phantom) phantom->validate();
        if (test_fraction <= 0 || test_fraction >= 1) throw ConfigError("test_fraction must be in (0,1)");
        if (hl_groups < 3) throw ConfigError("hl_groups must be >= 3");
        soft_tissue_params.validate();
        extract.validate();
        selection.validate();
        classifier.validate();
    }
};

// ---------------------------------------------------------------------------
// Config documents
// ---------------------------------------------------------------------------

namespace detail {

using json = nlohmann::json;

inline void allow_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
            throw ConfigError("unknown key '" + k + "' in " + std::string(where));
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() || base.empty() ? q : base / q;
}

}  // namespace detail

/// Parses a run config. Relative paths are taken relative to `base_dir`
/// (normally the directory holding the config file).
inline Config config_from_json(const nlohmann::json& j, const fs::path& base_dir = {}) {
    using detail::allow_keys;
    using detail::read;
    Config c;
    try {
        allow_keys(j, "config", {"output_dir", "seed", "threads", "cohort", "preprocess", "postprocess", "soft_tissue",
                                 "extract", "level", "selection", "classifier", "stats"});
        if (j.contains("output_dir")) c.output_dir = detail::resolve(base_dir, j["output_dir"].get<std::string>());
        read(j, "seed", c.seed);
        read(j, "threads", c.threads);
        c.selection.seed = c.seed;
        c.classifier.seed = c.seed;

        const auto& co = j.at("cohort");
        allow_keys(co, "cohort", {"manifest", "phantom", "test_fraction"});
        if (co.contains("manifest")) c.manifest = detail::resolve(base_dir, co["manifest"].get<std::string>());
        read(co, "test_fraction", c.test_fraction);
        if (co.contains("phantom")) {
            const auto& p = co["phantom"];
            allow_keys(p, "cohort.phantom",
                       {"n_patients", "slices_per_patient", "effect_size", "seed", "side", "voxel_size_um",
                        "base_density", "patient_density_sd", "slice_density_sd", "noise_sigma", "test_fraction"});
            phantom::CohortParams cp;
            cp.seed = c.seed;
            read(p, "n_patients", cp.n_patients);
            read(p, "slices_per_patient", cp.slices_per_patient);
            read(p, "effect_size", cp.effect_size);
            read(p, "seed", cp.seed);
            read(p, "side", cp.side);
            read(p, "voxel_size_um", cp.voxel_size_um);
            read(p, "base_density", cp.base_density);
            read(p, "patient_density_sd", cp.patient_density_sd);
            read(p, "slice_density_sd", cp.slice_density_sd);
            read(p, "noise_sigma", cp.noise_sigma);
            read(p, "test_fraction", cp.test_fraction);
            c.phantom = cp;
        }

        if (j.contains("preprocess")) {
            const auto& p = j["preprocess"];
            allow_keys(p, "preprocess", {"clip_lo", "clip_hi"});
            read(p, "clip_lo", c.clip_lo);
            read(p, "clip_hi", c.clip_hi);
        }
        if (j.contains("postprocess")) {
            const auto& p = j["postprocess"];
            allow_keys(p, "postprocess", {"enabled", "continuity_threshold", "initial_radius", "max_radius", "max_passes"});
            read(p, "enabled", c.postprocess);
            read(p, "continuity_threshold", c.postprocess_options.continuity_threshold);
            read(p, "initial_radius", c.postprocess_options.initial_radius);
            read(p, "max_radius", c.postprocess_options.max_radius);
            read(p, "max_passes", c.postprocess_options.max_passes);
        }
        if (j.contains("soft_tissue")) {
            const auto& p = j["soft_tissue"];
            allow_keys(p, "soft_tissue", {"enabled", "skin_band_mm", "myo_seed", "adipose_seed", "min_seed_px",
                                          "dilation_iters", "resolve_threshold"});
            auto& s = c.soft_tissue_params;
            read(p, "enabled", c.soft_tissue);
            read(p, "skin_band_mm", s.skin_band_mm);
            if (p.contains("myo_seed")) s.myo_seed = {p["myo_seed"].at(0).get<int>(), p["myo_seed"].at(1).get<int>()};
            if (p.contains("adipose_seed")) {
                s.adipose_seed = {p["adipose_seed"].at(0).get<int>(), p["adipose_seed"].at(1).get<int>()};
            }
            read(p, "min_seed_px", s.min_seed_px);
            read(p, "dilation_iters", s.dilation_iters);
            read(p, "resolve_threshold", s.resolve_threshold);
        }
        if (j.contains("extract")) {
            const auto& p = j["extract"];
            allow_keys(p, "extract", {"regions", "bin_policy", "bin_count", "bin_width", "log_sigma_px"});
            read(p, "regions", c.regions);
            if (p.contains("bin_policy")) {
                c.extract.discretization.policy = radiomics::bin_policy_from_name(p["bin_policy"].get<std::string>());
            }
            read(p, "bin_count", c.extract.discretization.bin_count);
            read(p, "bin_width", c.extract.discretization.bin_width);
            read(p, "log_sigma_px", c.extract.log_sigma_px);
        }
        if (j.contains("level")) c.level = level_from_name(j["level"].get<std::string>());
        if (j.contains("selection")) {
            const auto& p = j["selection"];
            allow_keys(p, "selection", {"variance_threshold", "r_max", "lambda", "top_k", "folds", "seed", "grid_points",
                                        "grid_ratio", "loss", "expected_slices"});
            auto& s = c.selection;
            read(p, "variance_threshold", s.variance_threshold);
            read(p, "r_max", s.r_max);
            if (p.contains("lambda") && !p["lambda"].is_null()) {
                const auto& l = p["lambda"];
                if (l.is_string()) {
                    if (l.get<std::string>() != "auto") throw ConfigError("selection.lambda must be \"auto\" or a number");
                    s.lambda.reset();
                } else {
                    s.lambda = l.get<double>();
                }
            }
            read(p, "top_k", s.top_k);
            read(p, "folds", s.folds);
            read(p, "seed", s.seed);
            read(p, "grid_points", s.grid_points);
            read(p, "grid_ratio", s.grid_ratio);
            if (p.contains("loss")) s.loss = selection::lasso_loss_from_name(p["loss"].get<std::string>());
            read(p, "expected_slices", c.expected_slices);
        }
        if (j.contains("classifier")) {
            const auto& p = j["classifier"];
            allow_keys(p, "classifier", {"family", "grid", "folds", "seed"});
            const auto family = ml::family_from_name(p.value("family", std::string("logistic_regression")));
            auto spec = ml::default_spec(family, c.seed);
            if (p.contains("grid")) spec.grid = ml::grid_from_json(family, p["grid"]);
            read(p, "folds", spec.folds);
            read(p, "seed", spec.seed);
            c.classifier = spec;
        }
        if (j.contains("stats")) {
            const auto& p = j["stats"];
            allow_keys(p, "stats", {"enabled", "hl_groups"});
            read(p, "enabled", c.stats);
            read(p, "hl_groups", c.hl_groups);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    c.validate();
    return c;
}

inline Config load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed config " + path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

/// Fully resolved config, defaults included, for the run manifest.
inline nlohmann::ordered_json to_json(const Config& c) {
    nlohmann::ordered_json j;
    j["output_dir"] = c.output_dir.generic_string();
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    nlohmann::ordered_json co;
    if (c.phantom) {
        const auto& p = *c.phantom;
        co["phantom"] = {{"n_patients", p.n_patients},
                         {"slices_per_patient", p.slices_per_patient},
                         {"effect_size", p.effect_size},
                         {"seed", p.seed},
                         {"side", p.side},
                         {"voxel_size_um", p.voxel_size_um},
                         {"base_density", p.base_density},
                         {"patient_density_sd", p.patient_density_sd},
                         {"slice_density_sd", p.slice_density_sd},
                         {"noise_sigma", p.noise_sigma},
                         {"test_fraction", p.test_fraction}};
    } else {
        co["manifest"] = c.manifest.generic_string();
        co["test_fraction"] = c.test_fraction;
    }
    j["cohort"] = co;
    j["preprocess"] = {{"clip_lo", c.clip_lo}, {"clip_hi", c.clip_hi}};
    const auto& po = c.postprocess_options;
    j["postprocess"] = {{"enabled", c.postprocess},
                        {"continuity_threshold", po.continuity_threshold},
                        {"initial_radius", po.initial_radius},
                        {"max_radius", po.max_radius},
                        {"max_passes", po.max_passes}};
    const auto& s = c.soft_tissue_params;
    j["soft_tissue"] = {{"enabled", c.soft_tissue},
                        {"skin_band_mm", s.skin_band_mm},
                        {"myo_seed", {s.myo_seed.lo, s.myo_seed.hi}},
                        {"adipose_seed", {s.adipose_seed.lo, s.adipose_seed.hi}},
                        {"min_seed_px", s.min_seed_px},
                        {"dilation_iters", s.dilation_iters},
                        {"resolve_threshold", s.resolve_threshold}};
    const auto& d = c.extract.discretization;
    j["extract"] = {{"regions", c.regions},
                    {"bin_policy", d.policy == radiomics::BinPolicy::FixedCount ? "fixed_count" : "fixed_width"},
                    {"bin_count", d.bin_count},
                    {"bin_width", d.bin_width},
                    {"log_sigma_px", c.extract.log_sigma_px}};
    j["level"] = level_name(c.level);
    const auto& so = c.selection;
    j["selection"] = {{"variance_threshold", so.variance_threshold},
                      {"r_max", so.r_max},
                      {"lambda", so.lambda ? nlohmann::ordered_json(*so.lambda) : nlohmann::ordered_json("auto")},
                      {"top_k", so.top_k},
                      {"folds", so.folds},
                      {"seed", so.seed},
                      {"grid_points", so.grid_points},
                      {"grid_ratio", so.grid_ratio},
                      {"loss", selection::lasso_loss_name(so.loss)},
                      {"expected_slices", c.expected_slices}};
    nlohmann::ordered_json grid = nlohmann::ordered_json::object();
    for (const auto& [name, values] : c.classifier.grid) {
        nlohmann::ordered_json vs = nlohmann::ordered_json::array();
        for (double v : values) vs.push_back(ml::param_value_json(v));
        grid[name] = vs;
    }
    j["classifier"] = {{"family", ml::family_name(c.classifier.family)},
                       {"grid", grid},
                       {"folds", c.classifier.folds},
                       {"seed", c.classifier.seed}};
    j["stats"] = {{"enabled", c.stats}, {"hl_groups", c.hl_groups}};
    return j;
}

// ---------------------------------------------------------------------------
// Stage helpers
// ---------------------------------------------------------------------------

/// Re-raises a stage failure with the stage name and input id prefixed,
/// keeping its error kind (and thus its exit code).
template <typename F>
auto in_stage(std::string_view stage, std::string_view input, F&& fn) -> decltype(fn()) {
    const auto where = [&] {
        return "stage " + std::string(stage) + (input.empty() ? std::string() : " [" + std::string(input) + "]") + ": ";
    };
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.kind(), where() + e.what());
    } catch (const fs::filesystem_error& e) {
        throw DataError(where() + e.what());
    }
}

/// Patient-level train/test assignment. Manifests without split fields get a
/// group-stratified seeded split; partial assignments are rejected.
inline void assign_splits(CohortManifest& m, std::uint64_t seed, double test_fraction) {
    std::size_t unassigned = 0;
    for (const auto& p : m.patients) unassigned += p.split == Split::Unassigned ? 1 : 0;
    if (unassigned > 0 && unassigned < m.patients.size()) {
        throw DataError("manifest assigns a split to some patients but not all");
    }
    if (unassigned > 0) {
        CounterRng rng(derive_key(seed, {0x5B17}));
        for (Group g : {Group::Control, Group::Osteoporosis}) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < m.patients.size(); ++i) {
                if (m.patients[i].group == g) members.push_back(i);
            }
            portable_shuffle(members, rng);
            const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(members.size())));
            for (std::size_t k = 0; k < members.size(); ++k) {
                m.patients[members[k]].split = k < n_test ? Split::Test : Split::Train;
            }
        }
    }
    std::size_t n_test = 0;
    for (const auto& p : m.patients) n_test += p.split == Split::Test ? 1 : 0;
    if (n_test == 0 || n_test == m.patients.size()) throw DataError("split leaves the train or test set empty");
}

/// Column names for one region set: plain names for a single region,
/// `<REGION>.`-prefixed names when several regions are concatenated.
inline std::vector<std::string> region_columns(const std::vector<std::string>& regions) {
    const auto base = radiomics::feature_names();
    if (regions.size() == 1) return base;
    std::vector<std::string> out;
    for (const auto& r : regions) {
        for (const auto& n : base) out.push_back(r + "." + n);
    }
    return out;
}

inline std::string region_key(const std::vector<std::string>& regions) {
    std::string k;
    for (const auto& r : regions) k += (k.empty() ? "" : "+") + r;
    return k;
}

/// Label map ready for feature extraction: optional post-processing, then
/// soft-tissue subdivision when the map still carries the undivided class.
inline LabelMap prepare_label_map(const HUImage& clipped, LabelMap map, const Config& c, std::string_view input) {
    if (!clipped.same_shape(map)) throw DataError("image and label map differ in shape");
    if (c.postprocess) {
        map = in_stage("postprocess", input, [&] { return postprocess::postprocess_pipeline(map, c.postprocess_options).map; });
    }
    if (c.soft_tissue && count_true(mask_of(map, {id(Tissue::ST)})) > 0) {
        map = in_stage("soft-tissue", input, [&] { return soft::segment_soft_tissue(clipped, map, c.soft_tissue_params).map; });
    }
    return map;
}

/// One row per slice: preprocess, (postprocess), soft tissue, extract.
/// Slices run in parallel; each writes its own slot, so row order and values
/// are independent of scheduling.
inline FeatureTable extract_cohort(const CohortManifest& m, const Config& c) {
    struct Job {
        std::size_t patient;
        int slice;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < m.patients.size(); ++p) {
        for (std::size_t s = 0; s < m.patients[p].slices.size(); ++s) jobs.push_back({p, static_cast<int>(s)});
    }
    if (jobs.empty()) throw DataError("manifest lists no slices");
    std::vector<std::vector<double>> rows(jobs.size());
    parallel_for(
        jobs.size(),
        [&](std::size_t i) {
            const auto& pe = m.patients[jobs[i].patient];
            const auto& ref = pe.slices[static_cast<std::size_t>(jobs[i].slice)];
            const std::string input = pe.patient_id + " slice " + std::to_string(jobs[i].slice) + " (" +
                                      ref.image.generic_string() + ")";
            const HUImage clipped = in_stage("preprocess", input, [&] {
                return preprocess::clip_intensity(load_hu_image(m.resolve(ref.image)), c.clip_lo, c.clip_hi);
            });
            const LabelMap raw = in_stage("preprocess", input, [&] {
                if (ref.mask.empty()) throw DataError("slice has no label map");
                return load_label_map(m.resolve(ref.mask));
            });
            const LabelMap map = prepare_label_map(clipped, raw, c, input);
            in_stage("extract", input, [&] {
                auto& row = rows[i];
                row.reserve(radiomics::kFeatureCount * c.regions.size());
                for (const auto& region : c.regions) {
                    const auto fv = radiomics::extract_all(clipped, radiomics::region_mask(map, region), c.extract);
                    row.insert(row.end(), fv.values.begin(), fv.values.end());
                }
            });
        },
        c.threads);
    FeatureTable t(region_columns(c.regions));
    const std::string region = region_key(c.regions);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        t.add_row({m.patients[jobs[i].patient].patient_id, jobs[i].slice, region}, rows[i]);
    }
    return t;
}

struct Labeled {
    FeatureTable table;
    std::vector<int> labels;
    std::vector<std::string> groups;
};

/// Rows of one split with osteoporosis = 1 labels and patient ids as groups.
inline Labeled rows_of_split(const FeatureTable& t, const CohortManifest& m, Split split) {
    Labeled out{t.filter_rows([&](const RowKey& k) { return m.patient(k.patient_id).split == split; }), {}, {}};
    for (const auto& k : out.table.keys()) {
        out.labels.push_back(m.patient(k.patient_id).group == Group::Osteoporosis ? 1 : 0);
        out.groups.push_back(k.patient_id);
    }
    if (out.table.rows() == 0) throw DataError(std::string(split == Split::Test ? "test" : "train") + " split has no rows");
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct OperatingPoint {
    std::string rule;
    double threshold = 0.5;
    metrics::ClassificationMetrics metrics;
};

struct Evaluation {
    std::vector<RowKey> keys;
    std::vector<int> labels;
    std::vector<double> scores;
    metrics::RocCurve roc;
    std::vector<OperatingPoint> points;
};

/// Held-out scores, ROC, and metrics at 0.5 and at the Youden threshold of
/// the training ROC (chosen without looking at the test labels).
inline Evaluation evaluate(const ml::FittedClassifier& model, const FeatureTable& train, const std::vector<int>& ytrain,
                           const FeatureTable& test, const std::vector<int>& ytest) {
    Evaluation e;
    e.keys = test.keys();
    e.labels = ytest;
    e.scores = ml::predict_proba(model, test);
    e.roc = metrics::roc_auroc(ytest, e.scores);
    e.points.push_back({"fixed_0.5", 0.5, metrics::classification_metrics(ytest, metrics::threshold_scores(e.scores, 0.5))});
    const auto train_roc = metrics::roc_auroc(ytrain, ml::predict_proba(model, train));
    const double t = metrics::youden_threshold(train_roc).threshold;
    e.points.push_back({"youden_train", t, metrics::classification_metrics(ytest, metrics::threshold_scores(e.scores, t))});
    return e;
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

/// Decimal text for CSV cells; NaN marks an undefined metric.
inline std::string cell(double v) {
    if (std::isnan(v)) return "NaN";
    return format_double(v);
}

inline std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

inline void write_json(const fs::path& path, const nlohmann::ordered_json& j) { open_out(path) << j.dump(2) << '\n'; }

inline void write_metrics_csv(const fs::path& path, Level level, std::string_view model, const Evaluation& e) {
    auto out = open_out(path);
    out << "level,model,rule,threshold,n,auroc,accuracy,sensitivity,specificity,f1,tp,fp,tn,fn\n";
    for (const auto& p : e.points) {
        const auto& m = p.metrics;
        const auto& c = m.confusion;
        out << level_name(level) << ',' << model << ',' << p.rule << ',' << cell(p.threshold) << ',' << e.labels.size() << ','
            << cell(e.roc.auroc) << ',' << cell(m.accuracy) << ',' << cell(m.sensitivity) << ',' << cell(m.specificity)
            << ',' << cell(m.f1) << ',' << c.tp << ',' << c.fp << ',' << c.tn << ',' << c.fn << '\n';
    }
}

inline void write_roc_csv(const fs::path& path, const metrics::RocCurve& roc) {
    auto out = open_out(path);
    out << "fpr,tpr,threshold\n";
    for (const auto& p : roc.points) out << cell(p.fpr) << ',' << cell(p.tpr) << ',' << cell(p.threshold) << '\n';
}

inline void write_predictions_csv(const fs::path& path, const Evaluation& e) {
    auto out = open_out(path);
    out << "patient_id,slice_index,region,label,score\n";
    for (std::size_t i = 0; i < e.keys.size(); ++i) {
        const auto& k = e.keys[i];
        out << k.patient_id << ',' << k.slice_index << ',' << k.region << ',' << e.labels[i] << ',' << cell(e.scores[i])
            << '\n';
    }
}

inline void write_cv_csv(const fs::path& path, const ml::GridSearchResult& r) {
    auto out = open_out(path);
    const std::size_t folds = r.table.empty() ? 0 : r.table.front().fold_auroc.size();
    for (const auto& [name, v] : r.table.front().params.values) out << name << ',';
    for (std::size_t k = 0; k < folds; ++k) out << "fold" << k + 1 << "_auroc,";
    out << "mean_auroc,best\n";
    for (std::size_t g = 0; g < r.table.size(); ++g) {
        const auto& row = r.table[g];
        for (const auto& [name, v] : row.params.values) out << cell(v) << ',';
        for (double a : row.fold_auroc) out << cell(a) << ',';
        out << cell(row.mean_auroc) << ',' << (g == r.best ? 1 : 0) << '\n';
    }
}

struct FeatureCounts {
    std::size_t extracted = 0;
    std::size_t variance = 0;
    std::size_t correlation = 0;
    std::size_t selected = 0;
};

inline FeatureCounts feature_counts(const selection::SelectionModel& s) {
    return {s.scaling.names.size(), s.variance_survivors.size(), s.correlation_survivors.size(), s.selected.size()};
}

inline void write_feature_counts_csv(const fs::path& path, const FeatureCounts& c) {
    auto out = open_out(path);
    out << "stage,features\nextracted," << c.extracted << "\nvariance," << c.variance << "\ncorrelation," << c.correlation
        << "\nlasso," << c.selected << '\n';
}

// ---------------------------------------------------------------------------
// Statistical inference
// ---------------------------------------------------------------------------

struct StatsResult {
    stats::LogisticInference inference;
    ml::FittedClassifier model;  // the unpenalised fit, for held-out scoring
    Evaluation evaluation;
};

/// Multivariable logistic inference on the selected training features, then
/// the same fit scored on the held-out rows.
inline StatsResult run_stats(const FeatureTable& train, const std::vector<int>& ytrain, const FeatureTable& test,
                             const std::vector<int>& ytest, int hl_groups = 10) {
    if (train.cols() > stats::kMaxInferenceCovariates) {
        throw ConfigError("statistical inference takes at most " + std::to_string(stats::kMaxInferenceCovariates) +
                          " features; " + std::to_string(train.cols()) + " were selected (set selection.top_k)");
    }
    StatsResult r;
    r.inference = stats::logistic_inference(ml::table_matrix(train), ytrain, train.names(), hl_groups);
    ml::LogisticModel lm{ml::Vector(static_cast<Eigen::Index>(train.cols())), r.inference.intercept.beta};
    for (std::size_t i = 0; i < r.inference.rows.size(); ++i) lm.w(static_cast<Eigen::Index>(i)) = r.inference.rows[i].beta;
    r.model = {ml::Family::LogisticRegression, ml::Params{{{"C", ml::kUnlimited}}}, train.names(), lm};
    r.evaluation = evaluate(r.model, train, ytrain, test, ytest);
    return r;
}

inline void write_inference_csv(const fs::path& path, const stats::LogisticInference& inf) {
    auto out = open_out(path);
    out << "variable,beta,se,odds_ratio,ci_low,ci_high,z,p,vif,significant\n";
    const auto row = [&](const stats::CoefficientRow& r, bool intercept) {
        out << r.name << ',' << cell(r.beta) << ',' << cell(r.se) << ',' << cell(r.odds_ratio) << ',' << cell(r.ci_low)
            << ',' << cell(r.ci_high) << ',' << cell(r.z) << ',' << cell(r.p) << ','
            << (intercept ? std::string("NaN") : cell(r.vif)) << ',' << (r.significant ? 1 : 0) << '\n';
    };
    row(inf.intercept, true);
    for (const auto& r : inf.rows) row(r, false);
}

inline nlohmann::ordered_json calibration_json(const stats::LogisticInference& inf) {
    nlohmann::ordered_json j;
    j["n"] = inf.n;
    j["log_likelihood"] = inf.log_likelihood;
    j["iterations"] = inf.iterations;
    if (inf.hl_available) {
        j["hosmer_lemeshow"] = {{"statistic", inf.hl.statistic},
                                {"dof", inf.hl.dof},
                                {"p", inf.hl.p},
                                {"group_sizes", inf.hl.group_sizes},
                                {"observed", inf.hl.observed},
                                {"expected", inf.hl.expected}};
    } else {
        j["hosmer_lemeshow"] = nullptr;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Full run
// ---------------------------------------------------------------------------

struct RunResult {
    fs::path output_dir;
    FeatureCounts counts;
    double test_auroc = 0;
    std::optional<double> stats_test_auroc;
    std::vector<std::string> warnings;
    nlohmann::ordered_json manifest;  // contents of run.json
};

/// Cohort source: the configured manifest, or a phantom cohort generated
/// under `<output_dir>/cohort`.
inline CohortManifest prepare_cohort(const Config& c, fs::path& manifest_path) {
    return in_stage("cohort", "", [&] {
        if (c.phantom) {
            manifest_path = phantom::generate_cohort(*c.phantom, c.output_dir / "cohort").manifest_path;
        } else {
            manifest_path = c.manifest;
        }
        CohortManifest m = load_manifest(manifest_path);
        assign_splits(m, c.seed, c.phantom ? c.phantom->test_fraction : c.test_fraction);
        return m;
    });
}

/// Every slice file in manifest order, hashed into one input digest.
inline std::string cohort_input_hash(const CohortManifest& m, const fs::path& manifest_path) {
    ContentHash h;
    h.update(hash_file(manifest_path));
    for (const auto& p : m.patients) {
        for (const auto& s : p.slices) {
            for (const fs::path& f : {s.image, s.mask}) {
                if (f.empty()) continue;
                h.update(f.generic_string());
                h.update(hash_file(m.resolve(f)));
                h.update(hash_file(sidecar_for(m.resolve(f))));
            }
        }
    }
    return h.hex();
}

inline RunResult run_pipeline(const Config& c) {
    c.validate();
    RunResult res;
    res.output_dir = c.output_dir;
    fs::create_directories(c.output_dir);
    const auto out = [&](const char* name) { return c.output_dir / name; };
    std::vector<std::string> artifacts;

    fs::path manifest_path;
    const CohortManifest cohort = prepare_cohort(c, manifest_path);
    const std::string input_hash = in_stage("cohort", "", [&] { return cohort_input_hash(cohort, manifest_path); });

    FeatureTable features = extract_cohort(cohort, c);
    write_feature_table(features, out("features.csv"));
    artifacts.push_back("features.csv");
    if (c.level == Level::Patient) {
        auto agg = in_stage("aggregate", "", [&] { return metrics::aggregate_patient(features, c.expected_slices); });
        res.warnings.insert(res.warnings.end(), agg.warnings.begin(), agg.warnings.end());
        features = std::move(agg.table);
        write_feature_table(features, out("patient_features.csv"));
        artifacts.push_back("patient_features.csv");
    }
    const Labeled train = in_stage("select", "", [&] { return rows_of_split(features, cohort, Split::Train); });
    const Labeled test = in_stage("evaluate", "", [&] { return rows_of_split(features, cohort, Split::Test); });

    selection::SelectionOptions sel_opt = c.selection;
    sel_opt.threads = c.threads;
    const auto sel = in_stage("select", "", [&] { return selection::fit_selection(train.table, train.labels, train.groups, sel_opt); });
    for (const auto& w : sel.warnings) res.warnings.push_back("select: " + w);
    res.counts = feature_counts(sel);
    write_json(out("selection.json"), selection::to_json(sel));
    write_feature_counts_csv(out("feature_counts.csv"), res.counts);
    artifacts.insert(artifacts.end(), {"selection.json", "feature_counts.csv"});
    const FeatureTable train_x = sel.transform(train.table);
    const FeatureTable test_x = sel.transform(test.table);

    ml::TrainResult trained;
    if (train_x.cols() == 0) {
        res.warnings.push_back("train: no feature survived selection; scoring with the training prevalence");
        trained.model = in_stage("train", "", [&] { return ml::prior_model(train.labels); });
    } else {
        trained = in_stage("train", "", [&] { return ml::train(c.classifier, train_x, train.labels, train.groups, c.threads); });
    }
    write_json(out("model.json"), ml::to_json(trained.model));
    artifacts.push_back("model.json");
    if (trained.search) {
        write_cv_csv(out("cv.csv"), *trained.search);
        artifacts.push_back("cv.csv");
    }

    const auto ev = in_stage("evaluate", "", [&] { return evaluate(trained.model, train_x, train.labels, test_x, test.labels); });
    res.test_auroc = ev.roc.auroc;
    write_metrics_csv(out("metrics.csv"), c.level, ml::family_name(c.classifier.family), ev);
    write_roc_csv(out("roc.csv"), ev.roc);
    write_predictions_csv(out("predictions.csv"), ev);
    artifacts.insert(artifacts.end(), {"metrics.csv", "roc.csv", "predictions.csv"});

    if (c.stats) {
        const auto st = in_stage("stats", "", [&] { return run_stats(train_x, train.labels, test_x, test.labels, c.hl_groups); });
        res.stats_test_auroc = st.evaluation.roc.auroc;
        write_inference_csv(out("inference.csv"), st.inference);
        write_json(out("calibration.json"), calibration_json(st.inference));
        write_metrics_csv(out("stats_metrics.csv"), c.level, "logistic_inference", st.evaluation);
        artifacts.insert(artifacts.end(), {"inference.csv", "calibration.json", "stats_metrics.csv"});
    }

    nlohmann::ordered_json& run = res.manifest;
    run["format"] = "osteorad.run";
    run["version"] = 1;
    run["tool_version"] = kToolVersion;
    run["config"] = to_json(c);
    run["seeds"] = {{"run", c.seed},
                    {"cohort", c.phantom ? nlohmann::ordered_json(c.phantom->seed) : nlohmann::ordered_json(nullptr)},
                    {"selection", c.selection.seed},
                    {"classifier", c.classifier.seed}};
    std::size_t n_slices = 0;
    for (const auto& p : cohort.patients) n_slices += p.slices.size();
    run["inputs"] = {{"patients", cohort.patients.size()}, {"slices", n_slices}, {"hash", input_hash}};
    run["feature_counts"] = {{"extracted", res.counts.extracted},
                             {"variance", res.counts.variance},
                             {"correlation", res.counts.correlation},
                             {"lasso", res.counts.selected}};
    run["test_auroc"] = res.test_auroc;
    nlohmann::ordered_json arts = nlohmann::ordered_json::array();
    for (const auto& a : artifacts) arts.push_back({{"path", a}, {"hash", hash_file(c.output_dir / a)}});
    run["artifacts"] = arts;
    run["warnings"] = res.warnings;
    write_json(out("run.json"), run);
    return res;
}

}  // namespace osteorad::pipeline
