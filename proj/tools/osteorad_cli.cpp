#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "osteorad/osteorad.hpp"

using namespace osteorad;

namespace {

nlohmann::json read_json(const fs::path& path, ErrorKind kind) {
    std::ifstream in(path);
    if (!in) throw Error(kind, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(kind, "malformed JSON in " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Normalised images are written as little-endian float64 with a sidecar that
// records the sample type.
// ---------------------------------------------------------------------------

void write_norm_image(const NormImage& img, const fs::path& raw) {
    std::vector<unsigned char> bytes(img.size() * 8);
    for (std::size_t i = 0; i < img.size(); ++i) {
        std::uint64_t u = 0;
        const double v = img[i];
        std::memcpy(&u, &v, 8);
        for (int b = 0; b < 8; ++b) bytes[8 * i + static_cast<std::size_t>(b)] = static_cast<unsigned char>(u >> (8 * b));
    }
    write_bytes(raw, bytes);
    nlohmann::ordered_json j;
    j["width"] = img.width();
    j["height"] = img.height();
    j["voxel_size_um"] = img.voxel_size_um();
    j["dtype"] = "float64";
    pipeline::write_json(sidecar_for(raw), j);
}

// ---------------------------------------------------------------------------
// Shared table plumbing for select / train / evaluate / stats
// ---------------------------------------------------------------------------

struct Split2 {
    pipeline::Labeled train;
    pipeline::Labeled test;
};

Split2 split_features(const fs::path& features, const fs::path& manifest, const std::string& level,
                      std::uint64_t seed, double test_fraction) {
    CohortManifest m = load_manifest(manifest, false);
    pipeline::assign_splits(m, seed, test_fraction);
    FeatureTable t = read_feature_table(features);
    if (pipeline::level_from_name(level) == pipeline::Level::Patient) {
        auto agg = metrics::aggregate_patient(t);
        for (const auto& w : agg.warnings) std::cerr << "warning: " << w << '\n';
        t = std::move(agg.table);
    }
    return {pipeline::rows_of_split(t, m, Split::Train), pipeline::rows_of_split(t, m, Split::Test)};
}

selection::SelectionModel load_selection(const fs::path& path) {
    return selection::selection_from_json(read_json(path, ErrorKind::Data));
}

/// A grid given inline as JSON text or as a path to a JSON file.
nlohmann::json grid_document(const std::string& arg) {
    if (fs::exists(arg)) return read_json(arg, ErrorKind::Config);
    try {
        return nlohmann::json::parse(arg);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("--grid is neither a file nor valid JSON: " + std::string(e.what()));
    }
}

void print_counts(const selection::SelectionModel& s) {
    const auto c = pipeline::feature_counts(s);
    std::cout << "features: extracted " << c.extracted << ", variance " << c.variance << ", correlation "
              << c.correlation << ", lasso " << c.selected << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"osteorad: HR-pQCT radiomics pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(pipeline::kToolVersion));

    // run ---------------------------------------------------------------
    auto* run = app.add_subcommand("run", "Run the whole pipeline from a JSON config");
    fs::path run_config;
    std::optional<std::string> run_output;
    std::optional<std::uint64_t> run_seed;
    std::optional<unsigned> run_threads;
    run->add_option("config", run_config, "Pipeline config (JSON)")->required();
    run->add_option("--output", run_output, "Override output_dir");
    run->add_option("--seed", run_seed, "Override the run seed (selection and classifier seeds follow)");
    run->add_option("--threads", run_threads, "Override worker threads (0: all cores)");

    // phantom -----------------------------------------------------------
    auto* ph = app.add_subcommand("phantom", "Generate a synthetic slice or cohort with ground truth");
    fs::path ph_out;
    bool ph_cohort = false;
    phantom::CohortParams cp;
    std::uint64_t ph_seed = 1;
    int ph_side = 192;
    double ph_voxel = 60.7;
    std::vector<double> ph_limb, ph_tibia, ph_fibula;
    std::optional<int> ph_tc, ph_fc;
    double ph_density = 0.40, ph_myo = 0.6, ph_noise = 30.0, ph_band = 2.0;
    std::string ph_group = "control";
    ph->add_option("--out", ph_out, "Output directory")->required();
    ph->add_flag("--cohort", ph_cohort, "Generate a cohort with manifest and split files");
    ph->add_option("--seed", ph_seed, "Seed");
    ph->add_option("--side", ph_side, "Image side in pixels");
    ph->add_option("--voxel-size-um", ph_voxel, "Voxel size in micrometres");
    ph->add_option("--n-patients", cp.n_patients, "Cohort: patients");
    ph->add_option("--slices", cp.slices_per_patient, "Cohort: slices per patient");
    ph->add_option("--effect-size", cp.effect_size, "Cohort: strut density difference between groups");
    ph->add_option("--test-fraction", cp.test_fraction, "Cohort: share of patients held out");
    ph->add_option("--limb", ph_limb, "Slice: limb circle cx cy r (px)")->expected(3);
    ph->add_option("--tibia", ph_tibia, "Slice: tibia circle cx cy r (px)")->expected(3);
    ph->add_option("--fibula", ph_fibula, "Slice: fibula circle cx cy r (px)")->expected(3);
    ph->add_option("--tibia-cortical-px", ph_tc, "Slice: tibial cortex thickness");
    ph->add_option("--fibula-cortical-px", ph_fc, "Slice: fibular cortex thickness");
    ph->add_option("--density", ph_density, "Slice: trabecular strut density in [0,1]");
    ph->add_option("--myo-fraction", ph_myo, "Slice: myotendinous share of soft tissue in [0,1]");
    ph->add_option("--noise", ph_noise, "Gaussian noise sigma (HU)");
    ph->add_option("--group", ph_group, "Slice: control or osteoporosis");
    ph->add_option("--skin-band-mm", ph_band, "Slice: skin band width (mm)");

    // preprocess --------------------------------------------------------
    auto* pre = app.add_subcommand("preprocess", "Clip, crop, normalise and downsample one slice");
    fs::path pre_in, pre_out;
    std::optional<fs::path> pre_mask, pre_mask_out;
    preprocess::Params pp;
    std::string pre_norm = "per_image";
    bool pre_clip_only = false;
    pre->add_option("--input", pre_in, "HU image (.raw with sidecar)")->required();
    pre->add_option("--output", pre_out, "Output raw")->required();
    pre->add_option("--clip-lo", pp.clip_lo, "Lower HU bound");
    pre->add_option("--clip-hi", pp.clip_hi, "Upper HU bound");
    pre->add_option("--crop", pp.crop, "Centre crop side (px)");
    pre->add_option("--factor", pp.factor, "Downsampling factor");
    pre->add_option("--normalization", pre_norm, "per_image or fixed_range");
    pre->add_flag("--clip-only", pre_clip_only, "Only clip; write an int16 HU image");
    pre->add_option("--mask", pre_mask, "Label map to crop and resize alongside");
    pre->add_option("--mask-output", pre_mask_out, "Output for the resized label map");

    // seg-eval ----------------------------------------------------------
    auto* se = app.add_subcommand("seg-eval", "Per-class precision, recall, F1 and IoU of a label map");
    fs::path se_pred, se_truth;
    std::optional<fs::path> se_out;
    se->add_option("--pred", se_pred, "Predicted label map")->required();
    se->add_option("--truth", se_truth, "Reference label map")->required();
    se->add_option("--output", se_out, "CSV output (default: stdout)");

    // postprocess -------------------------------------------------------
    auto* po = app.add_subcommand("postprocess", "Clean a 5-class label map");
    fs::path po_in, po_out;
    std::optional<fs::path> po_report;
    postprocess::Options po_opt;
    po->add_option("--input", po_in, "Label map")->required();
    po->add_option("--output", po_out, "Cleaned label map")->required();
    po->add_option("--report", po_report, "QC report (JSON)");
    po->add_option("--continuity-threshold", po_opt.continuity_threshold, "Cortical continuity threshold");
    po->add_option("--max-radius", po_opt.max_radius, "Largest closing radius (px)");

    // soft-tissue -------------------------------------------------------
    auto* st = app.add_subcommand("soft-tissue", "Split soft tissue into skin, myotendinous and adipose");
    fs::path st_img, st_mask, st_out;
    std::optional<fs::path> st_areas;
    soft::Params st_p;
    int st_clip_lo = preprocess::kDefaultClipLo, st_clip_hi = preprocess::kDefaultClipHi;
    st->add_option("--image", st_img, "HU image")->required();
    st->add_option("--mask", st_mask, "Label map with class 5")->required();
    st->add_option("--output", st_out, "9-class label map")->required();
    st->add_option("--areas", st_areas, "Tissue areas (JSON)");
    st->add_option("--skin-band-mm", st_p.skin_band_mm, "Skin band width (mm)");
    st->add_option("--min-seed-px", st_p.min_seed_px, "Smallest seed component kept");
    st->add_option("--dilation-iters", st_p.dilation_iters, "Region growing iterations");
    st->add_option("--resolve-threshold", st_p.resolve_threshold, "HU above which leftovers are myotendinous");
    st->add_option("--clip-lo", st_clip_lo, "Lower HU bound");
    st->add_option("--clip-hi", st_clip_hi, "Upper HU bound");

    // extract -----------------------------------------------------------
    auto* ex = app.add_subcommand("extract", "Radiomics features for a cohort or a single slice");
    std::optional<fs::path> ex_manifest, ex_img, ex_mask;
    fs::path ex_out;
    std::vector<std::string> ex_regions{"TT"};
    unsigned ex_threads = 0;
    bool ex_post = false, ex_no_soft = false;
    std::string ex_policy = "fixed_count";
    int ex_bins = 32;
    double ex_width = 25.0;
    ex->add_option("--manifest", ex_manifest, "Cohort manifest");
    ex->add_option("--image", ex_img, "Single HU image");
    ex->add_option("--mask", ex_mask, "Label map for --image");
    ex->add_option("--output", ex_out, "Feature table (CSV)")->required();
    ex->add_option("--regions", ex_regions, "Regions: TC TT FC FT SK MT AT soft band<d>mm")->delimiter(',');
    ex->add_option("--threads", ex_threads, "Worker threads (0: all cores)");
    ex->add_flag("--postprocess", ex_post, "Clean label maps before extraction");
    ex->add_flag("--no-soft-tissue", ex_no_soft, "Skip soft-tissue subdivision");
    ex->add_option("--bin-policy", ex_policy, "fixed_count or fixed_width");
    ex->add_option("--bin-count", ex_bins, "Gray levels for fixed_count");
    ex->add_option("--bin-width", ex_width, "Bin width for fixed_width");

    // select ------------------------------------------------------------
    auto* sl = app.add_subcommand("select", "Fit the feature reduction on the training patients");
    fs::path sl_features, sl_manifest, sl_out;
    std::string sl_level = "image", sl_lambda = "auto", sl_loss = "linear";
    selection::SelectionOptions so;
    double sl_test_fraction = 0.2;
    sl->add_option("--features", sl_features, "Feature table (CSV)")->required();
    sl->add_option("--manifest", sl_manifest, "Cohort manifest (groups and splits)")->required();
    sl->add_option("--output", sl_out, "Selection model (JSON)")->required();
    sl->add_option("--level", sl_level, "image or patient");
    sl->add_option("--variance-threshold", so.variance_threshold, "Variance threshold");
    sl->add_option("--r-max", so.r_max, "Correlation bound");
    sl->add_option("--lambda", sl_lambda, "auto or a value");
    sl->add_option("--top-k", so.top_k, "Keep the k largest |beta| (0: all nonzero)");
    sl->add_option("--folds", so.folds, "CV folds for lambda");
    sl->add_option("--seed", so.seed, "Seed for folds and splits");
    sl->add_option("--loss", sl_loss, "linear or logistic");
    sl->add_option("--threads", so.threads, "Parallel CV folds (0: all cores)");
    sl->add_option("--test-fraction", sl_test_fraction, "Held-out share when the manifest has no splits");

    // train -------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "Grid-search and fit a classifier on the selected features");
    fs::path tr_features, tr_manifest, tr_selection, tr_out;
    std::optional<fs::path> tr_cv;
    std::optional<std::string> tr_grid;
    std::string tr_model = "logistic_regression", tr_level = "image";
    int tr_folds = 5;
    std::uint64_t tr_seed = 0;
    unsigned tr_threads = 0;
    double tr_test_fraction = 0.2;
    tr->add_option("--features", tr_features, "Feature table (CSV)")->required();
    tr->add_option("--manifest", tr_manifest, "Cohort manifest")->required();
    tr->add_option("--selection", tr_selection, "Selection model (JSON)")->required();
    tr->add_option("--output", tr_out, "Classifier document (JSON)")->required();
    tr->add_option("--model", tr_model, "Classifier family");
    tr->add_option("--grid", tr_grid, "Grid as JSON text or file, e.g. {\"C\":[0.1,1]}");
    tr->add_option("--folds", tr_folds, "CV folds");
    tr->add_option("--seed", tr_seed, "Seed for folds, bootstrap and splits");
    tr->add_option("--threads", tr_threads, "Worker threads (0: all cores)");
    tr->add_option("--level", tr_level, "image or patient");
    tr->add_option("--cv-output", tr_cv, "Grid-search table (CSV)");
    tr->add_option("--test-fraction", tr_test_fraction, "Held-out share when the manifest has no splits");

    // evaluate ----------------------------------------------------------
    auto* ev = app.add_subcommand("evaluate", "Score the held-out patients");
    fs::path ev_features, ev_manifest, ev_selection, ev_model, ev_out;
    std::string ev_level = "image";
    std::uint64_t ev_seed = 0;
    double ev_test_fraction = 0.2;
    ev->add_option("--features", ev_features, "Feature table (CSV)")->required();
    ev->add_option("--manifest", ev_manifest, "Cohort manifest")->required();
    ev->add_option("--selection", ev_selection, "Selection model (JSON)")->required();
    ev->add_option("--model", ev_model, "Classifier document (JSON)")->required();
    ev->add_option("--output-dir", ev_out, "Directory for metrics.csv, roc.csv, predictions.csv")->required();
    ev->add_option("--level", ev_level, "image or patient");
    ev->add_option("--seed", ev_seed, "Split seed when the manifest has no splits");
    ev->add_option("--test-fraction", ev_test_fraction, "Held-out share when the manifest has no splits");

    // stats -------------------------------------------------------------
    auto* sa = app.add_subcommand("stats", "Logistic inference, VIF and calibration on the selected features");
    fs::path sa_features, sa_manifest, sa_selection, sa_out;
    std::string sa_level = "patient";
    std::uint64_t sa_seed = 0;
    int sa_groups = 10;
    double sa_test_fraction = 0.2;
    sa->add_option("--features", sa_features, "Feature table (CSV)")->required();
    sa->add_option("--manifest", sa_manifest, "Cohort manifest")->required();
    sa->add_option("--selection", sa_selection, "Selection model (JSON) with at most 5 features")->required();
    sa->add_option("--output-dir", sa_out, "Directory for inference.csv, calibration.json, stats_metrics.csv")->required();
    sa->add_option("--level", sa_level, "image or patient (default: patient)");
    sa->add_option("--hl-groups", sa_groups, "Hosmer-Lemeshow groups");
    sa->add_option("--seed", sa_seed, "Split seed when the manifest has no splits");
    sa->add_option("--test-fraction", sa_test_fraction, "Held-out share when the manifest has no splits");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ErrorKind::Config);
    }

    try {
        if (*run) {
            pipeline::Config c = pipeline::load_config(run_config);
            if (run_output) c.output_dir = *run_output;
            if (run_seed) {
                c.seed = c.selection.seed = c.classifier.seed = *run_seed;
                if (c.phantom) c.phantom->seed = *run_seed;
            }
            if (run_threads) c.threads = *run_threads;
            const auto r = pipeline::run_pipeline(c);
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << "features: extracted " << r.counts.extracted << ", variance " << r.counts.variance
                      << ", correlation " << r.counts.correlation << ", lasso " << r.counts.selected << '\n';
            std::cout << "test AUROC " << r.test_auroc << '\n';
            std::cout << "artifacts in " << r.output_dir.string() << '\n';
        } else if (*ph) {
            if (ph_cohort) {
                cp.seed = ph_seed;
                cp.side = ph_side;
                cp.voxel_size_um = ph_voxel;
                cp.noise_sigma = ph_noise;
                const auto files = phantom::generate_cohort(cp, ph_out);
                std::cout << "wrote " << files.manifest_path.string() << '\n';
            } else {
                auto p = phantom::default_params(ph_side, ph_voxel);
                p.seed = ph_seed;
                if (!ph_limb.empty()) p.limb = {ph_limb[0], ph_limb[1], ph_limb[2]};
                if (!ph_tibia.empty()) p.tibia = {ph_tibia[0], ph_tibia[1], ph_tibia[2]};
                if (!ph_fibula.empty()) p.fibula = {ph_fibula[0], ph_fibula[1], ph_fibula[2]};
                if (ph_tc) p.tibia_cortical_px = *ph_tc;
                if (ph_fc) p.fibula_cortical_px = *ph_fc;
                p.trabecular_density = ph_density;
                p.myo_fraction = ph_myo;
                p.noise_sigma = ph_noise;
                p.group = group_from_name(ph_group);
                p.skin_band_mm = ph_band;
                const auto slice = phantom::generate_phantom(p);
                write_hu_image(slice.image, ph_out / "phantom.raw");
                write_label_map(phantom::collapse_soft_tissue(slice.truth), ph_out / "phantom.mask.raw");
                write_label_map(slice.truth, ph_out / "phantom.truth.mask.raw");
                std::cout << "wrote " << (ph_out / "phantom.raw").string() << '\n';
            }
        } else if (*pre) {
            pp.normalization = preprocess::normalization_from_name(pre_norm);
            const HUImage img = load_hu_image(pre_in);
            if (pre_clip_only) {
                write_hu_image(preprocess::clip_intensity(img, pp.clip_lo, pp.clip_hi), pre_out);
            } else {
                const NormImage out = preprocess::standardize(img, pp);
                write_norm_image(out, pre_out);
                if (pre_mask) {
                    if (!pre_mask_out) throw ConfigError("--mask needs --mask-output");
                    const LabelMap cropped = preprocess::center_crop(load_label_map(*pre_mask), pp.crop);
                    write_label_map(preprocess::resize_mask_nearest(cropped, out.width(), out.height()), *pre_mask_out);
                }
            }
        } else if (*se) {
            const auto r = seg::eval_segmentation(load_label_map(se_pred), load_label_map(se_truth));
            std::ostringstream csv;
            const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NaN"); };
            csv << "class,tp,fp,fn,precision,recall,f1,iou\n";
            for (const auto& c : r.classes) {
                csv << tissue_name(c.class_id) << ',' << c.tp << ',' << c.fp << ',' << c.fn << ',' << opt(c.precision)
                    << ',' << opt(c.recall) << ',' << opt(c.f1) << ',' << opt(c.iou) << '\n';
            }
            csv << "mean,,,," << opt(r.mean_precision) << ',' << opt(r.mean_recall) << ',' << opt(r.mean_f1) << ','
                << opt(r.mean_iou) << '\n';
            if (se_out) {
                pipeline::open_out(*se_out) << csv.str();
            } else {
                std::cout << csv.str();
            }
        } else if (*po) {
            const auto r = postprocess::postprocess_pipeline(load_label_map(po_in), po_opt);
            write_label_map(r.map, po_out);
            if (po_report) {
                const auto bone = [](const postprocess::BoneQc& q) {
                    return nlohmann::ordered_json{{"present", q.present},
                                                  {"continuity_ratio", q.continuity_ratio},
                                                  {"closing_radius", q.closing_radius},
                                                  {"final_ratio", q.final_ratio}};
                };
                nlohmann::ordered_json j;
                j["passes"] = r.report.passes;
                j["components_removed"] = nlohmann::ordered_json::object();
                for (int c = 1; c <= id(Tissue::ST); ++c) {
                    j["components_removed"][std::string(tissue_name(c))] = r.report.components_removed[static_cast<std::size_t>(c)];
                }
                j["tibia"] = bone(r.report.tibia);
                j["fibula"] = bone(r.report.fibula);
                pipeline::write_json(*po_report, j);
            }
        } else if (*st) {
            const HUImage img = preprocess::clip_intensity(load_hu_image(st_img), st_clip_lo, st_clip_hi);
            const auto r = soft::segment_soft_tissue(img, load_label_map(st_mask), st_p);
            write_label_map(r.map, st_out);
            if (st_areas) {
                pipeline::write_json(*st_areas, {{"skin_mm2", r.areas.skin_mm2},
                                                 {"myotendinous_mm2", r.areas.myo_mm2},
                                                 {"adipose_mm2", r.areas.adipose_mm2}});
            }
        } else if (*ex) {
            pipeline::Config c;
            c.regions = ex_regions;
            c.threads = ex_threads;
            c.postprocess = ex_post;
            c.soft_tissue = !ex_no_soft;
            c.extract.discretization.policy = radiomics::bin_policy_from_name(ex_policy);
            c.extract.discretization.bin_count = ex_bins;
            c.extract.discretization.bin_width = ex_width;
            c.extract.validate();
            if (ex_manifest.has_value() == ex_img.has_value()) throw ConfigError("give exactly one of --manifest and --image");
            CohortManifest m;
            if (ex_manifest) {
                m = load_manifest(*ex_manifest);
            } else {
                if (!ex_mask) throw ConfigError("--image needs --mask");
                m.base_dir = fs::current_path();
                m.patients.push_back({ex_img->stem().string(), Group::Control, {}, {{*ex_img, *ex_mask}}, Split::Unassigned});
            }
            write_feature_table(pipeline::extract_cohort(m, c), ex_out);
        } else if (*sl) {
            if (sl_lambda != "auto") {
                try {
                    so.lambda = std::stod(sl_lambda);
                } catch (const std::exception&) {
                    throw ConfigError("--lambda must be 'auto' or a number");
                }
            }
            so.loss = selection::lasso_loss_from_name(sl_loss);
            const auto d = split_features(sl_features, sl_manifest, sl_level, so.seed, sl_test_fraction);
            const auto s = selection::fit_selection(d.train.table, d.train.labels, d.train.groups, so);
            for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
            pipeline::write_json(sl_out, selection::to_json(s));
            print_counts(s);
        } else if (*tr) {
            const auto family = ml::family_from_name(tr_model);
            auto spec = ml::default_spec(family, tr_seed);
            if (tr_grid) spec.grid = ml::grid_from_json(family, grid_document(*tr_grid));
            spec.folds = tr_folds;
            const auto d = split_features(tr_features, tr_manifest, tr_level, tr_seed, tr_test_fraction);
            const auto s = load_selection(tr_selection);
            const FeatureTable x = s.transform(d.train.table);
            ml::TrainResult r;
            if (x.cols() == 0) {
                std::cerr << "warning: no feature survived selection; writing a prevalence-only model\n";
                r.model = ml::prior_model(d.train.labels);
            } else {
                r = ml::train(spec, x, d.train.labels, d.train.groups, tr_threads);
            }
            pipeline::write_json(tr_out, ml::to_json(r.model));
            if (r.search) {
                if (tr_cv) pipeline::write_cv_csv(*tr_cv, *r.search);
                std::cout << "best CV AUROC " << r.search->table[r.search->best].mean_auroc << '\n';
            }
        } else if (*ev) {
            const auto d = split_features(ev_features, ev_manifest, ev_level, ev_seed, ev_test_fraction);
            const auto s = load_selection(ev_selection);
            const auto model = ml::classifier_from_json(read_json(ev_model, ErrorKind::Data));
            const auto e = pipeline::evaluate(model, s.transform(d.train.table), d.train.labels, s.transform(d.test.table),
                                              d.test.labels);
            pipeline::write_metrics_csv(ev_out / "metrics.csv", pipeline::level_from_name(ev_level),
                                        ml::family_name(model.family), e);
            pipeline::write_roc_csv(ev_out / "roc.csv", e.roc);
            pipeline::write_predictions_csv(ev_out / "predictions.csv", e);
            std::cout << "test AUROC " << e.roc.auroc << '\n';
        } else if (*sa) {
            const auto d = split_features(sa_features, sa_manifest, sa_level, sa_seed, sa_test_fraction);
            const auto s = load_selection(sa_selection);
            const auto r = pipeline::run_stats(s.transform(d.train.table), d.train.labels, s.transform(d.test.table),
                                               d.test.labels, sa_groups);
            pipeline::write_inference_csv(sa_out / "inference.csv", r.inference);
            pipeline::write_json(sa_out / "calibration.json", pipeline::calibration_json(r.inference));
            pipeline::write_metrics_csv(sa_out / "stats_metrics.csv", pipeline::level_from_name(sa_level),
                                        "logistic_inference", r.evaluation);
            std::cout << "test AUROC " << r.evaluation.roc.auroc << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "osteorad: error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "osteorad: error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Data);
    }
    return 0;
}
