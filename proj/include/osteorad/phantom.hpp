#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "osteorad/imaging.hpp"
#include "osteorad/morphology.hpp"
#include "osteorad/rng.hpp"
#include "osteorad/soft_tissue.hpp"

namespace osteorad::phantom {

struct Circle {
    double cx = 0;
    double cy = 0;
    double r = 0;
};

struct Params {
    std::uint64_t seed = 1;
    int side = 192;
    double voxel_size_um = 60.7;
    Circle limb;
    Circle tibia;
    Circle fibula;
    int tibia_cortical_px = 5;
    int fibula_cortical_px = 3;
    double trabecular_density = 0.40;  // fraction of trabecular pixels that are bone struts
    double myo_fraction = 0.6;         // angular share of the interior soft tissue that is muscle
    double noise_sigma = 30.0;
    Group group = Group::Control;
    double skin_band_mm = 2.0;

    double air_hu = -1000;
    double skin_hu = 50;
    double myo_hu = 300;
    double adipose_hu = -400;
    double cortical_hu = 1200;
    double strut_hu = 700;
    double marrow_hu = 30;

    void validate() const;
};

/// Geometry proportional to the image side.
inline Params default_params(int side = 192, double voxel_size_um = 60.7) {
    Params p;
    p.side = side;
    p.voxel_size_um = voxel_size_um;
    const double s = side;
    p.limb = {0.5 * s, 0.5 * s, 0.47 * s};
    p.tibia = {0.42 * s, 0.45 * s, 0.17 * s};
    p.fibula = {0.68 * s, 0.57 * s, 0.07 * s};
    p.tibia_cortical_px = std::max(3, static_cast<int>(std::lround(0.025 * s)));
    p.fibula_cortical_px = std::max(2, static_cast<int>(std::lround(0.015 * s)));
    return p;
}

inline void Params::validate() const {
    if (side < 16) throw ConfigError("phantom side must be >= 16");
    if (!(voxel_size_um > 0)) throw ConfigError("voxel size must be positive");
    if (trabecular_density < 0 || trabecular_density > 1) throw ConfigError("trabecular density must be in [0,1]");
    if (myo_fraction < 0 || myo_fraction > 1) throw ConfigError("myo fraction must be in [0,1]");
    if (noise_sigma < 0) throw ConfigError("noise sigma must be >= 0");
    if (tibia_cortical_px < 1 || fibula_cortical_px < 1) throw ConfigError("cortical thickness must be >= 1 px");
    if (tibia_cortical_px >= tibia.r || fibula_cortical_px >= fibula.r) {
        throw ConfigError("geometry overflow: cortex thicker than bone radius");
    }
    const auto inside = [](const Circle& outer, const Circle& inner, double margin) {
        return std::hypot(inner.cx - outer.cx, inner.cy - outer.cy) + inner.r + margin <= outer.r;
    };
    const double s = side;
    const Circle image{(s - 1) / 2, (s - 1) / 2, (s - 1) / 2};
    if (!inside(image, limb, 0)) throw ConfigError("geometry overflow: limb exceeds the image");
    const double skin = soft::skin_band_radius_px(voxel_size_um, skin_band_mm);
    if (!inside(limb, tibia, skin + 2) || !inside(limb, fibula, skin + 2)) {
        throw ConfigError("geometry overflow: bone reaches the skin band");
    }
    if (std::hypot(tibia.cx - fibula.cx, tibia.cy - fibula.cy) < tibia.r + fibula.r + 2) {
        throw ConfigError("geometry overflow: tibia and fibula overlap");
    }
}

struct Phantom {
    HUImage image;
    LabelMap truth;  // 9-class
};

namespace detail {

inline double dist2(double x, double y, const Circle& c) { return (x - c.cx) * (x - c.cx) + (y - c.cy) * (y - c.cy); }

/// Binary strut texture: smoothed white noise thresholded so that a
/// `density` fraction of `region` is bone.
inline BinaryMask strut_texture(const BinaryMask& region, double density, CounterRng& rng) {
    const int w = region.width();
    const int h = region.height();
    Grid<double> f(w, h, region.voxel_size_um(), 0.0);
    for (auto& v : f.pixels()) v = rng.uniform();
    for (int pass = 0; pass < 2; ++pass) {
        Grid<double> g = f;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double s = 0;
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!f.contains(x + dx, y + dy)) continue;
                        s += f.at(x + dx, y + dy);
                        ++n;
                    }
                }
                g.at(x, y) = s / n;
            }
        }
        f = std::move(g);
    }
    std::vector<double> vals;
    for (std::size_t i = 0; i < region.size(); ++i) {
        if (region[i]) vals.push_back(f[i]);
    }
    BinaryMask out(w, h, region.voxel_size_um(), std::uint8_t{0});
    const auto n_bone = static_cast<std::size_t>(std::llround(density * static_cast<double>(vals.size())));
    if (n_bone == 0) return out;
    std::sort(vals.begin(), vals.end(), std::greater<>());
    const double cut = vals[n_bone - 1];
    for (std::size_t i = 0; i < region.size(); ++i) out[i] = region[i] && f[i] >= cut ? 1 : 0;
    return out;
}

}  // namespace detail

inline Phantom generate_phantom(const Params& p) {
    p.validate();
    const int n = p.side;
    Phantom ph{HUImage(n, n, p.voxel_size_um, std::int16_t{0}), LabelMap(n, n, p.voxel_size_um, std::uint8_t{0})};
    LabelMap& t = ph.truth;

    BinaryMask limb(n, n, p.voxel_size_um, std::uint8_t{0});
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) limb.at(x, y) = detail::dist2(x, y, p.limb) <= p.limb.r * p.limb.r ? 1 : 0;
    }
    // Skin follows the same rule the soft-tissue step uses.
    const int skin_r = soft::skin_band_radius_px(p.voxel_size_um, p.skin_band_mm);
    const BinaryMask core = morph::erode_disk(limb, skin_r);
    constexpr double kTwoPi = 6.283185307179586;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const std::size_t i = t.index(x, y);
            if (!limb[i]) continue;
            if (!core[i]) {
                t[i] = id(Tissue::SK);
                continue;
            }
            double a = std::atan2(y - p.limb.cy, x - p.limb.cx);
            if (a < 0) a += kTwoPi;
            t[i] = a / kTwoPi < p.myo_fraction ? id(Tissue::MT) : id(Tissue::AT);
        }
    }
    const auto paint_bone = [&](const Circle& c, int thickness, Tissue cort, Tissue trab) {
        const double inner = c.r - thickness;
        for (int y = 0; y < n; ++y) {
            for (int x = 0; x < n; ++x) {
                const double d2 = detail::dist2(x, y, c);
                if (d2 > c.r * c.r) continue;
                t.at(x, y) = static_cast<std::uint8_t>(d2 > inner * inner ? id(cort) : id(trab));
            }
        }
    };
    paint_bone(p.tibia, p.tibia_cortical_px, Tissue::TC, Tissue::TT);
    paint_bone(p.fibula, p.fibula_cortical_px, Tissue::FC, Tissue::FT);

    CounterRng tex_rng(derive_key(p.seed, {1}));
    const BinaryMask trab = mask_of(t, {id(Tissue::TT), id(Tissue::FT)});
    const BinaryMask struts = detail::strut_texture(trab, p.trabecular_density, tex_rng);

    CounterRng noise_rng(derive_key(p.seed, {2}));
    for (std::size_t i = 0; i < t.size(); ++i) {
        double hu = p.air_hu;
        switch (static_cast<Tissue>(t[i])) {
            case Tissue::SK: hu = p.skin_hu; break;
            case Tissue::MT: hu = p.myo_hu; break;
            case Tissue::AT: hu = p.adipose_hu; break;
            case Tissue::TC:
            case Tissue::FC: hu = p.cortical_hu; break;
            case Tissue::TT:
            case Tissue::FT: hu = struts[i] ? p.strut_hu : p.marrow_hu; break;
            default: break;
        }
        if (p.noise_sigma > 0) hu += p.noise_sigma * noise_rng.normal();
        ph.image[i] = static_cast<std::int16_t>(std::clamp(std::lround(hu), -32768L, 32767L));
    }
    return ph;
}

/// 9-class truth collapsed to the 5-class bone/soft-tissue scheme.
inline LabelMap collapse_soft_tissue(const LabelMap& map) {
    return map_pixels<std::uint8_t>(map, [](std::uint8_t v) {
        return v >= id(Tissue::SK) ? static_cast<std::uint8_t>(id(Tissue::ST)) : v;
    });
}

struct CohortParams {
    int n_patients = 40;
    int slices_per_patient = 168;
    double effect_size = 0.15;  // difference in mean strut density, control minus osteoporosis
    std::uint64_t seed = 1;
    int side = 192;
    double voxel_size_um = 60.7;
    double base_density = 0.40;
    double patient_density_sd = 0.03;
    double slice_density_sd = 0.01;
    double noise_sigma = 30.0;
    double test_fraction = 0.2;

    void validate() const {
        if (n_patients < 2) throw ConfigError("cohort needs at least 2 patients");
        if (slices_per_patient < 1) throw ConfigError("slices_per_patient must be >= 1");
        if (effect_size < 0) throw ConfigError("effect size must be >= 0");
        if (test_fraction < 0 || test_fraction >= 1) throw ConfigError("test fraction must be in [0,1)");
    }
};

struct PatientDraw {
    std::string patient_id;
    Group group = Group::Control;
    Split split = Split::Train;
    double density = 0;
    double myo_fraction = 0;
    double radius_scale = 1;
    double age = 0;
    double bmi = 0;
};

inline std::string patient_name(int i) {
    std::string s = std::to_string(i);
    return "P" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

/// Balanced groups (alternating), group-stratified test split, per-patient draws.
inline std::vector<PatientDraw> draw_patients(const CohortParams& c) {
    c.validate();
    std::vector<PatientDraw> out(static_cast<std::size_t>(c.n_patients));
    for (int i = 0; i < c.n_patients; ++i) {
        auto& d = out[static_cast<std::size_t>(i)];
        d.patient_id = patient_name(i);
        d.group = i % 2 == 0 ? Group::Control : Group::Osteoporosis;
        CounterRng rng(derive_key(c.seed, {0x50, static_cast<std::uint64_t>(i)}));
        const double shift = d.group == Group::Control ? c.effect_size / 2 : -c.effect_size / 2;
        d.density = std::clamp(c.base_density + shift + c.patient_density_sd * rng.normal(), 0.02, 0.98);
        d.myo_fraction = rng.uniform(0.4, 0.8);
        d.radius_scale = rng.uniform(0.97, 1.03);
        d.age = std::round(rng.normal(65, 8));
        d.bmi = std::round(10 * rng.normal(26, 3)) / 10;
    }
    CounterRng split_rng(derive_key(c.seed, {0x51}));
    for (Group g : {Group::Control, Group::Osteoporosis}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (out[i].group == g) members.push_back(i);
        }
        portable_shuffle(members, split_rng);
        const auto n_test = static_cast<std::size_t>(std::llround(c.test_fraction * static_cast<double>(members.size())));
        for (std::size_t k = 0; k < n_test && k < members.size(); ++k) out[members[k]].split = Split::Test;
    }
    return out;
}

inline Params slice_params(const CohortParams& c, const PatientDraw& d, int patient_index, int slice) {
    Params p = default_params(c.side, c.voxel_size_um);
    CounterRng rng(derive_key(c.seed, {0x53, static_cast<std::uint64_t>(patient_index), static_cast<std::uint64_t>(slice)}));
    p.seed = rng();
    p.group = d.group;
    p.noise_sigma = c.noise_sigma;
    p.myo_fraction = d.myo_fraction;
    p.trabecular_density = std::clamp(d.density + c.slice_density_sd * rng.normal(), 0.02, 0.98);
    p.tibia.r *= d.radius_scale;
    p.fibula.r *= d.radius_scale;
    p.tibia.cx += rng.uniform(-1, 1);
    p.tibia.cy += rng.uniform(-1, 1);
    return p;
}

struct CohortFiles {
    CohortManifest manifest;
    fs::path manifest_path;
};

/// Writes images, 5-class masks (`.mask.raw`), 9-class truth (`.truth.mask.raw`),
/// `manifest.json`, `train.txt` and `test.txt` under `dir`.
inline CohortFiles generate_cohort(const CohortParams& c, const fs::path& dir) {
    const auto draws = draw_patients(c);
    fs::create_directories(dir / "slices");
    CohortFiles files;
    files.manifest.base_dir = dir;
    std::string train, test;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const auto& d = draws[i];
        PatientEntry e;
        e.patient_id = d.patient_id;
        e.group = d.group;
        e.split = d.split;
        e.covariates = {{"age", d.age}, {"bmi", d.bmi}};
        for (int s = 0; s < c.slices_per_patient; ++s) {
            const auto ph = generate_phantom(slice_params(c, d, static_cast<int>(i), s));
            std::string stem = d.patient_id + "_s" + std::to_string(s);
            const fs::path img = fs::path("slices") / (stem + ".raw");
            const fs::path mask = fs::path("slices") / (stem + ".mask.raw");
            write_hu_image(ph.image, dir / img);
            write_label_map(collapse_soft_tissue(ph.truth), dir / mask);
            write_label_map(ph.truth, dir / "slices" / (stem + ".truth.mask.raw"));
            e.slices.push_back({img, mask});
        }
        (d.split == Split::Test ? test : train) += d.patient_id + "\n";
        files.manifest.patients.push_back(std::move(e));
    }
    files.manifest_path = dir / "manifest.json";
    write_manifest(files.manifest, files.manifest_path);
    std::ofstream(dir / "train.txt") << train;
    std::ofstream(dir / "test.txt") << test;
    return files;
}

}  // namespace osteorad::phantom
