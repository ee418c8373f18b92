#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "osteorad/imaging.hpp"
#include "osteorad/morphology.hpp"

namespace osteorad::soft {

struct HuRange {
    int lo = 0;
    int hi = 0;
    bool contains(int hu) const noexcept { return hu >= lo && hu <= hi; }
};

struct Params {
    double skin_band_mm = 2.0;
    HuRange myo_seed{100, 600};
    HuRange adipose_seed{-600, -200};
    std::size_t min_seed_px = 30;
    int dilation_iters = 20;
    int resolve_threshold = -50;  // HU strictly above -> myotendinous

    void validate() const {
        if (myo_seed.lo > myo_seed.hi || adipose_seed.lo > adipose_seed.hi) throw ConfigError("seed range lo > hi");
        if (!(myo_seed.hi < adipose_seed.lo || adipose_seed.hi < myo_seed.lo)) {
            throw ConfigError("myotendinous and adipose seed ranges overlap");
        }
        if (min_seed_px < 1) throw ConfigError("min_seed_px must be >= 1");
        if (dilation_iters < 0) throw ConfigError("dilation_iters must be >= 0");
        if (!(skin_band_mm > 0)) throw ConfigError("skin_band_mm must be > 0");
    }
};

inline int skin_band_radius_px(double voxel_size_um, double band_mm = 2.0) {
    if (!(voxel_size_um > 0)) throw ConfigError("voxel size must be positive");
    return static_cast<int>(std::ceil(band_mm * 1000.0 / voxel_size_um - 1e-9));
}

struct SkinSplit {
    BinaryMask skin;
    BinaryMask interior;
};

/// Skin = soft-tissue pixels within r of the limb's outer boundary, where the
/// limb is `limb` (image border counts as exterior).
inline SkinSplit peel_skin_band(const BinaryMask& soft, const BinaryMask& limb, double band_mm = 2.0) {
    if (!soft.same_shape(limb)) throw DataError("soft-tissue and limb masks differ in shape");
    if (count_true(soft) == 0) throw EmptyRegionError("soft-tissue mask is empty");
    const int r = skin_band_radius_px(soft.voxel_size_um(), band_mm);
    const BinaryMask core = morph::erode_disk(limb, r);
    SkinSplit s{soft, soft};
    for (std::size_t i = 0; i < soft.size(); ++i) {
        s.interior[i] = soft[i] && core[i] ? 1 : 0;
        s.skin[i] = soft[i] && !core[i] ? 1 : 0;
    }
    if (count_true(s.interior) == 0) throw DataError("soft tissue too thin: interior empty after removing the skin band");
    return s;
}

inline SkinSplit peel_skin_band(const BinaryMask& soft, double band_mm = 2.0) { return peel_skin_band(soft, soft, band_mm); }

struct Seeds {
    BinaryMask myo;
    BinaryMask adipose;
};

inline Seeds plant_seeds(const HUImage& img, const BinaryMask& interior, const Params& p = {}) {
    if (!img.same_shape(interior)) throw DataError("image and interior mask differ in shape");
    BinaryMask myo(img.width(), img.height(), img.voxel_size_um(), std::uint8_t{0});
    BinaryMask adi = myo;
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (!interior[i]) continue;
        myo[i] = p.myo_seed.contains(img[i]) ? 1 : 0;
        adi[i] = p.adipose_seed.contains(img[i]) ? 1 : 0;
    }
    return {morph::remove_small_components(myo, p.min_seed_px), morph::remove_small_components(adi, p.min_seed_px)};
}

struct Growth {
    BinaryMask myo;
    BinaryMask adipose;
    BinaryMask contested;
    BinaryMask unassigned;
};

/// Both fronts advance one 8-neighbour ring per iteration inside `interior`,
/// each from the previous iteration's state. A pixel reached by both fronts in
/// the same iteration is contested and blocks further growth.
inline Growth grow_regions(const Seeds& seeds, const BinaryMask& interior, int iters = 20) {
    Growth g{seeds.myo, seeds.adipose, BinaryMask(interior.width(), interior.height(), interior.voxel_size_um(), 0),
             BinaryMask(interior.width(), interior.height(), interior.voxel_size_um(), 0)};
    for (std::size_t i = 0; i < interior.size(); ++i) {
        if (g.myo[i] && g.adipose[i]) throw ConfigError("seed sets overlap");
        if ((g.myo[i] || g.adipose[i]) && !interior[i]) throw ConfigError("seeds must lie inside the interior");
    }
    for (int it = 0; it < iters; ++it) {
        const BinaryMask dm = morph::dilate_square(g.myo);
        const BinaryMask da = morph::dilate_square(g.adipose);
        bool changed = false;
        for (std::size_t i = 0; i < interior.size(); ++i) {
            if (!interior[i] || g.myo[i] || g.adipose[i] || g.contested[i]) continue;
            if (dm[i] && da[i]) {
                g.contested[i] = 1;
            } else if (dm[i]) {
                g.myo[i] = 1;
            } else if (da[i]) {
                g.adipose[i] = 1;
            } else {
                continue;
            }
            changed = true;
        }
        if (!changed) break;
    }
    for (std::size_t i = 0; i < interior.size(); ++i) {
        g.unassigned[i] = interior[i] && !g.myo[i] && !g.adipose[i] && !g.contested[i] ? 1 : 0;
    }
    return g;
}

/// Threshold rule for leftover pixels: HU > threshold is myotendinous.
inline bool resolves_to_myo(int hu, int threshold = -50) noexcept { return hu > threshold; }

struct Areas {
    double skin_mm2 = 0;
    double myo_mm2 = 0;
    double adipose_mm2 = 0;
};

struct Result {
    LabelMap map;
    Areas areas;
};

/// Replaces soft tissue (class 5) with skin, myotendinous and adipose classes.
/// `img` is the clipped HU image at the mask's resolution.
inline Result segment_soft_tissue(const HUImage& img, const LabelMap& map, const Params& p = {}) {
    p.validate();
    validate_label_map(map);
    if (!img.same_shape(map)) throw DataError("image and label map differ in shape");
    const BinaryMask soft = mask_of(map, {id(Tissue::ST)});
    const BinaryMask limb = map_pixels<std::uint8_t>(map, [](std::uint8_t v) { return v != 0 ? 1 : 0; });
    const SkinSplit split = peel_skin_band(soft, limb, p.skin_band_mm);
    const Seeds seeds = plant_seeds(img, split.interior, p);
    const Growth g = grow_regions(seeds, split.interior, p.dilation_iters);

    Result r{map, {}};
    std::size_t n_sk = 0, n_mt = 0, n_at = 0;
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (!soft[i]) continue;
        Tissue t;
        if (split.skin[i]) {
            t = Tissue::SK;
        } else if (g.myo[i]) {
            t = Tissue::MT;
        } else if (g.adipose[i]) {
            t = Tissue::AT;
        } else {
            t = resolves_to_myo(img[i], p.resolve_threshold) ? Tissue::MT : Tissue::AT;
        }
        r.map[i] = static_cast<std::uint8_t>(id(t));
        (t == Tissue::SK ? n_sk : t == Tissue::MT ? n_mt : n_at)++;
    }
    const double px_mm2 = (map.voxel_size_um() / 1000.0) * (map.voxel_size_um() / 1000.0);
    r.areas = {n_sk * px_mm2, n_mt * px_mm2, n_at * px_mm2};
    return r;
}

inline constexpr double kWholeCompartment = std::numeric_limits<double>::infinity();

inline bool is_soft(std::uint8_t v) noexcept {
    return v == id(Tissue::ST) || v == id(Tissue::SK) || v == id(Tissue::MT) || v == id(Tissue::AT);
}

/// Soft-tissue pixels within `distance_mm` of the outer surface of the tibial
/// cortex; infinity selects the whole soft-tissue compartment.
inline BinaryMask radial_band_mask(const LabelMap& map, double distance_mm) {
    if (!(distance_mm > 0)) throw ConfigError("band distance must be positive");
    const BinaryMask cort = mask_of(map, {id(Tissue::TC)});
    if (count_true(cort) == 0) throw DataError("radial band: tibia cortical class missing");
    BinaryMask out = map_pixels<std::uint8_t>(map, [](std::uint8_t v) { return is_soft(v) ? 1 : 0; });
    if (std::isinf(distance_mm)) return out;

    // Outer surface: cortical pixels touching the region outside the tibia.
    const BinaryMask outside = morph::outside_region(cort);
    BinaryMask surface(map.width(), map.height(), map.voxel_size_um(), std::uint8_t{0});
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            if (!cort.at(x, y)) continue;
            bool edge = false;
            for (auto [dx, dy] : kNeighbors4) {
                const int nx = x + dx;
                const int ny = y + dy;
                if (!map.contains(nx, ny) || outside.at(nx, ny)) edge = true;
            }
            surface.at(x, y) = edge ? 1 : 0;
        }
    }
    const auto d2 = morph::squared_distance_to(surface);
    const double r_px = distance_mm * 1000.0 / map.voxel_size_um();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] && d2[i] > r_px * r_px) out[i] = 0;
    }
    return out;
}

}  // namespace osteorad::soft
