#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "osteorad/imaging.hpp"
#include "osteorad/morphology.hpp"

namespace osteorad::postprocess {

/// Temporary label for pixels awaiting reassignment.
inline constexpr std::uint8_t kUnlabeled = 255;

enum class Bone { Tibia, Fibula };

inline int cortical_id(Bone b) { return b == Bone::Tibia ? id(Tissue::TC) : id(Tissue::FC); }
inline int trabecular_id(Bone b) { return b == Bone::Tibia ? id(Tissue::TT) : id(Tissue::FT); }
inline const char* bone_name(Bone b) { return b == Bone::Tibia ? "tibia" : "fibula"; }

struct Options {
    double continuity_threshold = 0.90;
    int initial_radius = 2;
    int max_radius = 32;
    int max_passes = 10;
};

struct SingleComponentResult {
    LabelMap map;                      // fragments carry kUnlabeled
    std::vector<std::size_t> fragments;
    std::size_t components_removed = 0;
    bool absent = false;
};

/// Keeps the largest 8-connected component of `class_id`; the others become
/// kUnlabeled. Equal sizes: the component reached first in raster order wins.
inline SingleComponentResult enforce_single_component(const LabelMap& map, int class_id) {
    if (class_id < 1 || class_id > id(Tissue::ST)) throw ConfigError("single-component class must be in 1..5");
    SingleComponentResult r{map, {}, 0, false};
    BinaryMask m(map.width(), map.height(), map.voxel_size_um(), std::uint8_t{0});
    for (std::size_t i = 0; i < map.size(); ++i) m[i] = map[i] == class_id ? 1 : 0;
    const auto cc = morph::connected_components(m, 8);
    if (cc.count() == 0) {
        r.absent = true;
        return r;
    }
    std::size_t keep = 0;
    for (std::size_t c = 1; c < cc.count(); ++c) {
        if (cc.sizes[c] > cc.sizes[keep]) keep = c;
    }
    r.components_removed = cc.count() - 1;
    for (std::size_t i = 0; i < map.size(); ++i) {
        const int l = cc.labels[i];
        if (l >= 0 && static_cast<std::size_t>(l) != keep) {
            r.map[i] = kUnlabeled;
            r.fragments.push_back(i);
        }
    }
    return r;
}

/// Every 8-connected unit of kUnlabeled pixels takes the most common label among
/// the distinct labelled pixels bordering it (ties: smaller id). A unit with no
/// labelled neighbour becomes background.
inline LabelMap relabel_fragments_by_neighbor_majority(const LabelMap& map) {
    BinaryMask unl(map.width(), map.height(), map.voxel_size_um(), std::uint8_t{0});
    for (std::size_t i = 0; i < map.size(); ++i) unl[i] = map[i] == kUnlabeled ? 1 : 0;
    const auto cc = morph::connected_components(unl, 8);
    if (cc.count() == 0) return map;

    // Distinct bordering pixels per unit.
    std::vector<std::map<std::size_t, int>> border(cc.count());
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            const int unit = cc.labels.at(x, y);
            if (unit < 0) continue;
            for (auto [dx, dy] : kNeighbors8) {
                const int nx = x + dx;
                const int ny = y + dy;
                if (!map.contains(nx, ny)) continue;
                const std::size_t q = map.index(nx, ny);
                if (map[q] != kUnlabeled) border[static_cast<std::size_t>(unit)].emplace(q, map[q]);
            }
        }
    }
    std::vector<std::uint8_t> assign(cc.count(), 0);
    for (std::size_t u = 0; u < cc.count(); ++u) {
        std::array<std::size_t, kNumClasses> votes{};
        for (const auto& [q, label] : border[u]) ++votes[static_cast<std::size_t>(label)];
        std::size_t best = 0;
        for (std::size_t c = 1; c < votes.size(); ++c) {
            if (votes[c] > votes[best]) best = c;
        }
        assign[u] = votes[best] > 0 ? static_cast<std::uint8_t>(best) : id(Tissue::BG);
    }
    LabelMap out = map;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int unit = cc.labels[i];
        if (unit >= 0) out[i] = assign[static_cast<std::size_t>(unit)];
    }
    return out;
}

/// Relabels the given pixels as kUnlabeled, then resolves them.
inline LabelMap relabel_fragments_by_neighbor_majority(const LabelMap& map, const std::vector<std::size_t>& fragments) {
    LabelMap tmp = map;
    for (std::size_t i : fragments) tmp[i] = kUnlabeled;
    return relabel_fragments_by_neighbor_majority(tmp);
}

struct Continuity {
    double ratio = 0;
    bool continuous = false;
};

inline BinaryMask cortical_mask(const LabelMap& map, Bone bone) {
    const int c = cortical_id(bone);
    return map_pixels<std::uint8_t>(map, [c](std::uint8_t v) { return v == c ? 1 : 0; });
}

/// Ratio of the area enclosed by the filled cortical contour to the area of its
/// convex hull; a closed ring scores close to 1.
inline Continuity check_cortical_continuity(const LabelMap& map, Bone bone, double threshold = 0.90) {
    const BinaryMask cort = cortical_mask(map, bone);
    if (count_true(cort) < 3) {
        throw DataError(std::string("fewer than 3 ") + bone_name(bone) + " cortical pixels: hull undefined");
    }
    const BinaryMask filled = morph::fill_holes(cort);
    const double area = morph::contour_measure(filled).area;
    const double hull = morph::polygon_area(morph::convex_hull(morph::contour_vertices(filled)));
    Continuity c;
    c.ratio = hull > 0 ? area / hull : 0.0;
    c.continuous = c.ratio >= threshold;
    return c;
}

struct ClosingResult {
    LabelMap map;
    int radius = 0;
    Continuity continuity;
};

/// Closes the cortical mask with a disk whose radius doubles from
/// `initial_radius` until the ring is continuous. Only background and soft
/// tissue pixels may turn cortical.
inline ClosingResult close_cortical_gaps(const LabelMap& map, Bone bone, const Options& opt = {}) {
    const int c = cortical_id(bone);
    const BinaryMask cort = cortical_mask(map, bone);
    for (int r = opt.initial_radius; r <= opt.max_radius; r *= 2) {
        const BinaryMask closed = morph::close_disk(cort, r);
        LabelMap out = map;
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (closed[i] && (out[i] == id(Tissue::BG) || out[i] == id(Tissue::ST))) out[i] = static_cast<std::uint8_t>(c);
        }
        const auto cont = check_cortical_continuity(out, bone, opt.continuity_threshold);
        if (cont.continuous) return {std::move(out), r, cont};
    }
    throw DataError(std::string(bone_name(bone)) + " cortex still discontinuous after closing with radius " +
                    std::to_string(opt.max_radius));
}

/// Non-cortical pixels enclosed by the cortical ring become trabecular.
inline LabelMap fill_trabecular_interior(const LabelMap& map, Bone bone) {
    const BinaryMask cort = cortical_mask(map, bone);
    const BinaryMask outside = morph::outside_region(cort);
    LabelMap out = map;
    const auto t = static_cast<std::uint8_t>(trabecular_id(bone));
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!cort[i] && !outside[i]) out[i] = t;
    }
    return out;
}

struct BoneQc {
    bool present = false;
    double continuity_ratio = 0;  // ratio before any closing
    int closing_radius = 0;       // 0 when no closing was needed
    double final_ratio = 0;
};

struct Report {
    std::array<std::size_t, 6> components_removed{};  // indexed by class id 1..5
    BoneQc tibia;
    BoneQc fibula;
    int passes = 0;
};

namespace detail {

inline LabelMap single_pass(const LabelMap& in, const Options& opt, Report& report, bool first_pass) {
    LabelMap map = in;
    std::vector<std::size_t> fragments;
    for (int c = id(Tissue::TC); c <= id(Tissue::ST); ++c) {
        auto r = enforce_single_component(map, c);
        report.components_removed[static_cast<std::size_t>(c)] += r.components_removed;
        map = std::move(r.map);
    }
    map = relabel_fragments_by_neighbor_majority(map);

    for (Bone bone : {Bone::Tibia, Bone::Fibula}) {
        BoneQc& qc = bone == Bone::Tibia ? report.tibia : report.fibula;
        if (count_true(cortical_mask(map, bone)) < 3) continue;
        qc.present = true;
        const auto cont = check_cortical_continuity(map, bone, opt.continuity_threshold);
        if (first_pass) qc.continuity_ratio = cont.ratio;
        qc.final_ratio = cont.ratio;
        if (!cont.continuous) {
            auto closed = close_cortical_gaps(map, bone, opt);
            qc.closing_radius = std::max(qc.closing_radius, closed.radius);
            qc.final_ratio = closed.continuity.ratio;
            map = std::move(closed.map);
        }
    }
    for (Bone bone : {Bone::Tibia, Bone::Fibula}) {
        if (count_true(cortical_mask(map, bone)) >= 3) map = fill_trabecular_interior(map, bone);
    }
    return map;
}

}  // namespace detail

struct Result {
    LabelMap map;
    Report report;
};

/// Single-component enforcement, fragment relabelling, cortical closing and
/// interior filling (tibia before fibula), repeated until the map is stable.
inline Result postprocess_pipeline(const LabelMap& input, const Options& opt = {}) {
    validate_label_map(input);
    Result res{input, {}};
    for (int pass = 0; pass < opt.max_passes; ++pass) {
        LabelMap next = detail::single_pass(res.map, opt, res.report, pass == 0);
        ++res.report.passes;
        const bool stable = next == res.map;
        res.map = std::move(next);
        if (stable) return res;
    }
    throw NumericError("post-processing did not reach a fixed point in " + std::to_string(opt.max_passes) + " passes");
}

}  // namespace osteorad::postprocess
