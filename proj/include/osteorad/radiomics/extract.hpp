#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "osteorad/filters.hpp"
#include "osteorad/radiomics/discretize.hpp"
#include "osteorad/radiomics/first_order.hpp"
#include "osteorad/radiomics/shape2d.hpp"
#include "osteorad/radiomics/texture.hpp"
#include "osteorad/soft_tissue.hpp"

namespace osteorad::radiomics {

inline constexpr std::size_t kFeaturesPerImage = 18 + 24 + 16 + 16 + 5 + 14;
inline constexpr std::size_t kFeatureCount = 9 + kFeaturesPerImage * filters::kAllFilters.size();
static_assert(kFeaturesPerImage == 93);
static_assert(kFeatureCount == 939);

struct ExtractOptions {
    Discretization discretization;
    double log_sigma_px = 2.0;

    void validate() const {
        discretization.validate();
        if (!(log_sigma_px > 0)) throw ConfigError("LoG sigma must be positive");
    }
};

struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::string_view name) const {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) return values[i];
        }
        throw DataError("no feature named '" + std::string(name) + "'");
    }
};

namespace detail {

template <std::size_t N>
void append(FeatureVector& fv, std::string_view prefix, const std::array<std::string_view, N>& names,
            const std::array<double, N>& vals) {
    for (std::size_t i = 0; i < N; ++i) {
        fv.names.push_back(std::string(prefix) + std::string(names[i]));
        fv.values.push_back(vals[i]);
    }
}

}  // namespace detail

/// Canonical column names in extraction order.
inline std::vector<std::string> feature_names() {
    std::vector<std::string> out;
    for (auto n : kShapeNames) out.push_back("shape2D_" + std::string(n));
    for (auto f : filters::kAllFilters) {
        const std::string p = std::string(filters::filter_name(f)) + "_";
        for (auto n : kFirstOrderNames) out.push_back(p + "firstorder_" + std::string(n));
        for (auto n : kGlcmNames) out.push_back(p + "glcm_" + std::string(n));
        for (auto n : kGlrlmNames) out.push_back(p + "glrlm_" + std::string(n));
        for (auto n : kGlszmNames) out.push_back(p + "glszm_" + std::string(n));
        for (auto n : kNgtdmNames) out.push_back(p + "ngtdm_" + std::string(n));
        for (auto n : kGldmNames) out.push_back(p + "gldm_" + std::string(n));
    }
    return out;
}

/// The 93 intensity and texture features of one (filtered) image.
inline void append_image_features(FeatureVector& fv, std::string_view filter, const FilteredImage& img,
                                  const BinaryMask& mask, const Discretization& d) {
    const QuantizedROI q = discretize(img, mask, d);
    const double mm = img.voxel_size_um() / 1000.0;
    const std::string p = std::string(filter) + "_";
    detail::append(fv, p + "firstorder_", kFirstOrderNames,
                   first_order_features(roi_values(img, mask), level_histogram(q), mm * mm));
    detail::append(fv, p + "glcm_", kGlcmNames, glcm_features(q));
    detail::append(fv, p + "glrlm_", kGlrlmNames, glrlm_features(q));
    detail::append(fv, p + "glszm_", kGlszmNames, glszm_features(q));
    detail::append(fv, p + "ngtdm_", kNgtdmNames, ngtdm_features(q));
    detail::append(fv, p + "gldm_", kGldmNames, gldm_features(q));
}

struct Canvas {
    FilteredImage image;
    BinaryMask mask;
};

/// Crops to the mask's bounding box plus `margin` and replaces every pixel
/// outside the mask by the ROI mean, so filters only see ROI intensities.
template <typename T>
Canvas roi_canvas(const Grid<T>& img, const BinaryMask& mask, int margin) {
    if (!img.same_shape(mask)) throw DataError("image and mask differ in shape");
    int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
    double sum = 0;
    std::size_t n = 0;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(x, y)) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
            sum += static_cast<double>(img.at(x, y));
            ++n;
        }
    }
    if (n == 0) throw EmptyRegionError("region mask is empty");
    const double fill = sum / static_cast<double>(n);
    const int w = x1 - x0 + 1 + 2 * margin;
    const int h = y1 - y0 + 1 + 2 * margin;
    Canvas c{FilteredImage(w, h, img.voxel_size_um(), fill), BinaryMask(w, h, img.voxel_size_um(), std::uint8_t{0})};
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            if (!mask.at(x, y)) continue;
            c.image.at(x - x0 + margin, y - y0 + margin) = static_cast<double>(img.at(x, y));
            c.mask.at(x - x0 + margin, y - y0 + margin) = 1;
        }
    }
    return c;
}

/// All 939 features of one region: shape once, then 93 per image kind.
template <typename T>
FeatureVector extract_all(const Grid<T>& img, const BinaryMask& mask, const ExtractOptions& opt = {}) {
    opt.validate();
    const int margin = static_cast<int>(std::ceil(4 * opt.log_sigma_px)) + 2;
    const Canvas c = roi_canvas(img, mask, margin);
    FeatureVector fv;
    fv.names.reserve(kFeatureCount);
    fv.values.reserve(kFeatureCount);
    detail::append(fv, "shape2D_", kShapeNames, shape2d_features(c.mask));
    for (auto kind : filters::kAllFilters) {
        const FilteredImage f = kind == filters::FilterKind::LogSigma2
                                    ? filters::laplacian_of_gaussian(c.image, opt.log_sigma_px)
                                    : filters::apply_filter(c.image, kind);
        append_image_features(fv, filters::filter_name(kind), f, c.mask, opt.discretization);
    }
    for (double v : fv.values) {
        if (!std::isfinite(v)) throw NumericError("non-finite feature value");
    }
    return fv;
}

/// Region selector: a tissue name (TC..AT), "soft" for the whole soft-tissue
/// compartment, or "band<d>mm" for the radial band around the tibia.
inline BinaryMask region_mask(const LabelMap& map, std::string_view region) {
    if (region == "soft") return soft::radial_band_mask(map, soft::kWholeCompartment);
    if (region.starts_with("band") && region.ends_with("mm")) {
        const auto num = region.substr(4, region.size() - 6);
        double d = 0;
        const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), d);
        if (ec != std::errc() || ptr != num.data() + num.size()) {
            throw ConfigError("bad band region '" + std::string(region) + "'");
        }
        return soft::radial_band_mask(map, d);
    }
    const int id = tissue_from_name(region);
    if (id == 0) throw ConfigError("background is not a feature region");
    return extract_region_mask(map, id).mask;
}

}  // namespace osteorad::radiomics
