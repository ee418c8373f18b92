#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "osteorad/error.hpp"

namespace osteorad {

/// Row-major 2D raster with isotropic physical pixel size.
template <typename T>
class Grid {
public:
    using value_type = T;

    Grid() = default;

    Grid(int width, int height, double voxel_size_um, T fill = T{})
        : width_(width), height_(height), voxel_size_um_(voxel_size_um) {
        validate_dims(width, height, voxel_size_um);
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    Grid(int width, int height, double voxel_size_um, std::vector<T> data)
        : width_(width), height_(height), voxel_size_um_(voxel_size_um), data_(std::move(data)) {
        validate_dims(width, height, voxel_size_um);
        if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
            throw DataError("length mismatch: expected " + std::to_string(width * height) + " pixels, got " +
                            std::to_string(data_.size()));
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    double voxel_size_um() const noexcept { return voxel_size_um_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    T& at(int x, int y) { return data_[index(x, y)]; }
    const T& at(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    bool same_shape(int w, int h) const noexcept { return width_ == w && height_ == h; }
    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.voxel_size_um_ == b.voxel_size_um_ &&
               a.data_ == b.data_;
    }

private:
    static void validate_dims(int width, int height, double voxel_size_um) {
        if (width <= 0 || height <= 0) {
            throw DataError("non-positive dimensions " + std::to_string(width) + "x" + std::to_string(height));
        }
        if (!(voxel_size_um > 0.0)) {
            throw DataError("voxel size must be positive");
        }
    }

    int width_ = 0;
    int height_ = 0;
    double voxel_size_um_ = 1.0;
    std::vector<T> data_;
};

/// Returns a grid of the same geometry with every pixel mapped through `fn`.
template <typename U, typename T, typename Fn>
Grid<U> map_pixels(const Grid<T>& in, Fn&& fn) {
    std::vector<U> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<U>(fn(in[i]));
    return Grid<U>(in.width(), in.height(), in.voxel_size_um(), std::move(out));
}

/// 8-neighbourhood offsets in raster order.
inline constexpr std::pair<int, int> kNeighbors8[8] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0},
                                                       {1, 0},   {-1, 1}, {0, 1},  {1, 1}};
inline constexpr std::pair<int, int> kNeighbors4[4] = {{0, -1}, {-1, 0}, {1, 0}, {0, 1}};

}  // namespace osteorad
