#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "osteorad/imaging.hpp"

namespace osteorad::test {

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("osteorad_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Filled digital disk {(x-cx)^2 + (y-cy)^2 <= r^2}.
inline BinaryMask disk_mask(int w, int h, double cx, double cy, double r, double voxel = 1000.0) {
    BinaryMask m(w, h, voxel, std::uint8_t{0});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.at(x, y) = 1;
        }
    }
    return m;
}

/// Annulus r_in < d <= r_out, optionally missing the angular sector [gap_from, gap_to) radians.
inline BinaryMask annulus_mask(int w, int h, double cx, double cy, double r_in, double r_out, double gap_from = 0,
                               double gap_to = 0, double voxel = 1000.0) {
    BinaryMask m(w, h, voxel, std::uint8_t{0});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            if (d2 > r_out * r_out || d2 <= r_in * r_in) continue;
            double a = std::atan2(y - cy, x - cx);
            if (a < 0) a += 2 * M_PI;
            if (gap_to > gap_from && a >= gap_from && a < gap_to) continue;
            m.at(x, y) = 1;
        }
    }
    return m;
}

}  // namespace osteorad::test
