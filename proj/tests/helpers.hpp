#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "posedec/rng.hpp"
#include "posedec/tensor.hpp"

namespace testutil {

inline posedec::Tensor random_map(posedec::Rng& rng, std::size_t c, std::size_t h, std::size_t w,
                                  double lo = -1.0, double hi = 1.0) {
    posedec::Tensor t({c, h, w});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// Casts every value through f32, the precision the file format stores.
inline posedec::Tensor quantize_f32(posedec::Tensor t) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(static_cast<float>(t[i]));
    return t;
}

inline double rel_err(double a, double b) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-10});
    return std::fabs(a - b) / scale;
}

// Four-corner bilinear interpolation written out directly; shared oracle for
// modules that sample maps.
inline double ref_bilinear(const posedec::Tensor& m, std::size_t c, double x, double y) {
    const auto w = static_cast<long long>(m.width());
    const auto h = static_cast<long long>(m.height());
    const auto pix = [&](long long xx, long long yy) -> double {
        if (xx < 0 || yy < 0 || xx >= w || yy >= h) return 0.0;
        return m.at(c, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
    };
    const auto x0 = static_cast<long long>(std::floor(x));
    const auto y0 = static_cast<long long>(std::floor(y));
    const double dx = x - static_cast<double>(x0);
    const double dy = y - static_cast<double>(y0);
    return pix(x0, y0) * (1 - dx) * (1 - dy) + pix(x0 + 1, y0) * dx * (1 - dy) +
           pix(x0, y0 + 1) * (1 - dx) * dy + pix(x0 + 1, y0 + 1) * dx * dy;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("posedec_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace testutil
