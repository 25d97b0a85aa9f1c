#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace posedec {

// Dense row-major f64 tensor. Maps throughout the library use C x H x W
// order: channel-major, row-major within a channel.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t ndim() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    const std::vector<double>& values() const noexcept { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    // C x H x W accessors; only meaningful for 3-d tensors.
    std::size_t channels() const { return shape_[0]; }
    std::size_t height() const { return shape_[1]; }
    std::size_t width() const { return shape_[2]; }

    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }
    double& at(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }

    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Binary tensor file: 8-byte magic "PDTENSR\0", u32-LE dimension count
// (at most 8), u32-LE dims, then f32-LE values in row-major order. Values
// are widened to f64 exactly on read.
Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

// Bilinear interpolation at fractional (x, y); positions outside
// [0, W-1] x [0, H-1] read as zero.
std::vector<double> bilinear_sample(const Tensor& map, double x, double y);
double bilinear_sample_channel(const Tensor& map, std::size_t channel, double x, double y);

}  // namespace posedec
