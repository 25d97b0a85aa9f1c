#pragma once

#include <array>
#include <vector>

#include "posedec/tensor.hpp"

namespace posedec {

// Per-pixel 2x2 transform entries in channel order [t11, t12, t21, t22].
// The transform is applied directly to the base sampling grid; it is not
// required to be invertible.
struct AffineField {
    Tensor t;  // 4 x H x W

    static AffineField identity(std::size_t height, std::size_t width);
};

// 3x3 convolution weights with the nine taps flattened in base-grid column
// order (left-to-right, top-to-bottom).
struct ConvKernel {
    Tensor weights;            // C_out x C_in x 9
    std::vector<double> bias;  // C_out

    std::size_t out_channels() const { return weights.shape()[0]; }
    std::size_t in_channels() const { return weights.shape()[1]; }
};

using Grid2x9 = std::array<std::array<double, 9>, 2>;  // row 0: x, row 1: y
using Affine2x2 = std::array<double, 4>;               // [t11, t12, t21, t22]

// The untransformed 3x3 tap offsets:
//   x: -1 0 1 -1 0 1 -1 0 1
//   y: -1 -1 -1 0 0 0 1 1 1
Grid2x9 base_grid();

// Transformed grid: T times the base grid.
Grid2x9 offsets_from_transform(const Affine2x2& t);

// Convolution whose 3x3 sampling grid is warped per output position by the
// affine field; samples are bilinear with zero padding outside the input.
Tensor adaptive_conv(const Tensor& x, const ConvKernel& kernel, const AffineField& field,
                     bool fused_relu = false);

// Adjoint of adaptive_conv with respect to the input: scatters the output
// gradient back through the kernel weights and the bilinear corner weights.
Tensor adaptive_conv_input_grad(const Tensor& grad_output, const ConvKernel& kernel,
                                const AffineField& field);

// Plain zero-padded 3x3 convolution with the same tap ordering.
Tensor conv3x3(const Tensor& x, const ConvKernel& kernel);

// Pixel-wise transform estimation: a shared 3x3 convolution producing the
// four transform entries per position. With stn_identity_kernel weights the
// estimated field is the identity everywhere.
AffineField estimate_affine_field(const Tensor& x, const ConvKernel& stn_kernel);
ConvKernel stn_identity_kernel(std::size_t in_channels);

}  // namespace posedec
