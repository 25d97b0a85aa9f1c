#include "posedec/art.hpp"

#include <algorithm>
#include <cmath>

#include "posedec/error.hpp"

namespace posedec {

namespace {

void validate_kernel(const ConvKernel& kernel) {
    if (kernel.weights.ndim() != 3 || kernel.weights.shape()[2] != 9)
        fail_validation("conv kernel weights must be C_out x C_in x 9");
    if (kernel.bias.size() != kernel.out_channels())
        fail_validation("conv kernel bias length must equal the output channel count");
}

void validate_input(const Tensor& x, const ConvKernel& kernel) {
    validate_kernel(kernel);
    if (x.ndim() != 3) fail_validation("conv input must be C x H x W");
    if (x.channels() != kernel.in_channels())
        fail_validation("conv input channel count does not match the kernel");
}

}  // namespace

AffineField AffineField::identity(std::size_t height, std::size_t width) {
    AffineField field{Tensor({4, height, width}, 0.0)};
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            field.t.at(0, y, x) = 1.0;
            field.t.at(3, y, x) = 1.0;
        }
    return field;
}

Grid2x9 base_grid() {
    return {{{-1, 0, 1, -1, 0, 1, -1, 0, 1}, {-1, -1, -1, 0, 0, 0, 1, 1, 1}}};
}

Grid2x9 offsets_from_transform(const Affine2x2& t) {
    const Grid2x9 g = base_grid();
    Grid2x9 out{};
    for (int i = 0; i < 9; ++i) {
        out[0][i] = t[0] * g[0][i] + t[1] * g[1][i];
        out[1][i] = t[2] * g[0][i] + t[3] * g[1][i];
    }
    return out;
}

Tensor adaptive_conv(const Tensor& x, const ConvKernel& kernel, const AffineField& field,
                     bool fused_relu) {
    validate_input(x, kernel);
    if (field.t.ndim() != 3 || field.t.channels() != 4 || field.t.height() != x.height() ||
        field.t.width() != x.width())
        fail_validation("affine field shape does not match the conv input");

    const std::size_t c_in = x.channels();
    const std::size_t c_out = kernel.out_channels();
    const std::size_t h = x.height();
    const std::size_t w = x.width();
    const Grid2x9 g = base_grid();

    Tensor y({c_out, h, w}, 0.0);
    std::vector<double> samples(c_in * 9);
    for (std::size_t qy = 0; qy < h; ++qy) {
        for (std::size_t qx = 0; qx < w; ++qx) {
            const double t11 = field.t.at(0, qy, qx);
            const double t12 = field.t.at(1, qy, qx);
            const double t21 = field.t.at(2, qy, qx);
            const double t22 = field.t.at(3, qy, qx);
            for (int i = 0; i < 9; ++i) {
                const double sx = static_cast<double>(qx) + t11 * g[0][i] + t12 * g[1][i];
                const double sy = static_cast<double>(qy) + t21 * g[0][i] + t22 * g[1][i];
                for (std::size_t c = 0; c < c_in; ++c)
                    samples[c * 9 + i] = bilinear_sample_channel(x, c, sx, sy);
            }
            for (std::size_t co = 0; co < c_out; ++co) {
                double acc = kernel.bias[co];
                for (std::size_t c = 0; c < c_in; ++c)
                    for (int i = 0; i < 9; ++i) acc += kernel.weights.at(co, c, i) * samples[c * 9 + i];
                y.at(co, qy, qx) = fused_relu ? std::max(0.0, acc) : acc;
            }
        }
    }
    return y;
}

Tensor adaptive_conv_input_grad(const Tensor& grad_output, const ConvKernel& kernel,
                                const AffineField& field) {
    validate_kernel(kernel);
    if (grad_output.ndim() != 3 || grad_output.channels() != kernel.out_channels())
        fail_validation("output gradient channel count does not match the kernel");
    if (field.t.ndim() != 3 || field.t.channels() != 4 ||
        field.t.height() != grad_output.height() || field.t.width() != grad_output.width())
        fail_validation("affine field shape does not match the output gradient");

    const std::size_t c_in = kernel.in_channels();
    const std::size_t c_out = kernel.out_channels();
    const auto h = static_cast<std::ptrdiff_t>(grad_output.height());
    const auto w = static_cast<std::ptrdiff_t>(grad_output.width());
    const Grid2x9 g = base_grid();

    Tensor grad_x({c_in, grad_output.height(), grad_output.width()}, 0.0);
    const auto scatter = [&](std::size_t c, std::ptrdiff_t yy, std::ptrdiff_t xx, double v) {
        if (xx < 0 || yy < 0 || xx >= w || yy >= h) return;  // zero padding absorbs it
        grad_x.at(c, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)) += v;
    };

    for (std::ptrdiff_t qy = 0; qy < h; ++qy) {
        for (std::ptrdiff_t qx = 0; qx < w; ++qx) {
            const double t11 = field.t.at(0, qy, qx);
            const double t12 = field.t.at(1, qy, qx);
            const double t21 = field.t.at(2, qy, qx);
            const double t22 = field.t.at(3, qy, qx);
            for (int i = 0; i < 9; ++i) {
                const double sx = static_cast<double>(qx) + t11 * g[0][i] + t12 * g[1][i];
                const double sy = static_cast<double>(qy) + t21 * g[0][i] + t22 * g[1][i];
                const double fx = std::floor(sx);
                const double fy = std::floor(sy);
                const auto x0 = static_cast<std::ptrdiff_t>(fx);
                const auto y0 = static_cast<std::ptrdiff_t>(fy);
                const double dx = sx - fx;
                const double dy = sy - fy;
                for (std::size_t c = 0; c < c_in; ++c) {
                    double coeff = 0.0;
                    for (std::size_t co = 0; co < c_out; ++co)
                        coeff += kernel.weights.at(co, c, i) * grad_output.at(co, qy, qx);
                    if (coeff == 0.0) continue;
                    scatter(c, y0, x0, coeff * (1 - dx) * (1 - dy));
                    scatter(c, y0, x0 + 1, coeff * dx * (1 - dy));
                    scatter(c, y0 + 1, x0, coeff * (1 - dx) * dy);
                    scatter(c, y0 + 1, x0 + 1, coeff * dx * dy);
                }
            }
        }
    }
    return grad_x;
}

Tensor conv3x3(const Tensor& x, const ConvKernel& kernel) {
    validate_input(x, kernel);
    const std::size_t c_in = x.channels();
    const std::size_t c_out = kernel.out_channels();
    const auto h = static_cast<std::ptrdiff_t>(x.height());
    const auto w = static_cast<std::ptrdiff_t>(x.width());
    const Grid2x9 g = base_grid();

    Tensor y({c_out, x.height(), x.width()}, 0.0);
    for (std::ptrdiff_t qy = 0; qy < h; ++qy) {
        for (std::ptrdiff_t qx = 0; qx < w; ++qx) {
            for (std::size_t co = 0; co < c_out; ++co) {
                double acc = kernel.bias[co];
                for (int i = 0; i < 9; ++i) {
                    const auto sx = qx + static_cast<std::ptrdiff_t>(g[0][i]);
                    const auto sy = qy + static_cast<std::ptrdiff_t>(g[1][i]);
                    if (sx < 0 || sy < 0 || sx >= w || sy >= h) continue;
                    for (std::size_t c = 0; c < c_in; ++c)
                        acc += kernel.weights.at(co, c, i) * x.at(c, sy, sx);
                }
                y.at(co, qy, qx) = acc;
            }
        }
    }
    return y;
}

AffineField estimate_affine_field(const Tensor& x, const ConvKernel& stn_kernel) {
    validate_input(x, stn_kernel);
    if (stn_kernel.out_channels() != 4)
        fail_validation("transform estimation kernel must have 4 output channels");
    return AffineField{conv3x3(x, stn_kernel)};
}

ConvKernel stn_identity_kernel(std::size_t in_channels) {
    ConvKernel kernel{Tensor({4, in_channels, 9}, 0.0), {1.0, 0.0, 0.0, 1.0}};
    return kernel;
}

}  // namespace posedec
