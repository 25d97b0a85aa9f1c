#include "posedec/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "posedec/error.hpp"

namespace posedec {

namespace {

constexpr char kMagic[8] = {'P', 'D', 'T', 'E', 'N', 'S', 'R', '\0'};
constexpr std::size_t kMaxDims = 8;
constexpr std::size_t kMaxElements = std::size_t{1} << 31;

std::size_t checked_element_count(const std::vector<std::size_t>& shape) {
    if (shape.empty()) fail_validation("tensor shape must have at least one dimension");
    std::size_t n = 1;
    for (std::size_t dim : shape) {
        if (dim == 0) fail_validation("tensor dimensions must be positive");
        if (dim > kMaxElements / n) fail_validation("tensor too large");
        n *= dim;
    }
    return n;
}

void put_u32_le(std::ostream& out, std::uint32_t v) {
    const unsigned char bytes[4] = {
        static_cast<unsigned char>(v & 0xffu),
        static_cast<unsigned char>((v >> 8) & 0xffu),
        static_cast<unsigned char>((v >> 16) & 0xffu),
        static_cast<unsigned char>((v >> 24) & 0xffu),
    };
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32_le(std::istream& in, const std::string& context) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) fail_format("truncated header: " + context);
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
    data_.assign(checked_element_count(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_element_count(shape_) != data_.size())
        fail_validation("tensor data length does not match shape");
}

Tensor read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open tensor file: " + path.string());

    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        fail_format("bad magic in tensor file: " + path.string());

    const std::uint32_t ndim = get_u32_le(in, path.string());
    if (ndim == 0 || ndim > kMaxDims)
        fail_format("unsupported dimension count " + std::to_string(ndim) + " in " + path.string());

    std::vector<std::size_t> shape(ndim);
    std::size_t count = 1;
    for (auto& dim : shape) {
        const std::uint32_t d = get_u32_le(in, path.string());
        if (d == 0) fail_format("zero dimension in tensor file: " + path.string());
        dim = d;
        if (dim > kMaxElements / count) fail_format("tensor too large in " + path.string());
        count *= dim;
    }

    std::vector<unsigned char> raw(count * 4);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        fail_format("truncated payload in tensor file: " + path.string());

    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                                   (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                                   (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                                   (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
        values[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    return Tensor(std::move(shape), std::move(values));
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
    if (t.ndim() == 0 || t.ndim() > kMaxDims)
        fail_validation("tensor dimension count unsupported by file format");
    for (std::size_t dim : t.shape())
        if (dim > std::numeric_limits<std::uint32_t>::max())
            fail_validation("tensor dimension exceeds file format limit");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail_io("cannot open tensor file for writing: " + path.string());

    out.write(kMagic, 8);
    put_u32_le(out, static_cast<std::uint32_t>(t.ndim()));
    for (std::size_t dim : t.shape()) put_u32_le(out, static_cast<std::uint32_t>(dim));

    std::vector<unsigned char> raw(t.size() * 4);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double v = t[i];
        if (!std::isfinite(v) || std::fabs(v) > static_cast<double>(std::numeric_limits<float>::max()))
            fail_validation("tensor value not representable as f32");
        const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        raw[4 * i] = static_cast<unsigned char>(bits & 0xffu);
        raw[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xffu);
        raw[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xffu);
        raw[4 * i + 3] = static_cast<unsigned char>((bits >> 24) & 0xffu);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    out.flush();
    if (!out) fail_io("failed to write tensor file: " + path.string());
}

double bilinear_sample_channel(const Tensor& map, std::size_t channel, double x, double y) {
    const auto h = static_cast<std::ptrdiff_t>(map.height());
    const auto w = static_cast<std::ptrdiff_t>(map.width());
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const auto x0 = static_cast<std::ptrdiff_t>(fx);
    const auto y0 = static_cast<std::ptrdiff_t>(fy);
    const double dx = x - fx;
    const double dy = y - fy;

    const auto fetch = [&](std::ptrdiff_t yy, std::ptrdiff_t xx) -> double {
        if (xx < 0 || yy < 0 || xx >= w || yy >= h) return 0.0;
        return map.at(channel, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
    };

    const double v00 = fetch(y0, x0);
    const double v01 = fetch(y0, x0 + 1);
    const double v10 = fetch(y0 + 1, x0);
    const double v11 = fetch(y0 + 1, x0 + 1);
    const double top = v00 + dx * (v01 - v00);
    const double bottom = v10 + dx * (v11 - v10);
    return top + dy * (bottom - top);
}

std::vector<double> bilinear_sample(const Tensor& map, double x, double y) {
    if (map.ndim() != 3) fail_validation("bilinear_sample requires a C x H x W tensor");
    std::vector<double> out(map.channels());
    for (std::size_t c = 0; c < map.channels(); ++c) out[c] = bilinear_sample_channel(map, c, x, y);
    return out;
}

}  // namespace posedec
