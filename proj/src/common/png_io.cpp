#include "arm/common/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <csetjmp>

#include <png.h>

#include "arm/common/error.hpp"

namespace arm {

namespace {

struct WriteTarget {
    std::vector<std::uint8_t>* out;
};

void write_cb(png_structp png, png_bytep data, png_size_t length)
{
    auto* target = static_cast<WriteTarget*>(png_get_io_ptr(png));
    target->out->insert(target->out->end(), data, data + length);
}

void flush_cb(png_structp) {}

struct ReadSource {
    const std::vector<std::uint8_t>* in;
    std::size_t pos = 0;
};

void read_cb(png_structp png, png_bytep data, png_size_t length)
{
    auto* src = static_cast<ReadSource*>(png_get_io_ptr(png));
    if (src->pos + length > src->in->size()) png_error(png, "truncated PNG");
    std::memcpy(data, src->in->data() + src->pos, length);
    src->pos += length;
}

void error_cb(png_structp png, png_const_charp)
{
    png_longjmp(png, 1);
}

void warning_cb(png_structp, png_const_charp) {}

std::vector<std::uint8_t> encode(int height, int width, int color_type, int bit_depth,
                                 const std::vector<std::vector<std::uint8_t>>& rows)
{
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, error_cb, warning_cb);
    png_infop info = png_create_info_struct(png);
    WriteTarget target{&out};
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::Io, "png encoding failed");
    }
    {
        png_set_write_fn(png, &target, write_cb, flush_cb);
        png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
                     color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_set_compression_level(png, 3);
        png_write_info(png, info);
        for (const auto& row : rows) png_write_row(png, row.data());
        png_write_end(png, nullptr);
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

std::uint8_t to8(float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

std::uint16_t to16(float v)
{
    return static_cast<std::uint16_t>(std::lround(static_cast<double>(std::clamp(v, 0.0f, 1.0f)) * 65535.0));
}

} // namespace

std::vector<std::uint8_t> encode_png_rgb8(const tensor::Tensor& rgb)
{
    if (rgb.channels() != 3) throw Error(ErrorCode::ChannelMismatch, "RGB PNG needs a 3-channel tensor");
    std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(rgb.height()));
    for (int y = 0; y < rgb.height(); ++y) {
        auto& row = rows[static_cast<std::size_t>(y)];
        row.resize(static_cast<std::size_t>(rgb.width()) * 3);
        for (int x = 0; x < rgb.width(); ++x)
            for (int c = 0; c < 3; ++c) row[static_cast<std::size_t>(x * 3 + c)] = to8(rgb.at(y, x, c));
    }
    return encode(rgb.height(), rgb.width(), PNG_COLOR_TYPE_RGB, 8, rows);
}

std::vector<std::uint8_t> encode_png_gray16(int height, int width, const std::vector<float>& values)
{
    if (values.size() != static_cast<std::size_t>(height) * width) {
        throw Error(ErrorCode::ShapeMismatch, "gray16 PNG value count does not match dimensions");
    }
    std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
        auto& row = rows[static_cast<std::size_t>(y)];
        row.resize(static_cast<std::size_t>(width) * 2);
        for (int x = 0; x < width; ++x) {
            const std::uint16_t v = to16(values[static_cast<std::size_t>(y) * width + x]);
            row[static_cast<std::size_t>(2 * x)] = static_cast<std::uint8_t>(v >> 8); // PNG is big-endian
            row[static_cast<std::size_t>(2 * x + 1)] = static_cast<std::uint8_t>(v & 0xff);
        }
    }
    return encode(height, width, PNG_COLOR_TYPE_GRAY, 16, rows);
}

namespace {

// Decodes to 16-bit samples with `channels` per pixel after normalization.
struct Decoded {
    int height = 0;
    int width = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint8_t> bytes;
};

Decoded decode_raw(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw Error(ErrorCode::Io, "not a PNG stream");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, error_cb, warning_cb);
    png_infop info = png_create_info_struct(png);
    ReadSource src{&bytes};
    Decoded d;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::Io, "png decoding failed");
    }
    {
        png_set_read_fn(png, &src, read_cb);
        png_read_info(png, info);
        const auto color = png_get_color_type(png, info);
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
        png_set_swap(png); // 16-bit samples little-endian in memory
        png_read_update_info(png, info);
        d.height = static_cast<int>(png_get_image_height(png, info));
        d.width = static_cast<int>(png_get_image_width(png, info));
        d.channels = png_get_channels(png, info);
        d.bit_depth = png_get_bit_depth(png, info);
        const std::size_t rowbytes = png_get_rowbytes(png, info);
        d.bytes.resize(rowbytes * static_cast<std::size_t>(d.height));
        rows.resize(static_cast<std::size_t>(d.height));
        for (int y = 0; y < d.height; ++y) rows[static_cast<std::size_t>(y)] = d.bytes.data() + rowbytes * y;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return d;
}

float sample(const Decoded& d, std::size_t index)
{
    if (d.bit_depth == 16) {
        const std::uint16_t v = static_cast<std::uint16_t>(d.bytes[2 * index] | (d.bytes[2 * index + 1] << 8));
        return static_cast<float>(v / 65535.0);
    }
    return static_cast<float>(d.bytes[index] / 255.0);
}

} // namespace

tensor::Tensor decode_png_rgb(const std::vector<std::uint8_t>& bytes)
{
    const Decoded d = decode_raw(bytes);
    tensor::Tensor out(d.height, d.width, 3);
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            const std::size_t base = (static_cast<std::size_t>(y) * d.width + x) * d.channels;
            for (int c = 0; c < 3; ++c) {
                const int src = d.channels >= 3 ? c : 0;
                out.at(y, x, c) = sample(d, base + static_cast<std::size_t>(src));
            }
        }
    }
    return out;
}

std::pair<int, int> decode_png_gray16(const std::vector<std::uint8_t>& bytes, std::vector<float>& values)
{
    const Decoded d = decode_raw(bytes);
    values.resize(static_cast<std::size_t>(d.height) * d.width);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = sample(d, i * static_cast<std::size_t>(d.channels));
    return {d.height, d.width};
}

void write_png_rgb8(const std::filesystem::path& path, const tensor::Tensor& rgb)
{
    const auto bytes = encode_png_rgb8(rgb);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

tensor::Tensor read_png_rgb(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_png_rgb(bytes);
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes)
{
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += kAlphabet[(n >> 6) & 63];
        out += kAlphabet[n & 63];
    }
    if (i < bytes.size()) {
        std::uint32_t n = bytes[i] << 16;
        if (i + 1 < bytes.size()) n |= bytes[i + 1] << 8;
        out += kAlphabet[(n >> 18) & 63];
        out += kAlphabet[(n >> 12) & 63];
        out += i + 1 < bytes.size() ? kAlphabet[(n >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

} // namespace arm
