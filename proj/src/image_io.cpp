// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "shuffledet/error.hpp"
#include "shuffledet/file_util.hpp"

namespace shuffledet::io {

namespace {

class HeaderParser {
public:
    HeaderParser(std::span<const std::uint8_t> bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

    std::size_t pos() const { return pos_; }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw FormatError("image: " + what + " at byte offset " + std::to_string(pos_));
    }

    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
                    ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    unsigned long number(const char* field)
    {
        skip_space_and_comments();
        if (pos_ >= bytes_.size())
            fail(std::string("unexpected end of header reading ") + field);
        if (!std::isdigit(bytes_[pos_]))
            fail(std::string("expected decimal ") + field);
        unsigned long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
            if (value > 1'000'000'000UL)
                fail(std::string(field) + " too large");
            ++pos_;
        }
        return value;
    }

    void single_whitespace()
    {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            fail("expected whitespace before pixel data");
        ++pos_;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> encode(const Tensor& image, bool color)
{
    const Shape& s = image.shape();
    if (s.n != 1 || s.c < (color ? 3u : 1u))
        throw ShapeError("encode image: expected (1, 3, h, w), got " + s.str());
    const std::string header = std::string(color ? "P6" : "P5") + "\n" + std::to_string(s.w) + " " +
                               std::to_string(s.h) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::size_t channels = color ? 3 : 1;
    out.reserve(out.size() + s.h * s.w * channels);
    for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t x = 0; x < s.w; ++x)
            for (std::size_t c = 0; c < channels; ++c) {
                const float v = std::clamp(image.data()[image.offset(0, c, y, x)], 0.0f, 1.0f);
                out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
            }
    return out;
}

} // namespace

Tensor decode_pnm(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw FormatError("image: bad magic, expected P5 or P6 at byte offset 0");
    const bool color = bytes[1] == '6';
    HeaderParser header(bytes, 2);
    const unsigned long width = header.number("width");
    const unsigned long height = header.number("height");
    const unsigned long maxval = header.number("maxval");
    header.single_whitespace();
    if (width == 0 || height == 0)
        header.fail("zero width or height");
    if (maxval == 0 || maxval > 255)
        header.fail("maxval " + std::to_string(maxval) + " is not 8-bit");

    const std::size_t channels = color ? 3 : 1;
    if (width > std::numeric_limits<std::size_t>::max() / height / channels)
        header.fail("image dimensions overflow");
    const std::size_t data_start = header.pos();
    const std::size_t needed = width * height * channels;
    if (bytes.size() - data_start < needed)
        throw FormatError("image: pixel data short by " + std::to_string(needed - (bytes.size() - data_start)) +
                          " bytes at byte offset " + std::to_string(bytes.size()));

    Tensor out({1, 3, height, width}, 0.0f);
    const std::uint8_t* px = bytes.data() + data_start;
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t base = (y * width + x) * channels;
            for (std::size_t c = 0; c < 3; ++c) {
                const std::size_t at = base + (color ? c : 0);
                if (px[at] > maxval)
                    throw FormatError("image: sample exceeds maxval at byte offset " + std::to_string(data_start + at));
                out.data()[out.offset(0, c, y, x)] = static_cast<float>(px[at]) / static_cast<float>(maxval);
            }
        }
    return out;
}

Tensor read_image(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    try {
        return decode_pnm(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_ppm(const Tensor& image)
{
    return encode(image, true);
}

std::vector<std::uint8_t> encode_pgm(const Tensor& image)
{
    return encode(image, false);
}

void write_image(const std::filesystem::path& path, const Tensor& image)
{
    write_file_atomic(path, encode_ppm(image));
}

post::Extent image_extent(const Tensor& image)
{
    return {static_cast<int>(image.shape().h), static_cast<int>(image.shape().w)};
}

} // namespace shuffledet::io
