// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "shuffledet/postprocess.hpp"
#include "shuffledet/tensor.hpp"

namespace shuffledet::io {

/// Decodes binary 8-bit PGM (P5) or PPM (P6) into a (1, 3, h, w) tensor with
/// values p / maxval. Gray images are replicated into all three channels.
/// Throws FormatError with the byte offset of the problem.
Tensor decode_pnm(std::span<const std::uint8_t> bytes);
Tensor read_image(const std::filesystem::path& path);

/// Encodes channels 0..2 of a (1, 3, h, w) tensor as P6, rounding v * 255 after clamping to [0, 1].
std::vector<std::uint8_t> encode_ppm(const Tensor& image);
/// Encodes channel 0 as P5.
std::vector<std::uint8_t> encode_pgm(const Tensor& image);
void write_image(const std::filesystem::path& path, const Tensor& image);

/// (height, width) of an image tensor.
post::Extent image_extent(const Tensor& image);

} // namespace shuffledet::io
