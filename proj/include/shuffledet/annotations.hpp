// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "shuffledet/eval.hpp"

namespace shuffledet::io {

/// YOLO label text: one "class cx cy w h" line per box, the last four
/// normalised to [0, 1] by image width/height. Blank lines are ignored.
/// Throws FormatError naming the line on malformed or out-of-range input.
std::vector<eval::GroundTruth> parse_annotations(std::string_view text, post::Extent image_size,
                                                 const std::string& image_id);

/// Reads `path`; the image id is the file stem.
std::vector<eval::GroundTruth> parse_annotations_file(const std::filesystem::path& path, post::Extent image_size);

/// Built-in names: 6 classes -> NEU-DET, 10 -> GC10-DET, otherwise class0..classN-1.
std::vector<std::string> class_names(int class_count);

} // namespace shuffledet::io
