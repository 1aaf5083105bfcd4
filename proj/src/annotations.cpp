// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/annotations.hpp"

#include <array>
#include <charconv>
#include <sstream>

#include "shuffledet/error.hpp"
#include "shuffledet/file_util.hpp"

namespace shuffledet::io {

namespace {

std::vector<std::string_view> fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r')
            ++i;
        if (i > start)
            out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view text, T& value)
{
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc() && ptr == text.data() + text.size();
}

} // namespace

std::vector<eval::GroundTruth> parse_annotations(std::string_view text, post::Extent image_size,
                                                 const std::string& image_id)
{
    if (image_size.height < 1 || image_size.width < 1)
        throw ParamError("annotations: image size must be positive");
    std::vector<eval::GroundTruth> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        const auto parts = fields(line);
        if (parts.empty())
            continue;
        const std::string where = image_id + " line " + std::to_string(line_no);
        if (parts.size() != 5)
            throw FormatError("annotations: " + where + ": expected 5 fields, found " + std::to_string(parts.size()));
        int class_id = 0;
        if (!parse_number(parts[0], class_id) || class_id < 0)
            throw FormatError("annotations: " + where + ": class id must be a non-negative integer");
        std::array<double, 4> v{};
        for (std::size_t k = 0; k < 4; ++k) {
            if (!parse_number(parts[k + 1], v[k]))
                throw FormatError("annotations: " + where + ": field " + std::to_string(k + 2) + " is not a number");
            if (!(v[k] >= 0.0 && v[k] <= 1.0))
                throw FormatError("annotations: " + where + ": field " + std::to_string(k + 2) +
                                  " outside [0, 1]");
        }
        const double iw = image_size.width, ih = image_size.height;
        const double cx = v[0] * iw, cy = v[1] * ih, w = v[2] * iw, h = v[3] * ih;
        eval::GroundTruth gt;
        gt.image_id = image_id;
        gt.class_id = class_id;
        gt.box = {static_cast<float>(cx - w / 2), static_cast<float>(cy - h / 2), static_cast<float>(cx + w / 2),
                  static_cast<float>(cy + h / 2)};
        out.push_back(std::move(gt));
    }
    return out;
}

std::vector<eval::GroundTruth> parse_annotations_file(const std::filesystem::path& path, post::Extent image_size)
{
    const auto bytes = read_file(path);
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    return parse_annotations(text, image_size, path.stem().string());
}

std::vector<std::string> class_names(int class_count)
{
    if (class_count == 6)
        return {"rolled_in_scale", "patches", "crazing", "inclusion", "pitted_surface", "scratches"};
    if (class_count == 10)
        return {"punching", "weld_line", "crescent_gap", "inclusion", "water_spot",
                "oil_spot", "silk_spot", "rolled_pit", "crease", "waist_folding"};
    std::vector<std::string> names;
    for (int i = 0; i < class_count; ++i)
        names.push_back("class" + std::to_string(i));
    return names;
}

} // namespace shuffledet::io
