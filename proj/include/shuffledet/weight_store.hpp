// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "shuffledet/tensor.hpp"

namespace shuffledet::model {

/// Named tensors, iterated in name order.
class WeightStore {
public:
    using Map = std::map<std::string, Tensor>;

    /// Throws DataError if the name is already present.
    void insert(std::string name, Tensor tensor);
    /// Inserts or replaces.
    void set(std::string name, Tensor tensor);

    bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
    /// Throws StoreError naming the missing tensor.
    const Tensor& get(const std::string& name) const;
    Tensor& get_mut(const std::string& name);

    std::size_t size() const { return tensors_.size(); }
    bool empty() const { return tensors_.empty(); }
    Map::const_iterator begin() const { return tensors_.begin(); }
    Map::const_iterator end() const { return tensors_.end(); }

    friend bool operator==(const WeightStore&, const WeightStore&) = default;

private:
    Map tensors_;
};

// Weight file layout, all integers little-endian:
//   "SYW1"  u32 record_count
//   per record: u16 name_len, name bytes (UTF-8), u8 ndim, ndim x u32 dims,
//               prod(dims) x f32
// Records are written in name order with ndim = 4. Readers accept ndim 0..4;
// shorter dim lists fill the leading extents and the rest are 1.
inline constexpr char kWeightMagic[4] = {'S', 'Y', 'W', '1'};

std::vector<std::uint8_t> save_weights(const WeightStore& store);
/// Throws FormatError on bad magic, truncation (naming the incomplete
/// record), trailing bytes or duplicate names.
WeightStore load_weights(std::span<const std::uint8_t> bytes);

void save_weights_file(const std::filesystem::path& path, const WeightStore& store);
WeightStore load_weights_file(const std::filesystem::path& path);

} // namespace shuffledet::model
