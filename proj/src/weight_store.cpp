// Copyright 2026 The shuffledet Authors
// SPDX-License-Identifier: Apache-2.0
#include "shuffledet/weight_store.hpp"

#include <array>
#include <bit>
#include <cstring>

#include "shuffledet/error.hpp"
#include "shuffledet/file_util.hpp"

namespace shuffledet::model {

void WeightStore::insert(std::string name, Tensor tensor)
{
    if (tensors_.count(name) != 0)
        throw DataError("duplicate weight name: " + name);
    tensors_.emplace(std::move(name), std::move(tensor));
}

void WeightStore::set(std::string name, Tensor tensor)
{
    tensors_[std::move(name)] = std::move(tensor);
}

const Tensor& WeightStore::get(const std::string& name) const
{
    auto it = tensors_.find(name);
    if (it == tensors_.end())
        throw StoreError("missing weight: " + name);
    return it->second;
}

Tensor& WeightStore::get_mut(const std::string& name)
{
    auto it = tensors_.find(name);
    if (it == tensors_.end())
        throw StoreError("missing weight: " + name);
    return it->second;
}

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u16(std::uint16_t v)
    {
        for (int i = 0; i < 2; ++i)
            bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i)
            bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void raw(const void* p, std::size_t n)
    {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    bool has(std::size_t n) const { return bytes_.size() - pos_ >= n; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint8_t u8() { return bytes_[pos_++]; }
    std::uint16_t u16()
    {
        std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32()
    {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str(std::size_t n)
    {
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> save_weights(const WeightStore& store)
{
    Writer w;
    w.raw(kWeightMagic, 4);
    w.u32(static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, tensor] : store) {
        if (name.size() > 0xFFFF)
            throw FormatError("weight name too long: " + name.substr(0, 64));
        w.u16(static_cast<std::uint16_t>(name.size()));
        w.raw(name.data(), name.size());
        const Shape& s = tensor.shape();
        w.u8(4);
        for (std::size_t d : {s.n, s.c, s.h, s.w}) {
            if (d > 0xFFFFFFFFu)
                throw FormatError("extent too large in " + name);
            w.u32(static_cast<std::uint32_t>(d));
        }
        for (float v : tensor.data())
            w.f32(v);
    }
    return w.take();
}

WeightStore load_weights(std::span<const std::uint8_t> bytes)
{
    Reader r(bytes);
    if (!r.has(4) || std::memcmp(bytes.data(), kWeightMagic, 4) != 0)
        throw FormatError("weight file: bad magic, expected SYW1");
    r.str(4);
    if (!r.has(4))
        throw FormatError("weight file: truncated header");
    const std::uint32_t count = r.u32();

    WeightStore store;
    for (std::uint32_t index = 0; index < count; ++index) {
        const std::string where = "record " + std::to_string(index);
        if (!r.has(2))
            throw FormatError("weight file: truncated at " + where + " (name length)");
        const std::uint16_t name_len = r.u16();
        if (!r.has(name_len))
            throw FormatError("weight file: truncated at " + where + " (name)");
        std::string name = r.str(name_len);
        const std::string label = where + " '" + name + "'";
        if (!r.has(1))
            throw FormatError("weight file: truncated at " + label + " (ndim)");
        const std::uint8_t ndim = r.u8();
        if (ndim > 4)
            throw FormatError("weight file: " + label + " has ndim " + std::to_string(ndim) + " > 4");
        if (!r.has(4u * ndim))
            throw FormatError("weight file: truncated at " + label + " (dims)");
        std::array<std::size_t, 4> extents{1, 1, 1, 1};
        for (std::size_t d = 0; d < ndim; ++d)
            extents[d] = r.u32();
        Shape shape{extents[0], extents[1], extents[2], extents[3]};
        std::size_t numel = 0;
        try {
            numel = shape.numel();
        } catch (const ShapeError&) {
            throw FormatError("weight file: " + label + " extents overflow");
        }
        if (numel > r.remaining() / 4)
            throw FormatError("weight file: truncated at " + label + " (data)");
        std::vector<float> data(numel);
        for (float& v : data)
            v = r.f32();
        if (store.contains(name))
            throw FormatError("weight file: duplicate " + label);
        store.insert(std::move(name), Tensor(shape, std::move(data)));
    }
    if (r.remaining() != 0)
        throw FormatError("weight file: " + std::to_string(r.remaining()) + " trailing bytes");
    return store;
}

void save_weights_file(const std::filesystem::path& path, const WeightStore& store)
{
    io::write_file_atomic(path, save_weights(store));
}

WeightStore load_weights_file(const std::filesystem::path& path)
{
    const auto bytes = io::read_file(path);
    return load_weights(bytes);
}

} // namespace shuffledet::model
