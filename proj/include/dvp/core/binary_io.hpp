/*
 * dvp - Parametric face tracking and portrait reenactment toolkit.
 *
 * File: include/dvp/core/binary_io.hpp
 *
 * Copyright 2026 The dvp authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef DVP_CORE_BINARY_IO_HPP
#define DVP_CORE_BINARY_IO_HPP

#include "dvp/core/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace dvp {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Appends little-endian encoded scalars to a byte buffer.
class BinaryWriter
{
public:
    template <typename T>
        requires std::is_arithmetic_v<T>
    void write(T value)
    {
        std::array<std::uint8_t, sizeof(T)> raw;
        std::memcpy(raw.data(), &value, sizeof(T));
        if constexpr (std::endian::native == std::endian::big)
        {
            std::reverse(raw.begin(), raw.end());
        }
        bytes_.insert(bytes_.end(), raw.begin(), raw.end());
    }

    template <typename T>
    void write_span(std::span<const T> values)
    {
        for (const T& v : values)
        {
            write(v);
        }
    }

    void write_magic(std::string_view magic) { bytes_.insert(bytes_.end(), magic.begin(), magic.end()); }

    void write_string(std::string_view s)
    {
        write(static_cast<std::uint32_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }

    const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

    void save(const std::filesystem::path& path) const
    {
        write_file_bytes(path, bytes_);
    }

private:
    std::vector<std::uint8_t> bytes_;
};

/// Reads little-endian scalars from a byte buffer; every read is bounds-checked.
class BinaryReader
{
public:
    explicit BinaryReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

    static BinaryReader from_file(const std::filesystem::path& path)
    {
        return BinaryReader(read_file_bytes(path));
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    T read()
    {
        need(sizeof(T));
        std::array<std::uint8_t, sizeof(T)> raw;
        std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(offset_), sizeof(T), raw.begin());
        if constexpr (std::endian::native == std::endian::big)
        {
            std::reverse(raw.begin(), raw.end());
        }
        offset_ += sizeof(T);
        T value;
        std::memcpy(&value, raw.data(), sizeof(T));
        return value;
    }

    template <typename T>
    std::vector<T> read_vector(std::size_t count)
    {
        need(count * sizeof(T));
        std::vector<T> out(count);
        for (auto& v : out)
        {
            v = read<T>();
        }
        return out;
    }

    void expect_magic(std::string_view magic)
    {
        need(magic.size());
        const std::string_view found(reinterpret_cast<const char*>(bytes_.data() + offset_), magic.size());
        require(found == magic, ErrorCode::format_error,
                "bad magic: expected '" + std::string(magic) + "', found '" + std::string(found) + "'");
        offset_ += magic.size();
    }

    std::string read_string()
    {
        const auto n = read<std::uint32_t>();
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + offset_), n);
        offset_ += n;
        return s;
    }

    bool at_end() const noexcept { return offset_ == bytes_.size(); }

private:
    void need(std::size_t n) const
    {
        require(offset_ + n <= bytes_.size(), ErrorCode::format_error, "unexpected end of binary stream");
    }

    std::vector<std::uint8_t> bytes_;
    std::size_t offset_ = 0;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io_error, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io_error, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(out.good(), ErrorCode::io_error, "short write to " + path.string());
}

} // namespace dvp

#endif /* DVP_CORE_BINARY_IO_HPP */
