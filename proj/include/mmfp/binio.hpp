// SPDX-License-Identifier: Apache-2.0
//
// Little-endian binary file plumbing shared by the MMENV1 / MMDS1 / MMCNN1
// formats, plus the FNV-1a content hash used for provenance chaining.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mmfp/errors.hpp"

namespace mmfp {

class Fnv1a {
  public:
    void update(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= b[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    std::uint64_t digest() const { return h_; }

  private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

namespace detail {

template <typename U>
inline U to_le(U v) {
    if constexpr (std::endian::native == std::endian::big) {
        U r = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            r |= ((v >> (8 * i)) & 0xffu) << (8 * (sizeof(U) - 1 - i));
        return r;
    }
    return v;
}

} // namespace detail

// Buffered writer; everything goes through the hash as well so a file's
// content hash can be taken while serializing.
class BinWriter {
  public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), b, b + n);
        hash_.update(p, n);
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) {
        const std::uint32_t le = detail::to_le(v);
        bytes(&le, 4);
    }
    void u64(std::uint64_t v) {
        const std::uint64_t le = detail::to_le(v);
        bytes(&le, 8);
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void magic(const char* m) { bytes(m, std::strlen(m)); }

    std::uint64_t content_hash() const { return hash_.digest(); }
    const std::vector<unsigned char>& buffer() const { return buf_; }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw io_error("cannot open for writing: " + path);
        f.write(reinterpret_cast<const char*>(buf_.data()),
                static_cast<std::streamsize>(buf_.size()));
        if (!f) throw io_error("write failed: " + path);
    }

  private:
    std::vector<unsigned char> buf_;
    Fnv1a hash_;
};

class BinReader {
  public:
    explicit BinReader(const std::string& path) {
        std::ifstream f(path, std::ios::binary | std::ios::ate);
        if (!f) throw io_error("cannot open for reading: " + path);
        const auto n = f.tellg();
        f.seekg(0);
        buf_.resize(static_cast<std::size_t>(n));
        f.read(reinterpret_cast<char*>(buf_.data()), n);
        if (!f) throw io_error("read failed: " + path);
    }

    void bytes(void* p, std::size_t n) {
        if (pos_ + n > buf_.size()) throw io_error("unexpected end of file");
        std::memcpy(p, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return detail::to_le(v);
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return detail::to_le(v);
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint32_t n = u32();
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    void expect_magic(const char* m) {
        const std::size_t n = std::strlen(m);
        std::string got(n, '\0');
        bytes(got.data(), n);
        if (got != m) throw io_error(std::string("bad magic, expected ") + m);
    }

    std::size_t remaining() const { return buf_.size() - pos_; }
    std::uint64_t whole_file_hash() const {
        Fnv1a h;
        h.update(buf_.data(), buf_.size());
        return h.digest();
    }

  private:
    std::vector<unsigned char> buf_;
    std::size_t pos_ = 0;
};

inline std::uint64_t hash_file(const std::string& path) {
    return BinReader(path).whole_file_hash();
}

} // namespace mmfp
