#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emprobe::io {

std::string read_file(const std::filesystem::path & path);

// Writes to a sibling temp file, then renames over the target.
void write_file_atomic(const std::filesystem::path & path, std::string_view contents);

// Little-endian byte buffer builder / cursor used by the binary formats.
class byte_writer {
public:
    void put_bytes(std::span<const unsigned char> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void put_bytes(std::string_view s) {
        put_bytes(std::span(reinterpret_cast<const unsigned char *>(s.data()), s.size()));
    }

    template <typename T>
    void put_le(T v) {
        static_assert(std::is_integral_v<T>);
        for (size_t i = 0; i < sizeof(T); ++i) {
            buf_.push_back(static_cast<unsigned char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff));
        }
    }

    void put_f32(float f) { put_le(std::bit_cast<uint32_t>(f)); }

    const std::vector<unsigned char> & bytes() const { return buf_; }

private:
    std::vector<unsigned char> buf_;
};

class byte_reader {
public:
    explicit byte_reader(std::span<const unsigned char> data) : data_(data) {}

    size_t remaining() const { return data_.size() - pos_; }
    size_t position() const { return pos_; }

    std::span<const unsigned char> take(size_t n);

    template <typename T>
    T get_le() {
        static_assert(std::is_integral_v<T>);
        auto b = take(sizeof(T));
        uint64_t v = 0;
        for (size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<uint64_t>(b[i]) << (8 * i);
        }
        return static_cast<T>(v);
    }

    float get_f32() { return std::bit_cast<float>(get_le<uint32_t>()); }

private:
    std::span<const unsigned char> data_;
    size_t pos_ = 0;
};

} // namespace emprobe::io
