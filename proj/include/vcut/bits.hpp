#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vcut {

inline int ceil_log2(std::uint64_t x) { return x <= 1 ? 0 : static_cast<int>(std::bit_width(x - 1)); }

// Bits per CONGEST word for an n-vertex network.
inline int word_bits(int n) { return ceil_log2(static_cast<std::uint64_t>(n)) < 1 ? 1 : ceil_log2(static_cast<std::uint64_t>(n)); }

inline int width_for(std::uint64_t max_value) { return max_value == 0 ? 1 : static_cast<int>(std::bit_width(max_value)); }

// Dense little-endian bit string; trailing bits of the last word are kept zero.
class BitVec {
public:
    BitVec() = default;
    explicit BitVec(std::size_t nbits) : words_((nbits + 63) / 64, 0), size_(nbits) {}

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    std::span<const std::uint64_t> words() const { return words_; }
    std::span<std::uint64_t> mutable_words() { return words_; }

    void push(std::uint64_t value, int width);
    std::uint64_t get(std::size_t pos, int width) const;
    void set(std::size_t pos, std::uint64_t value, int width);
    void append(const BitVec& other);
    BitVec slice(std::size_t pos, std::size_t len) const;

    // Requires equal sizes.
    void xor_with(const BitVec& other);
    // XORs `other` into this starting at bit `pos`.
    void xor_at(std::size_t pos, const BitVec& other);

    bool is_zero() const;
    bool operator==(const BitVec& other) const = default;
    std::string to_hex() const;

private:
    std::vector<std::uint64_t> words_;
    std::size_t size_ = 0;
};

class BitReader {
public:
    explicit BitReader(const BitVec& bits, std::size_t pos = 0) : bits_(&bits), pos_(pos) {}
    std::uint64_t read(int width);
    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return bits_->size() - pos_; }
    void skip(std::size_t n) { pos_ += n; }

private:
    const BitVec* bits_;
    std::size_t pos_;
};

inline std::int64_t units_for_bits(std::size_t bits, int word) {
    if (bits == 0) return 1;
    return static_cast<std::int64_t>((bits + static_cast<std::size_t>(word) - 1) / static_cast<std::size_t>(word));
}

}  // namespace vcut
