#include "vcut/bits.hpp"

#include <cassert>
#include <stdexcept>

namespace vcut {

namespace {
std::uint64_t low_mask(int width) { return width >= 64 ? ~0ULL : ((1ULL << width) - 1); }
}  // namespace

void BitVec::push(std::uint64_t value, int width) {
    if (width <= 0) return;
    std::size_t pos = size_;
    size_ += static_cast<std::size_t>(width);
    words_.resize((size_ + 63) / 64, 0);
    set(pos, value, width);
}

std::uint64_t BitVec::get(std::size_t pos, int width) const {
    if (width <= 0) return 0;
    assert(pos + static_cast<std::size_t>(width) <= size_);
    std::size_t wi = pos / 64;
    int off = static_cast<int>(pos % 64);
    std::uint64_t v = words_[wi] >> off;
    if (off + width > 64) v |= words_[wi + 1] << (64 - off);
    return v & low_mask(width);
}

void BitVec::set(std::size_t pos, std::uint64_t value, int width) {
    if (width <= 0) return;
    if (pos + static_cast<std::size_t>(width) > size_) throw std::out_of_range("BitVec::set");
    value &= low_mask(width);
    std::size_t wi = pos / 64;
    int off = static_cast<int>(pos % 64);
    words_[wi] = (words_[wi] & ~(low_mask(width) << off)) | (value << off);
    if (off + width > 64) {
        int hi = off + width - 64;
        words_[wi + 1] = (words_[wi + 1] & ~low_mask(hi)) | (value >> (64 - off));
    }
}

void BitVec::append(const BitVec& other) {
    if (size_ % 64 == 0) {
        words_.resize(size_ / 64);
        words_.insert(words_.end(), other.words_.begin(), other.words_.end());
        size_ += other.size_;
        return;
    }
    std::size_t full = other.size_ / 64;
    for (std::size_t i = 0; i < full; ++i) push(other.words_[i], 64);
    int rest = static_cast<int>(other.size_ % 64);
    if (rest) push(other.words_[full], rest);
}

BitVec BitVec::slice(std::size_t pos, std::size_t len) const {
    if (pos + len > size_) throw std::out_of_range("BitVec::slice");
    BitVec out(len);
    if (pos % 64 == 0) {
        std::size_t first = pos / 64;
        for (std::size_t i = 0; i < out.words_.size(); ++i) out.words_[i] = words_[first + i];
        if (len % 64) out.words_.back() &= low_mask(static_cast<int>(len % 64));
        return out;
    }
    std::size_t done = 0;
    while (done < len) {
        int chunk = static_cast<int>(std::min<std::size_t>(64, len - done));
        out.set(done, get(pos + done, chunk), chunk);
        done += static_cast<std::size_t>(chunk);
    }
    return out;
}

void BitVec::xor_with(const BitVec& other) {
    if (other.size_ != size_) throw std::invalid_argument("BitVec::xor_with size mismatch");
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= other.words_[i];
}

void BitVec::xor_at(std::size_t pos, const BitVec& other) {
    if (pos + other.size_ > size_) throw std::out_of_range("BitVec::xor_at");
    if (pos % 64 == 0) {
        std::size_t first = pos / 64;
        for (std::size_t i = 0; i < other.words_.size(); ++i) words_[first + i] ^= other.words_[i];
        return;
    }
    std::size_t done = 0;
    while (done < other.size_) {
        int chunk = static_cast<int>(std::min<std::size_t>(64, other.size_ - done));
        std::uint64_t v = other.get(done, chunk);
        set(pos + done, get(pos + done, chunk) ^ v, chunk);
        done += static_cast<std::size_t>(chunk);
    }
}

bool BitVec::is_zero() const {
    for (auto w : words_)
        if (w) return false;
    return true;
}

std::string BitVec::to_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (std::size_t pos = 0; pos < size_; pos += 4) {
        int width = static_cast<int>(std::min<std::size_t>(4, size_ - pos));
        s.push_back(digits[get(pos, width)]);
    }
    return s;
}

std::uint64_t BitReader::read(int width) {
    std::uint64_t v = bits_->get(pos_, width);
    pos_ += static_cast<std::size_t>(width);
    return v;
}

}  // namespace vcut
