#include "seqlab/mantissa.hpp"

#include "seqlab/errors.hpp"

#include <algorithm>

namespace seqlab {

namespace {

std::size_t word_count(std::uint32_t width) { return (static_cast<std::size_t>(width) + 63) / 64; }

}  // namespace

Mantissa::Mantissa(std::uint32_t width) : width_(width), words_(word_count(width), 0) {
    if (width == 0) throw UsageError("mantissa width must be positive");
}

Mantissa::Mantissa(std::uint32_t width, std::vector<std::uint64_t> words)
    : width_(width), words_(std::move(words)) {
    if (width == 0) throw UsageError("mantissa width must be positive");
    words_.resize(word_count(width), 0);
    mask_top();
}

Mantissa Mantissa::from_u64(std::uint32_t width, std::uint64_t value) {
    Mantissa m(width);
    m.words_[0] = value;
    m.mask_top();
    return m;
}

void Mantissa::mask_top() noexcept {
    const std::uint32_t rem = width_ % 64;
    if (rem != 0) words_.back() &= (std::uint64_t{1} << rem) - 1;
}

bool Mantissa::is_zero() const noexcept {
    return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
}

bool Mantissa::bit(std::uint32_t pos) const noexcept {
    if (pos >= width_) return false;
    return (words_[pos / 64] >> (pos % 64)) & 1u;
}

void Mantissa::set_bit(std::uint32_t pos) noexcept {
    if (pos < width_) words_[pos / 64] |= std::uint64_t{1} << (pos % 64);
}

std::uint64_t Mantissa::extract(std::uint32_t pos, std::uint32_t count) const noexcept {
    if (count == 0) return 0;
    const std::size_t wi = pos / 64;
    const std::uint32_t off = pos % 64;
    std::uint64_t lo = wi < words_.size() ? words_[wi] >> off : 0;
    if (off != 0 && wi + 1 < words_.size()) lo |= words_[wi + 1] << (64 - off);
    if (count < 64) lo &= (std::uint64_t{1} << count) - 1;
    return lo;
}

Mantissa& Mantissa::operator+=(const Mantissa& rhs) {
    if (rhs.width_ != width_) throw UsageError("mantissa width mismatch");
    unsigned char carry = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
        const std::uint64_t a = words_[i];
        const std::uint64_t s = a + rhs.words_[i];
        const std::uint64_t t = s + carry;
        carry = static_cast<unsigned char>((s < a) | (t < s));
        words_[i] = t;
    }
    mask_top();
    return *this;
}

Mantissa& Mantissa::operator-=(const Mantissa& rhs) {
    if (rhs.width_ != width_) throw UsageError("mantissa width mismatch");
    unsigned char borrow = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
        const std::uint64_t a = words_[i];
        const std::uint64_t d = a - rhs.words_[i];
        const std::uint64_t t = d - borrow;
        borrow = static_cast<unsigned char>((d > a) | (t > d));
        words_[i] = t;
    }
    mask_top();
    return *this;
}

Mantissa& Mantissa::shift_left(std::uint32_t count) noexcept {
    if (count >= width_) {
        std::fill(words_.begin(), words_.end(), 0);
        return *this;
    }
    const std::size_t ws = count / 64;
    const std::uint32_t bs = count % 64;
    const std::size_t n = words_.size();
    for (std::size_t i = n; i-- > 0;) {
        std::uint64_t v = 0;
        if (i >= ws) {
            v = words_[i - ws] << bs;
            if (bs != 0 && i >= ws + 1) v |= words_[i - ws - 1] >> (64 - bs);
        }
        words_[i] = v;
    }
    mask_top();
    return *this;
}

Mantissa& Mantissa::mul_small(std::uint64_t factor) noexcept {
    unsigned __int128 carry = 0;
    for (auto& w : words_) {
        const unsigned __int128 p = static_cast<unsigned __int128>(w) * factor + carry;
        w = static_cast<std::uint64_t>(p);
        carry = p >> 64;
    }
    mask_top();
    return *this;
}

Mantissa& Mantissa::negate() noexcept {
    for (auto& w : words_) w = ~w;
    mask_top();
    unsigned char carry = 1;
    for (auto& w : words_) {
        if (!carry) break;
        ++w;
        carry = w == 0;
    }
    mask_top();
    return *this;
}

std::string Mantissa::to_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    const std::uint32_t nibbles = (width_ + 3) / 4;
    std::string out;
    out.reserve(nibbles);
    // Most significant nibble first; the top nibble may be partial.
    for (std::uint32_t i = nibbles; i-- > 0;) {
        const std::uint32_t pos = i * 4;
        const std::uint32_t cnt = std::min<std::uint32_t>(4, width_ - pos);
        out.push_back(digits[extract(pos, cnt)]);
    }
    return out;
}

}  // namespace seqlab
