#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace seqlab {

/// Fixed-width unsigned integer of exactly `width` bits, stored as
/// little-endian 64-bit words. All arithmetic wraps modulo 2^width.
///
/// Read as a binary fraction, a mantissa m of width B stands for m / 2^B,
/// so wrapping arithmetic is arithmetic modulo 1.
class Mantissa {
public:
    Mantissa() = default;
    explicit Mantissa(std::uint32_t width);
    Mantissa(std::uint32_t width, std::vector<std::uint64_t> words);

    static Mantissa from_u64(std::uint32_t width, std::uint64_t value);

    std::uint32_t width() const noexcept { return width_; }
    std::span<const std::uint64_t> words() const noexcept { return words_; }

    bool is_zero() const noexcept;

    /// Bit at position `pos` counted from the least significant end.
    bool bit(std::uint32_t pos) const noexcept;

    /// `count` <= 64 bits starting at `pos` (LSB end), as an integer.
    std::uint64_t extract(std::uint32_t pos, std::uint32_t count) const noexcept;

    /// The `k` most significant bits, k <= 64.
    std::uint64_t top(std::uint32_t k) const noexcept { return extract(width_ - k, k); }

    Mantissa& operator+=(const Mantissa& rhs);
    Mantissa& operator-=(const Mantissa& rhs);
    Mantissa& shift_left(std::uint32_t count) noexcept;
    Mantissa& mul_small(std::uint64_t factor) noexcept;
    Mantissa& negate() noexcept;

    void set_bit(std::uint32_t pos) noexcept;

    std::string to_hex() const;

    friend bool operator==(const Mantissa&, const Mantissa&) = default;

private:
    void mask_top() noexcept;

    std::uint32_t width_ = 0;
    std::vector<std::uint64_t> words_;
};

inline Mantissa operator+(Mantissa lhs, const Mantissa& rhs) { return lhs += rhs; }
inline Mantissa operator-(Mantissa lhs, const Mantissa& rhs) { return lhs -= rhs; }

}  // namespace seqlab
