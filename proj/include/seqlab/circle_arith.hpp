#pragma once

#include "seqlab/mantissa.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace seqlab {

/// An element of the circle [0,1) held as an exact binary fraction.
///
/// `valid_bits` counts the leading mantissa bits that agree with the ideal
/// real number the point stands for. Queries beyond that depth throw
/// PrecisionError instead of returning garbage.
class CirclePoint {
public:
    CirclePoint() = default;
    CirclePoint(Mantissa mantissa, std::uint32_t valid_bits);

    static CirclePoint zero(std::uint32_t bits);

    const Mantissa& mantissa() const noexcept { return mantissa_; }
    std::uint32_t bits() const noexcept { return mantissa_.width(); }
    std::uint32_t valid_bits() const noexcept { return valid_bits_; }

    /// Top 64 bits of the mantissa (zero-padded when bits < 64), i.e. the
    /// value scaled by 2^64. Ignores the budget.
    std::uint64_t fraction64() const noexcept;

    double to_double() const noexcept;

    /// `digits` decimal places, truncated, from the top ceil(digits*log2 10)
    /// valid bits.
    std::string to_decimal(unsigned digits = 15) const;

    friend bool operator==(const CirclePoint&, const CirclePoint&) = default;

private:
    Mantissa mantissa_;
    std::uint32_t valid_bits_ = 0;
};

CirclePoint add_mod1(const CirclePoint& a, const CirclePoint& b);
CirclePoint double_mod1(const CirclePoint& a);

/// Index of the depth-k dyadic cell containing `a`: floor(a * 2^k).
/// Requires 1 <= k <= min(64, a.valid_bits()).
std::uint64_t top_bits(const CirclePoint& a, std::uint32_t k);

// ---------------------------------------------------------------------------
// Constants

struct Rational {
    std::int64_t p = 0;
    std::int64_t q = 1;
    friend bool operator==(const Rational&, const Rational&) = default;
};

/// sqrt(k) for a non-square positive integer k.
struct SqrtInt {
    std::uint64_t k = 2;
    friend bool operator==(const SqrtInt&, const SqrtInt&) = default;
};

/// Explicit binary digits 0.d1 d2 d3 ..., most significant first.
struct DigitStream {
    std::shared_ptr<const std::vector<std::uint8_t>> digits;
    std::string label;  // source path, used when printing the spec
    friend bool operator==(const DigitStream& a, const DigitStream& b) {
        return a.label == b.label && *a.digits == *b.digits;
    }
};

/// Binary Champernowne constant 0.1 10 11 100 101 ...
struct Champernowne {
    friend bool operator==(const Champernowne&, const Champernowne&) = default;
};

struct ConstantSpec {
    std::variant<Rational, SqrtInt, DigitStream, Champernowne> value;
    /// Use -x mod 1 instead of x. Only meaningful for irrational variants;
    /// rationals carry their sign in p.
    bool negated = false;

    static ConstantSpec rational(std::int64_t p, std::int64_t q);
    static ConstantSpec sqrt_int(std::uint64_t k);
    static ConstantSpec digit_stream(std::vector<std::uint8_t> digits, std::string label = "inline");
    static ConstantSpec champernowne();

    /// Textual form: `p/q`, `p`, `sqrtK`, `champernowne`, `bits:PATH`,
    /// optionally prefixed with `-`.
    static ConstantSpec parse(std::string_view text);
    std::string to_string() const;

    /// True when the value is an integer multiple of 2^-bits, so that
    /// materialization is exact rather than a truncation.
    bool is_dyadic_at(std::uint32_t bits) const;

    friend bool operator==(const ConstantSpec&, const ConstantSpec&) = default;
};

/// floor((value mod 1) * 2^bits), with valid_bits = bits.
CirclePoint materialize(const ConstantSpec& spec, std::uint32_t bits);

/// Reads a file of ASCII '0'/'1' digits (whitespace ignored).
std::vector<std::uint8_t> read_digit_file(const std::string& path);

/// First `count` binary digits of the Champernowne constant.
std::vector<std::uint8_t> champernowne_digits(std::size_t count);

/// ceil(log2(x)) for x >= 1, 0 for x <= 1.
std::uint32_t ceil_log2(std::uint64_t x) noexcept;

}  // namespace seqlab
