#include "seqlab/circle_arith.hpp"

#include "seqlab/errors.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

namespace seqlab {

std::uint32_t ceil_log2(std::uint64_t x) noexcept {
    if (x <= 1) return 0;
    return static_cast<std::uint32_t>(std::bit_width(x - 1));
}

// ---------------------------------------------------------------------------
// CirclePoint

CirclePoint::CirclePoint(Mantissa mantissa, std::uint32_t valid_bits)
    : mantissa_(std::move(mantissa)), valid_bits_(valid_bits) {
    if (valid_bits_ > mantissa_.width()) throw UsageError("valid_bits exceeds bits");
}

CirclePoint CirclePoint::zero(std::uint32_t bits) { return CirclePoint(Mantissa(bits), bits); }

std::uint64_t CirclePoint::fraction64() const noexcept {
    const std::uint32_t b = bits();
    if (b >= 64) return mantissa_.extract(b - 64, 64);
    return mantissa_.extract(0, b) << (64 - b);
}

double CirclePoint::to_double() const noexcept {
    // Truncate to 53 bits so the result never rounds up to 1.0.
    return std::ldexp(static_cast<double>(fraction64() >> 11), -53);
}

std::string CirclePoint::to_decimal(unsigned digits) const {
    const auto wanted = static_cast<std::uint32_t>(std::ceil(digits * std::log2(10.0)));
    const std::uint32_t w = std::min(wanted, valid_bits_);
    std::string out = "0.";
    if (w == 0) {
        out.append(digits, '0');
        return out;
    }
    // Left-align the top w bits in whole words; the value is frac / 2^(64*nw).
    const std::uint32_t nw = (w + 63) / 64;
    const auto b = static_cast<std::int64_t>(bits());
    std::vector<std::uint64_t> frac(nw, 0);
    for (std::uint32_t j = 0; j < nw; ++j) {
        const std::int64_t pos = b - 64 * static_cast<std::int64_t>(nw) + 64 * static_cast<std::int64_t>(j);
        if (pos + 64 <= 0) continue;
        if (pos >= 0) {
            frac[j] = mantissa_.extract(static_cast<std::uint32_t>(pos), 64);
        } else {
            const auto shift = static_cast<std::uint32_t>(-pos);
            frac[j] = mantissa_.extract(0, 64 - shift) << shift;
        }
    }
    const std::uint32_t drop = 64 * nw - w;
    for (std::uint32_t i = 0; i < drop; ++i) frac[i / 64] &= ~(std::uint64_t{1} << (i % 64));

    for (unsigned d = 0; d < digits; ++d) {
        unsigned __int128 carry = 0;
        for (auto& word : frac) {
            const unsigned __int128 p = static_cast<unsigned __int128>(word) * 10u + carry;
            word = static_cast<std::uint64_t>(p);
            carry = p >> 64;
        }
        out.push_back(static_cast<char>('0' + static_cast<int>(carry)));
    }
    return out;
}

CirclePoint add_mod1(const CirclePoint& a, const CirclePoint& b) {
    if (a.bits() != b.bits()) throw UsageError("add_mod1: operands have different bit widths");
    const std::uint32_t v = std::min(a.valid_bits(), b.valid_bits());
    return CirclePoint(a.mantissa() + b.mantissa(), v == 0 ? 0 : v - 1);
}

CirclePoint double_mod1(const CirclePoint& a) {
    Mantissa m = a.mantissa();
    m.shift_left(1);
    const std::uint32_t v = a.valid_bits();
    return CirclePoint(std::move(m), v == 0 ? 0 : v - 1);
}

std::uint64_t top_bits(const CirclePoint& a, std::uint32_t k) {
    if (k == 0 || k > 64) throw UsageError("top_bits: depth must be in [1, 64]");
    if (k > a.valid_bits()) {
        throw PrecisionError("precision exhausted: depth " + std::to_string(k) + " exceeds " +
                             std::to_string(a.valid_bits()) + " valid bits");
    }
    return a.mantissa().top(k);
}

// ---------------------------------------------------------------------------
// ConstantSpec

ConstantSpec ConstantSpec::rational(std::int64_t p, std::int64_t q) {
    if (q <= 0) throw UsageError("rational constant needs a positive denominator");
    const std::int64_t g = std::gcd(p, q);
    return ConstantSpec{Rational{p / (g == 0 ? 1 : g), q / (g == 0 ? 1 : g)}, false};
}

ConstantSpec ConstantSpec::sqrt_int(std::uint64_t k) {
    if (k == 0) throw UsageError("sqrt constant needs a positive radicand");
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(k)));
    while (r * r > k) --r;
    while ((r + 1) * (r + 1) <= k) ++r;
    if (r * r == k) throw UsageError("sqrt" + std::to_string(k) + " is rational; use p/q");
    return ConstantSpec{SqrtInt{k}, false};
}

ConstantSpec ConstantSpec::digit_stream(std::vector<std::uint8_t> digits, std::string label) {
    for (auto d : digits) {
        if (d > 1) throw UsageError("digit stream must contain only 0/1");
    }
    return ConstantSpec{DigitStream{std::make_shared<const std::vector<std::uint8_t>>(std::move(digits)),
                                    std::move(label)},
                        false};
}

ConstantSpec ConstantSpec::champernowne() { return ConstantSpec{Champernowne{}, false}; }

namespace {

template <class Int>
Int parse_int(std::string_view s, std::string_view what) {
    Int v{};
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || s.empty()) {
        throw UsageError("bad " + std::string(what) + ": '" + std::string(s) + "'");
    }
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

ConstantSpec ConstantSpec::parse(std::string_view text) {
    std::string_view s = trim(text);
    if (s.empty()) throw UsageError("empty constant");

    if (s.starts_with("bits:")) {
        std::string path(s.substr(5));
        return digit_stream(read_digit_file(path), path);
    }

    bool neg = false;
    if (s.front() == '-' && s.size() > 1 && !std::isdigit(static_cast<unsigned char>(s[1]))) {
        neg = true;
        s.remove_prefix(1);
    }

    ConstantSpec out;
    if (s == "champernowne") {
        out = champernowne();
    } else if (s.starts_with("sqrt")) {
        out = sqrt_int(parse_int<std::uint64_t>(s.substr(4), "sqrt radicand"));
    } else if (const auto slash = s.find('/'); slash != std::string_view::npos) {
        out = rational(parse_int<std::int64_t>(s.substr(0, slash), "numerator"),
                       parse_int<std::int64_t>(s.substr(slash + 1), "denominator"));
    } else {
        out = rational(parse_int<std::int64_t>(s, "constant"), 1);
    }
    out.negated = neg;
    return out;
}

std::string ConstantSpec::to_string() const {
    std::string body = std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Rational>) {
                return v.q == 1 ? std::to_string(v.p) : std::to_string(v.p) + "/" + std::to_string(v.q);
            } else if constexpr (std::is_same_v<T, SqrtInt>) {
                return "sqrt" + std::to_string(v.k);
            } else if constexpr (std::is_same_v<T, DigitStream>) {
                return "bits:" + v.label;
            } else {
                return "champernowne";
            }
        },
        value);
    return negated ? "-" + body : body;
}

bool ConstantSpec::is_dyadic_at(std::uint32_t bits) const {
    const auto* r = std::get_if<Rational>(&value);
    if (r == nullptr) return false;
    const auto q = static_cast<std::uint64_t>(r->q);
    return std::has_single_bit(q) && std::countr_zero(q) <= static_cast<int>(bits);
}

std::vector<std::uint8_t> read_digit_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open digit file '" + path + "'");
    std::vector<std::uint8_t> digits;
    char ch = 0;
    while (in.get(ch)) {
        if (ch == '0' || ch == '1') {
            digits.push_back(static_cast<std::uint8_t>(ch - '0'));
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            throw UsageError("digit file '" + path + "' contains a character other than 0/1");
        }
    }
    return digits;
}

std::vector<std::uint8_t> champernowne_digits(std::size_t count) {
    std::vector<std::uint8_t> out;
    out.reserve(count);
    for (std::uint64_t n = 1; out.size() < count; ++n) {
        for (int b = std::bit_width(n); b-- > 0 && out.size() < count;) {
            out.push_back(static_cast<std::uint8_t>((n >> b) & 1u));
        }
    }
    return out;
}

namespace {

Mantissa from_digits(const std::vector<std::uint8_t>& digits, std::uint32_t bits) {
    if (digits.size() < bits) {
        throw PrecisionSourceError("digit stream supplies " + std::to_string(digits.size()) +
                                   " digits, " + std::to_string(bits) + " required");
    }
    Mantissa m(bits);
    for (std::uint32_t i = 0; i < bits; ++i) {
        if (digits[i]) m.set_bit(bits - 1 - i);
    }
    return m;
}

Mantissa rational_mantissa(const Rational& r, std::uint32_t bits) {
    const auto q = static_cast<std::uint64_t>(r.q);
    std::int64_t red = r.p % r.q;
    if (red < 0) red += r.q;
    const std::uint32_t nw = (bits + 63) / 64;
    std::vector<std::uint64_t> wide(nw, 0);
    auto rem = static_cast<std::uint64_t>(red);
    for (std::uint32_t i = nw; i-- > 0;) {
        const unsigned __int128 num = static_cast<unsigned __int128>(rem) << 64;
        wide[i] = static_cast<std::uint64_t>(num / q);
        rem = static_cast<std::uint64_t>(num % q);
    }
    const Mantissa full(64 * nw, std::move(wide));
    const std::uint32_t excess = 64 * nw - bits;
    if (excess == 0) return full;
    std::vector<std::uint64_t> words(nw, 0);
    for (std::uint32_t j = 0; j < nw; ++j) words[j] = full.extract(excess + 64 * j, 64);
    return Mantissa(bits, std::move(words));
}

// Growable little-endian natural number, only what the square root needs.
struct Nat {
    std::vector<std::uint64_t> w;

    void shl_or(unsigned s, std::uint64_t low) {
        std::uint64_t carry = low;
        for (auto& word : w) {
            const std::uint64_t next = word >> (64 - s);
            word = (word << s) | carry;
            carry = next;
        }
        if (carry != 0) w.push_back(carry);
    }

    void trim() {
        while (!w.empty() && w.back() == 0) w.pop_back();
    }

    friend int compare(const Nat& a, const Nat& b) {
        if (a.w.size() != b.w.size()) return a.w.size() < b.w.size() ? -1 : 1;
        for (std::size_t i = a.w.size(); i-- > 0;) {
            if (a.w[i] != b.w[i]) return a.w[i] < b.w[i] ? -1 : 1;
        }
        return 0;
    }

    void sub(const Nat& b) {
        unsigned char borrow = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const std::uint64_t bi = i < b.w.size() ? b.w[i] : 0;
            const std::uint64_t d = w[i] - bi;
            const std::uint64_t t = d - borrow;
            borrow = static_cast<unsigned char>((d > w[i]) | (t > d));
            w[i] = t;
        }
        trim();
    }
};

// Digit-by-digit binary square root of k * 4^bits; the fractional part of
// sqrt(k) is the low `bits` bits of the root.
Mantissa sqrt_mantissa(std::uint64_t k, std::uint32_t bits) {
    const auto kbits = static_cast<std::uint32_t>(std::bit_width(k));
    const std::uint32_t int_pairs = (kbits + 1) / 2;
    const std::uint64_t pairs = static_cast<std::uint64_t>(int_pairs) + bits;

    Nat rem;
    Nat root;
    Nat trial;
    std::vector<std::uint64_t> out((bits + 63) / 64, 0);
    for (std::uint64_t j = 0; j < pairs; ++j) {
        std::uint64_t pair = 0;
        if (j < int_pairs) pair = (k >> (2 * (int_pairs - 1 - j))) & 3u;
        rem.shl_or(2, pair);
        rem.trim();
        trial = root;
        trial.shl_or(2, 1);
        trial.trim();
        const bool one = compare(rem, trial) >= 0;
        if (one) rem.sub(trial);
        root.shl_or(1, one ? 1 : 0);
        root.trim();
        // Root bit index counted from the binary point downwards.
        if (one && j >= int_pairs) {
            const std::uint64_t pos = bits - 1 - (j - int_pairs);
            out[pos / 64] |= std::uint64_t{1} << (pos % 64);
        }
    }
    return Mantissa(bits, std::move(out));
}

}  // namespace

CirclePoint materialize(const ConstantSpec& spec, std::uint32_t bits) {
    if (bits == 0) throw UsageError("materialize: bits must be positive");
    Mantissa m = std::visit(
        [bits](const auto& v) -> Mantissa {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Rational>) {
                return rational_mantissa(v, bits);
            } else if constexpr (std::is_same_v<T, SqrtInt>) {
                return sqrt_mantissa(v.k, bits);
            } else if constexpr (std::is_same_v<T, DigitStream>) {
                return from_digits(*v.digits, bits);
            } else {
                return from_digits(champernowne_digits(bits), bits);
            }
        },
        spec.value);
    if (spec.negated) {
        if (std::holds_alternative<Rational>(spec.value) || std::holds_alternative<DigitStream>(spec.value)) {
            throw UsageError("negation applies only to sqrt and champernowne constants");
        }
        // Irrational x: floor((1 - x) 2^B) = 2^B - 1 - floor(x 2^B).
        m.negate();
        m -= Mantissa::from_u64(bits, 1);
    }
    return CirclePoint(std::move(m), bits);
}

}  // namespace seqlab
