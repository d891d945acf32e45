#pragma once

#include "seqlab/circle_arith.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace seqlab {

/// p(n) = a_0 + a_1 n + ... + a_g n^g.
struct PolySpec {
    std::vector<ConstantSpec> coeffs;

    std::size_t degree() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
    std::string to_string() const;
    friend bool operator==(const PolySpec&, const PolySpec&) = default;
};

/// Exact floor(num / den * 2^bits) for num in [0, den), computed as
/// num * floor(2^bits / den) + floor(num * (2^bits mod den) / den).
class RationalScale {
public:
    RationalScale() = default;
    RationalScale(std::uint64_t den, std::uint32_t bits);

    std::uint64_t denominator() const noexcept { return den_; }
    bool dyadic() const noexcept { return dyadic_; }
    Mantissa floor_of(std::uint64_t num) const;

private:
    std::uint64_t den_ = 1;
    std::uint32_t bits_ = 0;
    Mantissa quotient_;
    std::uint64_t remainder_ = 0;
    bool dyadic_ = true;
};

/// Registers D_0..D_g of the forward-difference recurrence. After `step()`
/// calls to next(), D_i holds Δ^i p(step) mod 1.
///
/// Rational coefficients are carried exactly, as numerators over the lcm of
/// their denominators; irrational ones as truncated mantissas. Each register
/// keeps a bound (in ulps of 2^-bits) on how far its truncated part may sit
/// below the ideal value, and points get valid_bits = bits - ceil(log2(bound)).
class DifferenceTable {
public:
    DifferenceTable(const PolySpec& poly, std::uint32_t bits);

    std::uint64_t step() const noexcept { return step_; }
    std::size_t degree() const noexcept { return irrational_.size() - 1; }
    std::uint32_t bits() const noexcept { return bits_; }

    /// Common denominator of the rational parts.
    std::uint64_t denominator() const noexcept { return scale_.denominator(); }
    const std::vector<std::uint64_t>& numerators() const noexcept { return rational_; }
    const std::vector<Mantissa>& irrational_parts() const noexcept { return irrational_; }
    const std::vector<std::uint64_t>& error_bounds() const noexcept { return errors_; }

    /// D_0 as a point.
    CirclePoint current() const;

    /// D_i as a point.
    CirclePoint value(std::size_t i) const;

    /// Advance one step (g additions mod 1) and return the new D_0.
    CirclePoint next();

    /// Advance without materializing the output point.
    void advance();

private:
    std::uint32_t bits_;
    RationalScale scale_;
    std::vector<std::uint64_t> rational_;
    std::vector<Mantissa> irrational_;
    std::vector<std::uint64_t> errors_;
    std::uint64_t step_ = 0;
};

DifferenceTable finite_differences(const PolySpec& poly, std::uint32_t bits);
CirclePoint next_poly_point(DifferenceTable& table);

/// How each αβ step picks α (A) or β (B).
struct Strategy {
    struct Periodic {
        std::string word;  // over {A, B}
    };
    struct Random {
        double p_a = 0.5;
        std::optional<std::uint64_t> seed;  // falls back to OrbitSpec::seed
    };
    struct File {
        std::shared_ptr<const std::vector<std::uint8_t>> choices;  // 0 = A, 1 = B
        std::string label;
    };
    struct Greedy {
        std::uint32_t depth = 8;
    };
    std::variant<Periodic, Random, File, Greedy> kind;

    /// `periodic:AB`, `random:P[:SEED]`, `file:PATH`, `greedy[:K]`.
    static Strategy parse(std::string_view text);
    std::string to_string() const;
};

enum class Choice { A, B };

/// Picks the step whose landing cell at depth k has been visited strictly
/// fewer times; ties go to A. `cell_counts` has 2^k entries.
Choice greedy_choice(const CirclePoint& x, const CirclePoint& alpha, const CirclePoint& beta,
                     const std::vector<std::uint64_t>& cell_counts, std::uint32_t depth);

struct Rotation {
    ConstantSpec alpha;
};
struct Polynomial {
    PolySpec poly;
};
struct Doubling {
    ConstantSpec d;
};
struct Combined {
    PolySpec poly;
    ConstantSpec d;
};
struct AlphaBeta {
    ConstantSpec alpha;
    ConstantSpec beta;
    Strategy strategy;
};

using OrbitVariant = std::variant<Rotation, Polynomial, Doubling, Combined, AlphaBeta>;

/// Declarative description of one orbit prefix.
struct OrbitSpec {
    OrbitVariant variant;
    std::uint64_t length = 0;
    std::uint32_t bits = 0;               // 0: use required_bits()
    std::optional<std::uint64_t> start;   // default_start() when empty
    std::uint64_t seed = 0;

    /// `rotation:α`, `poly:a0,a1,...`, `doubling:d`, `combined:poly=...;d=...`,
    /// `alphabeta:a=..;b=..;strategy=..`.
    static OrbitSpec parse(std::string_view text);
    std::string to_string() const;

    std::uint64_t default_start() const;
    std::uint64_t start_index() const { return start.value_or(default_start()); }
};

/// Upper bound on valid bits lost by the time the generator reaches the last
/// point of the prefix (truncation errors of the constants included).
std::uint32_t precision_loss(const OrbitSpec& spec);

/// Smallest budget for which every point of the prefix is readable at
/// `depth`, with 64 guard bits.
std::uint32_t required_bits(const OrbitSpec& spec, std::uint32_t depth);

/// Throws PrecisionError when spec.bits is below required_bits(spec, depth).
void check_budget(const OrbitSpec& spec, std::uint32_t depth);

struct OrbitPoint {
    std::uint64_t n = 0;
    CirclePoint x;
};

/// Sequential generator for one OrbitSpec. Yields exactly spec.length points.
class OrbitGenerator {
public:
    explicit OrbitGenerator(const OrbitSpec& spec);
    OrbitGenerator(OrbitGenerator&&) noexcept;
    OrbitGenerator& operator=(OrbitGenerator&&) noexcept;
    ~OrbitGenerator();

    std::optional<OrbitPoint> next();
    std::uint64_t emitted() const noexcept;
    std::uint32_t bits() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

OrbitGenerator generate(const OrbitSpec& spec);

/// Convenience: run the generator to completion.
std::vector<OrbitPoint> generate_all(const OrbitSpec& spec);

void for_each_point(const OrbitSpec& spec, const std::function<void(const OrbitPoint&)>& fn);

}  // namespace seqlab
