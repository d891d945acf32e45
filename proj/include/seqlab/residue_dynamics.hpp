#pragma once

// Residue covering of n -> 2^n + c*n (mod m) for odd m: multiplicative
// orders, the gcd/order reduction tower, brute-force coverage and a
// constructive witness solver.
//
// Moduli are limited to m < 2^32 so that products and witnesses fit in 64
// bits.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace seqlab::residue {

constexpr std::uint64_t kMaxModulus = std::uint64_t{1} << 32;

/// Validated (m, c) pair: m odd, 3 <= m < 2^32, gcd(c, m) = 1.
struct ResidueParams {
    std::uint64_t m = 3;
    std::uint64_t c = 1;  // reduced into [0, m)

    /// `c` may be negative; it is reduced mod m. Throws UsageError.
    static ResidueParams make(std::uint64_t m, std::int64_t c);
};

std::uint64_t gcd(std::uint64_t a, std::uint64_t b) noexcept;
std::uint64_t lcm(std::uint64_t a, std::uint64_t b);
std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) noexcept;
std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) noexcept;

/// (2^n + c*n) mod m, evaluated by modular exponentiation.
std::uint64_t residue_value(std::uint64_t n, std::uint64_t c, std::uint64_t m) noexcept;

/// ord(2, m) for odd m >= 3.
std::uint64_t mult_order(std::uint64_t m);

/// The two strategies behind mult_order, exposed so they can check each other.
std::uint64_t mult_order_iterative(std::uint64_t m);
std::uint64_t mult_order_factored(std::uint64_t m);

/// Carmichael function λ(m) for odd m.
std::uint64_t carmichael(std::uint64_t m);

struct ChainLevel {
    std::uint64_t m;
    std::uint64_t order;  // ord(2, m)
    std::uint64_t delta;  // gcd(order, m)
    friend bool operator==(const ChainLevel&, const ChainLevel&) = default;
};

struct ReductionChain {
    std::vector<ChainLevel> levels;
};

/// m -> gcd(ord(2,m), m) -> ... until the gcd is 1. Throws ConsistencyError
/// if a level fails to shrink.
ReductionChain reduction_chain(std::uint64_t m);

struct CoverResult {
    std::uint64_t m = 0;
    std::uint64_t c = 0;
    std::uint64_t covered = 0;         // D(m)
    std::uint64_t period = 0;          // lcm(ord(2,m), m)
    std::uint64_t scanned = 0;         // terms enumerated before all residues appeared
    std::vector<bool> visited;

    bool complete() const noexcept { return covered == m; }
    std::vector<std::uint64_t> missing() const;
};

/// Enumerates v(n) = 2^n + c*n mod m for n in [0, period), stopping early
/// once every residue has appeared. Never throws on D < m; callers check
/// complete().
CoverResult cover_count(const ResidueParams& params);

/// Minimal n in [0, period) with v(n) = t, or nullopt.
std::optional<std::uint64_t> brute_solve(const ResidueParams& params, std::uint64_t t);

struct EgcdResult {
    std::uint64_t g;
    std::uint64_t inverse;  // inverse of a/g modulo m/g (0 when m/g = 1)
};

EgcdResult egcd_modinv(std::uint64_t a, std::uint64_t m);

enum class LevelMethod { lift, base, scan };

/// One level of the constructive solution.
///
/// lift: r = witness of the level below, n = r + k*order.
/// base: gcd(order, m) = 1, so r = 0 and n = k*order.
/// scan: n is the minimal witness found by direct enumeration (r = n, k = 0).
struct SolveLevel {
    std::uint64_t m;
    std::uint64_t order;
    std::uint64_t delta;
    std::uint64_t target;
    std::uint64_t sub_witness;  // r
    std::uint64_t lift;         // k
    std::uint64_t witness;      // n at this level
    LevelMethod method;
};

struct SolveTrace {
    std::vector<SolveLevel> levels;  // levels[0] is the original modulus
    std::uint64_t witness = 0;

    /// Rebuilds the witness from the deepest level upwards.
    std::uint64_t replay() const;
};

struct SolveOptions {
    /// Sub-problems (never the top level) whose modulus is at most this
    /// value use the minimal witness from a direct scan instead of recursing.
    /// 0 disables scanning entirely.
    std::uint64_t scan_cutoff = 4096;
};

struct SolveResult {
    std::uint64_t n;
    SolveTrace trace;
};

/// Constructive witness for 2^n + c*n = t (mod m). Not minimal in general.
/// The witness is checked by substitution; a failure throws ConsistencyError.
SolveResult solve_residue(const ResidueParams& params, std::uint64_t t, const SolveOptions& options = {});

std::string to_string(LevelMethod method);

}  // namespace seqlab::residue
