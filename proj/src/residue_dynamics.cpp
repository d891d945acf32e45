#include "seqlab/residue_dynamics.hpp"

#include "seqlab/errors.hpp"

#include <numeric>

namespace seqlab::residue {

namespace {

constexpr std::uint64_t kIterativeOrderLimit = std::uint64_t{1} << 20;

void require_odd_modulus(std::uint64_t m) {
    if (m < 3 || m % 2 == 0 || m >= kMaxModulus) {
        throw UsageError("modulus must be odd with 3 <= m < 2^32, got " + std::to_string(m));
    }
}

// (prime, exponent) pairs by trial division; n < 2^32.
std::vector<std::pair<std::uint64_t, unsigned>> factorize(std::uint64_t n) {
    std::vector<std::pair<std::uint64_t, unsigned>> out;
    for (std::uint64_t p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
        if (n % p != 0) continue;
        unsigned e = 0;
        while (n % p == 0) {
            n /= p;
            ++e;
        }
        out.emplace_back(p, e);
    }
    if (n > 1) out.emplace_back(n, 1);
    return out;
}

}  // namespace

ResidueParams ResidueParams::make(std::uint64_t m, std::int64_t c) {
    require_odd_modulus(m);
    const auto sm = static_cast<std::int64_t>(m);
    std::int64_t red = c % sm;
    if (red < 0) red += sm;
    const auto cr = static_cast<std::uint64_t>(red);
    if (gcd(cr, m) != 1) {
        throw UsageError("c = " + std::to_string(c) + " is not coprime to m = " + std::to_string(m));
    }
    return ResidueParams{m, cr};
}

std::uint64_t gcd(std::uint64_t a, std::uint64_t b) noexcept { return std::gcd(a, b); }

std::uint64_t lcm(std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return 0;
    const std::uint64_t q = a / gcd(a, b);
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(q, b, &out)) throw UsageError("lcm overflows 64 bits");
    return out;
}

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) noexcept {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) noexcept {
    if (m == 1) return 0;
    std::uint64_t result = 1;
    base %= m;
    while (exp != 0) {
        if (exp & 1u) result = mul_mod(result, base, m);
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    return result;
}

std::uint64_t residue_value(std::uint64_t n, std::uint64_t c, std::uint64_t m) noexcept {
    return (pow_mod(2, n, m) + mul_mod(c % m, n % m, m)) % m;
}

std::uint64_t mult_order_iterative(std::uint64_t m) {
    require_odd_modulus(m);
    std::uint64_t x = 2 % m;
    std::uint64_t l = 1;
    while (x != 1) {
        x <<= 1;
        if (x >= m) x -= m;
        if (++l > m) throw ConsistencyError("ord(2, m) search exceeded m");
    }
    return l;
}

std::uint64_t carmichael(std::uint64_t m) {
    std::uint64_t lam = 1;
    for (auto [p, e] : factorize(m)) {
        std::uint64_t pe = p - 1;
        for (unsigned i = 1; i < e; ++i) pe *= p;
        lam = std::lcm(lam, pe);
    }
    return lam;
}

std::uint64_t mult_order_factored(std::uint64_t m) {
    require_odd_modulus(m);
    std::uint64_t order = carmichael(m);
    for (auto [q, e] : factorize(order)) {
        for (unsigned i = 0; i < e && order % q == 0 && pow_mod(2, order / q, m) == 1; ++i) order /= q;
    }
    if (pow_mod(2, order, m) != 1) throw ConsistencyError("2^λ(m) != 1 mod m");
    return order;
}

std::uint64_t mult_order(std::uint64_t m) {
    return m < kIterativeOrderLimit ? mult_order_iterative(m) : mult_order_factored(m);
}

ReductionChain reduction_chain(std::uint64_t m) {
    require_odd_modulus(m);
    ReductionChain chain;
    std::uint64_t cur = m;
    while (true) {
        const std::uint64_t l = mult_order(cur);
        const std::uint64_t d = gcd(l, cur);
        chain.levels.push_back({cur, l, d});
        if (d == 1) break;
        if (d >= cur || d % 2 == 0 || l >= cur) {
            throw ConsistencyError("reduction chain failed to shrink at m = " + std::to_string(cur));
        }
        cur = d;
    }
    return chain;
}

std::vector<std::uint64_t> CoverResult::missing() const {
    std::vector<std::uint64_t> out;
    for (std::uint64_t r = 0; r < visited.size(); ++r) {
        if (!visited[r]) out.push_back(r);
    }
    return out;
}

CoverResult cover_count(const ResidueParams& params) {
    const std::uint64_t m = params.m;
    const std::uint64_t c = params.c % m;
    CoverResult out;
    out.m = m;
    out.c = c;
    out.period = lcm(mult_order(m), m);
    out.visited.assign(m, false);

    std::uint64_t pw = 1 % m;  // 2^n mod m
    std::uint64_t cn = 0;      // c*n mod m
    for (std::uint64_t n = 0; n < out.period; ++n) {
        std::uint64_t v = pw + cn;
        if (v >= m) v -= m;
        if (!out.visited[v]) {
            out.visited[v] = true;
            ++out.covered;
        }
        out.scanned = n + 1;
        if (out.covered == m) break;
        pw <<= 1;
        if (pw >= m) pw -= m;
        cn += c;
        if (cn >= m) cn -= m;
    }
    return out;
}

std::optional<std::uint64_t> brute_solve(const ResidueParams& params, std::uint64_t t) {
    const std::uint64_t m = params.m;
    if (t >= m) throw UsageError("target must lie in [0, m)");
    const std::uint64_t c = params.c % m;
    const std::uint64_t period = lcm(mult_order(m), m);
    std::uint64_t pw = 1 % m;
    std::uint64_t cn = 0;
    for (std::uint64_t n = 0; n < period; ++n) {
        std::uint64_t v = pw + cn;
        if (v >= m) v -= m;
        if (v == t) return n;
        pw <<= 1;
        if (pw >= m) pw -= m;
        cn += c;
        if (cn >= m) cn -= m;
    }
    return std::nullopt;
}

EgcdResult egcd_modinv(std::uint64_t a, std::uint64_t m) {
    if (m == 0) throw UsageError("egcd_modinv: modulus must be positive");
    const std::uint64_t g = gcd(a % m, m);
    const std::uint64_t mg = m / g;
    if (mg == 1) return {g, 0};
    const std::uint64_t ag = (a % m) / g;

    // Invariant: old_r = old_s * ag (mod mg).
    __int128 old_r = ag, r = mg;
    __int128 old_s = 1, s = 0;
    while (r != 0) {
        const __int128 q = old_r / r;
        const __int128 tr = old_r - q * r;
        old_r = r;
        r = tr;
        const __int128 ts = old_s - q * s;
        old_s = s;
        s = ts;
    }
    __int128 inv = old_s % static_cast<__int128>(mg);
    if (inv < 0) inv += mg;
    const auto out = static_cast<std::uint64_t>(inv);
    if (mul_mod(ag, out, mg) != 1 % mg) throw ConsistencyError("modular inverse failed verification");
    return {g, out};
}

namespace {

std::uint64_t solve_level(std::uint64_t m, std::uint64_t c, std::uint64_t t, bool top, const SolveOptions& options,
                          SolveTrace& trace) {
    const std::size_t idx = trace.levels.size();
    const std::uint64_t l = mult_order(m);
    const std::uint64_t d = gcd(l, m);
    trace.levels.push_back({m, l, d, t, 0, 0, 0, LevelMethod::base});

    if (!top && m <= options.scan_cutoff) {
        const auto n = brute_solve(ResidueParams{m, c}, t);
        if (!n) throw ConsistencyError("no witness within one period for m = " + std::to_string(m));
        trace.levels[idx].sub_witness = *n;
        trace.levels[idx].witness = *n;
        trace.levels[idx].method = LevelMethod::scan;
        return *n;
    }

    std::uint64_t r = 0;
    if (d != 1) {
        // 2^r + c r = t (mod d) lifts to the coset t + dZ/m.
        r = solve_level(d, c % d, t % d, false, options, trace);
        trace.levels[idx].method = LevelMethod::lift;
    }
    const std::uint64_t v = residue_value(r, c, m);
    const std::uint64_t a = mul_mod(c, l % m, m);
    const std::uint64_t b = (t + m - v) % m;
    const auto [g, inv] = egcd_modinv(a, m);
    if (g != d || b % g != 0) {
        throw ConsistencyError("lift congruence unsolvable at m = " + std::to_string(m));
    }
    const std::uint64_t mg = m / g;
    const std::uint64_t k = mg == 1 ? 0 : mul_mod((b / g) % mg, inv, mg);
    std::uint64_t kl = 0;
    std::uint64_t n = 0;
    if (__builtin_mul_overflow(k, l, &kl) || __builtin_add_overflow(r, kl, &n)) {
        throw ConsistencyError("witness overflows 64 bits");
    }
    auto& level = trace.levels[idx];
    level.sub_witness = r;
    level.lift = k;
    level.witness = n;
    if (residue_value(n, c, m) != t) {
        throw ConsistencyError("witness " + std::to_string(n) + " fails substitution mod " + std::to_string(m));
    }
    return n;
}

}  // namespace

SolveResult solve_residue(const ResidueParams& params, std::uint64_t t, const SolveOptions& options) {
    if (t >= params.m) throw UsageError("target must lie in [0, m)");
    SolveTrace trace;
    const std::uint64_t n = solve_level(params.m, params.c % params.m, t, true, options, trace);
    trace.witness = n;
    if (trace.replay() != n) throw ConsistencyError("solve trace does not replay to the witness");
    return {n, std::move(trace)};
}

std::uint64_t SolveTrace::replay() const {
    std::uint64_t cur = 0;
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
        switch (it->method) {
            case LevelMethod::scan:
                cur = it->witness;
                break;
            case LevelMethod::base:
                cur = it->lift * it->order;
                break;
            case LevelMethod::lift:
                cur = cur + it->lift * it->order;
                break;
        }
    }
    return cur;
}

std::string to_string(LevelMethod method) {
    switch (method) {
        case LevelMethod::lift:
            return "lift";
        case LevelMethod::base:
            return "base";
        case LevelMethod::scan:
            return "scan";
    }
    return "?";
}

}  // namespace seqlab::residue
