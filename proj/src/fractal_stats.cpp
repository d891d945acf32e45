#include "seqlab/fractal_stats.hpp"

#include "seqlab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace seqlab {

// ---------------------------------------------------------------------------
// DepthRange

DepthRange DepthRange::parse(std::string_view text) {
    const auto dots = text.find("..");
    const auto num = [](std::string_view s) {
        std::uint32_t v = 0;
        const auto* end = s.data() + s.size();
        auto [ptr, ec] = std::from_chars(s.data(), end, v);
        if (s.empty() || ec != std::errc{} || ptr != end) throw UsageError("bad depth '" + std::string(s) + "'");
        return v;
    };
    DepthRange r;
    if (dots == std::string_view::npos) {
        r.lo = r.hi = num(text);
    } else {
        r.lo = num(text.substr(0, dots));
        r.hi = num(text.substr(dots + 2));
    }
    if (r.lo == 0 || r.lo > r.hi || r.hi > 64) throw UsageError("depth range must satisfy 1 <= A <= B <= 64");
    return r;
}

std::string DepthRange::to_string() const { return std::to_string(lo) + ".." + std::to_string(hi); }

std::vector<std::uint32_t> DepthRange::depths() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t k = lo; k <= hi; ++k) out.push_back(k);
    return out;
}

const BoxCountEntry& BoxCountProfile::at_depth(std::uint32_t k) const {
    for (const auto& e : entries) {
        if (e.depth == k) return e;
    }
    throw UsageError("profile has no depth " + std::to_string(k));
}

// ---------------------------------------------------------------------------
// BoxCounter

BoxCounter::BoxCounter(std::vector<std::uint32_t> depths) {
    std::sort(depths.begin(), depths.end());
    depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
    for (auto k : depths) {
        if (k == 0 || k > 64) throw UsageError("box-count depth must be in [1, 64]");
        Level level{k, {}, {}, 0};
        if (k <= kDenseDepth) level.dense.assign(std::size_t{1} << k, 0);
        levels_.push_back(std::move(level));
    }
}

void BoxCounter::add(const CirclePoint& x) {
    for (auto& level : levels_) {
        const std::uint64_t cell = top_bits(x, level.depth);
        std::uint64_t& slot = level.depth <= kDenseDepth ? level.dense[cell] : level.sparse[cell];
        if (slot++ == 0) ++level.occupied;
    }
    ++points_;
}

void BoxCounter::merge(const BoxCounter& other) {
    if (other.levels_.size() != levels_.size()) throw UsageError("merging counters with different depths");
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        Level& a = levels_[i];
        const Level& b = other.levels_[i];
        if (a.depth != b.depth) throw UsageError("merging counters with different depths");
        for (std::size_t c = 0; c < b.dense.size(); ++c) {
            if (b.dense[c] == 0) continue;
            if (a.dense[c] == 0) ++a.occupied;
            a.dense[c] += b.dense[c];
        }
        for (const auto& [cell, count] : b.sparse) {
            auto& slot = a.sparse[cell];
            if (slot == 0) ++a.occupied;
            slot += count;
        }
    }
    points_ += other.points_;
}

BoxCountProfile BoxCounter::profile() const {
    BoxCountProfile out;
    for (const auto& level : levels_) out.entries.push_back({level.depth, level.occupied, points_});
    return out;
}

std::vector<std::uint64_t> BoxCounter::cell_counts(std::uint32_t depth) const {
    for (const auto& level : levels_) {
        if (level.depth != depth) continue;
        std::vector<std::uint64_t> out;
        out.reserve(level.occupied);
        for (auto c : level.dense) {
            if (c != 0) out.push_back(c);
        }
        for (const auto& [cell, c] : level.sparse) out.push_back(c);
        std::sort(out.begin(), out.end());
        return out;
    }
    throw UsageError("counter has no depth " + std::to_string(depth));
}

BoxCountProfile box_counts(std::span<const CirclePoint> points, const std::vector<std::uint32_t>& depths) {
    BoxCounter counter(depths);
    for (const auto& p : points) counter.add(p);
    return counter.profile();
}

BoxCountProfile box_counts(const OrbitSpec& spec, const std::vector<std::uint32_t>& depths) {
    BoxCounter counter(depths);
    OrbitGenerator gen(spec);
    while (auto p = gen.next()) counter.add(p->x);
    auto out = counter.profile();
    out.metadata = {spec.to_string(), spec.start_index(), spec.seed, gen.bits()};
    return out;
}

// ---------------------------------------------------------------------------
// Dimension

DimensionEstimate estimate_dimension(const BoxCountProfile& profile, DepthRange window) {
    std::vector<double> xs;
    std::vector<double> ys;
    bool saturated = false;
    for (std::uint32_t k = window.lo; k <= window.hi; ++k) {
        const auto& e = profile.at_depth(k);
        if (e.occupied == 0) throw UsageError("degenerate window: empty profile");
        xs.push_back(k);
        ys.push_back(std::log2(static_cast<double>(e.occupied)));
        if (10 * e.occupied >= e.points) saturated = true;
    }
    if (xs.size() < 2) throw UsageError("degenerate window: need at least two depths");

    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    DimensionEstimate out;
    out.raw_slope = sxy / sxx;
    out.slope = std::clamp(out.raw_slope, 0.0, 1.0);
    out.intercept = my - out.raw_slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (out.intercept + out.raw_slope * xs[i]);
        ss += r * r;
    }
    out.residual = std::sqrt(ss / n);
    out.window = window;
    out.saturated = saturated;
    return out;
}

DepthRange guarded_window(const BoxCountProfile& profile, DepthRange window) {
    std::uint32_t hi = window.lo;
    for (std::uint32_t k = window.lo; k <= window.hi; ++k) {
        const auto& e = profile.at_depth(k);
        if (10 * e.occupied >= e.points) break;
        hi = k;
    }
    if (hi <= window.lo) return window;
    return {window.lo, hi};
}

// ---------------------------------------------------------------------------
// Discrepancy and entropy

double star_discrepancy(std::span<const std::uint64_t> fractions) {
    if (fractions.empty()) throw UsageError("star discrepancy of an empty point set");
    if (fractions.size() >= (std::size_t{1} << 60)) throw UsageError("too many points");
    std::vector<std::uint64_t> sorted(fractions.begin(), fractions.end());
    std::sort(sorted.begin(), sorted.end());

    // Both candidates over the common denominator N * 2^64.
    const auto n = static_cast<__int128>(sorted.size());
    const __int128 one = static_cast<__int128>(1) << 64;
    __int128 best = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const __int128 x = static_cast<__int128>(sorted[i]) * n;
        const __int128 above = static_cast<__int128>(i + 1) * one - x;  // i/N - x_(i)
        const __int128 below = x - static_cast<__int128>(i) * one;      // x_(i) - (i-1)/N
        best = std::max({best, above, below});
    }
    const long double scaled = static_cast<long double>(best) / static_cast<long double>(n);
    return static_cast<double>(std::ldexp(scaled, -64));
}

double star_discrepancy(std::span<const double> values) {
    std::vector<std::uint64_t> fractions;
    fractions.reserve(values.size());
    for (double v : values) {
        if (!(v >= 0.0 && v < 1.0)) throw UsageError("star discrepancy input must lie in [0, 1)");
        // Exact for doubles: v * 2^64 < 2^64 and has at most 53 significant bits.
        fractions.push_back(static_cast<std::uint64_t>(std::ldexp(v, 64)));
    }
    return star_discrepancy(std::span<const std::uint64_t>(fractions));
}

double entropy_from_counts(std::span<const std::uint64_t> counts) {
    std::vector<std::uint64_t> sorted;
    for (auto c : counts) {
        if (c != 0) sorted.push_back(c);
    }
    if (sorted.empty()) return 0.0;
    // Summing in sorted order makes equal count multisets give identical bits.
    std::sort(sorted.begin(), sorted.end());
    std::uint64_t total = 0;
    double weighted = 0.0;
    for (auto c : sorted) {
        total += c;
        weighted += static_cast<double>(c) * std::log2(static_cast<double>(c));
    }
    const double n = static_cast<double>(total);
    const double h = std::log2(n) - weighted / n;
    return std::clamp(h, 0.0, std::log2(static_cast<double>(sorted.size())));
}

double empirical_entropy(std::span<const CirclePoint> points, std::uint32_t depth) {
    BoxCounter counter({depth});
    for (const auto& p : points) counter.add(p);
    const auto counts = counter.cell_counts(depth);
    return entropy_from_counts(counts);
}

EntropyProfile entropy_profile(const BoxCounter& counter, const std::vector<std::uint32_t>& depths) {
    EntropyProfile out;
    for (auto k : depths) {
        const auto counts = counter.cell_counts(k);
        out.entries.push_back({k, entropy_from_counts(counts)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Independence

IndependenceReport independence_report(OrbitSpec x, OrbitSpec y, std::uint64_t length, DepthRange depths,
                                       DepthRange window) {
    x.length = length;
    y.length = length;
    // The pointwise sum costs one more bit than either operand.
    const std::uint32_t need = std::max(required_bits(x, depths.hi + 1), required_bits(y, depths.hi + 1));
    const std::uint32_t bits = std::max({need, x.bits, y.bits});
    x.bits = bits;
    y.bits = bits;

    const auto ks = depths.depths();
    BoxCounter cx(ks);
    BoxCounter cy(ks);
    BoxCounter cs(ks);
    OrbitGenerator gx(x);
    OrbitGenerator gy(y);
    while (true) {
        auto px = gx.next();
        auto py = gy.next();
        if (!px || !py) break;
        cx.add(px->x);
        cy.add(py->x);
        cs.add(add_mod1(px->x, py->x));
    }

    IndependenceReport r;
    r.x_profile = cx.profile();
    r.y_profile = cy.profile();
    r.sum_profile = cs.profile();
    r.x_profile.metadata = {x.to_string(), x.start_index(), x.seed, bits};
    r.y_profile.metadata = {y.to_string(), y.start_index(), y.seed, bits};
    r.sum_profile.metadata = {"sum(" + x.to_string() + "," + y.to_string() + ")", x.start_index(), x.seed, bits};
    r.x_dim = estimate_dimension(r.x_profile, window);
    r.y_dim = estimate_dimension(r.y_profile, window);
    r.sum_dim = estimate_dimension(r.sum_profile, window);
    r.target = std::min(1.0, r.x_dim.slope + r.y_dim.slope);
    r.margin = r.sum_dim.slope - r.target;
    return r;
}

}  // namespace seqlab
