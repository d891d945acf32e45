#pragma once

#include "seqlab/circle_arith.hpp"
#include "seqlab/orbit_gen.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace seqlab {

/// Closed range of dyadic depths, `lo..hi` in text form.
struct DepthRange {
    std::uint32_t lo = 4;
    std::uint32_t hi = 12;

    static DepthRange parse(std::string_view text);
    std::string to_string() const;
    std::vector<std::uint32_t> depths() const;
    friend bool operator==(const DepthRange&, const DepthRange&) = default;
};

struct BoxCountEntry {
    std::uint32_t depth;
    std::uint64_t occupied;  // N_k
    std::uint64_t points;    // points consumed
    friend bool operator==(const BoxCountEntry&, const BoxCountEntry&) = default;
};

struct ProfileMetadata {
    std::string spec;
    std::uint64_t start = 0;
    std::uint64_t seed = 0;
    std::uint32_t bits = 0;
};

struct BoxCountProfile {
    std::vector<BoxCountEntry> entries;  // ascending depth
    ProfileMetadata metadata;

    const BoxCountEntry& at_depth(std::uint32_t k) const;
};

/// Occupied dyadic cells per depth. Counting is exact and order independent;
/// two counters over disjoint chunks of the same stream merge by set union.
class BoxCounter {
public:
    explicit BoxCounter(std::vector<std::uint32_t> depths);

    void add(const CirclePoint& x);
    void merge(const BoxCounter& other);

    BoxCountProfile profile() const;
    std::uint64_t points() const noexcept { return points_; }

    /// Non-zero visit counts at one depth, ascending.
    std::vector<std::uint64_t> cell_counts(std::uint32_t depth) const;

    static constexpr std::uint32_t kDenseDepth = 20;

private:
    struct Level {
        std::uint32_t depth;
        std::vector<std::uint64_t> dense;                        // 2^depth entries
        std::unordered_map<std::uint64_t, std::uint64_t> sparse;  // depth > kDenseDepth
        std::uint64_t occupied = 0;
    };
    std::vector<Level> levels_;
    std::uint64_t points_ = 0;
};

BoxCountProfile box_counts(std::span<const CirclePoint> points, const std::vector<std::uint32_t>& depths);

/// Generates `spec` and counts on the fly without keeping the points.
BoxCountProfile box_counts(const OrbitSpec& spec, const std::vector<std::uint32_t>& depths);

struct DimensionEstimate {
    double slope = 0.0;      // clamped to [0, 1]
    double raw_slope = 0.0;  // least-squares value before clamping
    double intercept = 0.0;
    DepthRange window;
    double residual = 0.0;   // RMS of log2 N_k about the fitted line
    bool saturated = false;  // some N_k in the window reached N/10
};

/// Least-squares slope of log2 N_k against k over `window`.
DimensionEstimate estimate_dimension(const BoxCountProfile& profile, DepthRange window);

/// Largest sub-window [window.lo, hi'] with N_k < N/10 everywhere; falls back
/// to the input window when fewer than two depths survive.
DepthRange guarded_window(const BoxCountProfile& profile, DepthRange window);

/// Exact 1-D star discrepancy of points given as fractions u / 2^64.
double star_discrepancy(std::span<const std::uint64_t> fractions);

/// Same, for doubles in [0, 1). Each value is first truncated to 64 bits.
double star_discrepancy(std::span<const double> values);

/// Shannon entropy (bits) of the empirical distribution over depth-k cells.
double empirical_entropy(std::span<const CirclePoint> points, std::uint32_t depth);

/// Entropy from raw cell counts; zero counts are ignored.
double entropy_from_counts(std::span<const std::uint64_t> counts);

struct EntropyEntry {
    std::uint32_t depth;
    double bits;
};

struct EntropyProfile {
    std::vector<EntropyEntry> entries;
};

EntropyProfile entropy_profile(const BoxCounter& counter, const std::vector<std::uint32_t>& depths);

struct IndependenceReport {
    BoxCountProfile x_profile;
    BoxCountProfile y_profile;
    BoxCountProfile sum_profile;
    DimensionEstimate x_dim;
    DimensionEstimate y_dim;
    DimensionEstimate sum_dim;
    double target = 0.0;  // min(1, dim X + dim Y)
    double margin = 0.0;  // dim H(x,y) - target

    bool independent(double epsilon) const { return margin >= -epsilon; }
};

/// Pointwise sums x_n + y_n (index pairing, not the Minkowski sum). Both
/// specs are generated with the same budget: the larger of their requirements.
IndependenceReport independence_report(OrbitSpec x, OrbitSpec y, std::uint64_t length, DepthRange depths,
                                       DepthRange window);

}  // namespace seqlab
