#include "seqlab/orbit_gen.hpp"

#include "seqlab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <bit>
#include <limits>
#include <numeric>

namespace seqlab {

namespace {

constexpr std::size_t kMaxDegree = 16;
constexpr std::uint32_t kGuardBits = 64;
constexpr std::uint32_t kMaxGreedyDepth = 24;

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
    const std::uint64_t s = a + b;
    return s < a ? std::numeric_limits<std::uint64_t>::max() : s;
}

// Bits lost by a truncated value whose ideal lies within `err` ulps above it.
std::uint32_t loss_of(std::uint64_t err) {
    if (err == std::numeric_limits<std::uint64_t>::max()) return 64;
    return ceil_log2(err);
}

std::uint32_t combine_loss(std::uint32_t a, std::uint32_t b) {
    if (a == 0) return b;
    if (b == 0) return a;
    return std::max(a, b) + 1;
}

std::uint32_t valid_after(std::uint32_t bits, std::uint32_t loss) { return loss >= bits ? 0 : bits - loss; }

// surjections[t][i] = i! * S(t, i), the coefficient of Δ^i applied to n^t at 0.
std::vector<std::vector<std::uint64_t>> surjection_table(std::size_t degree) {
    std::vector<std::vector<unsigned __int128>> s(degree + 1, std::vector<unsigned __int128>(degree + 1, 0));
    s[0][0] = 1;
    for (std::size_t t = 1; t <= degree; ++t) {
        for (std::size_t i = 1; i <= t; ++i) s[t][i] = i * (s[t - 1][i - 1] + s[t - 1][i]);
    }
    std::vector<std::vector<std::uint64_t>> out(degree + 1, std::vector<std::uint64_t>(degree + 1, 0));
    for (std::size_t t = 0; t <= degree; ++t) {
        for (std::size_t i = 0; i <= degree; ++i) {
            if (s[t][i] > std::numeric_limits<std::uint64_t>::max()) {
                throw UsageError("polynomial degree too large");
            }
            out[t][i] = static_cast<std::uint64_t>(s[t][i]);
        }
    }
    return out;
}

bool is_rational(const ConstantSpec& c) { return std::holds_alternative<Rational>(c.value); }

// p/q reduced into [0, q).
std::pair<std::uint64_t, std::uint64_t> rational_parts(const ConstantSpec& c) {
    const auto& r = std::get<Rational>(c.value);
    std::int64_t num = r.p % r.q;
    if (num < 0) num += r.q;
    return {static_cast<std::uint64_t>(num), static_cast<std::uint64_t>(r.q)};
}

constexpr std::uint64_t kMaxDenominator = std::uint64_t{1} << 62;

std::uint64_t lcm_checked(std::uint64_t a, std::uint64_t b) {
    const unsigned __int128 l = static_cast<unsigned __int128>(a / std::gcd(a, b)) * b;
    if (l >= kMaxDenominator) throw UsageError("common denominator of the rational constants exceeds 2^62");
    return static_cast<std::uint64_t>(l);
}

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t addmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    const std::uint64_t s = a + b;  // a, b < m < 2^62
    return s >= m ? s - m : s;
}

// Numerator of the rational constant over the common denominator `den`.
std::uint64_t scaled_numerator(const ConstantSpec& c, std::uint64_t den) {
    const auto [num, q] = rational_parts(c);
    return mulmod(num, den / q, den);
}

std::uint64_t denominator_of(const std::vector<const ConstantSpec*>& cs) {
    std::uint64_t den = 1;
    for (const auto* c : cs) {
        if (is_rational(*c)) den = lcm_checked(den, rational_parts(*c).second);
    }
    return den;
}

std::uint64_t poly_denominator(const PolySpec& poly) {
    std::vector<const ConstantSpec*> cs;
    for (const auto& c : poly.coeffs) cs.push_back(&c);
    return denominator_of(cs);
}

bool dyadic_denominator(std::uint64_t den) { return std::has_single_bit(den); }

// A truncated irrational part with bound `irr_err` plus an exactly floored
// rational part: the floor adds one more ulp unless it is exact.
std::uint64_t point_error(std::uint64_t irr_err, bool rational_dyadic) {
    if (irr_err == 0) return 0;
    return rational_dyadic ? irr_err : sat_add(irr_err, 1);
}

// Error bounds of the truncated parts of the initial difference registers.
std::vector<std::uint64_t> initial_errors(const PolySpec& poly) {
    const std::size_t g = poly.degree();
    const auto surj = surjection_table(g);
    std::vector<std::uint64_t> err(g + 1, 0);
    for (std::size_t i = 0; i <= g; ++i) {
        for (std::size_t t = i; t <= g; ++t) {
            if (!is_rational(poly.coeffs[t])) err[i] = sat_add(err[i], surj[t][i]);
        }
    }
    return err;
}

// Bits lost by D_0 after n steps: ceil(log2(sum_j C(n, j) E_j)), plus the
// floor of the rational part when both parts are present.
std::uint32_t poly_loss(const PolySpec& poly, std::uint64_t den, std::uint64_t n) {
    const auto e = initial_errors(poly);
    unsigned __int128 total = 0;
    unsigned __int128 binom = 1;
    bool overflow = false;
    constexpr unsigned __int128 cap = static_cast<unsigned __int128>(1) << 100;
    for (std::size_t j = 0; j < e.size() && !overflow; ++j) {
        if (j > 0) {
            if (n < j) break;
            if (binom > cap / (n - j + 1)) {
                overflow = true;
                break;
            }
            binom = binom * (n - j + 1) / j;  // exact: C(n,j-1)*(n-j+1) divisible by j
        }
        if (e[j] != 0 && binom > cap / e[j]) {
            overflow = true;
            break;
        }
        total += binom * e[j];
        if (total > cap) overflow = true;
    }
    if (!overflow) {
        if (total == 0) return 0;
        if (!dyadic_denominator(den)) total += 1;
        std::uint32_t bw = 0;
        for (unsigned __int128 v = total - 1; v != 0; v >>= 1) ++bw;
        return bw;
    }
    // Log domain, one bit of slack for rounding and the rational floor.
    std::vector<long double> terms;
    for (std::size_t j = 0; j < e.size() && j <= n; ++j) {
        if (e[j] == 0) continue;
        const long double ln_binom = std::lgammal(static_cast<long double>(n) + 1) -
                                     std::lgammal(static_cast<long double>(j) + 1) -
                                     std::lgammal(static_cast<long double>(n - j) + 1);
        terms.push_back(ln_binom / std::log(2.0L) + std::log2l(static_cast<long double>(e[j])));
    }
    const long double top = *std::max_element(terms.begin(), terms.end());
    long double acc = 0.0L;
    for (auto t : terms) acc += std::exp2l(t - top);
    return static_cast<std::uint32_t>(std::ceil(top + std::log2l(acc))) + 1;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    while (true) {
        const auto pos = s.find(sep);
        out.push_back(trim(s.substr(0, pos)));
        if (pos == std::string_view::npos) break;
        s.remove_prefix(pos + 1);
    }
    return out;
}

PolySpec parse_poly(std::string_view text) {
    PolySpec poly;
    for (auto part : split(text, ',')) poly.coeffs.push_back(ConstantSpec::parse(part));
    if (poly.coeffs.empty()) throw UsageError("polynomial needs at least one coefficient");
    if (poly.degree() > kMaxDegree) throw UsageError("polynomial degree above " + std::to_string(kMaxDegree));
    return poly;
}

template <class Num>
Num parse_number(std::string_view s, std::string_view what) {
    Num v{};
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc{} || ptr != end) {
        throw UsageError("bad " + std::string(what) + ": '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// PolySpec / DifferenceTable

std::string PolySpec::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        if (i) out += ',';
        out += coeffs[i].to_string();
    }
    return out;
}

RationalScale::RationalScale(std::uint64_t den, std::uint32_t bits)
    : den_(den), bits_(bits), quotient_(bits), dyadic_(dyadic_denominator(den)) {
    if (den == 0) throw UsageError("zero denominator");
    if (den > 1) {
        quotient_ = materialize(ConstantSpec::rational(1, static_cast<std::int64_t>(den)), bits).mantissa();
        // 2^bits mod den by repeated doubling of a residue.
        std::uint64_t r = 1 % den;
        std::uint64_t base = 2 % den;
        for (std::uint32_t e = bits; e != 0; e >>= 1) {
            if (e & 1u) r = mulmod(r, base, den);
            base = mulmod(base, base, den);
        }
        remainder_ = r;
    }
}

Mantissa RationalScale::floor_of(std::uint64_t num) const {
    Mantissa out(bits_);
    if (den_ == 1 || num == 0) return out;
    out = quotient_;
    out.mul_small(num);
    const auto extra = static_cast<std::uint64_t>(static_cast<unsigned __int128>(num) * remainder_ / den_);
    out += Mantissa::from_u64(bits_, extra);
    return out;
}

DifferenceTable::DifferenceTable(const PolySpec& poly, std::uint32_t bits) : bits_(bits) {
    if (poly.coeffs.empty()) throw UsageError("polynomial needs at least one coefficient");
    if (poly.degree() > kMaxDegree) throw UsageError("polynomial degree above " + std::to_string(kMaxDegree));
    const std::size_t g = poly.degree();
    const auto surj = surjection_table(g);
    const std::uint64_t den = poly_denominator(poly);
    scale_ = RationalScale(den, bits);

    rational_.assign(g + 1, 0);
    irrational_.assign(g + 1, Mantissa(bits));
    for (std::size_t t = 0; t <= g; ++t) {
        const ConstantSpec& c = poly.coeffs[t];
        if (is_rational(c)) {
            const std::uint64_t num = scaled_numerator(c, den);
            for (std::size_t i = 0; i <= t; ++i) {
                rational_[i] = addmod(rational_[i], mulmod(surj[t][i] % den, num, den), den);
            }
        } else {
            const Mantissa m = materialize(c, bits).mantissa();
            for (std::size_t i = 0; i <= t; ++i) {
                Mantissa term = m;
                term.mul_small(surj[t][i]);
                irrational_[i] += term;
            }
        }
    }
    errors_ = initial_errors(poly);
}

CirclePoint DifferenceTable::value(std::size_t i) const {
    Mantissa m = scale_.floor_of(rational_.at(i));
    m += irrational_[i];
    return CirclePoint(std::move(m), valid_after(bits_, loss_of(point_error(errors_[i], scale_.dyadic()))));
}

CirclePoint DifferenceTable::current() const { return value(0); }

void DifferenceTable::advance() {
    // Ascending order reads each D_{i+1} before it is updated.
    const std::uint64_t den = scale_.denominator();
    for (std::size_t i = 0; i + 1 < irrational_.size(); ++i) {
        rational_[i] = addmod(rational_[i], rational_[i + 1], den);
        irrational_[i] += irrational_[i + 1];
        errors_[i] = sat_add(errors_[i], errors_[i + 1]);
    }
    ++step_;
}

CirclePoint DifferenceTable::next() {
    advance();
    return current();
}

DifferenceTable finite_differences(const PolySpec& poly, std::uint32_t bits) { return DifferenceTable(poly, bits); }

CirclePoint next_poly_point(DifferenceTable& table) { return table.next(); }

// ---------------------------------------------------------------------------
// Strategy

Strategy Strategy::parse(std::string_view text) {
    const std::string_view s = trim(text);
    const auto colon = s.find(':');
    const std::string_view head = s.substr(0, colon);
    const std::string_view rest = colon == std::string_view::npos ? std::string_view{} : s.substr(colon + 1);

    if (head == "periodic") {
        if (rest.empty()) throw UsageError("periodic strategy needs a non-empty word");
        for (char ch : rest) {
            if (ch != 'A' && ch != 'B') throw UsageError("periodic word must use only A and B");
        }
        return Strategy{Periodic{std::string(rest)}};
    }
    if (head == "random") {
        Random r;
        const auto parts = split(rest, ':');
        if (rest.empty()) throw UsageError("random strategy needs a probability");
        r.p_a = parse_number<double>(parts[0], "probability");
        if (!(r.p_a >= 0.0 && r.p_a <= 1.0)) throw UsageError("probability must lie in [0, 1]");
        if (parts.size() > 1) r.seed = parse_number<std::uint64_t>(parts[1], "seed");
        return Strategy{r};
    }
    if (head == "file") {
        const std::string path(rest);
        const auto digits = read_digit_file(path);
        return Strategy{File{std::make_shared<const std::vector<std::uint8_t>>(digits), path}};
    }
    if (head == "greedy") {
        Greedy g;
        if (!rest.empty()) g.depth = parse_number<std::uint32_t>(rest, "greedy depth");
        if (g.depth == 0 || g.depth > kMaxGreedyDepth) {
            throw UsageError("greedy depth must be in [1, " + std::to_string(kMaxGreedyDepth) + "]");
        }
        return Strategy{g};
    }
    throw UsageError("unknown strategy '" + std::string(s) + "'");
}

std::string Strategy::to_string() const {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Periodic>) {
                return "periodic:" + v.word;
            } else if constexpr (std::is_same_v<T, Random>) {
                char buf[64];
                auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v.p_a);
                std::string out = "random:" + std::string(buf, ptr);
                if (v.seed) out += ":" + std::to_string(*v.seed);
                return out;
            } else if constexpr (std::is_same_v<T, File>) {
                return "file:" + v.label;
            } else {
                return "greedy:" + std::to_string(v.depth);
            }
        },
        kind);
}

Choice greedy_choice(const CirclePoint& x, const CirclePoint& alpha, const CirclePoint& beta,
                     const std::vector<std::uint64_t>& cell_counts, std::uint32_t depth) {
    if (depth == 0 || depth > kMaxGreedyDepth || cell_counts.size() != (std::size_t{1} << depth)) {
        throw UsageError("greedy_choice: cell_counts must cover all 2^depth cells");
    }
    const auto land_a = top_bits(add_mod1(x, alpha), depth);
    const auto land_b = top_bits(add_mod1(x, beta), depth);
    return cell_counts[land_b] < cell_counts[land_a] ? Choice::B : Choice::A;
}

// ---------------------------------------------------------------------------
// OrbitSpec

OrbitSpec OrbitSpec::parse(std::string_view text) {
    const std::string_view s = trim(text);
    const auto colon = s.find(':');
    if (colon == std::string_view::npos) throw UsageError("orbit spec needs a 'kind:' prefix: '" + std::string(s) + "'");
    const std::string_view kind = s.substr(0, colon);
    const std::string_view body = s.substr(colon + 1);

    OrbitSpec spec;
    if (kind == "rotation") {
        spec.variant = Rotation{ConstantSpec::parse(body)};
    } else if (kind == "poly") {
        spec.variant = Polynomial{parse_poly(body)};
    } else if (kind == "doubling") {
        spec.variant = Doubling{ConstantSpec::parse(body)};
    } else if (kind == "combined" || kind == "alphabeta") {
        std::optional<std::string_view> poly, d, a, b, strategy;
        for (auto field : split(body, ';')) {
            const auto eq = field.find('=');
            if (eq == std::string_view::npos) throw UsageError("expected key=value in '" + std::string(field) + "'");
            const auto key = trim(field.substr(0, eq));
            const auto val = trim(field.substr(eq + 1));
            if (key == "poly") poly = val;
            else if (key == "d") d = val;
            else if (key == "a") a = val;
            else if (key == "b") b = val;
            else if (key == "strategy") strategy = val;
            else throw UsageError("unknown key '" + std::string(key) + "' in orbit spec");
        }
        if (kind == "combined") {
            if (!poly || !d) throw UsageError("combined orbit needs poly= and d=");
            spec.variant = Combined{parse_poly(*poly), ConstantSpec::parse(*d)};
        } else {
            if (!a || !b || !strategy) throw UsageError("alphabeta orbit needs a=, b= and strategy=");
            spec.variant = AlphaBeta{ConstantSpec::parse(*a), ConstantSpec::parse(*b), Strategy::parse(*strategy)};
        }
    } else {
        throw UsageError("unknown orbit kind '" + std::string(kind) + "'");
    }
    return spec;
}

std::string OrbitSpec::to_string() const {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Rotation>) {
                return "rotation:" + v.alpha.to_string();
            } else if constexpr (std::is_same_v<T, Polynomial>) {
                return "poly:" + v.poly.to_string();
            } else if constexpr (std::is_same_v<T, Doubling>) {
                return "doubling:" + v.d.to_string();
            } else if constexpr (std::is_same_v<T, Combined>) {
                return "combined:poly=" + v.poly.to_string() + ";d=" + v.d.to_string();
            } else {
                return "alphabeta:a=" + v.alpha.to_string() + ";b=" + v.beta.to_string() +
                       ";strategy=" + v.strategy.to_string();
            }
        },
        variant);
}

std::uint64_t OrbitSpec::default_start() const {
    return std::visit(
        [](const auto& v) -> std::uint64_t {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Rotation> || std::is_same_v<T, Doubling>) {
                return 0;
            } else {
                return 1;
            }
        },
        variant);
}

std::uint32_t precision_loss(const OrbitSpec& spec) {
    const std::uint32_t bits = spec.bits == 0 ? kGuardBits : spec.bits;
    const std::uint64_t first = spec.start_index();
    const std::uint64_t last = spec.length == 0 ? first : first + spec.length - 1;
    const auto doubling_loss = [&](const ConstantSpec& d) -> std::uint32_t {
        if (d.is_dyadic_at(bits)) return 0;
        if (last > std::numeric_limits<std::uint32_t>::max()) throw UsageError("orbit too long");
        return static_cast<std::uint32_t>(last);
    };
    return std::visit(
        [&](const auto& v) -> std::uint32_t {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Rotation>) {
                const PolySpec poly{{ConstantSpec::rational(0, 1), v.alpha}};
                return poly_loss(poly, poly_denominator(poly), last);
            } else if constexpr (std::is_same_v<T, Polynomial>) {
                return poly_loss(v.poly, poly_denominator(v.poly), last);
            } else if constexpr (std::is_same_v<T, Doubling>) {
                return doubling_loss(v.d);
            } else if constexpr (std::is_same_v<T, Combined>) {
                const std::uint64_t den = poly_denominator(v.poly);
                if (is_rational(v.d)) return poly_loss(v.poly, lcm_checked(den, rational_parts(v.d).second), last);
                return combine_loss(poly_loss(v.poly, den, last), doubling_loss(v.d));
            } else {
                if (is_rational(v.alpha) && is_rational(v.beta)) return 0;
                if (last <= 1) return 0;
                const std::uint64_t den = denominator_of({&v.alpha, &v.beta});
                return loss_of(point_error(last - 1, dyadic_denominator(den)));
            }
        },
        spec.variant);
}

std::uint32_t required_bits(const OrbitSpec& spec, std::uint32_t depth) {
    const std::uint64_t total = std::uint64_t{depth} + kGuardBits + precision_loss(spec);
    if (total > (std::uint64_t{1} << 31)) throw UsageError("required precision budget is unreasonably large");
    return static_cast<std::uint32_t>(total);
}

void check_budget(const OrbitSpec& spec, std::uint32_t depth) {
    const std::uint32_t need = required_bits(spec, depth);
    if (spec.bits < need) {
        throw PrecisionError("budget of " + std::to_string(spec.bits) + " bits is below the " + std::to_string(need) +
                             " bits required for " + std::to_string(spec.length) + " points at depth " +
                             std::to_string(depth));
    }
}

// ---------------------------------------------------------------------------
// Generators

namespace {

struct PolyState {
    DifferenceTable table;

    CirclePoint point() const { return table.current(); }
    void advance() { table.advance(); }
};

struct DoublingState {
    Mantissa x;
    bool exact;
    std::uint64_t shifts = 0;

    DoublingState(const ConstantSpec& d, std::uint32_t bits)
        : x(materialize(d, bits).mantissa()), exact(d.is_dyadic_at(bits)) {}

    std::uint32_t loss() const {
        if (exact) return 0;
        return shifts > x.width() ? x.width() : static_cast<std::uint32_t>(shifts);
    }
    CirclePoint point() const { return CirclePoint(x, valid_after(x.width(), loss())); }
    void advance() {
        x.shift_left(1);
        ++shifts;
    }
};

// Rational doubling folds 2^n d into the exact rational part of the
// polynomial; otherwise the two parts are added as mantissas.
struct CombinedState {
    DifferenceTable table;
    std::optional<DoublingState> dbl;
    RationalScale scale;
    std::uint64_t poly_factor = 1;  // scale.denominator() / table.denominator()
    std::uint64_t d_num = 0;        // 2^n p mod q
    std::uint64_t d_den = 1;

    CombinedState(const Combined& c, std::uint32_t bits) : table(c.poly, bits) {
        if (is_rational(c.d)) {
            std::tie(d_num, d_den) = rational_parts(c.d);
            const std::uint64_t den = lcm_checked(table.denominator(), d_den);
            scale = RationalScale(den, bits);
            poly_factor = den / table.denominator();
        } else {
            dbl.emplace(c.d, bits);
        }
    }

    CirclePoint point() const {
        if (dbl) {
            const CirclePoint p = table.current();
            const std::uint32_t poly_loss = p.bits() - p.valid_bits();
            return CirclePoint(p.mantissa() + dbl->x, valid_after(p.bits(), combine_loss(poly_loss, dbl->loss())));
        }
        const std::uint64_t den = scale.denominator();
        const std::uint64_t num = addmod(mulmod(table.numerators()[0], poly_factor, den),
                                         mulmod(d_num, den / d_den, den), den);
        Mantissa m = scale.floor_of(num);
        m += table.irrational_parts()[0];
        const std::uint64_t err = point_error(table.error_bounds()[0], scale.dyadic());
        const std::uint32_t bits = m.width();
        return CirclePoint(std::move(m), valid_after(bits, loss_of(err)));
    }
    void advance() {
        table.advance();
        if (dbl) {
            dbl->advance();
        } else {
            d_num = mulmod(d_num, 2, d_den);
        }
    }
};

// Running sums of α and β: rational steps exactly, irrational ones truncated.
struct AlphaBetaState {
    struct Step {
        bool rational;
        std::uint64_t num;  // over scale.denominator()
        Mantissa mant;
        CirclePoint point;  // for the greedy look-ahead
    };
    Step a;
    Step b;
    RationalScale scale;
    Strategy strategy;
    std::uint64_t num = 0;
    Mantissa irr;
    std::uint64_t err = 0;
    std::uint64_t index = 1;  // index of the current point
    std::mt19937_64 rng;
    std::vector<std::uint64_t> counts;

    static Step make_step(const ConstantSpec& c, std::uint64_t den, std::uint32_t bits) {
        CirclePoint p = materialize(c, bits);
        if (is_rational(c)) return {true, scaled_numerator(c, den), Mantissa(bits), std::move(p)};
        return {false, 0, p.mantissa(), std::move(p)};
    }

    AlphaBetaState(const AlphaBeta& ab, std::uint32_t bits, std::uint64_t seed)
        : strategy(ab.strategy), irr(bits) {
        const std::uint64_t den = denominator_of({&ab.alpha, &ab.beta});
        scale = RationalScale(den, bits);
        a = make_step(ab.alpha, den, bits);
        b = make_step(ab.beta, den, bits);
        if (const auto* r = std::get_if<Strategy::Random>(&strategy.kind)) rng.seed(r->seed.value_or(seed));
        if (const auto* g = std::get_if<Strategy::Greedy>(&strategy.kind)) counts.assign(std::size_t{1} << g->depth, 0);
    }

    CirclePoint point() const {
        Mantissa m = scale.floor_of(num);
        m += irr;
        return CirclePoint(std::move(m), valid_after(irr.width(), loss_of(point_error(err, scale.dyadic()))));
    }

    Choice choose() {
        const std::uint64_t step = index - 1;  // 0-based step leading to x_{index+1}
        return std::visit(
            [&](const auto& v) -> Choice {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Strategy::Periodic>) {
                    return v.word[step % v.word.size()] == 'A' ? Choice::A : Choice::B;
                } else if constexpr (std::is_same_v<T, Strategy::Random>) {
                    const double u = std::ldexp(static_cast<double>(rng() >> 11), -53);
                    return u < v.p_a ? Choice::A : Choice::B;
                } else if constexpr (std::is_same_v<T, Strategy::File>) {
                    if (step >= v.choices->size()) {
                        throw SourceExhaustedError("strategy file '" + v.label + "' exhausted after " +
                                                   std::to_string(v.choices->size()) + " choices");
                    }
                    return (*v.choices)[step] == 0 ? Choice::A : Choice::B;
                } else {
                    const CirclePoint here = point();
                    counts[top_bits(here, v.depth)] += 1;
                    return greedy_choice(here, a.point, b.point, counts, v.depth);
                }
            },
            strategy.kind);
    }

    void advance() {
        const Step& s = choose() == Choice::A ? a : b;
        if (s.rational) {
            num = addmod(num, s.num, scale.denominator());
        } else {
            irr += s.mant;
            err = sat_add(err, 1);
        }
        ++index;
    }
};

using State = std::variant<PolyState, DoublingState, CombinedState, AlphaBetaState>;

State make_state(const OrbitSpec& spec, std::uint32_t bits) {
    return std::visit(
        [&](const auto& v) -> State {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Rotation>) {
                return PolyState{DifferenceTable(PolySpec{{ConstantSpec::rational(0, 1), v.alpha}}, bits)};
            } else if constexpr (std::is_same_v<T, Polynomial>) {
                return PolyState{DifferenceTable(v.poly, bits)};
            } else if constexpr (std::is_same_v<T, Doubling>) {
                return DoublingState(v.d, bits);
            } else if constexpr (std::is_same_v<T, Combined>) {
                return CombinedState(v, bits);
            } else {
                return AlphaBetaState(v, bits, spec.seed);
            }
        },
        spec.variant);
}

}  // namespace

struct OrbitGenerator::Impl {
    std::uint64_t length;
    std::uint64_t start;
    std::uint32_t bits;
    std::uint64_t emitted = 0;
    State state;

    Impl(const OrbitSpec& spec, std::uint32_t b)
        : length(spec.length), start(spec.start_index()), bits(b), state(make_state(spec, b)) {
        // All generators begin at index 0, except αβ which begins at x_1.
        const std::uint64_t origin = std::holds_alternative<AlphaBeta>(spec.variant) ? 1 : 0;
        if (start < origin) throw UsageError("alphabeta sequences start at index 1");
        for (std::uint64_t i = origin; i < start; ++i) advance();
    }

    void advance() {
        std::visit([](auto& s) { s.advance(); }, state);
    }
    CirclePoint point() const {
        return std::visit([](const auto& s) { return s.point(); }, state);
    }
};

OrbitGenerator::OrbitGenerator(const OrbitSpec& spec) {
    const std::uint32_t bits = spec.bits != 0 ? spec.bits : required_bits(spec, 32);
    impl_ = std::make_unique<Impl>(spec, bits);
}

OrbitGenerator::OrbitGenerator(OrbitGenerator&&) noexcept = default;
OrbitGenerator& OrbitGenerator::operator=(OrbitGenerator&&) noexcept = default;
OrbitGenerator::~OrbitGenerator() = default;

std::optional<OrbitPoint> OrbitGenerator::next() {
    Impl& s = *impl_;
    if (s.emitted == s.length) return std::nullopt;
    if (s.emitted > 0) s.advance();
    OrbitPoint out{s.start + s.emitted, s.point()};
    ++s.emitted;
    return out;
}

std::uint64_t OrbitGenerator::emitted() const noexcept { return impl_->emitted; }
std::uint32_t OrbitGenerator::bits() const noexcept { return impl_->bits; }

OrbitGenerator generate(const OrbitSpec& spec) { return OrbitGenerator(spec); }

std::vector<OrbitPoint> generate_all(const OrbitSpec& spec) {
    std::vector<OrbitPoint> out;
    out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(spec.length, 1u << 20)));
    for_each_point(spec, [&](const OrbitPoint& p) { out.push_back(p); });
    return out;
}

void for_each_point(const OrbitSpec& spec, const std::function<void(const OrbitPoint&)>& fn) {
    OrbitGenerator gen(spec);
    while (auto p = gen.next()) fn(*p);
}

}  // namespace seqlab
