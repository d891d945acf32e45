#include "oracle.hpp"

#include "seqlab/errors.hpp"
#include "seqlab/orbit_gen.hpp"
#include "seqlab/residue_dynamics.hpp"

#include <doctest.h>

#include <boost/multiprecision/cpp_int.hpp>

#include <fstream>
#include <random>

using namespace seqlab;
using oracle::cpp_int;

namespace {

// Cells at depth k of a stream, as produced by the generator.
std::vector<std::uint64_t> cells(const OrbitSpec& spec, std::uint32_t k) {
    std::vector<std::uint64_t> out;
    for_each_point(spec, [&](const OrbitPoint& p) { out.push_back(top_bits(p.x, k)); });
    return out;
}

OrbitSpec with(std::string_view text, std::uint64_t n, std::uint32_t bits = 0) {
    OrbitSpec s = OrbitSpec::parse(text);
    s.length = n;
    s.bits = bits;
    return s;
}

std::uint64_t cell_of(std::int64_t p, std::int64_t q, std::uint32_t k) { return oracle::cell(p, q, k); }

}  // namespace

TEST_CASE("finite difference tables") {
    const std::uint32_t bits = 96;
    const auto alpha = ConstantSpec::sqrt_int(2);
    const DifferenceTable lin = finite_differences(PolySpec{{ConstantSpec::rational(0, 1), alpha}}, bits);
    CHECK(lin.degree() == 1);
    CHECK(lin.value(0).mantissa().is_zero());
    CHECK(lin.value(1).mantissa() == materialize(alpha, bits).mantissa());

    const PolySpec sq3{{ConstantSpec::rational(0, 1), ConstantSpec::rational(0, 1), ConstantSpec::rational(1, 3)}};
    const DifferenceTable t = finite_differences(sq3, bits);
    CHECK(t.value(0).mantissa().is_zero());
    CHECK(top_bits(t.value(1), 32) == cell_of(1, 3, 32));
    CHECK(top_bits(t.value(2), 32) == cell_of(2, 3, 32));
    CHECK(t.value(2).valid_bits() == bits);

    const PolySpec sq{{ConstantSpec::rational(0, 1), ConstantSpec::rational(0, 1), ConstantSpec::rational(1, 1)}};
    const DifferenceTable z = finite_differences(sq, bits);
    for (std::size_t i = 0; i <= 2; ++i) CHECK(z.value(i).mantissa().is_zero());
}

TEST_CASE("next_poly_point examples") {
    DifferenceTable quarter = finite_differences(PolySpec{{ConstantSpec::rational(0, 1), ConstantSpec::rational(1, 4)}}, 8);
    std::vector<std::uint64_t> got;
    for (int i = 0; i < 5; ++i) got.push_back(top_bits(next_poly_point(quarter), 8));
    CHECK(got == std::vector<std::uint64_t>{64, 128, 192, 0, 64});

    DifferenceTable third = finite_differences(
        PolySpec{{ConstantSpec::rational(0, 1), ConstantSpec::rational(0, 1), ConstantSpec::rational(1, 3)}}, 80);
    std::vector<std::uint64_t> thirds;
    for (int i = 0; i < 4; ++i) thirds.push_back(top_bits(next_poly_point(third), 16));
    const std::uint64_t t = cell_of(1, 3, 16);
    CHECK(thirds == std::vector<std::uint64_t>{t, t, 0, t});
    CHECK(third.step() == 4);

    DifferenceTable constant = finite_differences(PolySpec{{ConstantSpec::sqrt_int(3)}}, 80);
    const CirclePoint c0 = constant.current();
    for (int i = 0; i < 10; ++i) CHECK(next_poly_point(constant) == c0);
}

TEST_CASE("generate examples") {
    CHECK(cells(with("combined:poly=0;d=1/3", 4), 32) ==
          std::vector<std::uint64_t>{cell_of(2, 3, 32), cell_of(1, 3, 32), cell_of(2, 3, 32), cell_of(1, 3, 32)});
    CHECK(cells(with("alphabeta:a=1/4;b=1/2;strategy=periodic:AB", 4), 8) ==
          std::vector<std::uint64_t>{0, 64, 192, 0});
    OrbitSpec rot = with("rotation:1/5", 5);
    rot.start = 1;
    CHECK(cells(rot, 32) == std::vector<std::uint64_t>{cell_of(1, 5, 32), cell_of(2, 5, 32), cell_of(3, 5, 32),
                                                       cell_of(4, 5, 32), 0});
    const auto dbl = generate_all(with("doubling:1/3", 3));
    REQUIRE(dbl.size() == 3);
    CHECK(dbl[0].n == 0);
    CHECK(dbl[2].n == 2);
    CHECK(top_bits(dbl[1].x, 8) == 170);
}

TEST_CASE("generators yield exactly N points with consecutive indices") {
    for (const char* text : {"rotation:sqrt2", "poly:0,1/3,sqrt5", "doubling:champernowne",
                             "combined:poly=0,sqrt2;d=champernowne", "alphabeta:a=sqrt2;b=1/3;strategy=greedy:6"}) {
        OrbitSpec s = with(text, 37);
        s.start = 5;
        OrbitGenerator gen(s);
        std::uint64_t expect = 5;
        while (auto p = gen.next()) CHECK(p->n == expect++);
        CHECK(gen.emitted() == 37);
        CHECK(expect == 42);
    }
    CHECK(generate_all(with("rotation:sqrt2", 0)).empty());
}

TEST_CASE("skew-product engine agrees with exact rational evaluation") {
    std::mt19937_64 rng(1234);
    for (int rep = 0; rep < 12; ++rep) {
        const std::size_t degree = rng() % 5;
        PolySpec poly;
        std::vector<std::pair<std::int64_t, std::int64_t>> coeffs;
        for (std::size_t i = 0; i <= degree; ++i) {
            const std::int64_t q = 1 + static_cast<std::int64_t>(rng() % 60);
            const std::int64_t p = static_cast<std::int64_t>(rng() % 200) - 100;
            poly.coeffs.push_back(ConstantSpec::rational(p, q));
            coeffs.emplace_back(p, q);
        }
        DifferenceTable table = finite_differences(poly, 128);
        for (std::uint64_t n = 1; n <= 10000; ++n) {
            const CirclePoint x = next_poly_point(table);
            cpp_int num = 0;
            cpp_int den = 1;
            cpp_int power = 1;
            for (const auto& [p, q] : coeffs) {
                num = num * q + den * p * power;
                den *= q;
                power *= n;
            }
            REQUIRE(top_bits(x, 48) == oracle::cell(num, den, 48));
            REQUIRE(x.valid_bits() == 128);
        }
    }
}

TEST_CASE("irrational polynomial against a high-precision oracle") {
    // p(n) = sqrt2 n^2 + n/7 + sqrt3
    const std::uint32_t ob = 400;
    const cpp_int s2 = boost::multiprecision::sqrt(cpp_int(2) << (2 * ob));
    const cpp_int s3 = boost::multiprecision::sqrt(cpp_int(3) << (2 * ob));
    const cpp_int one = cpp_int(1) << ob;
    OrbitSpec spec = with("poly:sqrt3,1/7,sqrt2", 5000);
    const std::uint32_t k = 40;
    spec.bits = required_bits(spec, k);
    for_each_point(spec, [&](const OrbitPoint& p) {
        const cpp_int n = p.n;
        const cpp_int v = s2 * n * n + (n * one) / 7 + s3;
        const auto expect = static_cast<std::uint64_t>((v & (one - 1)) >> (ob - k));
        REQUIRE(top_bits(p.x, k) == expect);
    });
}

TEST_CASE("combined orbit decomposes into polynomial plus doubling") {
    const std::uint32_t bits = 2200;
    OrbitSpec comb = with("combined:poly=1/5,sqrt2;d=champernowne", 2000, bits);
    OrbitSpec poly = with("poly:1/5,sqrt2", 2000, bits);
    OrbitSpec dbl = with("doubling:champernowne", 2000, bits);
    dbl.start = 1;
    const auto c = generate_all(comb);
    const auto p = generate_all(poly);
    const auto d = generate_all(dbl);
    for (std::size_t i = 0; i < c.size(); ++i) {
        REQUIRE(c[i].n == p[i].n);
        REQUIRE(c[i].n == d[i].n);
        REQUIRE(c[i].x.mantissa() == add_mod1(p[i].x, d[i].x).mantissa());
    }

    // rational doubling parts are folded exactly; compare with the exact value
    const auto r = generate_all(with("combined:poly=0,1/6,2/9;d=5/7", 3000));
    for (const auto& pt : r) {
        const cpp_int n = pt.n;
        const cpp_int pw = boost::multiprecision::powm(cpp_int(2), n, cpp_int(7));
        const cpp_int two_n = oracle::mod(5 * pw, 7);
        const cpp_int num = n * 21 + n * n * 28 + two_n * 18;  // over 126
        REQUIRE(top_bits(pt.x, 32) == oracle::cell(num, 126, 32));
    }
}

TEST_CASE("alphabeta sequences are well formed") {
    SUBCASE("irrational steps differ by exactly alpha or beta at mantissa level") {
        const OrbitSpec spec = with("alphabeta:a=sqrt2;b=sqrt3;strategy=random:0.3:99", 4000);
        const auto pts = generate_all(spec);
        const std::uint32_t bits = pts.front().x.bits();
        const Mantissa a = materialize(ConstantSpec::sqrt_int(2), bits).mantissa();
        const Mantissa b = materialize(ConstantSpec::sqrt_int(3), bits).mantissa();
        CHECK(pts.front().n == 1);
        CHECK(pts.front().x.mantissa().is_zero());
        std::size_t count_a = 0;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            const Mantissa step = pts[i].x.mantissa() - pts[i - 1].x.mantissa();
            REQUIRE((step == a || step == b));
            count_a += step == a;
        }
        CHECK(count_a > 1000);
        CHECK(count_a < 1400);
    }
    SUBCASE("rational steps match an exact walk") {
        const auto pts = generate_all(with("alphabeta:a=1/3;b=2/5;strategy=greedy:5", 3000));
        cpp_int num = 0;  // over 15
        CHECK(top_bits(pts[0].x, 5) == 0);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            const std::uint64_t c = top_bits(pts[i].x, 40);
            const bool is_a = c == oracle::cell(num + 5, 15, 40);
            const bool is_b = c == oracle::cell(num + 6, 15, 40);
            REQUIRE((is_a || is_b));
            num = oracle::mod(num + (is_a ? 5 : 6), 15);
        }
    }
    SUBCASE("seeded random strategies are reproducible") {
        const auto a = cells(with("alphabeta:a=sqrt2;b=sqrt3;strategy=random:0.5", 500), 20);
        OrbitSpec s = with("alphabeta:a=sqrt2;b=sqrt3;strategy=random:0.5", 500);
        CHECK(cells(s, 20) == a);
        s.seed = 1;
        CHECK(cells(s, 20) != a);
    }
}

TEST_CASE("rational doubling orbits repeat with period ord(2, q)") {
    for (std::int64_t q : {3, 7, 9, 15, 21, 101, 255, 997}) {
        const std::uint64_t l = residue::mult_order(static_cast<std::uint64_t>(q));
        const std::uint64_t n = 3 * l + 5;
        const auto c = cells(with("doubling:1/" + std::to_string(q), n, static_cast<std::uint32_t>(n + 96)), 32);
        // distinct orbit points are at least 1/q > 2^-32 apart, so the cell
        // sequence has the same minimal period as the orbit
        std::uint64_t period = 1;
        while (!std::equal(c.begin() + period, c.end(), c.begin())) ++period;
        CHECK(period == l);
    }
}

TEST_CASE("greedy choice") {
    const std::uint32_t k = 2;
    const CirclePoint x = CirclePoint::zero(16);
    const CirclePoint a = materialize(ConstantSpec::rational(1, 4), 16);
    const CirclePoint b = materialize(ConstantSpec::rational(1, 2), 16);
    CHECK(greedy_choice(x, a, b, {0, 0, 0, 0}, k) == Choice::A);
    CHECK(greedy_choice(x, a, b, {0, 3, 1, 0}, k) == Choice::B);
    CHECK(greedy_choice(x, a, b, {0, 1, 3, 0}, k) == Choice::A);
    CHECK(greedy_choice(x, a, a, {0, 5, 0, 0}, k) == Choice::A);
}

TEST_CASE("strategy file source") {
    const std::string path = std::string(SEQLAB_TEST_TMPDIR) + "/choices.txt";
    {
        std::ofstream f(path);
        f << "0110";
    }
    const auto pts = cells(with("alphabeta:a=1/4;b=1/2;strategy=file:" + path, 5), 8);
    CHECK(pts == std::vector<std::uint64_t>{0, 64, 192, 64, 128});
    CHECK_THROWS_AS(generate_all(with("alphabeta:a=1/4;b=1/2;strategy=file:" + path, 6)), SourceExhaustedError);
}

TEST_CASE("orbit spec syntax") {
    for (const char* text : {"rotation:sqrt2", "poly:0,sqrt2,1/3", "doubling:champernowne",
                             "combined:poly=0,sqrt2;d=champernowne", "alphabeta:a=sqrt2;b=sqrt3;strategy=periodic:AB",
                             "alphabeta:a=1/3;b=1/5;strategy=greedy:4", "alphabeta:a=1/3;b=1/5;strategy=random:0.25:7"}) {
        CAPTURE(text);
        const OrbitSpec s = OrbitSpec::parse(text);
        CHECK(s.to_string() == text);
    }
    for (const char* bad : {"", "rotation", "rotation:", "poly:", "spiral:1", "combined:poly=0", "combined:d=1/3",
                            "alphabeta:a=1/3;b=1/5;strategy=periodic:", "alphabeta:a=1/3;b=1/5;strategy=periodic:AC",
                            "alphabeta:a=1/3;b=1/5;strategy=random:1.5", "alphabeta:a=1/3;b=1/5;strategy=greedy:0",
                            "poly:0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,1"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(OrbitSpec::parse(bad), UsageError);
    }
    CHECK(OrbitSpec::parse("rotation:sqrt2").start_index() == 0);
    CHECK(OrbitSpec::parse("poly:0,sqrt2").start_index() == 1);
    CHECK(OrbitSpec::parse("combined:poly=0;d=1/3").start_index() == 1);
    CHECK(OrbitSpec::parse("doubling:1/3").start_index() == 0);
}

TEST_CASE("precision budget") {
    OrbitSpec dbl = with("doubling:champernowne", 1000);
    // the last point is 2^999 d: 999 bits shifted out
    CHECK(required_bits(dbl, 12) == 999 + 12 + 64);
    CHECK(required_bits(with("doubling:1/4", 1000), 12) == 12 + 64);
    // additive orbits lose ceil(log2) of the accumulated truncation error
    CHECK(precision_loss(with("rotation:sqrt2", 1000)) == ceil_log2(999 + 1));
    CHECK(precision_loss(with("rotation:1/3", 1000)) == 0);
    CHECK(precision_loss(with("alphabeta:a=1/3;b=1/7;strategy=periodic:AB", 1000)) == 0);

    dbl.bits = 500;
    CHECK_THROWS_AS(check_budget(dbl, 12), PrecisionError);
    dbl.bits = 999 + 12 + 64;
    CHECK_NOTHROW(check_budget(dbl, 12));

    // reading past the budget fails loudly instead of returning garbage
    OrbitSpec shallow = with("doubling:champernowne", 200, 160);
    CHECK_THROWS_AS(cells(shallow, 8), PrecisionError);
}

TEST_CASE("declared valid bits are honoured on every generated point") {
    const std::uint32_t k = 24;
    for (const char* text : {"rotation:sqrt7", "poly:sqrt2,sqrt3,sqrt5,1/3", "doubling:sqrt2",
                             "combined:poly=0,sqrt2;d=sqrt3", "alphabeta:a=sqrt2;b=1/3;strategy=periodic:AAB"}) {
        CAPTURE(text);
        OrbitSpec s = with(text, 3000);
        s.bits = required_bits(s, k);
        OrbitSpec wide = s;
        wide.bits = s.bits + 256;
        const auto lo = generate_all(s);
        const auto hi = generate_all(wide);
        for (std::size_t i = 0; i < lo.size(); ++i) {
            REQUIRE(lo[i].x.valid_bits() >= k + 64);
            REQUIRE(top_bits(lo[i].x, k) == top_bits(hi[i].x, k));
        }
    }
}
