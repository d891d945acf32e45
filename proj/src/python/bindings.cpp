#include "seqlab/circle_arith.hpp"
#include "seqlab/cli.hpp"
#include "seqlab/errors.hpp"
#include "seqlab/fractal_stats.hpp"
#include "seqlab/orbit_gen.hpp"
#include "seqlab/residue_dynamics.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace seqlab;
namespace rd = seqlab::residue;

namespace {

OrbitSpec make_spec(const std::string& text, std::uint64_t n, std::uint32_t bits, std::optional<std::uint64_t> start,
                    std::uint64_t seed) {
    OrbitSpec s = OrbitSpec::parse(text);
    s.length = n;
    s.bits = bits;
    s.start = start;
    s.seed = seed;
    return s;
}

py::dict estimate_dict(const DimensionEstimate& d) {
    py::dict out;
    out["slope"] = d.slope;
    out["raw_slope"] = d.raw_slope;
    out["intercept"] = d.intercept;
    out["window"] = py::make_tuple(d.window.lo, d.window.hi);
    out["residual"] = d.residual;
    out["saturated"] = d.saturated;
    return out;
}

std::vector<std::tuple<std::uint32_t, std::uint64_t, std::uint64_t>> entries(const BoxCountProfile& p) {
    std::vector<std::tuple<std::uint32_t, std::uint64_t, std::uint64_t>> out;
    for (const auto& e : p.entries) out.emplace_back(e.depth, e.occupied, e.points);
    return out;
}

BoxCountProfile from_entries(const std::vector<std::tuple<std::uint32_t, std::uint64_t, std::uint64_t>>& rows) {
    BoxCountProfile p;
    for (const auto& [k, nk, n] : rows) p.entries.push_back({k, nk, n});
    return p;
}

}  // namespace

PYBIND11_MODULE(_seqlab, m) {
    m.doc() = "Exact circle orbits, box-counting diagnostics and residue covering of 2^n + c n mod m.";
    m.attr("__version__") = SEQLAB_VERSION;

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<UsageError>(m, "UsageError", base.ptr());
    py::register_exception<PrecisionError>(m, "PrecisionError", base.ptr());
    py::register_exception<ConsistencyError>(m, "ConsistencyError", base.ptr());

    py::class_<CirclePoint>(m, "CirclePoint")
        .def_property_readonly("bits", &CirclePoint::bits)
        .def_property_readonly("valid_bits", &CirclePoint::valid_bits)
        .def("top_bits", [](const CirclePoint& x, std::uint32_t k) { return top_bits(x, k); }, py::arg("k"))
        .def("to_decimal", &CirclePoint::to_decimal, py::arg("digits") = 15)
        .def("hex", [](const CirclePoint& x) { return x.mantissa().to_hex(); })
        .def("__float__", &CirclePoint::to_double)
        .def("__eq__", [](const CirclePoint& a, const CirclePoint& b) { return a == b; })
        .def("__repr__", [](const CirclePoint& x) {
            return "CirclePoint(" + x.to_decimal() + ", bits=" + std::to_string(x.bits()) +
                   ", valid_bits=" + std::to_string(x.valid_bits()) + ")";
        });

    m.def("materialize", [](const std::string& text, std::uint32_t bits) {
        return materialize(ConstantSpec::parse(text), bits);
    }, py::arg("constant"), py::arg("bits"), "floor((c mod 1) 2^bits) for a constant such as '1/3' or 'sqrt2'.");
    m.def("add_mod1", &add_mod1);
    m.def("double_mod1", &double_mod1);

    m.def("required_bits", [](const std::string& spec, std::uint64_t n, std::uint32_t depth,
                              std::optional<std::uint64_t> start) {
        return required_bits(make_spec(spec, n, 0, start, 0), depth);
    }, py::arg("spec"), py::arg("n"), py::arg("depth"), py::arg("start") = py::none());

    m.def("orbit", [](const std::string& spec, std::uint64_t n, std::uint32_t bits, std::optional<std::uint64_t> start,
                      std::uint64_t seed) {
        std::vector<std::pair<std::uint64_t, CirclePoint>> out;
        for_each_point(make_spec(spec, n, bits, start, seed), [&](const OrbitPoint& p) { out.emplace_back(p.n, p.x); });
        return out;
    }, py::arg("spec"), py::arg("n"), py::arg("bits") = 0, py::arg("start") = py::none(), py::arg("seed") = 0,
       "List of (index, CirclePoint). bits=0 picks a budget readable at depth 32.");

    m.def("orbit_cells", [](const std::string& spec, std::uint64_t n, std::uint32_t k, std::uint32_t bits,
                            std::optional<std::uint64_t> start, std::uint64_t seed) {
        OrbitSpec s = make_spec(spec, n, bits, start, seed);
        if (s.bits == 0) s.bits = required_bits(s, k);
        std::vector<std::uint64_t> out;
        {
            py::gil_scoped_release release;
            for_each_point(s, [&](const OrbitPoint& p) { out.push_back(top_bits(p.x, k)); });
        }
        return out;
    }, py::arg("spec"), py::arg("n"), py::arg("k"), py::arg("bits") = 0, py::arg("start") = py::none(),
       py::arg("seed") = 0);

    m.def("box_counts", [](const std::string& spec, std::uint64_t n, std::uint32_t lo, std::uint32_t hi,
                           std::uint32_t bits, std::optional<std::uint64_t> start, std::uint64_t seed) {
        OrbitSpec s = make_spec(spec, n, bits, start, seed);
        if (s.bits == 0) s.bits = required_bits(s, hi);
        py::gil_scoped_release release;
        return entries(box_counts(s, DepthRange{lo, hi}.depths()));
    }, py::arg("spec"), py::arg("n"), py::arg("lo") = 4, py::arg("hi") = 12, py::arg("bits") = 0,
       py::arg("start") = py::none(), py::arg("seed") = 0, "List of (depth, occupied, points).");

    m.def("estimate_dimension", [](const std::vector<std::tuple<std::uint32_t, std::uint64_t, std::uint64_t>>& rows,
                                   std::uint32_t lo, std::uint32_t hi) {
        return estimate_dict(estimate_dimension(from_entries(rows), {lo, hi}));
    }, py::arg("profile"), py::arg("lo"), py::arg("hi"));

    m.def("star_discrepancy", [](const std::vector<double>& xs) { return star_discrepancy(xs); }, py::arg("points"));

    m.def("entropy_from_counts", [](const std::vector<std::uint64_t>& c) { return entropy_from_counts(c); });

    m.def("independence_report", [](const std::string& x, const std::string& y, std::uint64_t n, std::uint32_t lo,
                                    std::uint32_t hi, std::uint32_t wlo, std::uint32_t whi) {
        IndependenceReport r;
        {
            py::gil_scoped_release release;
            r = independence_report(OrbitSpec::parse(x), OrbitSpec::parse(y), n, {lo, hi}, {wlo, whi});
        }
        py::dict out;
        out["x"] = estimate_dict(r.x_dim);
        out["y"] = estimate_dict(r.y_dim);
        out["sum"] = estimate_dict(r.sum_dim);
        out["target"] = r.target;
        out["margin"] = r.margin;
        return out;
    }, py::arg("x"), py::arg("y"), py::arg("n"), py::arg("lo") = 4, py::arg("hi") = 12, py::arg("window_lo") = 4,
       py::arg("window_hi") = 12);

    m.def("mult_order", &rd::mult_order, py::arg("m"));
    m.def("reduction_chain", [](std::uint64_t mod) {
        std::vector<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>> out;
        for (const auto& l : rd::reduction_chain(mod).levels) out.emplace_back(l.m, l.order, l.delta);
        return out;
    }, py::arg("m"), "List of (m_i, ord(2, m_i), gcd).");
    m.def("cover_count", [](std::uint64_t mod, std::int64_t c) {
        const auto r = rd::cover_count(rd::ResidueParams::make(mod, c));
        py::dict out;
        out["covered"] = r.covered;
        out["period"] = r.period;
        out["missing"] = r.missing();
        return out;
    }, py::arg("m"), py::arg("c") = 1);
    m.def("solve_residue", [](std::uint64_t mod, std::int64_t c, std::uint64_t t, std::uint64_t cutoff) {
        const auto r = rd::solve_residue(rd::ResidueParams::make(mod, c), t, {cutoff});
        py::list trace;
        for (const auto& l : r.trace.levels) {
            py::dict d;
            d["m"] = l.m;
            d["order"] = l.order;
            d["delta"] = l.delta;
            d["target"] = l.target;
            d["sub_witness"] = l.sub_witness;
            d["lift"] = l.lift;
            d["witness"] = l.witness;
            d["method"] = rd::to_string(l.method);
            trace.append(d);
        }
        return py::make_tuple(r.n, trace);
    }, py::arg("m"), py::arg("c"), py::arg("t"), py::arg("scan_cutoff") = 4096,
       "Returns (n, trace) with 2^n + c n = t (mod m).");
    m.def("brute_solve", [](std::uint64_t mod, std::int64_t c, std::uint64_t t) {
        return rd::brute_solve(rd::ResidueParams::make(mod, c), t);
    }, py::arg("m"), py::arg("c"), py::arg("t"));
    m.def("egcd_modinv", [](std::uint64_t a, std::uint64_t mod) {
        const auto r = rd::egcd_modinv(a, mod);
        return py::make_tuple(r.g, r.inverse);
    });

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"), "Runs one seqlab command; returns (exit_code, stdout, stderr).");
}
