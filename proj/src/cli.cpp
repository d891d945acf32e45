#include "seqlab/cli.hpp"

#include "seqlab/circle_arith.hpp"
#include "seqlab/errors.hpp"
#include "seqlab/fractal_stats.hpp"
#include "seqlab/orbit_gen.hpp"
#include "seqlab/residue_dynamics.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

namespace seqlab::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = SEQLAB_VERSION;

struct KeySpec {
    std::string name;
    std::string help;
    std::optional<std::string> fallback;  // default value, if any
    bool flag = false;
};

const std::vector<KeySpec> kCommon = {
    {"format", "output format: json or csv", "json"},
    {"out", "write output to PATH instead of stdout", std::nullopt},
    {"config", "key=value file; flags take precedence", std::nullopt},
};

const KeySpec kSpec{"spec", "orbit spec, e.g. poly:0,sqrt2 or doubling:champernowne", std::nullopt};
const KeySpec kBits{"bits", "precision budget in bits (default: smallest safe budget)", "auto"};
const KeySpec kSeed{"seed", "seed for random strategies", "0"};
const KeySpec kStart{"start", "index of the first point (default depends on the orbit kind)", "auto"};
const KeySpec kDepths{"depths", "dyadic depth range A..B", "4..12"};
const KeySpec kWindow{"window", "regression window A..B (default: saturation-guarded [4,12])", "auto"};

std::map<std::string, std::vector<KeySpec>> command_keys() {
    std::map<std::string, std::vector<KeySpec>> out;
    out["orbit"] = {kSpec, {"n", "number of points", "16"}, kBits, kSeed, kStart,
                    {"k", "depth of the reported cell index", "8"},
                    {"digits", "decimal digits per value", "15"},
                    {"hex", "also print the raw mantissa in hex", "false", true}};
    out["boxdim"] = {kSpec, {"n", "number of points", "65536"}, kBits, kSeed, kStart, kDepths, kWindow};
    out["discrepancy"] = {kSpec, {"n", "number of points", "10000"}, kBits, kSeed, kStart};
    out["entropy"] = {kSpec, {"n", "number of points", "65536"}, kBits, kSeed, kStart, kDepths};
    out["independence"] = {kSpec,
                           {"y-spec", "second orbit spec", std::nullopt},
                           {"n", "number of points", "262144"},
                           kSeed,
                           kDepths,
                           kWindow,
                           {"epsilon", "tolerance on the independence margin", "0.05"}};
    out["residue cover"] = {{"m", "odd modulus >= 3", std::nullopt}, {"c", "coefficient coprime to m", "1"}};
    out["residue solve"] = {{"m", "odd modulus >= 3", std::nullopt},
                            {"c", "coefficient coprime to m", "1"},
                            {"t", "target residue", std::nullopt},
                            {"solver", "recursive or brute", "recursive"},
                            {"scan-cutoff", "sub-moduli up to this size use their minimal witness", "4096"}};
    out["residue chain"] = {{"m", "odd modulus >= 3", std::nullopt}};
    out["sweep"] = {{"m", "odd modulus range A..B", std::nullopt},
                    {"c", "comma-separated coefficients; m-K and m+K allowed", "1"},
                    {"threads", "worker threads (0: hardware concurrency)", "0"}};
    for (auto& [name, keys] : out) keys.insert(keys.end(), kCommon.begin(), kCommon.end());
    return out;
}

class Config {
public:
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.contains(key); }

    const std::string& get(const std::string& key) const {
        const auto it = values.find(key);
        if (it == values.end()) throw UsageError("missing required option --" + key);
        return it->second;
    }

    template <class Num>
    Num number(const std::string& key) const {
        const std::string& s = get(key);
        Num v{};
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
            throw UsageError("--" + key + ": cannot parse '" + s + "'");
        }
        return v;
    }

    bool is_auto(const std::string& key) const { return get(key) == "auto"; }
};

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct Document {
    std::string command;
    const Config* config = nullptr;
    json result = json::object();
    std::vector<std::string> warnings;
    std::vector<std::string> csv_notes;  // extra "# key=value" lines
    std::vector<std::string> csv_header;
    std::vector<std::vector<std::string>> csv_rows;

    std::string render(const std::string& format) const {
        if (format == "json") {
            json doc;
            doc["version"] = kVersion;
            doc["command"] = command;
            doc["config"] = json::object();
            for (const auto& [k, v] : config->values) doc["config"][k] = v;
            doc["result"] = result;
            doc["warnings"] = warnings;
            return doc.dump(2) + "\n";
        }
        std::ostringstream os;
        os << "# version=" << kVersion << "\n# command=" << command << "\n";
        for (const auto& [k, v] : config->values) os << "# config." << k << "=" << v << "\n";
        for (const auto& n : csv_notes) os << "# " << n << "\n";
        for (const auto& w : warnings) os << "# warning=" << w << "\n";
        auto line = [&os](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
            os << "\n";
        };
        line(csv_header);
        for (const auto& r : csv_rows) line(r);
        return os.str();
    }
};

std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

OrbitSpec resolve_orbit(Config& cfg, const std::string& key, std::uint32_t depth) {
    OrbitSpec spec = OrbitSpec::parse(cfg.get(key));
    spec.length = cfg.number<std::uint64_t>("n");
    spec.seed = cfg.number<std::uint64_t>("seed");
    if (cfg.has("start") && !cfg.is_auto("start")) spec.start = cfg.number<std::uint64_t>("start");
    if (cfg.has("bits") && !cfg.is_auto("bits")) {
        spec.bits = cfg.number<std::uint32_t>("bits");
        check_budget(spec, depth);
    } else {
        spec.bits = required_bits(spec, depth);
        if (cfg.has("bits")) cfg.values["bits"] = std::to_string(spec.bits);
    }
    if (cfg.has("start")) cfg.values["start"] = std::to_string(spec.start_index());
    return spec;
}

json profile_json(const BoxCountProfile& p) {
    json rows = json::array();
    for (const auto& e : p.entries) rows.push_back({{"depth", e.depth}, {"occupied", e.occupied}, {"points", e.points}});
    return {{"metadata",
             {{"spec", p.metadata.spec},
              {"start", p.metadata.start},
              {"seed", p.metadata.seed},
              {"bits", p.metadata.bits}}},
            {"entries", rows}};
}

json estimate_json(const DimensionEstimate& d) {
    return {{"slope", d.slope},         {"raw_slope", d.raw_slope}, {"intercept", d.intercept},
            {"window", d.window.to_string()}, {"residual", d.residual},   {"saturated", d.saturated}};
}

DepthRange default_window(const BoxCountProfile& profile, DepthRange depths) {
    const DepthRange wanted{std::max<std::uint32_t>(4, depths.lo), std::min<std::uint32_t>(12, depths.hi)};
    if (wanted.lo >= wanted.hi) return depths;
    return guarded_window(profile, wanted);
}

DepthRange resolve_window(Config& cfg, const BoxCountProfile& profile, DepthRange depths) {
    DepthRange w = cfg.is_auto("window") ? default_window(profile, depths) : DepthRange::parse(cfg.get("window"));
    if (w.lo < depths.lo || w.hi > depths.hi) throw UsageError("window must lie inside the depth range");
    cfg.values["window"] = w.to_string();
    return w;
}

void saturation_warning(Document& doc, const std::string& what, const DimensionEstimate& d) {
    if (d.saturated) {
        doc.warnings.push_back(what + ": counts in window " + d.window.to_string() +
                               " reach N/10; the slope is limited by sample size");
    }
}

// --------------------------------------------------------------------------- commands

int cmd_orbit(Config& cfg, Document& doc) {
    const auto k = cfg.number<std::uint32_t>("k");
    if (k == 0 || k > 64) throw UsageError("--k must be in [1, 64]");
    const OrbitSpec spec = resolve_orbit(cfg, "spec", k);
    const auto digits = cfg.number<unsigned>("digits");
    const bool hex = cfg.get("hex") == "true";

    doc.csv_header = {"n", "value", "cell"};
    if (hex) doc.csv_header.push_back("mantissa_hex");
    json points = json::array();
    OrbitGenerator gen(spec);
    while (auto p = gen.next()) {
        const std::string value = p->x.to_decimal(digits);
        const std::uint64_t cell = top_bits(p->x, k);
        json row = {{"n", p->n}, {"value", value}, {"cell", cell}};
        std::vector<std::string> csv = {std::to_string(p->n), value, std::to_string(cell)};
        if (hex) {
            row["mantissa_hex"] = p->x.mantissa().to_hex();
            csv.push_back(row["mantissa_hex"]);
        }
        points.push_back(std::move(row));
        doc.csv_rows.push_back(std::move(csv));
    }
    doc.result = {{"spec", spec.to_string()},
                  {"start", spec.start_index()},
                  {"bits", spec.bits},
                  {"cell_depth", k},
                  {"points", points}};
    return kOk;
}

int cmd_boxdim(Config& cfg, Document& doc) {
    const DepthRange depths = DepthRange::parse(cfg.get("depths"));
    const OrbitSpec spec = resolve_orbit(cfg, "spec", depths.hi);
    const BoxCountProfile profile = box_counts(spec, depths.depths());
    const DepthRange window = resolve_window(cfg, profile, depths);
    const DimensionEstimate est = estimate_dimension(profile, window);
    saturation_warning(doc, "boxdim", est);

    doc.result = {{"profile", profile_json(profile)}, {"estimate", estimate_json(est)}};
    doc.csv_notes = {"slope=" + fmt_double(est.slope), "intercept=" + fmt_double(est.intercept),
                     "window=" + window.to_string(), "residual=" + fmt_double(est.residual),
                     std::string("saturated=") + (est.saturated ? "true" : "false")};
    doc.csv_header = {"depth", "occupied", "points"};
    for (const auto& e : profile.entries) {
        doc.csv_rows.push_back({std::to_string(e.depth), std::to_string(e.occupied), std::to_string(e.points)});
    }
    return kOk;
}

int cmd_discrepancy(Config& cfg, Document& doc) {
    const OrbitSpec spec = resolve_orbit(cfg, "spec", 64);
    std::vector<std::uint64_t> fractions;
    OrbitGenerator gen(spec);
    while (auto p = gen.next()) fractions.push_back(top_bits(p->x, 64));
    const double d = star_discrepancy(std::span<const std::uint64_t>(fractions));
    doc.result = {{"spec", spec.to_string()}, {"points", fractions.size()}, {"discrepancy", d}};
    doc.csv_header = {"points", "discrepancy"};
    doc.csv_rows.push_back({std::to_string(fractions.size()), fmt_double(d)});
    return kOk;
}

int cmd_entropy(Config& cfg, Document& doc) {
    const DepthRange depths = DepthRange::parse(cfg.get("depths"));
    const OrbitSpec spec = resolve_orbit(cfg, "spec", depths.hi);
    const auto ks = depths.depths();
    BoxCounter counter(ks);
    OrbitGenerator gen(spec);
    while (auto p = gen.next()) counter.add(p->x);
    const BoxCountProfile profile = counter.profile();
    const EntropyProfile ent = entropy_profile(counter, ks);

    json rows = json::array();
    doc.csv_header = {"depth", "occupied", "points", "entropy_bits"};
    for (std::size_t i = 0; i < ks.size(); ++i) {
        const auto& e = profile.entries[i];
        rows.push_back({{"depth", e.depth},
                        {"occupied", e.occupied},
                        {"points", e.points},
                        {"entropy_bits", ent.entries[i].bits}});
        doc.csv_rows.push_back({std::to_string(e.depth), std::to_string(e.occupied), std::to_string(e.points),
                                fmt_double(ent.entries[i].bits)});
    }
    doc.result = {{"spec", spec.to_string()}, {"start", spec.start_index()}, {"bits", spec.bits}, {"entries", rows}};
    return kOk;
}

int cmd_independence(Config& cfg, Document& doc) {
    const DepthRange depths = DepthRange::parse(cfg.get("depths"));
    const auto n = cfg.number<std::uint64_t>("n");
    OrbitSpec x = OrbitSpec::parse(cfg.get("spec"));
    OrbitSpec y = OrbitSpec::parse(cfg.get("y-spec"));
    x.seed = y.seed = cfg.number<std::uint64_t>("seed");
    const double eps = cfg.number<double>("epsilon");

    DepthRange window;
    if (cfg.is_auto("window")) {
        window = {std::max<std::uint32_t>(4, depths.lo), std::min<std::uint32_t>(12, depths.hi)};
        if (window.lo >= window.hi) window = depths;
    } else {
        window = DepthRange::parse(cfg.get("window"));
    }
    if (window.lo < depths.lo || window.hi > depths.hi) throw UsageError("window must lie inside the depth range");
    cfg.values["window"] = window.to_string();

    const IndependenceReport r = independence_report(x, y, n, depths, window);
    saturation_warning(doc, "x", r.x_dim);
    saturation_warning(doc, "y", r.y_dim);
    saturation_warning(doc, "sum", r.sum_dim);

    const std::string verdict = std::string(r.independent(eps) ? "independent" : "not independent") +
                                " within margin " + fmt_double(eps);
    doc.result = {{"x", {{"profile", profile_json(r.x_profile)}, {"estimate", estimate_json(r.x_dim)}}},
                  {"y", {{"profile", profile_json(r.y_profile)}, {"estimate", estimate_json(r.y_dim)}}},
                  {"sum", {{"profile", profile_json(r.sum_profile)}, {"estimate", estimate_json(r.sum_dim)}}},
                  {"target", r.target},
                  {"margin", r.margin},
                  {"epsilon", eps},
                  {"verdict", verdict}};
    doc.csv_notes = {"dim_x=" + fmt_double(r.x_dim.slope), "dim_y=" + fmt_double(r.y_dim.slope),
                     "dim_sum=" + fmt_double(r.sum_dim.slope), "target=" + fmt_double(r.target),
                     "margin=" + fmt_double(r.margin), "verdict=" + verdict};
    doc.csv_header = {"series", "depth", "occupied", "points"};
    const std::pair<const char*, const BoxCountProfile*> series[] = {
        {"x", &r.x_profile}, {"y", &r.y_profile}, {"sum", &r.sum_profile}};
    for (const auto& [name, prof] : series) {
        for (const auto& e : prof->entries) {
            doc.csv_rows.push_back(
                {name, std::to_string(e.depth), std::to_string(e.occupied), std::to_string(e.points)});
        }
    }
    return kOk;
}

residue::ResidueParams resolve_params(const Config& cfg) {
    return residue::ResidueParams::make(cfg.number<std::uint64_t>("m"), cfg.number<std::int64_t>("c"));
}

int cmd_residue_cover(Config& cfg, Document& doc) {
    const auto params = resolve_params(cfg);
    const auto res = residue::cover_count(params);
    json missing = json::array();
    for (auto r : res.missing()) missing.push_back(std::to_string(r));
    doc.result = {{"m", std::to_string(res.m)},
                  {"c", std::to_string(res.c)},
                  {"covered", std::to_string(res.covered)},
                  {"period", std::to_string(res.period)},
                  {"scanned", std::to_string(res.scanned)},
                  {"missing", missing},
                  {"complete", res.complete()}};
    doc.csv_header = {"m", "c", "covered", "period", "scanned", "missing"};
    doc.csv_rows.push_back({std::to_string(res.m), std::to_string(res.c), std::to_string(res.covered),
                            std::to_string(res.period), std::to_string(res.scanned),
                            std::to_string(missing.size())});
    if (!res.complete()) {
        doc.warnings.push_back("coverage incomplete: D(m) = " + std::to_string(res.covered) + " < m");
        return kConsistency;
    }
    return kOk;
}

int cmd_residue_solve(Config& cfg, Document& doc) {
    const auto params = resolve_params(cfg);
    const auto t = cfg.number<std::uint64_t>("t");
    const std::string solver = cfg.get("solver");
    std::uint64_t n = 0;
    json trace = json::array();
    doc.csv_header = {"level", "m", "order", "delta", "target", "sub_witness", "lift", "witness", "method"};
    if (solver == "recursive") {
        residue::SolveOptions opts;
        opts.scan_cutoff = cfg.number<std::uint64_t>("scan-cutoff");
        const auto res = residue::solve_residue(params, t, opts);
        n = res.n;
        for (std::size_t i = 0; i < res.trace.levels.size(); ++i) {
            const auto& l = res.trace.levels[i];
            trace.push_back({{"m", std::to_string(l.m)},
                             {"order", std::to_string(l.order)},
                             {"delta", std::to_string(l.delta)},
                             {"target", std::to_string(l.target)},
                             {"sub_witness", std::to_string(l.sub_witness)},
                             {"lift", std::to_string(l.lift)},
                             {"witness", std::to_string(l.witness)},
                             {"method", residue::to_string(l.method)}});
            doc.csv_rows.push_back({std::to_string(i), std::to_string(l.m), std::to_string(l.order),
                                    std::to_string(l.delta), std::to_string(l.target), std::to_string(l.sub_witness),
                                    std::to_string(l.lift), std::to_string(l.witness), residue::to_string(l.method)});
        }
    } else if (solver == "brute") {
        if (t >= params.m) throw UsageError("target must lie in [0, m)");
        const auto found = residue::brute_solve(params, t);
        if (!found) {
            doc.warnings.push_back("no witness within one period");
            doc.result = {{"solver", solver}, {"witness", nullptr}, {"verified", false}};
            return kConsistency;
        }
        n = *found;
    } else {
        throw UsageError("--solver must be recursive or brute");
    }
    const std::uint64_t value = residue::residue_value(n, params.c, params.m);
    const bool ok = value == t;
    const std::string verify = "2^" + std::to_string(n) + " + " + std::to_string(params.c) + "*" + std::to_string(n) +
                               " mod " + std::to_string(params.m) + " = " + std::to_string(value) +
                               (ok ? " (verified)" : " (MISMATCH)");
    doc.result = {{"solver", solver},          {"m", std::to_string(params.m)}, {"c", std::to_string(params.c)},
                  {"t", std::to_string(t)},    {"witness", std::to_string(n)}, {"minimal", solver == "brute"},
                  {"verified", ok},            {"verification", verify},        {"trace", trace}};
    doc.csv_notes = {"solver=" + solver, "witness=" + std::to_string(n), "verification=" + verify};
    return ok ? kOk : kConsistency;
}

int cmd_residue_chain(Config& cfg, Document& doc) {
    const auto m = cfg.number<std::uint64_t>("m");
    const auto chain = residue::reduction_chain(m);
    json levels = json::array();
    doc.csv_header = {"level", "m", "order", "delta"};
    for (std::size_t i = 0; i < chain.levels.size(); ++i) {
        const auto& l = chain.levels[i];
        levels.push_back(
            {{"m", std::to_string(l.m)}, {"order", std::to_string(l.order)}, {"delta", std::to_string(l.delta)}});
        doc.csv_rows.push_back(
            {std::to_string(i), std::to_string(l.m), std::to_string(l.order), std::to_string(l.delta)});
    }
    doc.result = {{"m", std::to_string(m)}, {"levels", levels}};
    return kOk;
}

std::optional<std::uint64_t> eval_coefficient(const std::string& token, std::uint64_t m) {
    std::int64_t value = 0;
    if (token.size() > 1 && token[0] == 'm' && (token[1] == '-' || token[1] == '+')) {
        std::int64_t off = 0;
        const auto* b = token.data() + 2;
        const auto* e = token.data() + token.size();
        auto [ptr, ec] = std::from_chars(b, e, off);
        if (ec != std::errc{} || ptr != e) throw UsageError("bad coefficient '" + token + "'");
        value = static_cast<std::int64_t>(m) + (token[1] == '-' ? -off : off);
    } else {
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc{} || ptr != token.data() + token.size()) {
            throw UsageError("bad coefficient '" + token + "'");
        }
    }
    const auto sm = static_cast<std::int64_t>(m);
    value %= sm;
    if (value < 0) value += sm;
    const auto c = static_cast<std::uint64_t>(value);
    if (residue::gcd(c, m) != 1) return std::nullopt;
    return c;
}

int cmd_sweep(Config& cfg, Document& doc) {
    const std::string range = cfg.get("m");
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    {
        const auto dots = range.find("..");
        auto num = [](std::string_view s) {
            std::uint64_t v = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
                throw UsageError("bad modulus range '" + std::string(s) + "'");
            }
            return v;
        };
        if (dots == std::string::npos) {
            lo = hi = num(range);
        } else {
            lo = num(std::string_view(range).substr(0, dots));
            hi = num(std::string_view(range).substr(dots + 2));
        }
    }
    if (hi >= residue::kMaxModulus) throw UsageError("sweep moduli must stay below 2^32");
    const auto tokens = split_list(cfg.get("c"));
    if (tokens.empty()) throw UsageError("--c needs at least one coefficient");

    std::vector<std::pair<std::uint64_t, std::uint64_t>> jobs;
    for (std::uint64_t m = std::max<std::uint64_t>(lo, 3) | 1u; m <= hi; m += 2) {
        std::vector<std::uint64_t> cs;
        for (const auto& tok : tokens) {
            if (auto c = eval_coefficient(tok, m); c && std::find(cs.begin(), cs.end(), *c) == cs.end()) {
                cs.push_back(*c);
            }
        }
        for (auto c : cs) jobs.emplace_back(m, c);
    }

    std::vector<residue::CoverResult> results(jobs.size());
    auto threads = cfg.number<unsigned>("threads");
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, jobs.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            auto r = residue::cover_count(residue::ResidueParams{jobs[i].first, jobs[i].second});
            r.visited.clear();
            r.visited.shrink_to_fit();
            results[i] = std::move(r);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::uint64_t failures = 0;
    json rows = json::array();
    doc.csv_header = {"m", "c", "covered", "period", "ok"};
    for (const auto& r : results) {
        const bool ok = r.complete();
        if (!ok) ++failures;
        rows.push_back({{"m", std::to_string(r.m)},
                        {"c", std::to_string(r.c)},
                        {"covered", std::to_string(r.covered)},
                        {"period", std::to_string(r.period)},
                        {"ok", ok}});
        doc.csv_rows.push_back({std::to_string(r.m), std::to_string(r.c), std::to_string(r.covered),
                                std::to_string(r.period), ok ? "true" : "false"});
    }
    doc.result = {{"rows", rows}, {"summary", {{"rows", std::to_string(results.size())}, {"failures", std::to_string(failures)}}}};
    doc.csv_notes = {"rows=" + std::to_string(results.size()), "failures=" + std::to_string(failures)};
    return failures == 0 ? kOk : kConsistency;
}

using Handler = int (*)(Config&, Document&);

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> table = {
        {"orbit", cmd_orbit},
        {"boxdim", cmd_boxdim},
        {"discrepancy", cmd_discrepancy},
        {"entropy", cmd_entropy},
        {"independence", cmd_independence},
        {"residue cover", cmd_residue_cover},
        {"residue solve", cmd_residue_solve},
        {"residue chain", cmd_residue_chain},
        {"sweep", cmd_sweep},
    };
    return table;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"seqlab: orbit generation, box-dimension diagnostics and residue covering"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    const auto keys = command_keys();
    std::map<std::string, std::map<std::string, std::string>> given;
    std::map<std::string, std::map<std::string, bool>> given_flags;
    std::map<std::string, std::map<std::string, CLI::Option*>> options;
    std::map<std::string, CLI::App*> subs;

    CLI::App* residue_app = app.add_subcommand("residue", "coverage, witnesses and reduction chains mod m");
    residue_app->require_subcommand(1);
    for (const auto& [name, list] : keys) {
        CLI::App* sub = nullptr;
        if (name.starts_with("residue ")) {
            sub = residue_app->add_subcommand(name.substr(8));
        } else {
            sub = app.add_subcommand(name);
        }
        subs[name] = sub;
        for (const auto& key : list) {
            if (key.flag) {
                options[name][key.name] = sub->add_flag("--" + key.name, given_flags[name][key.name], key.help);
            } else {
                options[name][key.name] = sub->add_option("--" + key.name, given[name][key.name], key.help);
            }
        }
    }
    subs["orbit"]->description("print orbit points with their dyadic cells");
    subs["boxdim"]->description("box counts and box-dimension estimate of an orbit prefix");
    subs["discrepancy"]->description("star discrepancy of an orbit prefix");
    subs["entropy"]->description("empirical cell entropy per depth");
    subs["independence"]->description("arithmetic-independence report for two orbits");
    subs["sweep"]->description("coverage of 2^n + c n over a range of odd moduli");

    std::vector<std::string> argv_store;
    argv_store.emplace_back("seqlab");
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    std::string command;
    for (const auto& [name, sub] : subs) {
        if (sub->parsed()) command = name;
    }
    if (command.empty()) {
        err << "error: no command given\n";
        return kUsage;
    }

    try {
        Config cfg;
        std::map<std::string, std::string> file;
        if (options[command]["config"]->count() > 0) file = read_config_file(given[command]["config"]);
        for (const auto& [k, v] : file) {
            const auto& list = keys.at(command);
            const bool known = std::any_of(list.begin(), list.end(), [&](const KeySpec& s) { return s.name == k; });
            if (!known) throw UsageError("config key '" + k + "' does not apply to '" + command + "'");
        }
        const char* env_bits = std::getenv("SEQLAB_BITS");
        for (const auto& key : keys.at(command)) {
            if (key.name == "config" || key.name == "out") continue;
            if (key.flag) {
                if (given_flags[command][key.name]) {
                    cfg.values[key.name] = "true";
                } else if (file.contains(key.name)) {
                    cfg.values[key.name] = file[key.name];
                } else {
                    cfg.values[key.name] = *key.fallback;
                }
                continue;
            }
            if (options[command][key.name]->count() > 0) {
                cfg.values[key.name] = given[command][key.name];
            } else if (file.contains(key.name)) {
                cfg.values[key.name] = file[key.name];
            } else if (key.name == "bits" && env_bits != nullptr && *env_bits != '\0') {
                cfg.values[key.name] = env_bits;
            } else if (key.fallback) {
                cfg.values[key.name] = *key.fallback;
            }
        }
        const std::string format = cfg.get("format");
        if (format != "json" && format != "csv") throw UsageError("--format must be json or csv");

        Document doc;
        doc.command = command;
        doc.config = &cfg;
        const int code = handlers().at(command)(cfg, doc);

        for (const auto& w : doc.warnings) err << "warning: " << w << "\n";
        const std::string text = doc.render(format);
        std::string out_path;
        if (options[command]["out"]->count() > 0) {
            out_path = given[command]["out"];
        } else if (file.contains("out")) {
            out_path = file["out"];
        }
        if (!out_path.empty()) {
            std::ofstream f(out_path, std::ios::binary);
            if (!f) throw UsageError("cannot write '" + out_path + "'");
            f << text;
        } else {
            out << text;
        }
        return code;
    } catch (const PrecisionError& e) {
        err << "precision error: " << e.what() << "\n";
        return kPrecision;
    } catch (const ConsistencyError& e) {
        err << "consistency failure: " << e.what() << "\n";
        return kConsistency;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
}

}  // namespace seqlab::cli
