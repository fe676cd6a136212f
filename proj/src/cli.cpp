#include "dfi/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "parallel.hpp"

namespace dfi::cli {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx I(0.0, 1.0);

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

void allow_only(const json& j, const std::string& where, std::initializer_list<const char*> keys)
{
    if (!j.is_object()) fail(where, "expected an object");
    for (const auto& [k, _] : j.items())
        if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
            fail(where + "/" + k, "unknown field");
}

double number_at(const json& j, const std::string& key, const std::string& where)
{
    if (!j[key].is_number()) fail(where + "/" + key, "expected a number");
    return j[key].get<double>();
}

double positive_at(const json& j, const std::string& key, const std::string& where)
{
    const double v = number_at(j, key, where);
    if (!(v > 0) || !std::isfinite(v)) fail(where + "/" + key, "must be positive");
    return v;
}

int int_at(const json& j, const std::string& key, const std::string& where, int lo)
{
    if (!j[key].is_number_integer() || j[key].get<long long>() < lo)
        fail(where + "/" + key, "expected an integer >= " + std::to_string(lo));
    return j[key].get<int>();
}

std::string join_keys()
{
    std::string s;
    for (const auto& k : registry_keys()) s += (s.empty() ? "" : ", ") + k;
    return s;
}

CVec complex_vector(const json& j, const std::string& where, int n)
{
    if (!j.is_array() || static_cast<int>(j.size()) != n) fail(where, "expected " + std::to_string(n) + " [re, im] pairs");
    CVec v(n);
    for (int i = 0; i < n; ++i) {
        const auto& e = j[i];
        if (e.is_number())
            v[i] = e.get<double>();
        else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
            v[i] = cplx(e[0].get<double>(), e[1].get<double>());
        else
            fail(where + "/" + std::to_string(i), "expected a number or [re, im]");
    }
    return v;
}

void validate_domain(const json& d)
{
    const std::string w = "/domain";
    if (!d.is_object() || !d.contains("key") || !d["key"].is_string()) fail(w, "expected an object with a string 'key'");
    const std::string key = d["key"];
    if (key == "worm") {
        allow_only(d, w, {"key", "gamma", "t", "s"});
        if (!d.contains("gamma")) fail(w + "/gamma", "required for the worm");
        number_at(d, "gamma", w);
        if (d.contains("t")) number_at(d, "t", w);
        if (d.contains("s")) number_at(d, "s", w);
    } else if (key == "ball") {
        allow_only(d, w, {"key", "n", "radius", "signed_distance"});
        if (d.contains("n")) int_at(d, "n", w, 1);
        if (d.contains("radius")) positive_at(d, "radius", w);
    } else if (key == "ellipsoid") {
        allow_only(d, w, {"key", "axes", "signed_distance"});
        if (!d.contains("axes") || !d["axes"].is_array() || d["axes"].empty()) fail(w + "/axes", "expected a non-empty array");
        for (std::size_t i = 0; i < d["axes"].size(); ++i)
            if (!d["axes"][i].is_number() || !(d["axes"][i].get<double>() > 0))
                fail(w + "/axes/" + std::to_string(i), "expected a positive number");
    } else if (key == "user") {
        allow_only(d, w, {"key", "n", "r", "box", "interior", "signed_distance"});
        if (!d.contains("n")) fail(w + "/n", "required for a user domain");
        const int n = int_at(d, "n", w, 1);
        if (!d.contains("r")) fail(w + "/r", "required for a user domain");
        compile_expr(d["r"], n, w + "/r");
        if (d.contains("box")) positive_at(d, "box", w);
        if (!d.contains("interior")) fail(w + "/interior", "required for a user domain");
        complex_vector(d["interior"], w + "/interior", n);
    } else {
        fail(w + "/key", "unknown domain '" + key + "'; registered keys: " + join_keys());
    }
    if (d.contains("signed_distance") && !d["signed_distance"].is_boolean()) fail(w + "/signed_distance", "expected a boolean");
}

int domain_dim(const json& d)
{
    const std::string key = d["key"];
    if (key == "worm") return 2;
    if (key == "ellipsoid") return static_cast<int>(d["axes"].size());
    return d.value("n", 2);
}

void validate_metric(const json& m, int n)
{
    const std::string w = "/metric";
    if (m.is_string()) {
        const std::string k = m;
        if (k != "euclidean" && k != "worm_kahler") fail(w, "unknown metric '" + k + "'; use euclidean, worm_kahler or user");
        return;
    }
    if (!m.is_object() || !m.contains("key") || !m["key"].is_string()) fail(w, "expected a string or an object with 'key'");
    const std::string k = m["key"];
    if (k == "euclidean") {
        allow_only(m, w, {"key", "scale"});
        if (m.contains("scale")) positive_at(m, "scale", w);
    } else if (k == "worm_kahler") {
        allow_only(m, w, {"key", "s"});
        if (m.contains("s")) positive_at(m, "s", w);
    } else if (k == "user") {
        allow_only(m, w, {"key", "entries"});
        const auto& e = m.contains("entries") ? m["entries"] : json();
        if (!e.is_array() || static_cast<int>(e.size()) != n) fail(w + "/entries", "expected " + std::to_string(n) + " rows");
        for (int i = 0; i < n; ++i) {
            if (!e[i].is_array() || static_cast<int>(e[i].size()) != n)
                fail(w + "/entries/" + std::to_string(i), "expected " + std::to_string(n) + " entries");
            for (int j = 0; j < n; ++j)
                compile_expr(e[i][j], n, w + "/entries/" + std::to_string(i) + "/" + std::to_string(j));
        }
    } else {
        fail(w + "/key", "unknown metric '" + k + "'; use euclidean, worm_kahler or user");
    }
}

json cj(cplx c) { return {{"re", c.real()}, {"im", c.imag()}}; }

json cv(const CVec& v)
{
    json a = json::array();
    for (auto c : v) a.push_back(cj(c));
    return a;
}

json rv(const RVec& v)
{
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

std::vector<CVec> sample_points(const RunConfig& cfg, const Problem& pr)
{
    if (cfg.sampling == "special") {
        if (!pr.domain.special_points) throw ConfigError("/sampling: domain '" + pr.domain.name + "' has no special points");
        return pr.domain.special_points(cfg.samples);
    }
    std::vector<CVec> out;
    for (const auto& b : sample_boundary(pr.domain, cfg.samples, cfg.seed)) out.push_back(b.z);
    return out;
}

SiteSet sites_for(const RunConfig& cfg, const Problem& pr)
{
    SiteOptions so;
    so.special_points = pr.domain.special_points ? cfg.special_points : 0;
    so.boundary_samples = cfg.samples;
    so.seed = cfg.seed;
    so.cutoff = cfg.site_cutoff;
    return collect_sites(pr.domain, pr.basis, so);
}

EstimateOptions estimate_options(const RunConfig& cfg)
{
    EstimateOptions eo;
    eo.tol_eta = cfg.tol_eta;
    eo.search.c_floor = cfg.c_floor;
    return eo;
}

std::string fmt(double x, int digits = 4)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << x;
    return s.str();
}

std::string summary_text(const DFEstimate& est)
{
    if (est.capped) return "DF ≥ " + fmt(est.eta_lo, 2) + " (grid cap)";
    if (est.eta_hi <= 0.0) return "DF undetermined: infeasible at eta = 0 for this basis and site set";
    return "DF ∈ [" + fmt(est.eta_lo) + ", " + fmt(est.eta_hi) + "]";
}

Report start(const std::string& command, const RunConfig& cfg)
{
    Report r;
    r.command = command;
    r.config = cfg.to_json();
    return r;
}

double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

json RunConfig::to_json() const
{
    return {{"domain", domain},
            {"metric", metric},
            {"basis", basis},
            {"seed", seed},
            {"samples", samples},
            {"special_points", special_points},
            {"sampling", sampling},
            {"eta", eta},
            {"tolerances", {{"eps_null", eps_null}, {"tol_eta", tol_eta}, {"c_floor", c_floor}, {"site_cutoff", site_cutoff}}},
            {"collar_depths", collar_depths}};
}

RunConfig parse_config(const json& j)
{
    RunConfig c;
    allow_only(j, "", {"domain", "metric", "basis", "seed", "samples", "special_points", "sampling", "eta", "tolerances",
                       "collar_depths"});
    if (j.contains("domain")) c.domain = j["domain"];
    validate_domain(c.domain);
    if (j.contains("metric")) c.metric = j["metric"];
    validate_metric(c.metric, domain_dim(c.domain));
    if (j.contains("basis")) {
        c.basis = j["basis"];
        allow_only(c.basis, "/basis", {"kind", "degree"});
        if (!c.basis.contains("kind") || !c.basis["kind"].is_string()) fail("/basis/kind", "expected a string");
        const std::string k = c.basis["kind"];
        if (k != "auto" && k != "worm_reduction" && k != "polynomial")
            fail("/basis/kind", "unknown basis '" + k + "'; use auto, worm_reduction or polynomial");
        if (c.basis.contains("degree")) int_at(c.basis, "degree", "/basis", 1);
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) fail("/seed", "expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("samples")) c.samples = int_at(j, "samples", "", 1);
    if (j.contains("special_points")) c.special_points = int_at(j, "special_points", "", 0);
    if (j.contains("sampling")) {
        if (!j["sampling"].is_string() || (j["sampling"] != "boundary" && j["sampling"] != "special"))
            fail("/sampling", "expected \"boundary\" or \"special\"");
        c.sampling = j["sampling"];
    }
    if (j.contains("eta")) {
        c.eta = number_at(j, "eta", "");
        if (!(c.eta >= 0 && c.eta < 1)) fail("/eta", "must lie in [0, 1)");
    }
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        allow_only(t, "/tolerances", {"eps_null", "tol_eta", "c_floor", "site_cutoff"});
        if (t.contains("eps_null")) c.eps_null = positive_at(t, "eps_null", "/tolerances");
        if (t.contains("tol_eta")) c.tol_eta = positive_at(t, "tol_eta", "/tolerances");
        if (t.contains("c_floor")) c.c_floor = positive_at(t, "c_floor", "/tolerances");
        if (t.contains("site_cutoff")) c.site_cutoff = positive_at(t, "site_cutoff", "/tolerances");
    }
    if (j.contains("collar_depths")) {
        const auto& d = j["collar_depths"];
        if (!d.is_array() || d.empty()) fail("/collar_depths", "expected a non-empty array");
        c.collar_depths.clear();
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (!d[i].is_number() || !(d[i].get<double>() > 0))
                fail("/collar_depths/" + std::to_string(i), "expected a positive number");
            c.collar_depths.push_back(d[i]);
        }
    }
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    try {
        return parse_config(j);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::vector<std::string> registry_keys() { return {"ball", "ellipsoid", "user", "worm"}; }

Problem build_problem(RunConfig& cfg)
{
    Problem pr;
    auto& d = cfg.domain;
    const std::string key = d["key"];
    try {
        if (key == "worm") {
            WormParams p = WormParams::standard(d["gamma"].get<double>());
            if (d.contains("t")) p.t = d["t"];
            if (d.contains("s")) p.s = d["s"];
            p.validate();
            pr.worm = p;
            pr.domain = worm_domain(p);
            d["t"] = p.t;
            d["lambda"] = {{"a", p.lambda.a}, {"c", p.lambda.c}, {"p", p.lambda.p}};
        } else if (key == "ball") {
            d["n"] = d.value("n", 2);
            d["radius"] = d.value("radius", 1.0);
            pr.domain = ball_domain(d["n"], d["radius"]);
        } else if (key == "ellipsoid") {
            pr.domain = ellipsoid_domain(d["axes"].get<std::vector<double>>());
        } else {
            const int n = d["n"];
            d["box"] = d.value("box", 2.0);
            pr.domain.name = "user";
            pr.domain.r = ScalarField("user", n, ChartBox::cube(n, d["box"]), compile_expr(d["r"], n, "/domain/r"));
            pr.domain.metric = MetricField::euclidean(n);
            pr.domain.interior = complex_vector(d["interior"], "/domain/interior", n);
            if (!(eval_jet(pr.domain.r, pr.domain.interior, 0).value().real() < 0))
                fail("/domain/interior", "r must be negative at the interior point");
        }
    } catch (const std::invalid_argument& e) {
        fail("/domain", e.what());
    }
    const int n = pr.domain.n();
    const bool distance = d.value("signed_distance", false);
    if (key != "worm") d["signed_distance"] = distance;
    if (distance) pr.domain = signed_distance_domain(pr.domain);

    const json m = cfg.metric.is_string() ? json{{"key", cfg.metric}} : cfg.metric;
    const std::string mk = m["key"];
    if (distance && (mk != "euclidean" || m.value("scale", 0.5) != 0.5))
        fail("/metric", "a signed-distance domain is measured in the standard metric, euclidean with scale 0.5");
    if (mk == "euclidean") {
        const double scale = m.value("scale", distance ? 0.5 : 1.0);
        pr.domain.metric = MetricField::euclidean(n, scale);
        cfg.metric = {{"key", "euclidean"}, {"scale", scale}};
    } else if (mk == "worm_kahler") {
        if (!pr.worm) fail("/metric", "worm_kahler requires the worm domain");
        WormParams p = *pr.worm;
        if (m.contains("s")) p.s = m["s"];
        try {
            const WormMetric wm = worm_metric(p);
            pr.domain.metric = wm.field;
            cfg.metric = {{"key", "worm_kahler"}, {"s", wm.s}, {"min_normalized_eig", wm.min_eig}};
        } catch (const std::domain_error& e) {
            fail("/metric/s", e.what());
        }
    } else {
        std::vector<JetExpr> entries;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                entries.push_back(compile_expr(m["entries"][i][j], n, "/metric/entries"));
        pr.domain.metric.name = "user";
        pr.domain.metric.n = n;
        pr.domain.metric.entries = [entries](std::span<const Jet> x) {
            std::vector<Jet> g;
            for (const auto& e : entries) g.push_back(e(x));
            return g;
        };
    }

    std::string kind = cfg.basis.value("kind", "auto");
    if (kind == "auto") kind = pr.worm ? "worm_reduction" : "polynomial";
    if (kind == "worm_reduction") {
        if (!pr.worm) fail("/basis/kind", "worm_reduction requires the worm domain");
        const int deg = cfg.basis.value("degree", 16);
        pr.basis = worm_reduction_basis(*pr.worm, deg);
        cfg.basis = {{"kind", kind}, {"degree", deg}, {"id", pr.basis.id}};
    } else {
        const int deg = cfg.basis.value("degree", 2);
        pr.basis = polynomial_basis(n, pr.domain.box(), deg);
        cfg.basis = {{"kind", kind}, {"degree", deg}, {"id", pr.basis.id}};
    }
    return pr;
}

json Report::to_json() const
{
    return {{"schema", kSchema}, {"command", command}, {"config", config}, {"records", records}, {"summary", summary}};
}

namespace {

void flatten(const std::string& name, const json& v, std::vector<std::pair<std::string, std::string>>& out)
{
    if (v.is_object()) {
        for (const auto& [k, x] : v.items()) flatten(name.empty() ? k : name + "_" + k, x, out);
    } else if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) flatten(name + "_" + std::to_string(i + 1), v[i], out);
    } else if (v.is_null()) {
        out.emplace_back(name, "");
    } else if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") != std::string::npos) {
            std::string q = "\"";
            for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            s = q + "\"";
        }
        out.emplace_back(name, s);
    } else if (v.is_number_float()) {
        std::ostringstream o;
        o << std::setprecision(17) << v.get<double>();
        out.emplace_back(name, o.str());
    } else {
        out.emplace_back(name, v.dump());
    }
}

}  // namespace

std::string Report::to_csv() const
{
    std::vector<std::string> cols;
    std::vector<std::map<std::string, std::string>> rows;
    for (const auto& r : records) {
        std::vector<std::pair<std::string, std::string>> cells;
        flatten("", r, cells);
        std::map<std::string, std::string> row;
        for (auto& [k, v] : cells) {
            if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
            row[k] = v;
        }
        rows.push_back(std::move(row));
    }
    std::stable_partition(cols.begin(), cols.end(), [](const std::string& c) { return c == "id" || c == "dir"; });
    std::ostringstream o;
    for (std::size_t i = 0; i < cols.size(); ++i) o << (i ? "," : "") << cols[i];
    o << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            auto it = row.find(cols[i]);
            o << (i ? "," : "") << (it == row.end() ? "" : it->second);
        }
        o << "\n";
    }
    return o.str();
}

Report cmd_forms(RunConfig cfg)
{
    const Problem pr = build_problem(cfg);
    Report rep = start("forms", cfg);
    const auto pts = sample_points(cfg, pr);
    std::vector<json> per(pts.size());
    detail::parallel_for(static_cast<int>(pts.size()), [&](int i) {
        const auto g = local_geometry(pr.domain, pts[i], 3);
        const auto f = normal_frame(g);
        const auto lv = levi_data(g, cfg.eps_null);
        json base = {{"id", i},     {"z", cv(pts[i])},          {"levi", rv(lv.eigenvalues)},
                     {"L", cv(f.L)}, {"grad_norm", f.grad_norm}, {"null_dim", lv.null_basis.size()}};
        json rows = json::array();
        if (lv.null_basis.empty()) {
            json r = base;
            r["dir"] = nullptr;
            r["Z"] = nullptr;
            r["alpha"] = {{"re", nullptr}, {"im", nullptr}};
            r["alpha_abs"] = nullptr;
            r["i_beta"] = nullptr;
            rows.push_back(r);
        }
        for (std::size_t k = 0; k < lv.null_basis.size(); ++k) {
            CVec Z = lv.null_basis[k];
            cplx a = alpha10(g, Z);
            // phase fixed so that alpha(Z) lies on the positive imaginary axis
            if (std::abs(a) > 1e-300) {
                Z *= std::polar(1.0, kPi / 2 - std::arg(a));
                a = alpha10(g, Z);
            }
            json r = base;
            r["dir"] = k;
            r["Z"] = cv(Z);
            r["alpha"] = cj(a);
            r["alpha_abs"] = std::abs(a);
            r["i_beta"] = (I * beta_mixed(g, Z, Z)).real();
            rows.push_back(r);
        }
        per[i] = rows;
    });
    int null_points = 0;
    double min_levi = kNoConstraint;
    for (const auto& rows : per)
        for (const auto& r : rows) {
            rep.records.push_back(r);
            if (r["dir"] == 0) ++null_points;
            if (!r["levi"].empty()) min_levi = std::min(min_levi, r["levi"][0].get<double>());
        }
    rep.summary = {{"points", pts.size()},
                   {"null_points", null_points},
                   {"min_levi", min_levi},
                   {"note", null_points ? "Levi-degenerate points present" : "strictly pseudoconvex"}};
    return rep;
}

Report cmd_levi(RunConfig cfg)
{
    const Problem pr = build_problem(cfg);
    Report rep = start("levi", cfg);
    const auto pts = sample_points(cfg, pr);
    std::vector<json> per(pts.size());
    detail::parallel_for(static_cast<int>(pts.size()), [&](int i) {
        const auto g = local_geometry(pr.domain, pts[i], 2);
        const auto lv = levi_data(g, cfg.eps_null);
        per[i] = {{"id", i},
                  {"z", cv(pts[i])},
                  {"levi", rv(lv.eigenvalues)},
                  {"min_levi", lv.eigenvalues.size() ? json(lv.eigenvalues.minCoeff()) : json(nullptr)},
                  {"null_dim", lv.null_basis.size()},
                  {"grad_norm", g.grad_norm()}};
    });
    double lo = kNoConstraint, hi = -kNoConstraint;
    int null_points = 0;
    for (const auto& r : per) {
        rep.records.push_back(r);
        for (const auto& e : r["levi"]) {
            lo = std::min(lo, e.get<double>());
            hi = std::max(hi, e.get<double>());
        }
        if (r["null_dim"].get<int>() > 0) ++null_points;
    }
    rep.summary = {{"points", pts.size()},
                   {"min_levi", lo},
                   {"max_levi", hi},
                   {"null_points", null_points},
                   {"pseudoconvex", lo >= -1e-8 * std::max(1.0, hi)}};
    return rep;
}

Report cmd_check(RunConfig cfg)
{
    const Problem pr = build_problem(cfg);
    Report rep = start("check", cfg);
    const SiteSet sites = sites_for(cfg, pr);
    SearchOptions so;
    so.c_floor = cfg.c_floor;
    const EtaCertificate cert = feasibility_search(sites, pr.basis, cfg.eta, so, std::nullopt, cfg.seed);
    for (std::size_t i = 0; i < sites.sites.size(); ++i) {
        const auto& s = sites.sites[i];
        rep.records.push_back(
            {{"id", i}, {"P", cv(s.P)}, {"Z", cv(s.Z)}, {"levi", s.levi}, {"margin", s.margin(cert.c, cfg.eta)}});
    }
    std::vector<CVec> bases;
    if (pr.domain.special_points) bases = pr.domain.special_points(cfg.special_points);
    for (const auto& b : sample_boundary(pr.domain, cfg.samples, cfg.seed)) bases.push_back(b.z);
    std::vector<CVec> collar;
    int skipped = 0;
    for (const auto& P : bases)
        for (double depth : cfg.collar_depths) {
            try {
                collar.push_back(collar_point(pr.domain, P, depth));
            } catch (const std::domain_error&) {
                ++skipped;
            }
        }
    const InteriorReport in = interior_check(pr.domain, pr.basis, cert.c, cfg.eta, 0.0, collar);
    rep.summary = {{"eta", cfg.eta},
                   {"feasible", cert.feasible},
                   {"boundary_min_margin", cert.min_margin},
                   {"certificate", to_json(cert)},
                   {"n_sites", sites.sites.size()},
                   {"interior",
                    {{"min_eig", in.min_eig}, {"positive", in.positive()}, {"points", collar.size()}, {"skipped", skipped}}},
                   {"note", cert.feasible ? "certificate found" : "infeasible for this basis and sample set"}};
    return rep;
}

Report cmd_estimate(RunConfig cfg)
{
    const Problem pr = build_problem(cfg);
    Report rep = start("estimate", cfg);
    const SiteSet sites = sites_for(cfg, pr);
    const DFEstimate est = estimate_index(sites, pr.basis, estimate_options(cfg), cfg.seed);
    auto grid = est.grid;
    std::sort(grid.begin(), grid.end(), [](const EtaRecord& a, const EtaRecord& b) { return a.eta < b.eta; });
    for (const auto& g : grid) rep.records.push_back({{"eta", g.eta}, {"feasible", g.feasible}, {"min_margin", g.min_margin}});
    rep.summary = to_json(est);
    rep.summary["text"] = summary_text(est);
    rep.summary["n_sites"] = sites.sites.size();
    rep.summary["levi_scale"] = sites.levi_scale;
    return rep;
}

double ClosedFormErrors::max() const { return std::max({alpha, curvature, sff_jnu_sq, sff_zz, margin}); }

ClosedFormErrors closed_form_errors(const DomainSpec& domain, const WormParams& params, const CVec& z, double eta)
{
    const auto ref = s_gamma_reference(params, z[1]);
    const auto g = local_geometry(domain, z, 3);
    const auto f = normal_frame(g);
    CVec Z = CVec::Zero(2);
    Z[1] = 1.0;
    ClosedFormErrors e;
    e.x = ref.x;
    e.alpha = rel_err(alpha10(g, Z), ref.alpha);
    const CVec nu = lift10(f.nu_c);
    const double curv = inner(g.metric, curvature(g.metric, lift10(Z), lift01(Z), nu), nu).real();
    e.curvature = rel_err(curv, ref.curvature);
    e.sff_jnu_sq = rel_err(std::norm(second_fundamental_form(g, lift10(Z), apply_J(f.nu_r))), ref.sff_jnu_sq);
    e.sff_zz = std::abs(second_fundamental_form(g, lift10(Z), lift10(Z)) - ref.sff_zz);
    const double s = metric_at(domain.metric, z, 0).G()(1, 1).real() * ref.abs_z2_sq;
    const double want = ref.margin(eta) * ref.abs_z2_sq / s;
    e.margin = std::abs(geometric_margin(domain, z, Z, eta) - want) / std::max(std::abs(want), 1e-12);
    return e;
}

Report cmd_worm_bench(RunConfig cfg)
{
    const Problem pr = build_problem(cfg);
    if (!pr.worm) throw ConfigError("/domain/key: worm-bench needs the worm domain");
    Report rep = start("worm-bench", cfg);
    const WormParams& p = *pr.worm;
    const WormMetric wm = worm_metric(p);
    DomainSpec kahler = worm_domain(p);
    kahler.metric = wm.field;

    const auto pts = s_gamma_points(p, cfg.samples, 0.9);
    std::vector<ClosedFormErrors> errs(pts.size());
    detail::parallel_for(static_cast<int>(pts.size()), [&](int i) { errs[i] = closed_form_errors(kahler, p, pts[i], cfg.eta); });
    ClosedFormErrors worst;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& e = errs[i];
        rep.records.push_back({{"id", i},
                               {"x", e.x},
                               {"alpha", e.alpha},
                               {"curvature", e.curvature},
                               {"sff_jnu_sq", e.sff_jnu_sq},
                               {"sff_zz", e.sff_zz},
                               {"margin", e.margin}});
        worst.alpha = std::max(worst.alpha, e.alpha);
        worst.curvature = std::max(worst.curvature, e.curvature);
        worst.sff_jnu_sq = std::max(worst.sff_jnu_sq, e.sff_jnu_sq);
        worst.sff_zz = std::max(worst.sff_zz, e.sff_zz);
        worst.margin = std::max(worst.margin, e.margin);
    }
    const double expected = kPi / (2 * p.gamma);
    const double thr = riccati_threshold(p.gamma);
    const SiteSet sites = sites_for(cfg, pr);
    const DFEstimate est = estimate_index(sites, pr.basis, estimate_options(cfg), cfg.seed);
    rep.summary = {{"gamma", p.gamma},
                   {"expected_index", expected},
                   {"metric_s", wm.s},
                   {"riccati", {{"threshold", thr}, {"error", std::abs(thr - expected)}}},
                   {"closed_forms",
                    {{"points", pts.size()},
                     {"alpha", worst.alpha},
                     {"curvature", worst.curvature},
                     {"sff_jnu_sq", worst.sff_jnu_sq},
                     {"sff_zz", worst.sff_zz},
                     {"margin", worst.margin}}},
                   {"estimate",
                    {{"eta_lo", est.eta_lo},
                     {"eta_hi", est.eta_hi},
                     {"text", summary_text(est)},
                     {"within_0.05", std::abs(est.eta_lo - expected) <= 0.05 && std::abs(est.eta_hi - expected) <= 0.05}}}};
    return rep;
}

Report cmd_selftest(RunConfig cfg)
{
    const Problem pr = build_problem(cfg);
    Report rep = start("selftest", cfg);
    const int count = std::min(cfg.samples, 20);
    std::vector<CVec> pts;
    if (pr.domain.special_points)
        for (const auto& z : pr.domain.special_points(std::min(cfg.special_points, 8))) pts.push_back(z);
    for (const auto& b : sample_boundary(pr.domain, count, cfg.seed)) pts.push_back(b.z);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto rvec = [&](int n) {
        CVec v(n);
        for (auto& c : v) c = cplx(unif(rng), unif(rng));
        return v;
    };
    const int n = pr.domain.n();

    auto suite = [&](const std::string& name, double tol, const std::function<double(std::string&)>& body) {
        json r = {{"suite", name}, {"tolerance", tol}};
        std::string detail;
        try {
            const double res = body(detail);
            r["residual"] = res;
            r["passed"] = res <= tol;
        } catch (const std::exception& e) {
            r["residual"] = nullptr;
            r["passed"] = false;
            detail = e.what();
        }
        r["detail"] = detail;
        rep.records.push_back(r);
    };

    suite("metric_hermitian_positive", 1e-12, [&](std::string& detail) {
        double worst = 0.0;
        for (const auto& z : pts) {
            const auto mc = check_metric(pr.domain.metric, z);
            const double scale = std::max(1.0, metric_at(pr.domain.metric, z, 0).G().norm());
            worst = std::max(worst, mc.hermitian_defect / scale);
            if (!(mc.min_eig > 0)) {
                detail = "metric not positive definite";
                return kNoConstraint;
            }
        }
        return worst;
    });
    suite("metric_compatibility", 1e-10, [&](std::string&) {
        double worst = 0.0;
        for (const auto& z : pts) worst = std::max(worst, metric_compatibility_residual(metric_at(pr.domain.metric, z)));
        return worst;
    });
    suite("h3_identities", 1e-8, [&](std::string&) {
        double worst = 0.0;
        for (const auto& z : pts) {
            const auto m = metric_at(pr.domain.metric, z);
            const auto s = scalar_derivs(m, eval_jet(pr.domain.r, z, 3));
            worst = std::max(worst, h3_identity_residuals(m, s, rvec(n), rvec(n), rvec(n)).max());
        }
        return worst;
    });
    // null sites shared by the next suites
    std::vector<std::pair<CVec, CVec>> nulls;
    for (const auto& z : pts) {
        try {
            const auto lv = levi_data(pr.domain, z, cfg.eps_null);
            for (const auto& Z : lv.null_basis) nulls.emplace_back(z, Z);
        } catch (const std::exception&) {
        }
    }
    const std::string vacuous = nulls.empty() ? "no null sites: vacuous" : std::to_string(nulls.size()) + " null sites";
    suite("geometric_equals_vectorfield", 1e-8, [&](std::string& detail) {
        detail = vacuous;
        double worst = 0.0;
        for (const auto& [z, Z] : nulls)
            for (double eta : {0.0, cfg.eta}) {
                const double a = geometric_margin(pr.domain, z, Z, eta, cfg.eps_null);
                const double b = vectorfield_margin(pr.domain, z, Z, eta, cfg.eps_null);
                worst = std::max(worst, std::abs(a - b) / (1 + std::abs(a)));
            }
        return worst;
    });
    suite("beta_consistency", 1e-8, [&](std::string& detail) {
        detail = vacuous;
        double worst = 0.0;
        for (const auto& [z, Z] : nulls) {
            const auto g = local_geometry(pr.domain, z, 3);
            worst = std::max(worst, std::abs(beta_mixed(g, Z, Z) - beta_mixed_nullspace(g, Z, Z)));
            worst = std::max(worst, std::abs(beta_unmixed(g, Z, Z)));
        }
        return worst;
    });
    suite("riccati_threshold", 1e-3, [&](std::string&) {
        double worst = 0.0;
        for (double gamma : {0.6 * kPi, kPi, 1.5 * kPi, 2 * kPi})
            worst = std::max(worst, std::abs(riccati_threshold(gamma) - kPi / (2 * gamma)));
        return worst;
    });
    SiteOptions so;
    so.special_points = pr.domain.special_points ? std::min(cfg.special_points, 16) : 0;
    so.boundary_samples = count;
    so.seed = cfg.seed;
    so.cutoff = cfg.site_cutoff;
    suite("feasibility_monotone", 1e-12, [&](std::string& detail) {
        const SiteSet sites = collect_sites(pr.domain, pr.basis, so);
        const auto cert = feasibility_search(sites, pr.basis, cfg.eta);
        if (!cert.feasible || sites.sites.empty()) {
            detail = "no sites or no certificate at eta: vacuous";
            return 0.0;
        }
        double worst = 0.0;
        for (double eta : {0.0, 0.5 * cfg.eta})
            for (const auto& s : sites.sites) worst = std::max(worst, cert.min_margin - s.margin(cert.c, eta));
        return worst;
    });
    suite("scaling_invariance", 0.0, [&](std::string&) {
        const HBasis scaled = scaled_basis(pr.basis, 3.0);
        const SiteSet a = collect_sites(pr.domain, pr.basis, so);
        const SiteSet b = collect_sites(pr.domain, scaled, so);
        double mismatches = 0;
        for (double eta : {0.5 * cfg.eta, cfg.eta})
            if (feasibility_search(a, pr.basis, eta).feasible != feasibility_search(b, scaled, eta).feasible) ++mismatches;
        return mismatches;
    });
    bool all = true;
    for (const auto& r : rep.records) all = all && r["passed"].get<bool>();
    rep.summary = {{"suites", rep.records.size()}, {"passed", all}};
    rep.exit_code = all ? 0 : 1;
    return rep;
}

}  // namespace dfi::cli
