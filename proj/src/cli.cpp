#include "fingap/cli.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fingap/bandset.hpp"
#include "fingap/errors.hpp"
#include "fingap/isotorus.hpp"
#include "fingap/jacobi.hpp"
#include "fingap/measure.hpp"
#include "fingap/serialize.hpp"
#include "fingap/sumrules.hpp"

namespace fingap {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = FINGAP_VERSION;

/// A config or upstream artifact that does not exist (exit code 3).
class MissingFile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string command;
  std::string config_path;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<std::size_t> nodes;
  bool quiet = false;
};

struct Context {
  Globals g;
  Json config = Json::object();
  std::string hash;

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return path.is_absolute() ? path : fs::path(g.out) / path;
  }
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash(const Globals& g, const Json& config) {
  std::ostringstream os;
  os << g.command << '\n' << config.dump() << '\n';
  if (g.seed) os << "seed=" << *g.seed << '\n';
  if (g.tol) os << "tol=" << Json(*g.tol).dump() << '\n';
  if (g.nodes) os << "nodes=" << *g.nodes << '\n';
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(os.str()));
  return buf;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x == 0.0 ? 0.0 : x);
  return buf;
}

class Csv {
 public:
  Csv(const Context& ctx, std::initializer_list<const char*> header) {
    s_ = std::string("# fingap ") + kVersion + " config_hash=" + ctx.hash + " command=" + ctx.g.command + "\n";
    bool first = true;
    for (const char* h : header) {
      s_ += first ? "" : ",";
      s_ += h;
      first = false;
    }
    s_ += '\n';
  }

  Csv& cell(double x) { return raw(fmt(x)); }
  Csv& cell(std::size_t n) { return raw(std::to_string(n)); }
  Csv& raw(const std::string& v) {
    if (!line_start_) s_ += ',';
    s_ += v;
    line_start_ = false;
    return *this;
  }
  void end() {
    s_ += '\n';
    line_start_ = true;
  }
  const std::string& str() const { return s_; }

 private:
  std::string s_;
  bool line_start_ = true;
};

struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;
  int code = 0;
  std::string summary;
};

Json meta(const Context& ctx) {
  Json m;
  m["tool"] = "fingap";
  m["version"] = kVersion;
  m["command"] = ctx.g.command;
  m["config_hash"] = ctx.hash;
  if (ctx.g.seed) m["seed"] = *ctx.g.seed;
  return m;
}

std::string json_file(const Context& ctx, Json body) {
  Json j;
  j["meta"] = meta(ctx);
  for (auto& [k, v] : body.items()) j[k] = v;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- config access

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
      throw InvalidInput("unknown key '" + k + "' in " + where);
    }
  }
}

double num(const Json& j, const char* key, double def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_number()) throw InvalidInput(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::size_t count(const Json& j, const char* key, std::size_t def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw InvalidInput(std::string("'") + key + "' must be a positive integer");
  }
  return v.get<std::size_t>();
}

std::string str(const Json& j, const char* key, const std::string& def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_string()) throw InvalidInput(std::string("'") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

const Json& required(const Json& j, const char* key) {
  if (!j.contains(key)) throw InvalidInput(std::string("missing required key '") + key + "'");
  return j.at(key);
}

std::vector<std::size_t> counts(const Json& j, const char* key, std::vector<std::size_t> def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  std::vector<std::size_t> out;
  auto one = [&](const Json& x) {
    if (!x.is_number_integer() || x.get<long long>() <= 0) {
      throw InvalidInput(std::string("'") + key + "' must hold positive integers");
    }
    out.push_back(x.get<std::size_t>());
  };
  if (v.is_array()) {
    for (const auto& x : v) one(x);
  } else {
    one(v);
  }
  if (out.empty()) throw InvalidInput(std::string("'") + key + "' must not be empty");
  return out;
}

std::vector<std::complex<double>> points(const Json& j, const char* key, std::vector<std::complex<double>> def) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_array() || v.empty()) throw InvalidInput(std::string("'") + key + "' must be a list of [re, im]");
  std::vector<std::complex<double>> out;
  for (const auto& p : v) {
    if (p.is_number()) {
      out.emplace_back(p.get<double>(), 0.0);
    } else if (p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number()) {
      out.emplace_back(p[0].get<double>(), p[1].get<double>());
    } else {
      throw InvalidInput(std::string("'") + key + "' must be a list of [re, im]");
    }
  }
  return out;
}

FiniteGapSet bands(const Json& cfg, bool needed = true) {
  if (!cfg.contains("bands")) {
    if (needed) throw InvalidInput("missing required key 'bands'");
    return FiniteGapSet({{-2.0, 2.0}});
  }
  return band_set_from_json(cfg.at("bands"));
}

DirichletData dirichlet(const Json& cfg, const FiniteGapSet& e) {
  DirichletData dd;
  if (cfg.contains("dirichlet") && cfg.contains("circle")) {
    throw InvalidInput("give either 'dirichlet' or 'circle', not both");
  }
  if (cfg.contains("dirichlet")) {
    dd = dirichlet_from_json(cfg.at("dirichlet"));
  } else if (cfg.contains("circle")) {
    const auto& c = cfg.at("circle");
    if (!c.is_array()) throw InvalidInput("'circle' must be a list of numbers");
    std::vector<double> t;
    for (const auto& x : c) {
      if (!x.is_number()) throw InvalidInput("'circle' must be a list of numbers");
      t.push_back(x.get<double>());
    }
    if (t.size() != e.gap_count()) throw InvalidInput("'circle' needs one entry per gap");
    dd = DirichletData::from_circle(e, t);
  } else if (e.gap_count() > 0) {
    throw InvalidInput("a torus point needs 'dirichlet' or 'circle'");
  }
  dd.validate(e);
  return dd;
}

Json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw MissingFile("cannot open " + p.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& ex) {
    throw InvalidInput(p.string() + ": " + ex.what());
  }
}

struct LoadedJacobi {
  JacobiParams params;
  std::optional<double> l1;
};

// 'input': path to an upstream artifact (resolved against --out), or 'jacobi': inline.
LoadedJacobi jacobi_input(const Context& ctx, const Json& cfg) {
  if (cfg.contains("input") && cfg.contains("jacobi")) throw InvalidInput("give either 'input' or 'jacobi', not both");
  LoadedJacobi out;
  if (cfg.contains("jacobi")) {
    out.params = jacobi_from_json(cfg.at("jacobi"));
    return out;
  }
  const std::string path = str(cfg, "input", "");
  if (path.empty()) throw InvalidInput("missing 'input' (upstream artifact) or inline 'jacobi'");
  const Json j = read_json_file(ctx.resolve(path));
  if (j.contains("jacobi")) {
    out.params = jacobi_from_json(j.at("jacobi"));
  } else {
    out.params = jacobi_from_json(j);
  }
  if (j.contains("l1_total") && j.at("l1_total").is_number()) out.l1 = j.at("l1_total").get<double>();
  return out;
}

PerturbTarget target(const Json& j) {
  const auto t = str(j, "target", "b");
  if (t == "a") return PerturbTarget::A;
  if (t == "b") return PerturbTarget::B;
  if (t == "both") return PerturbTarget::Both;
  throw InvalidInput("target must be a, b or both");
}

const char* target_name(PerturbTarget t) {
  switch (t) {
    case PerturbTarget::A:
      return "a";
    case PerturbTarget::B:
      return "b";
    case PerturbTarget::Both:
      break;
  }
  return "both";
}

PerturbationSpec perturbation(const Json& j, const Globals& g) {
  const auto kind = str(required(j, "perturbation") , "kind", "");
  const Json& p = j.at("perturbation");
  PerturbationSpec spec;
  if (kind == "l1") {
    check_keys(p, {"kind", "target", "rate", "amplitude"}, "perturbation");
    spec.kind = L1Decay{num(p, "rate", 2.0), num(p, "amplitude", 1.0)};
  } else if (kind == "l2_not_l1") {
    check_keys(p, {"kind", "target", "rate", "amplitude"}, "perturbation");
    spec.kind = L2NotL1Decay{num(p, "rate", 1.0), num(p, "amplitude", 1.0)};
  } else if (kind == "single_site") {
    check_keys(p, {"kind", "target", "index", "value"}, "perturbation");
    spec.kind = SingleSite{count(p, "index", 1), num(p, "value", 0.0)};
  } else if (kind == "oscillatory") {
    check_keys(p, {"kind", "target", "frequency", "amplitude", "decay", "phase"}, "perturbation");
    spec.kind = Oscillatory{num(p, "frequency", 0.0), num(p, "amplitude", 1.0), num(p, "decay", 1.0),
                            num(p, "phase", 0.0)};
  } else if (kind == "random") {
    check_keys(p, {"kind", "target", "seed", "amplitude", "rate"}, "perturbation");
    std::uint64_t seed = 0;
    if (p.contains("seed")) {
      if (!p.at("seed").is_number_unsigned()) throw InvalidInput("'seed' must be a nonnegative integer");
      seed = p.at("seed").get<std::uint64_t>();
    }
    if (g.seed) seed = *g.seed;
    spec.kind = RandomDecay{seed, num(p, "amplitude", 1.0), num(p, "rate", 2.0)};
  } else if (kind == "explicit") {
    check_keys(p, {"kind", "target", "values"}, "perturbation");
    Explicit x;
    const auto& v = required(p, "values");
    if (!v.is_array()) throw InvalidInput("'values' must be a list of numbers");
    for (const auto& e : v) {
      if (!e.is_number()) throw InvalidInput("'values' must be a list of numbers");
      x.values.push_back(e.get<double>());
    }
    spec.kind = std::move(x);
  } else {
    throw InvalidInput("perturbation kind must be l1, l2_not_l1, single_site, oscillatory, random or explicit");
  }
  spec.target = target(p);
  spec.validate();
  return spec;
}

EquilibriumOptions eq_options(const Globals& g) {
  EquilibriumOptions o;
  if (g.nodes) o.initial_nodes = *g.nodes;
  if (g.tol) o.rel_tol = *g.tol;
  return o;
}

// ---------------------------------------------------------------- commands

Artifacts cmd_eqm(const Context& ctx) {
  const Json& cfg = ctx.config;
  check_keys(cfg, {"bands", "grid", "margin"}, "eqm config");
  const auto e = bands(cfg);
  const std::size_t grid = count(cfg, "grid", 401);
  const double margin = num(cfg, "margin", 0.5);
  if (!(margin >= 0.0)) throw InvalidInput("'margin' must be nonnegative");
  const auto eq = solve_equilibrium(e, eq_options(ctx.g));

  Csv csv(ctx, {"x", "w", "Phi", "G"});
  const double lo = e.lower() - margin, hi = e.upper() + margin;
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = grid == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * double(i) / double(grid - 1);
    double w = 0.0;
    for (const Band& b : e.bands()) {
      if (b.contains_interior(x)) w = eq.density(x);
    }
    csv.cell(x).cell(w).cell(eq.potential({x, 0.0})).cell(eq.green({x, 0.0})).end();
  }
  Json body;
  body["equilibrium"] = to_json(eq);
  Artifacts a;
  // Frostman: the potential must be constant on e
  const bool frostman = eq.robin_spread() < 1e-6;
  body["verdicts"] = {{"frostman", frostman ? "holds" : "fails"}};
  a.files.emplace_back("eqm.json", json_file(ctx, body));
  a.files.emplace_back("eqm.csv", csv.str());
  a.code = frostman ? 0 : 1;
  std::ostringstream os;
  os << "capacity " << fmt(eq.capacity()) << ", robin spread " << fmt(eq.robin_spread());
  a.summary = os.str();
  return a;
}

Artifacts cmd_torus(const Context& ctx) {
  const Json& cfg = ctx.config;
  check_keys(cfg, {"bands", "dirichlet", "circle", "N", "method"}, "torus config");
  const auto e = bands(cfg);
  const auto dd = dirichlet(cfg, e);
  const std::size_t N = count(cfg, "N", 100);
  const auto method = str(cfg, "method", "flow");
  std::vector<double> a(N), b(N);
  if (method == "flow") {
    auto t = torus_coefficients(e, dd, N);
    a = std::move(t.a);
    b = std::move(t.b);
  } else if (method == "strip") {
    const auto tp = torus_jacobi(e, dd, N);
    for (std::size_t n = 1; n <= N; ++n) {
      a[n - 1] = tp.params().a(n);
      b[n - 1] = tp.params().b(n);
    }
  } else {
    throw InvalidInput("method must be flow or strip");
  }
  const auto mh = minimal_herglotz(e, dd);
  const auto grid = band_interior_grid(e, 64, 1e-6, dd.points());
  const double residual = reflectionless_residual(mh, grid);
  const auto eq = solve_equilibrium(e, eq_options(ctx.g));
  const std::vector<double> omega(eq.harmonic_measures().begin(), eq.harmonic_measures().end());
  const auto period = rational_harmonic_period(std::span<const double>(omega).first(e.gap_count()));

  Csv csv(ctx, {"n", "a", "b"});
  for (std::size_t n = 1; n <= N; ++n) csv.cell(n).cell(a[n - 1]).cell(b[n - 1]).end();
  Json body;
  body["bands"] = to_json(e);
  body["dirichlet"] = to_json(dd);
  body["circle"] = dd.to_circle(e);
  body["method"] = method;
  body["N"] = N;
  body["harmonic_measures"] = omega;
  body["period"] = period ? Json(*period) : Json(nullptr);
  body["reflectionless_residual"] = residual;
  body["jacobi"] = to_json(JacobiParams(a, b));
  const bool reflectionless = residual < 1e-8;
  body["verdicts"] = {{"reflectionless", reflectionless ? "holds" : "fails"}};
  Artifacts out;
  out.files.emplace_back("torus.json", json_file(ctx, body));
  out.files.emplace_back("torus.csv", csv.str());
  out.code = reflectionless ? 0 : 1;
  out.summary = "torus point with " + std::to_string(N) + " coefficients" +
                (period ? ", period " + std::to_string(*period) : std::string());
  return out;
}

Artifacts cmd_oprl(const Context& ctx) {
  const Json& cfg = ctx.config;
  check_keys(cfg, {"input", "jacobi", "points", "n"}, "oprl config");
  const auto J = jacobi_input(ctx, cfg).params;
  const auto zs = points(cfg, "points", {});
  if (zs.empty()) throw InvalidInput("missing required key 'points'");
  const std::size_t n = count(cfg, "n", 50);
  Csv csv(ctx, {"z_re", "z_im", "n", "p_re", "p_im", "log_abs"});
  Json rows = Json::array();
  for (auto z : zs) {
    const auto p = oprl_eval_scaled(J, n, z);
    for (std::size_t k = 0; k <= n; ++k) {
      // mantissa * exp(scale) is finite for moderate n; log_abs is always safe
      const std::complex<double> v = p[k].mantissa * std::exp(p[k].log_scale);
      csv.cell(z.real()).cell(z.imag()).cell(k).cell(v.real()).cell(v.imag()).cell(p[k].log_abs()).end();
    }
    rows.push_back({{"z", {z.real(), z.imag()}}, {"log_abs_p_n", p[n].log_abs()}});
  }
  Json body;
  body["n"] = n;
  body["results"] = rows;
  Artifacts a;
  a.files.emplace_back("oprl.json", json_file(ctx, body));
  a.files.emplace_back("oprl.csv", csv.str());
  a.summary = "p_0..p_" + std::to_string(n) + " at " + std::to_string(zs.size()) + " points";
  return a;
}

Artifacts cmd_perturb(const Context& ctx) {
  const Json& cfg = ctx.config;
  check_keys(cfg, {"bands", "base", "dirichlet", "circle", "jacobi", "perturbation", "N"}, "perturb config");
  const std::size_t N = count(cfg, "N", 1000);
  const auto spec = perturbation(cfg, ctx.g);
  const auto base_kind = str(cfg, "base", "free");
  JacobiParams base;
  Json base_json;
  if (base_kind == "free") {
    if (cfg.contains("dirichlet") || cfg.contains("circle") || cfg.contains("jacobi")) {
      throw InvalidInput("base 'free' takes no dirichlet, circle or jacobi");
    }
    base_json = {{"kind", "free"}};
  } else if (base_kind == "torus") {
    const auto e = bands(cfg);
    const auto dd = dirichlet(cfg, e);
    // enough of the torus for 2N truncations downstream
    auto t = torus_coefficients(e, dd, 4 * N);
    base = JacobiParams(std::move(t.a), std::move(t.b));
    base_json = {{"kind", "torus"}, {"bands", to_json(e)}, {"dirichlet", to_json(dd)}, {"coefficients", 4 * N}};
  } else if (base_kind == "jacobi") {
    base = jacobi_from_json(required(cfg, "jacobi"));
    base_json = {{"kind", "jacobi"}};
  } else {
    throw InvalidInput("base must be free, torus or jacobi");
  }
  const auto pj = apply_perturbation(base, spec, N);

  Csv csv(ctx, {"n", "a", "b", "delta_a", "delta_b"});
  for (std::size_t n = 1; n <= pj.N; ++n) {
    csv.cell(n).cell(pj.params.a(n)).cell(pj.params.b(n)).cell(pj.delta_a[n - 1]).cell(pj.delta_b[n - 1]).end();
  }
  Json body;
  body["base"] = base_json;
  body["perturbation"] = cfg.at("perturbation");
  body["perturbation"]["target"] = target_name(spec.target);
  body["N"] = pj.N;
  body["l1_head"] = pj.l1_head;
  body["l1_tail"] = json_number(pj.l1_tail);
  body["l1_total"] = json_number(pj.l1_total());
  body["jacobi"] = to_json(pj.params);
  Artifacts a;
  a.files.emplace_back("perturbed.json", json_file(ctx, body));
  a.files.emplace_back("perturb.csv", csv.str());
  a.summary = "perturbed " + std::to_string(pj.N) + " sites, l1 " + fmt(pj.l1_total());
  return a;
}

// --- sumrule experiments

bool is_free_set(const FiniteGapSet& e) { return e.band_count() == 1 && e.lower() == -2.0 && e.upper() == 2.0; }

Artifacts sumrule_lieb_thirring(const Context& ctx) {
  const Json& cfg = ctx.config;
  check_keys(cfg, {"experiment", "input", "jacobi", "bands", "N"}, "sumrule config");
  const auto in = jacobi_input(ctx, cfg);
  const auto e = bands(cfg, false);
  const std::size_t N = count(cfg, "N", 2000);
  const double tol = ctx.g.tol.value_or(1e-6);
  const auto eq = solve_equilibrium(e, eq_options(ctx.g));
  ExperimentReport rep;
  rep.name = "lieb_thirring";
  rep.inputs = {{"bands", to_json(e)}, {"truncation", N}, {"tol", tol}};
  int code = 0;
  std::vector<double> evs;
  if (is_free_set(e) && in.params.has_free_tail()) {
    const auto c = lt_free_bound(in.params, N);
    evs = c.eigenvalues;
    rep.inputs["truncation"] = c.truncation;
    rep.results["lhs"] = c.lhs;
    rep.results["rhs"] = c.rhs;
    rep.verdicts["lieb_thirring"] = c.holds ? "holds" : "fails";
    if (!c.holds) {
      rep.invariant_violation = true;
      code = 1;
    }
  } else {
    evs = stable_eigenvalues(in.params, e, N, tol);
    const double lhs = lt_sum(evs, e, 0.5);
    const double c0 = lt_c0(e);
    rep.results["lhs"] = lhs;
    rep.results["c0"] = c0;
    if (in.l1) {
      rep.results["l1"] = *in.l1;
      rep.results["implied_constant"] = (lhs > c0 && *in.l1 > 0.0) ? (lhs - c0) / *in.l1 : 0.0;
    }
  }
  rep.results["eigenvalues"] = evs;
  rep.results["lt_sum_half"] = lt_sum(evs, e, 0.5);
  rep.results["lt_sum_three_halves"] = lt_sum(evs, e, 1.5);
  rep.results["green_sum"] = green_sum(evs, eq);

  Csv csv(ctx, {"index", "eigenvalue", "dist", "green"});
  for (std::size_t i = 0; i < evs.size(); ++i) {
    csv.cell(i + 1).cell(evs[i]).cell(dist_to_set(e, evs[i])).cell(eq.green({evs[i], 0.0})).end();
  }
  Artifacts a;
  a.files.emplace_back("sumrule.json", json_file(ctx, rep.to_json()));
  a.files.emplace_back("sumrule.csv", csv.str());
  a.code = code;
  a.summary = std::to_string(evs.size()) + " eigenvalues outside e";
  return a;
}

Artifacts sumrule_szego_ratio(const Context& ctx) {
  const Json& cfg = ctx.config;
  check_keys(cfg, {"experiment", "input", "jacobi", "bands", "dirichlet", "circle", "points", "n"}, "sumrule config");
  const auto J = jacobi_input(ctx, cfg).params;
  const auto e = bands(cfg, false);
  const auto zs = points(cfg, "points", {{3.0, 0.0}});
  const std::size_t n = count(cfg, "n", 512);
  const double tol = ctx.g.tol.value_or(1e-4);
  const bool zero_gap = is_free_set(e) && !cfg.contains("dirichlet") && !cfg.contains("circle");
  JacobiParams ref;
  if (!zero_gap) {
    auto t = torus_coefficients(e, dirichlet(cfg, e), 2 * n + 1);
    ref = JacobiParams(std::move(t.a), std::move(t.b));
  }
  ExperimentReport rep;
  rep.name = "szego_ratio";
  rep.inputs = {{"bands", to_json(e)}, {"n", n}, {"tol", tol}, {"form", zero_gap ? "zero_gap" : "torus"}};
  Csv csv(ctx, {"z_re", "z_im", "n", "r_n_re", "r_n_im", "r_2n_re", "r_2n_im", "diff"});
  double worst = 0.0;
  Json rows = Json::array();
  for (auto z : zs) {
    if (e.contains(z.real()) && z.imag() == 0.0) throw InvalidInput("ratio points must lie off the set");
    const auto r1 = zero_gap ? szego_ratio_zero_gap(J, z, n) : szego_ratio(J, ref, z, n);
    const auto r2 = zero_gap ? szego_ratio_zero_gap(J, z, 2 * n) : szego_ratio(J, ref, z, 2 * n);
    const double d = std::abs(r2 - r1);
    worst = std::max(worst, d);
    csv.cell(z.real()).cell(z.imag()).cell(n).cell(r1.real()).cell(r1.imag()).cell(r2.real()).cell(r2.imag()).cell(d);
    csv.end();
    rows.push_back({{"z", {z.real(), z.imag()}}, {"r_n", {r1.real(), r1.imag()}}, {"r_2n", {r2.real(), r2.imag()}},
                    {"diff", d}});
  }
  rep.results["points"] = rows;
  rep.results["max_diff"] = worst;
  rep.verdicts["cauchy"] = worst < tol ? "holds" : "inconclusive";
  Artifacts a;
  a.files.emplace_back("sumrule.json", json_file(ctx, rep.to_json()));
  a.files.emplace_back("sumrule.csv", csv.str());
  a.summary = "max |r_2n - r_n| = " + fmt(worst);
  return a;
}

Artifacts sumrule_three_condition(const Context& ctx) {
  const Json& cfg = ctx.config;
  check_keys(cfg,
             {"experiment", "bands", "family", "which_two", "N", "truncation", "product_bound", "atom_x",
              "atom_weight", "dead", "grid"},
             "sumrule config");
  const auto e = bands(cfg);
  const auto fam = str(cfg, "family", "equilibrium");
  MeasureFamily family;
  if (fam == "equilibrium") {
    family = MeasureFamily::Equilibrium;
  } else if (fam == "dead_band") {
    family = MeasureFamily::EquilibriumDeadBand;
  } else if (fam == "semicircle_atom") {
    family = MeasureFamily::SemicirclePlusAtom;
  } else {
    throw InvalidInput("family must be equilibrium, dead_band or semicircle_atom");
  }
  FamilyOptions fo;
  fo.atom_x = num(cfg, "atom_x", fo.atom_x);
  fo.atom_weight = num(cfg, "atom_weight", fo.atom_weight);
  if (cfg.contains("dead")) {
    const auto d = band_set_from_json(Json::array({cfg.at("dead")}));
    fo.dead = d.band(0);
  }
  ThreeConditionOptions o;
  o.N = count(cfg, "N", o.N);
  o.truncation = cfg.contains("truncation") ? count(cfg, "truncation", 1) : 0;
  o.product_bound = num(cfg, "product_bound", o.product_bound);
  o.grid_positions = count(cfg, "grid", o.grid_positions);
  if (ctx.g.tol) o.tol = *ctx.g.tol;
  auto rep = three_condition_experiment(family_measure(e, family, fo), str(cfg, "which_two", "ab"), o);
  rep.inputs["family"] = fam;

  Csv csv(ctx, {"N", "min_sup_distance"});
  if (rep.results.contains("approach_to_torus")) {
    const auto& ap = rep.results["approach_to_torus"];
    for (std::size_t i = 0; i < ap["N"].size(); ++i) {
      csv.cell(ap["N"][i].get<std::size_t>()).cell(ap["min_sup_distance"][i].get<double>()).end();
    }
  }
  Artifacts a;
  a.files.emplace_back("sumrule.json", json_file(ctx, rep.to_json()));
  a.files.emplace_back("sumrule.csv", csv.str());
  a.summary = "implication: " + rep.verdicts["implication"].get<std::string>();
  return a;
}

Artifacts sumrule_oscillatory(const Context& ctx) {
  const Json& cfg = ctx.config;
  check_keys(cfg,
             {"experiment", "bands", "k", "frequency", "amplitude", "decay", "phase", "target", "test_k_max",
              "terms"},
             "sumrule config");
  const auto e = bands(cfg);
  OscillatoryOptions o;
  if (cfg.contains("k")) {
    const auto& k = cfg.at("k");
    if (!k.is_array()) throw InvalidInput("'k' must be a list of integers");
    for (const auto& v : k) {
      if (!v.is_number_integer()) throw InvalidInput("'k' must be a list of integers");
      o.k.push_back(v.get<int>());
    }
  }
  if (cfg.contains("frequency")) o.frequency = num(cfg, "frequency", 0.0);
  o.amplitude = num(cfg, "amplitude", o.amplitude);
  o.decay = num(cfg, "decay", o.decay);
  o.phase = num(cfg, "phase", o.phase);
  o.target = target(Json{{"target", str(cfg, "target", "a")}});
  o.test_k_max = int(count(cfg, "test_k_max", std::size_t(o.test_k_max)));
  o.terms = count(cfg, "terms", o.terms);
  if (ctx.g.tol) o.tol = *ctx.g.tol;
  const auto r = oscillatory_spec(e, o);

  ExperimentReport rep;
  rep.name = "oscillatory";
  rep.inputs = {{"bands", to_json(e)},   {"frequency", r.frequency}, {"amplitude", o.amplitude},
                {"decay", o.decay},      {"phase", o.phase},         {"target", target_name(o.target)},
                {"terms", r.terms},      {"test_k_max", o.test_k_max}, {"tol", o.tol}};
  rep.results["omega"] = r.omega;
  rep.results["warnings"] = r.warnings;
  rep.verdicts["b"] = r.condition_b ? "holds" : "fails";
  rep.verdicts["c"] = r.condition_c ? "holds" : "fails";

  Csv csv(ctx, {"k", "frequency", "resonant", "tail_a", "tail_b", "bound", "sup", "status"});
  for (const auto& c : r.checks) {
    std::string k;
    for (std::size_t j = 0; j < c.k.size(); ++j) k += (j ? ";" : "") + std::to_string(c.k[j]);
    csv.raw(k).cell(c.frequency).raw(c.resonant ? "1" : "0").cell(c.tail_a).cell(c.tail_b).cell(c.bound);
    csv.cell(c.sup).raw(to_string(c.status)).end();
  }
  Artifacts a;
  a.files.emplace_back("sumrule.json", json_file(ctx, rep.to_json()));
  a.files.emplace_back("sumrule.csv", csv.str());
  a.summary = std::to_string(r.checks.size()) + " frequency checks, " + std::to_string(r.warnings.size()) +
              " resonance warnings";
  return a;
}

Artifacts sumrule_cesaro(const Context& ctx) {
  const Json& cfg = ctx.config;
  check_keys(cfg, {"experiment", "input", "jacobi", "bands", "M", "grid", "local_tol"}, "sumrule config");
  const auto J = jacobi_input(ctx, cfg).params;
  const auto e = bands(cfg, false);
  const auto Ms = counts(cfg, "M", {100, 400});
  CesaroOptions o;
  o.grid_positions = count(cfg, "grid", o.grid_positions);
  o.local_tol = num(cfg, "local_tol", o.local_tol);
  const std::size_t Mmax = *std::max_element(Ms.begin(), Ms.end());
  const auto full = cesaro_distance(J, e, Mmax, o);
  std::vector<double> values;
  for (std::size_t M : Ms) {
    double s = 0.0;
    for (std::size_t m = 0; m < M; ++m) s += full.distances[m] * full.distances[m];
    values.push_back(s / double(M));
  }
  ExperimentReport rep;
  rep.name = "cesaro";
  rep.inputs = {{"bands", to_json(e)}, {"M", Ms}, {"grid", o.grid_positions}, {"local_tol", o.local_tol},
                {"k_max", full.k_max}};
  rep.results["values"] = values;
  bool decreasing = true;
  for (std::size_t i = 1; i < values.size(); ++i) decreasing = decreasing && values[i] <= values[i - 1];
  rep.verdicts["decreasing"] = decreasing ? "holds" : "fails";

  Csv csv(ctx, {"m", "d_m"});
  for (std::size_t m = 1; m <= Mmax; ++m) csv.cell(m).cell(full.distances[m - 1]).end();
  Artifacts a;
  a.files.emplace_back("sumrule.json", json_file(ctx, rep.to_json()));
  a.files.emplace_back("sumrule.csv", csv.str());
  a.summary = "Cesaro average at M = " + std::to_string(Mmax) + ": " + fmt(values.back());
  return a;
}

Artifacts sumrule_coherence(const Context& ctx) {
  const Json& cfg = ctx.config;
  check_keys(cfg, {"experiment", "input", "jacobi", "bands", "K", "grid"}, "sumrule config");
  const auto J = jacobi_input(ctx, cfg).params;
  const auto e = bands(cfg);
  const std::size_t K = count(cfg, "K", 1000);
  if (K < 16) throw InvalidInput("'K' must be at least 16");
  const double tol = ctx.g.tol.value_or(1e-3);
  const auto fit = fit_torus_point(J, e, K / 2, K, count(cfg, "grid", 16));
  const auto ap = a_product_series(J, fit.params, K, tol);
  const auto bs = b_sum(J, fit.params, K, tol);
  const auto l2 = ks_l2(J, fit.params, K, tol);
  ExperimentReport rep;
  rep.name = "coherence";
  rep.inputs = {{"bands", to_json(e)}, {"K", K}, {"tol", tol}};
  auto series = [](const SeriesEstimate& s) {
    return Json{{"value", s.value}, {"partial", s.partial}, {"tail", s.tail}, {"status", to_string(s.status)}};
  };
  rep.results["torus_fit"] = {{"dirichlet", to_json(fit.dirichlet)}, {"residual", fit.residual}};
  rep.results["relative_log_a_product"] = series(ap);
  rep.results["b_sum"] = series(bs);
  rep.results["l2"] = series(l2);
  rep.verdicts["d"] = to_string(ap.status);
  rep.verdicts["e"] = to_string(bs.status);
  rep.verdicts["l2"] = to_string(l2.status);

  Csv csv(ctx, {"n", "a", "b", "a_torus", "b_torus"});
  for (std::size_t n = 1; n <= K; ++n) {
    csv.cell(n).cell(J.a(n)).cell(J.b(n)).cell(fit.params.a(n)).cell(fit.params.b(n)).end();
  }
  Artifacts a;
  a.files.emplace_back("sumrule.json", json_file(ctx, rep.to_json()));
  a.files.emplace_back("sumrule.csv", csv.str());
  a.summary = "a-product " + to_string(ap.status) + ", b-sum " + to_string(bs.status);
  return a;
}

Artifacts cmd_sumrule(const Context& ctx) {
  const auto exp = str(ctx.config, "experiment", "");
  if (exp == "lieb_thirring") return sumrule_lieb_thirring(ctx);
  if (exp == "szego_ratio") return sumrule_szego_ratio(ctx);
  if (exp == "three_condition") return sumrule_three_condition(ctx);
  if (exp == "oscillatory") return sumrule_oscillatory(ctx);
  if (exp == "cesaro") return sumrule_cesaro(ctx);
  if (exp == "coherence") return sumrule_coherence(ctx);
  throw InvalidInput(
      "experiment must be lieb_thirring, szego_ratio, three_condition, oscillatory, cesaro or coherence");
}

Artifacts cmd_distance(const Context& ctx) {
  const Json& cfg = ctx.config;
  check_keys(cfg, {"bands", "input", "jacobi", "dirichlet", "circle", "m", "grid", "local_tol"}, "distance config");
  const auto e = bands(cfg);
  const auto ms = counts(cfg, "m", {1});
  const std::size_t mmax = *std::max_element(ms.begin(), ms.end());
  JacobiParams J;
  std::string source;
  if (cfg.contains("input") || cfg.contains("jacobi")) {
    if (cfg.contains("dirichlet") || cfg.contains("circle")) {
      throw InvalidInput("give a Jacobi input or a torus point, not both");
    }
    J = jacobi_input(ctx, cfg).params;
    source = "jacobi";
  } else {
    auto t = torus_coefficients(e, dirichlet(cfg, e), mmax + 512);
    J = JacobiParams(std::move(t.a), std::move(t.b));
    source = "torus";
  }
  TorusDistanceOptions o;
  o.grid_positions = count(cfg, "grid", o.grid_positions);
  o.local_tol = num(cfg, "local_tol", o.local_tol);
  Csv csv(ctx, {"m", "value", "k_max", "evaluations"});
  Json rows = Json::array();
  for (std::size_t m : ms) {
    const auto d = dist_to_torus(J, e, m, o);
    csv.cell(m).cell(d.value).cell(d.k_max).cell(d.evaluations).end();
    rows.push_back({{"m", m}, {"value", d.value}, {"k_max", d.k_max}, {"argmin", to_json(d.argmin)},
                    {"evaluations", d.evaluations}});
  }
  Json body;
  body["bands"] = to_json(e);
  body["source"] = source;
  body["grid"] = o.grid_positions;
  body["local_tol"] = o.local_tol;
  body["results"] = rows;
  Artifacts a;
  a.files.emplace_back("distance.json", json_file(ctx, body));
  a.files.emplace_back("distance.csv", csv.str());
  a.summary = "distance at m = " + std::to_string(ms.front()) + ": " + fmt(rows[0]["value"].get<double>());
  return a;
}

Artifacts cmd_report(const Context& ctx) {
  const Json& cfg = ctx.config;
  check_keys(cfg, {"dir"}, "report config");
  const fs::path dir = cfg.contains("dir") ? ctx.resolve(str(cfg, "dir", ".")) : fs::path(ctx.g.out);
  if (!fs::is_directory(dir)) throw MissingFile("no such directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json" && entry.path().filename() != "summary.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  Csv csv(ctx, {"file", "command", "name", "key", "verdict"});
  Json rows = Json::array();
  for (const auto& f : files) {
    Json j;
    try {
      j = read_json_file(f);
    } catch (const InvalidInput&) {
      continue;  // not one of ours
    }
    if (!j.is_object() || !j.contains("verdicts") || !j.at("verdicts").is_object()) continue;
    const std::string command = j.contains("meta") ? j["meta"].value("command", "") : "";
    const std::string name = j.value("name", command);
    for (const auto& [k, v] : j.at("verdicts").items()) {
      const std::string verdict = v.is_string() ? v.get<std::string>() : v.dump();
      csv.raw(f.filename().string()).raw(command).raw(name).raw(k).raw(verdict).end();
      rows.push_back({{"file", f.filename().string()}, {"command", command}, {"name", name}, {"key", k},
                      {"verdict", verdict}});
    }
  }
  Json body;
  body["rows"] = rows;
  Artifacts a;
  a.files.emplace_back("summary.json", json_file(ctx, body));
  a.files.emplace_back("summary.csv", csv.str());
  a.summary = std::to_string(rows.size()) + " verdicts from " + std::to_string(files.size()) + " files";
  return a;
}

void write_all(const Globals& g, const Artifacts& a) {
  const fs::path dir(g.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory " + dir.string() + ": " + ec.message());
  for (const auto& [name, content] : a.files) {
    const fs::path tmp = dir / (name + ".tmp");
    {
      std::ofstream o(tmp, std::ios::binary);
      if (!o) throw InvalidInput("cannot write into " + dir.string());
      o << content;
      if (!o) throw InvalidInput("write failed for " + tmp.string());
    }
    fs::rename(tmp, dir / name);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite gap Jacobi matrices: equilibrium measures, isospectral tori, sum rules", "fingap"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "seed for random perturbations");
  app.add_option("--tol", g.tol, "tolerance override")->check(CLI::PositiveNumber);
  app.add_option("--nodes", g.nodes, "initial quadrature nodes")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "no summary on stdout");
  app.set_version_flag("--version", std::string(kVersion));

  using Handler = Artifacts (*)(const Context&);
  const std::pair<const char*, Handler> commands[] = {
      {"eqm", cmd_eqm},           {"torus", cmd_torus},       {"oprl", cmd_oprl},     {"perturb", cmd_perturb},
      {"sumrule", cmd_sumrule},   {"distance", cmd_distance}, {"report", cmd_report},
  };
  const char* help[] = {"equilibrium measure, capacity, Green function table",
                        "coefficients of an isospectral torus point",
                        "orthonormal polynomials at complex points",
                        "perturb a free, torus or explicit Jacobi matrix",
                        "sum-rule experiments",
                        "distance to the isospectral torus",
                        "collect verdicts from earlier outputs"};
  for (std::size_t i = 0; i < std::size(commands); ++i) app.add_subcommand(commands[i].first, help[i]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  Handler handler = nullptr;
  for (const auto& [name, h] : commands) {
    if (app.got_subcommand(name)) {
      g.command = name;
      handler = h;
    }
  }

  try {
    Context ctx;
    ctx.g = g;
    if (!g.config_path.empty()) {
      if (!fs::exists(g.config_path)) throw MissingFile("config file not found: " + g.config_path);
      ctx.config = read_json_file(g.config_path);
      if (!ctx.config.is_object()) throw InvalidInput("config must be a JSON object");
    } else if (g.command != "report") {
      throw InvalidInput("--config is required for " + g.command);
    }
    ctx.hash = config_hash(g, ctx.config);
    const Artifacts a = handler(ctx);
    write_all(g, a);
    if (!g.quiet) out << g.command << ": " << a.summary << "\n";
    if (a.code == 1) err << "fingap: invariant violated (see the verdicts in the report)\n";
    return a.code;
  } catch (const MissingFile& e) {
    err << "fingap: " << e.what() << "\n";
    return 3;
  } catch (const InvariantViolation& e) {
    err << "fingap: invariant violation: " << e.what() << "\n";
    return 1;
  } catch (const AccuracyError& e) {
    err << "fingap: accuracy target not reached: " << e.what() << "\n";
    return 1;
  } catch (const NumericalFailure& e) {
    err << "fingap: numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "fingap: bad input: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    err << "fingap: bad input: " << e.what() << "\n";
    return 2;
  } catch (const Json::exception& e) {
    err << "fingap: bad input: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "fingap: " << e.what() << "\n";
    return 2;
  }
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace fingap
