#include "fingap/serialize.hpp"

#include <cmath>

#include "fingap/errors.hpp"

namespace fingap {

namespace {

const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw InvalidInput(std::string("missing field '") + name + "'");
  return j.at(name);
}

std::vector<double> numbers(const Json& j, const char* what) {
  if (!j.is_array()) throw InvalidInput(std::string("'") + what + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw InvalidInput(std::string("'") + what + "' must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Json band_list(std::span<const Band> bands) {
  Json out = Json::array();
  for (const Band& b : bands) out.push_back({b.lo, b.hi});
  return out;
}

std::vector<Band> bands_from(const Json& j, const char* what) {
  if (!j.is_array()) throw InvalidInput(std::string("'") + what + "' must be a list of [lo, hi] pairs");
  std::vector<Band> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw InvalidInput(std::string("'") + what + "' must be a list of [lo, hi] pairs");
    }
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

}  // namespace

Json json_number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

Json to_json(const FiniteGapSet& e) { return band_list(e.bands()); }

FiniteGapSet band_set_from_json(const Json& j) { return FiniteGapSet(bands_from(j, "bands")); }

Json to_json(const EquilibriumData& eq) {
  Json j;
  j["bands"] = to_json(eq.set());
  j["gap_zeros"] = std::vector<double>(eq.gap_zeros().begin(), eq.gap_zeros().end());
  j["robin_constant"] = eq.robin_constant();
  j["capacity"] = eq.capacity();
  j["harmonic_measures"] = std::vector<double>(eq.harmonic_measures().begin(), eq.harmonic_measures().end());
  j["node_counts"] = std::vector<std::size_t>(eq.node_counts().begin(), eq.node_counts().end());
  j["gap_nodes"] = eq.gap_nodes();
  j["robin_spread"] = eq.robin_spread();
  return j;
}

Json to_json(const JacobiParams& J) {
  Json j;
  j["head_a"] = std::vector<double>(J.head_a().begin(), J.head_a().end());
  j["head_b"] = std::vector<double>(J.head_b().begin(), J.head_b().end());
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, FreeTail>) {
          j["tail"] = {{"kind", "free"}};
        } else if constexpr (std::is_same_v<T, PeriodicTail>) {
          j["tail"] = {{"kind", "periodic"}, {"a", t.a}, {"b", t.b}};
        } else {
          j["tail"] = {{"kind", "torus"}};
        }
      },
      J.tail());
  return j;
}

JacobiParams jacobi_from_json(const Json& j) {
  auto a = numbers(field(j, "head_a"), "head_a");
  auto b = numbers(field(j, "head_b"), "head_b");
  Tail tail = FreeTail{};
  if (j.contains("tail")) {
    const Json& t = j.at("tail");
    const auto kind = field(t, "kind");
    if (!kind.is_string()) throw InvalidInput("tail kind must be a string");
    const auto k = kind.get<std::string>();
    if (k == "periodic") {
      tail = PeriodicTail{numbers(field(t, "a"), "tail.a"), numbers(field(t, "b"), "tail.b")};
    } else if (k != "free") {
      throw InvalidInput("tail kind '" + k + "' cannot be read (expected free or periodic)");
    }
  }
  return JacobiParams(std::move(a), std::move(b), std::move(tail));
}

Json to_json(const DirichletData& dd) {
  Json out = Json::array();
  for (const auto& p : dd.points()) out.push_back({{"gamma", p.gamma}, {"sheet", p.sheet}});
  return out;
}

DirichletData dirichlet_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidInput("Dirichlet data must be a list of {gamma, sheet}");
  std::vector<DirichletPoint> pts;
  for (const auto& p : j) {
    const auto& g = field(p, "gamma");
    const auto& s = field(p, "sheet");
    if (!g.is_number() || !s.is_number_integer()) throw InvalidInput("gamma must be a number and sheet an integer");
    pts.push_back({g.get<double>(), s.get<int>()});
  }
  return DirichletData(std::move(pts));
}

Json to_json(const SpectralMeasure& mu) {
  Json j;
  j["bands"] = to_json(mu.set());
  Json dens = Json::array();
  for (const auto& d : mu.densities()) dens.push_back({{"coeffs", d.coeffs}, {"dead", band_list(d.dead)}});
  j["densities"] = dens;
  Json atoms = Json::array();
  for (const auto& a : mu.atoms()) atoms.push_back({{"x", a.x}, {"weight", a.weight}});
  j["atoms"] = atoms;
  return j;
}

SpectralMeasure measure_from_json(const Json& j) {
  auto e = band_set_from_json(field(j, "bands"));
  const auto& dj = field(j, "densities");
  if (!dj.is_array()) throw InvalidInput("'densities' must be an array");
  std::vector<BandDensity> dens;
  for (const auto& d : dj) {
    BandDensity bd;
    bd.coeffs = numbers(field(d, "coeffs"), "coeffs");
    if (d.contains("dead")) bd.dead = bands_from(d.at("dead"), "dead");
    dens.push_back(std::move(bd));
  }
  std::vector<PointMass> atoms;
  if (j.contains("atoms")) {
    if (!j.at("atoms").is_array()) throw InvalidInput("'atoms' must be an array");
    for (const auto& a : j.at("atoms")) {
      const auto& x = field(a, "x");
      const auto& w = field(a, "weight");
      if (!x.is_number() || !w.is_number()) throw InvalidInput("atom x and weight must be numbers");
      atoms.push_back({x.get<double>(), w.get<double>()});
    }
  }
  return SpectralMeasure(std::move(e), std::move(dens), std::move(atoms));
}

}  // namespace fingap
