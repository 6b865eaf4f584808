#pragma once

// JSON forms of the core types. Readers throw InvalidInput with the offending
// field named.

#include "json.hpp"

#include "fingap/bandset.hpp"
#include "fingap/isotorus.hpp"
#include "fingap/jacobi.hpp"
#include "fingap/measure.hpp"

namespace fingap {

using Json = nlohmann::ordered_json;

/// A number, or "inf" / "-inf" / "nan" when it is not finite (JSON has no
/// such literals).
Json json_number(double x);

/// [[lo, hi], ...]
Json to_json(const FiniteGapSet& e);
FiniteGapSet band_set_from_json(const Json& j);

/// gap_zeros, robin_constant, capacity, harmonic_measures, node_counts
Json to_json(const EquilibriumData& eq);

/// {head_a, head_b, tail}; tail is {"kind": "free"} or
/// {"kind": "periodic", "a": [...], "b": [...]}. Torus tails are written as
/// {"kind": "torus"} and cannot be read back.
Json to_json(const JacobiParams& J);
JacobiParams jacobi_from_json(const Json& j);

/// [{gamma, sheet}, ...]
Json to_json(const DirichletData& dd);
DirichletData dirichlet_from_json(const Json& j);

/// {bands, densities: [{coeffs, dead}], atoms: [{x, weight}]}
Json to_json(const SpectralMeasure& mu);
SpectralMeasure measure_from_json(const Json& j);

}  // namespace fingap
