#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fdaguard/core.hpp"

namespace fdaguard {

enum class TransformKind {
  Identity,     // t0
  Center,       // t1
  Normalize,    // t2
  Difference,   // d1
  Difference2,  // d2
  Register,     // r
  Outlyingness  // o
};

struct TransformStep {
  TransformKind kind = TransformKind::Identity;
  /// Registration penalty; negative selects 0.01 * (value range)^2.
  double penalty = -1.0;
  /// Random projection directions for the outlyingness curve.
  std::size_t directions = 500;
  std::uint64_t seed = 0x4F5554u;
};

std::string to_string(TransformKind kind);
TransformStep parse_step(const std::string& token);
/// Parses a comma list such as "t0,t1,t2".
std::vector<TransformStep> parse_steps(const std::string& list);
std::string steps_to_string(const std::vector<TransformStep>& steps);

/// Throws when the composition is ill-typed, naming the offending step.
void validate_steps(const std::vector<TransformStep>& steps, bool multivariate_input);

/// Subtracts each curve's grid-weighted mean.
FunctionalSample center(const FunctionalSample& sample);

/// Divides each curve by its L2 norm; expects centered curves.
FunctionalSample normalize(const FunctionalSample& sample);

/// Divided differences of the given order on successive midpoint grids.
FunctionalSample difference(const FunctionalSample& sample, int order);

/// Monotone piecewise-linear warp, stored as r(t_j) for each grid point.
struct RegistrationMap {
  std::vector<double> warp;
};

struct Registration {
  FunctionalSample registered;
  std::vector<RegistrationMap> maps;
};

double default_registration_penalty(const FunctionalSample& sample);

/// Aligns every curve to the pointwise-median template by dynamic programming
/// over monotone grid-to-grid alignments with slopes 1/2, 1 and 2.
Registration register_curves(const FunctionalSample& sample, double penalty);

/// Unit directions used by the outlyingness curve: the d axes plus `random`
/// seeded uniform directions. Rows are directions.
Matrix projection_directions(std::size_t d, std::size_t random, std::uint64_t seed);

/// Pointwise projection-pursuit Stahel-Donoho outlyingness of d-variate curves.
FunctionalSample outlyingness_curve(const MultivariateFunctionalSample& sample, std::size_t directions,
                                    std::uint64_t seed);

FunctionalSample apply_step(const FunctionalSample& sample, const TransformStep& step);

/// Cumulative compositions [G1(X), G2(G1(X)), ...].
std::vector<FunctionalSample> apply_sequence(const FunctionalSample& sample, const std::vector<TransformStep>& steps);
/// Multivariate input: the first step must be the outlyingness transform.
std::vector<FunctionalSample> apply_sequence(const MultivariateFunctionalSample& sample,
                                             const std::vector<TransformStep>& steps);

}  // namespace fdaguard
