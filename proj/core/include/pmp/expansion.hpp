#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "pmp/distance_fields.hpp"

namespace pmp {

inline constexpr double kDefaultExpansionUpper = 0.025;
inline constexpr double kDefaultExpansionLower = -0.025;

// Expansion confidence scores driven by the epoch loss trajectory. Scores are
// unbounded accumulators; clipping happens only when they are applied to fields.
// Each score carries the rounding residual of its running sum, so a run of equal
// steps lands on exactly n * step.
struct ExpansionState {
  double object_score = 0.0;
  double background_score = 0.0;
  double object_residual = 0.0;
  double background_residual = 0.0;
  std::optional<double> previous_loss;
  double eta = kDefaultExpansionUpper;   // largest step per epoch
  double omega = kDefaultExpansionLower; // most negative step per epoch

  friend bool operator==(const ExpansionState&, const ExpansionState&) = default;
};

ExpansionState make_expansion_state(double eta = kDefaultExpansionUpper,
                                    double omega = kDefaultExpansionLower);

// gamma = L(e-1) / L(e) - 1; object step = clamp(gamma, omega, eta); background
// moves by half the object step. The first call only records the loss.
ExpansionState update(const ExpansionState& state, double epoch_loss);
ExpansionState update_all(ExpansionState state, std::span<const double> losses);

// Adds the scores to an aggregated stack and clips to [0,1]. Absent planes stay as-is.
FieldStack apply(const FieldStack& aggregated, const ExpansionState& state);

// Plain text "object_score background_score previous_loss", with "none" for an
// unset previous loss. Values print with round-trip precision.
std::string serialize(const ExpansionState& state);
ExpansionState parse_expansion_state(std::string_view text, double eta = kDefaultExpansionUpper,
                                     double omega = kDefaultExpansionLower);

}  // namespace pmp
