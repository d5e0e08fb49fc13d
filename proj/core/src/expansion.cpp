#include "pmp/expansion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <vector>

namespace pmp {

namespace {

// Adds `step` to the compensated sum (sum, residual).
void accumulate(double& sum, double& residual, double step) {
  const double s = sum + step;
  const double bb = s - sum;
  residual += (sum - (s - bb)) + (step - bb);
  sum = s + residual;
  residual -= sum - s;
}

}  // namespace

ExpansionState make_expansion_state(double eta, double omega) {
  if (!(omega <= 0.0 && 0.0 <= eta)) {
    throw Error(ErrorCode::kInvalidArgument, "expansion limits must satisfy omega <= 0 <= eta");
  }
  ExpansionState state;
  state.eta = eta;
  state.omega = omega;
  return state;
}

ExpansionState update(const ExpansionState& state, double epoch_loss) {
  if (!(epoch_loss > 0.0) || !std::isfinite(epoch_loss)) {
    throw Error(ErrorCode::kNonPositiveLoss, "epoch loss must be positive and finite");
  }
  ExpansionState next = state;
  if (state.previous_loss) {
    const double gamma = *state.previous_loss / epoch_loss - 1.0;
    const double step = std::max(std::min(gamma, state.eta), state.omega);
    accumulate(next.object_score, next.object_residual, step);
    accumulate(next.background_score, next.background_residual, step / 2.0);
  }
  next.previous_loss = epoch_loss;
  return next;
}

ExpansionState update_all(ExpansionState state, std::span<const double> losses) {
  for (double loss : losses) state = update(state, loss);
  return state;
}

FieldStack apply(const FieldStack& aggregated, const ExpansionState& state) {
  if (aggregated.stage != FieldStage::kAggregated) {
    throw Error(ErrorCode::kStageMismatch, "expansion applies to aggregated fields, got " +
                                               std::string(to_string(aggregated.stage)));
  }
  FieldStack out = aggregated;
  out.stage = FieldStage::kExpanded;
  for (int p = 0; p < out.num_planes(); ++p) {
    if (!out.present[p]) continue;
    const double score =
        p == out.background_plane() ? state.background_score : state.object_score;
    for (double& v : out.planes.plane(p)) v = std::clamp(v + score, 0.0, 1.0);
  }
  return out;
}

std::string serialize(const ExpansionState& state) {
  auto fmt = [](double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
  };
  std::string out = fmt(state.object_score) + " " + fmt(state.background_score) + " " +
                    (state.previous_loss ? fmt(*state.previous_loss) : std::string("none"));
  return out + "\n";
}

ExpansionState parse_expansion_state(std::string_view text, double eta, double omega) {
  std::istringstream in{std::string(text)};
  std::string tokens[3];
  if (!(in >> tokens[0] >> tokens[1] >> tokens[2])) {
    throw Error(ErrorCode::kParseError, "expansion state needs three fields");
  }
  std::string extra;
  if (in >> extra) throw Error(ErrorCode::kParseError, "trailing data in expansion state");
  auto parse = [](const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw Error(ErrorCode::kParseError, "bad number '" + s + "' in expansion state");
    }
    return v;
  };
  ExpansionState state = make_expansion_state(eta, omega);
  state.object_score = parse(tokens[0]);
  state.background_score = parse(tokens[1]);
  if (tokens[2] != "none") {
    const double loss = parse(tokens[2]);
    if (!(loss > 0.0)) throw Error(ErrorCode::kNonPositiveLoss, "stored loss must be positive");
    state.previous_loss = loss;
  }
  return state;
}

}  // namespace pmp
