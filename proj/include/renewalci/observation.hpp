#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "renewalci/errors.hpp"
#include "renewalci/rng.hpp"

namespace renewalci {

enum class ModelTag { coin, l2 };

inline const char* to_string(ModelTag t) {
  return t == ModelTag::coin ? "coin" : "l2";
}

/// Two-coin model: a fair coin off renewals, a coin with head probability
/// 1/2 + theta at renewals. theta is the hidden parameter: simulators and
/// oracles hold it, estimators never receive it.
struct CoinModel {
  double theta = 0.0;

  void validate() const {
    if (!(std::fabs(theta) <= 0.5))
      throw invalid_input("coin model: |theta| must be <= 1/2");
  }
};

enum class L2Shape { gaussian, uniform_bounded, bernoulli_scaled };

inline const char* to_string(L2Shape s) {
  switch (s) {
    case L2Shape::gaussian: return "gaussian";
    case L2Shape::uniform_bounded: return "uniform_bounded";
    case L2Shape::bernoulli_scaled: return "bernoulli_scaled";
  }
  return "?";
}

/// Square-integrable model: a base variable with known mean M off
/// renewals, the same variable shifted by the hidden delta at renewals.
/// Both branches share the known standard deviation sigma_w. `bounds`,
/// when declared, is the envelope every sampled value must stay inside;
/// it is what a bounded-difference half-width rule may rely on.
struct L2Model {
  double base_mean = 0.0;  // M, known
  double shift = 0.0;      // delta, hidden (simulator/oracle side only)
  double sigma_w = 1.0;
  L2Shape shape = L2Shape::gaussian;
  std::optional<std::pair<double, double>> bounds;

  /// Support of one branch (shifted = renewal branch). Unbounded shapes
  /// report infinite endpoints.
  std::pair<double, double> branch_support(bool shifted) const {
    const double offset = shifted ? shift : 0.0;
    switch (shape) {
      case L2Shape::gaussian:
        return {-std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
      case L2Shape::uniform_bounded: {
        const double half_width = std::sqrt(3.0) * sigma_w;
        return {base_mean - half_width + offset,
                base_mean + half_width + offset};
      }
      case L2Shape::bernoulli_scaled:
        return {base_mean - sigma_w + offset, base_mean + sigma_w + offset};
    }
    throw invalid_model("l2 model: unknown shape");
  }

  void validate() const {
    if (!(sigma_w > 0.0))
      throw invalid_model("l2 model: sigma_w must be positive");
    if (!bounds) return;
    const auto [a, b] = *bounds;
    if (!(a < b)) throw invalid_model("l2 model: bounds must satisfy a < b");
    if (shape == L2Shape::gaussian)
      throw invalid_model("l2 model: gaussian values cannot honor bounds");
    for (const bool shifted : {false, true}) {
      const auto [lo, hi] = branch_support(shifted);
      if (lo < a - 1e-12 || hi > b + 1e-12)
        throw invalid_model(
            "l2 model: requested sigma_w/shift does not fit inside the "
            "declared bounds");
    }
  }
};

/// One simulated observation sequence. delta_seq is kept for oracle-side
/// checks only; nothing on the estimation path reads it.
struct ObservationRun {
  ModelTag model_tag = ModelTag::coin;
  std::vector<double> values;
  std::vector<std::uint8_t> delta_seq;
  double sample_mean = 0.0;
};

/// Draw Y_n: heads with probability 1/2 + theta at renewal times, fair
/// otherwise. Values are 0/1.
inline ObservationRun sample_coin_run(std::span<const std::uint8_t> delta,
                                      const CoinModel& model,
                                      RandomStream& stream) {
  model.validate();
  ObservationRun run;
  run.model_tag = ModelTag::coin;
  run.delta_seq.assign(delta.begin(), delta.end());
  run.values.resize(delta.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double p = delta[i] ? 0.5 + model.theta : 0.5;
    const double y = stream.next_bernoulli(p) ? 1.0 : 0.0;
    run.values[i] = y;
    sum += y;
  }
  run.sample_mean = delta.empty() ? 0.0 : sum / double(delta.size());
  return run;
}

/// Draw V_n: base branch off renewals, the branch shifted by delta at
/// renewals. Both branches have standard deviation sigma_w by
/// construction.
inline ObservationRun sample_l2_run(std::span<const std::uint8_t> delta,
                                    const L2Model& model,
                                    RandomStream& stream) {
  model.validate();
  ObservationRun run;
  run.model_tag = ModelTag::l2;
  run.delta_seq.assign(delta.begin(), delta.end());
  run.values.resize(delta.size());
  const double uniform_width = std::sqrt(12.0) * model.sigma_w;
  double sum = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    double v = model.base_mean;
    switch (model.shape) {
      case L2Shape::gaussian:
        v += model.sigma_w * stream.next_normal();
        break;
      case L2Shape::uniform_bounded:
        v += uniform_width * (stream.next_double() - 0.5);
        break;
      case L2Shape::bernoulli_scaled:
        v += stream.next_bernoulli(0.5) ? model.sigma_w : -model.sigma_w;
        break;
    }
    if (delta[i]) v += model.shift;
    run.values[i] = v;
    sum += v;
  }
  run.sample_mean = delta.empty() ? 0.0 : sum / double(delta.size());
  return run;
}

/// Expected sample mean: theta*U_N/N + 1/2 for the coin model,
/// delta*U_N/N + M for the square-integrable model.
inline double theoretical_mean(ModelTag tag, double theta_or_delta,
                               double expected_renewals, std::int64_t horizon,
                               double base_mean = 0.0) {
  if (horizon < 1) throw invalid_input("theoretical_mean: horizon must be >= 1");
  if (!(expected_renewals >= 0.0 && expected_renewals <= double(horizon)))
    throw invalid_input("theoretical_mean: U_N must lie in [0, N]");
  const double ratio = expected_renewals / double(horizon);
  return tag == ModelTag::coin ? theta_or_delta * ratio + 0.5
                               : theta_or_delta * ratio + base_mean;
}

}  // namespace renewalci
