#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "renewalci/errors.hpp"
#include "renewalci/families.hpp"
#include "renewalci/observation.hpp"
#include "renewalci/renewal.hpp"
#include "renewalci/stats.hpp"

namespace renewalci {

enum class EpsilonMethod { chebyshev, hoeffding, normal };

inline const char* to_string(EpsilonMethod m) {
  switch (m) {
    case EpsilonMethod::chebyshev: return "chebyshev";
    case EpsilonMethod::hoeffding: return "hoeffding";
    case EpsilonMethod::normal: return "normal";
  }
  return "?";
}

inline EpsilonMethod epsilon_method_from_string(std::string_view s) {
  if (s == "chebyshev") return EpsilonMethod::chebyshev;
  if (s == "hoeffding") return EpsilonMethod::hoeffding;
  if (s == "normal") return EpsilonMethod::normal;
  throw invalid_input("unknown half-width rule: " + std::string(s));
}

/// Half-width policy epsilon(gamma, N) for the deviation event
/// |mean - expectation| < epsilon at confidence gamma.
///
///   chebyshev: sigma / sqrt(N (1-gamma))
///   hoeffding: range_width * sqrt(ln(2/(1-gamma)) / (2N))
///   normal:    z_{(1+gamma)/2} * sigma / sqrt(N)
///
/// For the coin model sigma = 1/2 (the variance bound that does not
/// depend on the unknown bias) and range_width = 1. For the
/// square-integrable model sigma is the known sigma_w, and the Hoeffding
/// rule needs a declared range width; it is rejected for unbounded
/// models. All three rules scale as N^{-1/2}.
struct EpsilonRule {
  EpsilonMethod method = EpsilonMethod::hoeffding;
  double gamma = 0.95;
  double sigma = 0.5;
  std::optional<double> range_width = 1.0;

  static EpsilonRule coin(EpsilonMethod method, double gamma) {
    return EpsilonRule{method, gamma, 0.5, 1.0};
  }

  static EpsilonRule l2_unbounded(EpsilonMethod method, double gamma,
                                  double sigma_w) {
    return EpsilonRule{method, gamma, sigma_w, std::nullopt};
  }

  static EpsilonRule l2_bounded(EpsilonMethod method, double gamma,
                                double sigma_w, double range_width) {
    if (!(range_width > 0.0))
      throw invalid_input("epsilon rule: range width must be positive");
    return EpsilonRule{method, gamma, sigma_w, range_width};
  }

  /// Rule matching a model, built from its known quantities only.
  static EpsilonRule for_model(EpsilonMethod method, double gamma,
                               const CoinModel&) {
    return coin(method, gamma);
  }
  static EpsilonRule for_model(EpsilonMethod method, double gamma,
                               const L2Model& model) {
    if (model.bounds)
      return l2_bounded(method, gamma, model.sigma_w,
                        model.bounds->second - model.bounds->first);
    return l2_unbounded(method, gamma, model.sigma_w);
  }
};

inline double epsilon(const EpsilonRule& rule, std::int64_t horizon) {
  if (horizon < 1) throw invalid_input("epsilon: horizon must be >= 1");
  if (!(rule.gamma > 0.0 && rule.gamma < 1.0))
    throw invalid_input("epsilon: gamma must be in (0,1)");
  if (!(rule.sigma > 0.0))
    throw invalid_input("epsilon: sigma must be positive");
  const double n = double(horizon);
  switch (rule.method) {
    case EpsilonMethod::chebyshev:
      return rule.sigma / std::sqrt(n * (1.0 - rule.gamma));
    case EpsilonMethod::hoeffding:
      if (!rule.range_width)
        throw unsupported_rule(
            "hoeffding half-width needs bounded observations; no range "
            "declared");
      return *rule.range_width *
             std::sqrt(std::log(2.0 / (1.0 - rule.gamma)) / (2.0 * n));
    case EpsilonMethod::normal:
      return inverse_normal_cdf(0.5 * (1.0 + rule.gamma)) * rule.sigma /
             std::sqrt(n);
  }
  throw invalid_input("epsilon: unknown method");
}

/// Confidence interval [L_I, L_S] for the hidden parameter, at level
/// gamma. `point` is the midpoint (N/U_N)(mean - baseline); `correction`
/// records the constant already subtracted from the endpoints.
struct IntervalEstimate {
  double lower = 0.0;
  double upper = 0.0;
  double gamma = 0.0;
  EpsilonMethod method = EpsilonMethod::hoeffding;
  std::int64_t horizon = 0;          // N
  double expected_renewals = 0.0;    // U_N
  double point = 0.0;
  double correction = 0.0;           // k
  bool corrected = false;

  double width() const { return upper - lower; }
};

/// Interval of confidence gamma for the hidden parameter:
///   (N/U_N) * (mean - baseline -+ epsilon).
/// baseline is 1/2 for the coin model and M for the square-integrable
/// model. The raw interval is not clamped to any feasible range; use
/// within_feasible_range to flag endpoints that escape it.
inline IntervalEstimate confidence_interval(double sample_mean,
                                            std::int64_t horizon,
                                            double expected_renewals,
                                            double baseline,
                                            const EpsilonRule& rule) {
  if (horizon < 1)
    throw invalid_input("confidence_interval: horizon must be >= 1");
  if (expected_renewals <= 0.0)
    throw non_identifiable(
        "no renewal mass in the horizon: the hidden parameter does not "
        "affect the data");
  const double eps = epsilon(rule, horizon);
  const double scale = double(horizon) / expected_renewals;
  IntervalEstimate est;
  est.gamma = rule.gamma;
  est.method = rule.method;
  est.horizon = horizon;
  est.expected_renewals = expected_renewals;
  est.point = scale * (sample_mean - baseline);
  const double half_width = scale * eps;
  est.lower = est.point - half_width;
  est.upper = est.point + half_width;
  return est;
}

inline bool within_feasible_range(const IntervalEstimate& est, double lo,
                                  double hi) {
  return est.lower >= lo && est.upper <= hi;
}

/// Correction constant k = lim epsilon(gamma,N) * N / U_N.
///
/// Zero when U_N grows strictly faster than sqrt(N); equal to
/// (epsilon*sqrt(N)) / c when U_N ~ c sqrt(N); +infinity (the interval
/// endpoints drift apart from the parameter) when U_N grows slower than
/// sqrt(N), including logarithmically. Transient families have no
/// convergent interval at all and are rejected.
inline double correction_k(const RenewalFamily& family,
                           const EpsilonRule& rule) {
  if (family.recurrence.kind == RecurrenceKind::transient)
    throw divergent_interval("interval does not converge: family " +
                             family.label() + " is transient");
  // epsilon * sqrt(N) is constant in N for every rule; evaluate at N = 1.
  const double scaled_epsilon = epsilon(rule, 1);
  switch (family.growth.kind) {
    case GrowthKind::power:
      if (family.growth.exponent > 0.5 + 1e-9) return 0.0;
      if (family.growth.exponent >= 0.5 - 1e-9)
        return scaled_epsilon / family.growth.constant;
      return std::numeric_limits<double>::infinity();
    case GrowthKind::logarithmic:
      return std::numeric_limits<double>::infinity();
    case GrowthKind::bounded:
      throw divergent_interval("interval does not converge: family " +
                               family.label() + " has bounded U_N");
  }
  throw invalid_input("correction_k: unknown growth kind");
}

/// Shift both endpoints and the midpoint by -k. Correcting twice is an
/// error; the raw interval must be re-derived from the data.
inline IntervalEstimate corrected_interval(const IntervalEstimate& est,
                                           double k) {
  if (est.corrected)
    throw invalid_input(
        "interval already corrected; re-derive the raw interval instead of "
        "correcting twice");
  if (!std::isfinite(k))
    throw invalid_input("correction constant must be finite");
  IntervalEstimate out = est;
  out.lower -= k;
  out.upper -= k;
  out.point -= k;
  out.correction = k;
  out.corrected = true;
  return out;
}

/// Partial sums of u_n^2, the criterion separating the known-bias problem
/// from this one. Purely diagnostic: no decision is attached.
struct HarrisKeaneDiagnostic {
  double partial_sum_sq = 0.0;
  std::vector<double> trajectory;
};

inline HarrisKeaneDiagnostic harris_keane_diagnostic(
    const RenewalProbabilities& u) {
  HarrisKeaneDiagnostic diag;
  diag.trajectory.reserve(std::size_t(u.horizon()));
  double acc = 0.0;
  for (const double un : u.values()) {
    acc += un * un;
    diag.trajectory.push_back(acc);
  }
  diag.partial_sum_sq = acc;
  return diag;
}

}  // namespace renewalci
