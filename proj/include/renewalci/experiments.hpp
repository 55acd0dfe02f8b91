#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"
#include "renewalci/csv.hpp"
#include "renewalci/estimation.hpp"
#include "renewalci/families.hpp"
#include "renewalci/observation.hpp"
#include "renewalci/renewal.hpp"
#include "renewalci/rng.hpp"
#include "renewalci/stats.hpp"

namespace renewalci {

/// One Monte Carlo experiment: a renewal family, an observation model
/// holding the hidden truth, a half-width rule, horizons and a trial
/// budget. `threads` is an execution knob only — it never changes the
/// results and is not part of the artifact echo.
struct ExperimentConfig {
  std::string family_name;
  std::map<std::string, double> family_params;
  std::variant<CoinModel, L2Model> model = CoinModel{};
  EpsilonMethod method = EpsilonMethod::hoeffding;
  double gamma = 0.95;
  std::vector<std::int64_t> horizons;
  std::int64_t trials = 0;
  std::uint64_t master_seed = 0;
  bool apply_k = false;
  int threads = 1;

  ModelTag model_tag() const {
    return std::holds_alternative<CoinModel>(model) ? ModelTag::coin
                                                    : ModelTag::l2;
  }

  /// Hidden truth (theta or delta); simulator/oracle side only.
  double truth() const {
    return model_tag() == ModelTag::coin ? std::get<CoinModel>(model).theta
                                         : std::get<L2Model>(model).shift;
  }

  double baseline() const {
    return model_tag() == ModelTag::coin ? 0.5
                                         : std::get<L2Model>(model).base_mean;
  }

  EpsilonRule rule() const {
    return model_tag() == ModelTag::coin
               ? EpsilonRule::for_model(method, gamma, std::get<CoinModel>(model))
               : EpsilonRule::for_model(method, gamma, std::get<L2Model>(model));
  }

  void validate() const {
    if (trials < 1) throw invalid_input("experiment: trials must be >= 1");
    if (horizons.empty())
      throw invalid_input("experiment: at least one horizon required");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      if (horizons[i] < 1)
        throw invalid_input("experiment: horizons must be positive");
      if (i > 0 && horizons[i] <= horizons[i - 1])
        throw invalid_input("experiment: horizons must be strictly increasing");
    }
    if (!(gamma > 0.0 && gamma < 1.0))
      throw invalid_input("experiment: gamma must be in (0,1)");
    if (model_tag() == ModelTag::coin)
      std::get<CoinModel>(model).validate();
    else
      std::get<L2Model>(model).validate();
    epsilon(rule(), horizons.front());  // rejects unsupported rule/model pairs
  }
};

struct TrialRecord {
  std::int64_t horizon = 0;
  std::int64_t trial = 0;
  bool ok = false;
  std::string error;          // set when !ok
  IntervalEstimate estimate;  // valid when ok
  bool covered = false;
};

struct HorizonSummary {
  std::int64_t horizon = 0;
  std::int64_t trials = 0;
  std::int64_t failures = 0;
  double expected_renewals = 0.0;
  double coverage = 0.0;
  double coverage_se = 0.0;
  double mean_width = 0.0;
  double mean_abs_error = 0.0;
  double p90_abs_error = 0.0;
  /// epsilon(gamma,N) * N / U_N — the finite-N value of the correction
  /// constant's defining ratio.
  double k_ratio = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  /// Correction constant for this family/rule; unset when the family is
  /// transient or the growth condition fails (then the per-trial records
  /// carry the failure).
  std::optional<double> correction;
  std::vector<TrialRecord> trials;  // ordered by (horizon, trial)
  std::vector<HorizonSummary> summaries;

  nlohmann::ordered_json to_json() const;
  void write_trials_csv(std::ostream& os) const;
};

namespace detail {

inline nlohmann::ordered_json model_to_json(
    const std::variant<CoinModel, L2Model>& model) {
  nlohmann::ordered_json j;
  if (std::holds_alternative<CoinModel>(model)) {
    j["kind"] = "coin";
    j["theta"] = std::get<CoinModel>(model).theta;
  } else {
    const L2Model& m = std::get<L2Model>(model);
    j["kind"] = "l2";
    j["m"] = m.base_mean;
    j["delta"] = m.shift;
    j["sigma_w"] = m.sigma_w;
    j["shape"] = to_string(m.shape);
    if (m.bounds) j["bounds"] = {m.bounds->first, m.bounds->second};
  }
  return j;
}

/// Number formatted through the shortest-round-trip path so JSON bytes do
/// not depend on the producing thread count or platform defaults.
inline nlohmann::ordered_json json_number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace detail

inline nlohmann::ordered_json ExperimentResult::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json jc;
  jc["family"]["name"] = config.family_name;
  for (const auto& [key, value] : config.family_params)
    jc["family"][key] = value;
  jc["model"] = detail::model_to_json(config.model);
  jc["rule"] = {{"method", to_string(config.method)}, {"gamma", config.gamma}};
  jc["horizons"] = config.horizons;
  jc["trials"] = config.trials;
  jc["seed"] = config.master_seed;
  jc["apply_k"] = config.apply_k;
  j["config"] = std::move(jc);
  j["correction_k"] =
      correction ? detail::json_number(*correction) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  std::int64_t total_failures = 0;
  for (const HorizonSummary& s : summaries) {
    total_failures += s.failures;
    nlohmann::ordered_json row;
    row["horizon"] = s.horizon;
    row["trials"] = s.trials;
    row["failures"] = s.failures;
    row["U_N"] = detail::json_number(s.expected_renewals);
    row["coverage"] = detail::json_number(s.coverage);
    row["coverage_se"] = detail::json_number(s.coverage_se);
    row["mean_width"] = detail::json_number(s.mean_width);
    row["mean_abs_error"] = detail::json_number(s.mean_abs_error);
    row["p90_abs_error"] = detail::json_number(s.p90_abs_error);
    row["k_ratio"] = detail::json_number(s.k_ratio);
    rows.push_back(std::move(row));
  }
  j["horizons"] = std::move(rows);
  j["total_failures"] = total_failures;
  return j;
}

inline void ExperimentResult::write_trials_csv(std::ostream& os) const {
  os << "horizon,trial,lower,upper,point,covered,width\n";
  for (const TrialRecord& t : trials) {
    if (!t.ok) continue;  // failures are summarized in the JSON artifact
    os << t.horizon << ',' << t.trial << ',' << format_double(t.estimate.lower)
       << ',' << format_double(t.estimate.upper) << ','
       << format_double(t.estimate.point) << ',' << (t.covered ? 1 : 0) << ','
       << format_double(t.estimate.width()) << '\n';
  }
}

namespace detail {

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const RenewalFamily family =
      make_family(config.family_name, config.family_params);
  const EpsilonRule rule = config.rule();
  const double baseline = config.baseline();
  const double truth = config.truth();

  ExperimentResult result;
  result.config = config;

  // The correction constant is a property of (family, rule); resolve it
  // once. Failures become per-trial outcomes, not aborts.
  std::string correction_error;
  double correction_value = 0.0;
  if (config.apply_k) {
    try {
      correction_value = correction_k(family, rule);
      if (!std::isfinite(correction_value))
        correction_error =
            "correction constant does not converge for this family";
      else
        result.correction = correction_value;
    } catch (const error& e) {
      correction_error = e.what();
    }
  } else {
    try {
      const double k = correction_k(family, rule);
      if (std::isfinite(k)) result.correction = k;
    } catch (const error&) {
      // transient: leave unset
    }
  }

  result.trials.resize(std::size_t(config.horizons.size()) *
                       std::size_t(config.trials));

  std::size_t slot_base = 0;
  for (const std::int64_t horizon : config.horizons) {
    const RenewalProbabilities u = family.renewal_probabilities(horizon);
    const double expected_renewals = u.cumulative_at(horizon);
    const RenewalSampler sampler(family.first_renewal, horizon);

    const auto run_trial = [&](std::int64_t trial_index) {
      TrialRecord record;
      record.horizon = horizon;
      record.trial = trial_index;
      RandomStream stream = RandomStream::substream(
          config.master_seed, std::uint64_t(horizon),
          std::uint64_t(trial_index));
      try {
        std::vector<std::uint8_t> delta;
        sampler.sample(stream, delta);
        const ObservationRun run =
            config.model_tag() == ModelTag::coin
                ? sample_coin_run(delta, std::get<CoinModel>(config.model),
                                  stream)
                : sample_l2_run(delta, std::get<L2Model>(config.model), stream);
        IntervalEstimate est = confidence_interval(
            run.sample_mean, horizon, expected_renewals, baseline, rule);
        if (config.apply_k) {
          if (!correction_error.empty()) throw divergent_interval(correction_error);
          est = corrected_interval(est, correction_value);
        }
        record.estimate = est;
        record.covered = est.lower <= truth && truth <= est.upper;
        record.ok = true;
      } catch (const std::exception& e) {
        record.ok = false;
        record.error = e.what();
      }
      return record;
    };

    const int workers =
        int(std::min<std::int64_t>(std::max(1, config.threads), config.trials));
    if (workers <= 1) {
      for (std::int64_t t = 0; t < config.trials; ++t)
        result.trials[slot_base + std::size_t(t)] = run_trial(t);
    } else {
      std::atomic<std::int64_t> next{0};
      std::vector<std::thread> pool;
      pool.reserve(std::size_t(workers));
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::int64_t t = next.fetch_add(1); t < config.trials;
               t = next.fetch_add(1))
            result.trials[slot_base + std::size_t(t)] = run_trial(t);
        });
      }
      for (std::thread& th : pool) th.join();
    }

    // Aggregate in trial order so the artifact does not depend on the
    // number of workers.
    HorizonSummary summary;
    summary.horizon = horizon;
    summary.trials = config.trials;
    summary.expected_renewals = expected_renewals;
    summary.k_ratio =
        epsilon(rule, horizon) * double(horizon) / expected_renewals;
    std::int64_t covered = 0, ok_count = 0;
    double width_sum = 0.0, abs_err_sum = 0.0;
    std::vector<double> abs_errors;
    abs_errors.reserve(std::size_t(config.trials));
    for (std::int64_t t = 0; t < config.trials; ++t) {
      const TrialRecord& rec = result.trials[slot_base + std::size_t(t)];
      if (!rec.ok) continue;
      ++ok_count;
      covered += rec.covered ? 1 : 0;
      width_sum += rec.estimate.width();
      const double err = std::fabs(rec.estimate.point - truth);
      abs_err_sum += err;
      abs_errors.push_back(err);
    }
    summary.failures = config.trials - ok_count;
    if (ok_count > 0) {
      summary.coverage = double(covered) / double(ok_count);
      summary.coverage_se = std::sqrt(
          summary.coverage * (1.0 - summary.coverage) / double(ok_count));
      summary.mean_width = width_sum / double(ok_count);
      summary.mean_abs_error = abs_err_sum / double(ok_count);
      summary.p90_abs_error = quantile(std::move(abs_errors), 0.9);
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      summary.coverage = summary.coverage_se = summary.mean_width =
          summary.mean_abs_error = summary.p90_abs_error = nan;
    }
    result.summaries.push_back(std::move(summary));
    slot_base += std::size_t(config.trials);
  }
  return result;
}

}  // namespace detail

/// Trajectory study: per-horizon interval widths, midpoint errors and the
/// k-ratio, for checking which growth regime the family sits in.
inline ExperimentResult run_convergence_sweep(const ExperimentConfig& config) {
  return detail::run_experiment(config);
}

/// Coverage study: fraction of intervals containing the hidden truth per
/// horizon, with binomial standard errors.
inline ExperimentResult run_coverage_study(const ExperimentConfig& config) {
  return detail::run_experiment(config);
}

/// Combined verdict on the interval-convergence condition.
struct ConditionReport {
  GrowthFit fit;
  RecurrenceClass recurrence;
  bool condition_met = false;
  /// "satisfied", "violated-null-recurrent" or "violated-transient".
  std::string verdict;
  std::vector<std::pair<std::int64_t, double>> k_trajectory;
};

/// Classify a family against the growth condition: recurrent with a
/// fitted exponent in [0.45, 1.05] is satisfied; recurrent but slower
/// (logarithmic U_N shows up as a near-zero exponent) is
/// violated-null-recurrent; transient families never converge.
inline ConditionReport run_condition_classifier(
    const RenewalFamily& family, std::span<const std::int64_t> horizons,
    const EpsilonRule& rule = EpsilonRule::coin(EpsilonMethod::hoeffding,
                                                0.95)) {
  if (horizons.empty())
    throw invalid_input("condition classifier: need at least one horizon");
  std::int64_t n_max = 0;
  for (const std::int64_t h : horizons) {
    if (h <= n_max)
      throw invalid_input("condition classifier: horizons must be increasing");
    n_max = h;
  }
  if (n_max < 100)
    throw invalid_input("condition classifier: need a horizon of at least 100");

  ConditionReport report;
  report.recurrence = family.recurrence;
  const RenewalProbabilities u = family.renewal_probabilities(n_max);
  // Fit over the last decade: early indices carry the pre-asymptotic
  // regime and zero entries (periodic walks have u_n = 0 at odd n, but
  // U_N > 0 from n = 2 on).
  IndexWindow window{std::max<std::int64_t>(10, n_max / 10), n_max};
  report.fit = growth_exponent_fit(u, window);
  for (const std::int64_t h : horizons)
    report.k_trajectory.emplace_back(
        h, epsilon(rule, h) * double(h) / u.cumulative_at(h));

  if (report.recurrence.kind == RecurrenceKind::transient) {
    report.verdict = "violated-transient";
  } else if (report.fit.beta_hat >= 0.45 && report.fit.beta_hat <= 1.05) {
    report.verdict = "satisfied";
    report.condition_met = true;
  } else {
    report.verdict = "violated-null-recurrent";
  }
  return report;
}

}  // namespace renewalci
