#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "renewalci/errors.hpp"
#include "renewalci/rng.hpp"

namespace renewalci {

/// Tolerance applied to probability constraints (non-negativity, partial
/// sums not exceeding one).
inline constexpr double kProbTolerance = 1e-12;

namespace detail {

/// Dot product with four independent accumulators. Keeps a fixed,
/// platform-independent summation order while letting the optimizer
/// overlap the chains.
inline double dot4(const double* a, const double* b, std::int64_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::int64_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

inline void validate_first_renewal_prefix(std::vector<double>& probs) {
  double partial = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] < -kProbTolerance)
      throw invalid_input("first-renewal probability f_" + std::to_string(i + 1) +
                          " is negative");
    if (probs[i] < 0.0) probs[i] = 0.0;
    partial += probs[i];
    if (partial > 1.0 + kProbTolerance)
      throw invalid_input("first-renewal partial sum exceeds 1 at n=" +
                          std::to_string(i + 1));
  }
}

}  // namespace detail

/// Law of the first renewal time T. May be defective (total mass < 1),
/// which models a transient process: with probability 1 - mass the next
/// renewal never happens.
///
/// A distribution is backed either by a stored prefix (f_n = 0 beyond it)
/// or by a generator; generators may carry exact total-mass and
/// mean-recurrence-time metadata, in which case recurrence classification
/// is exact. Values are immutable after construction.
class FirstRenewalDistribution {
 public:
  /// Explicit probabilities f_1..f_len, zero afterwards. Metadata is exact.
  static FirstRenewalDistribution from_prefix(std::vector<double> probs) {
    detail::validate_first_renewal_prefix(probs);
    FirstRenewalDistribution f;
    double mass = 0.0, mu = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      mass += probs[i];
      mu += double(i + 1) * probs[i];
    }
    f.stored_ = std::move(probs);
    f.total_mass_ = std::min(mass, 1.0);
    f.mean_recurrence_time_ =
        mass < 1.0 - kProbTolerance ? std::numeric_limits<double>::infinity()
                                    : mu;
    return f;
  }

  /// Closed-form f_n with exact analytic metadata.
  /// `mean_recurrence_time` may be infinity.
  static FirstRenewalDistribution from_generator(
      std::function<double(std::int64_t)> prob, double total_mass,
      double mean_recurrence_time) {
    if (!(total_mass >= 0.0 && total_mass <= 1.0 + kProbTolerance))
      throw invalid_input("total mass outside [0,1]");
    FirstRenewalDistribution f;
    f.pointwise_ = std::move(prob);
    f.total_mass_ = std::min(total_mass, 1.0);
    f.mean_recurrence_time_ = mean_recurrence_time;
    return f;
  }

  /// Closed-form f_n without metadata; classification of such a
  /// distribution is numeric and may come back flagged undecided.
  static FirstRenewalDistribution from_generator(
      std::function<double(std::int64_t)> prob) {
    FirstRenewalDistribution f;
    f.pointwise_ = std::move(prob);
    return f;
  }

  /// Generator that produces f_1..f_n in one call, for laws whose
  /// pointwise form is expensive (e.g. derived by inverting a closed-form
  /// renewal-probability sequence).
  static FirstRenewalDistribution from_bulk_generator(
      std::function<std::vector<double>(std::int64_t)> prefix_rule,
      double total_mass, double mean_recurrence_time) {
    if (!(total_mass >= 0.0 && total_mass <= 1.0 + kProbTolerance))
      throw invalid_input("total mass outside [0,1]");
    FirstRenewalDistribution f;
    f.bulk_ = std::move(prefix_rule);
    f.total_mass_ = std::min(total_mass, 1.0);
    f.mean_recurrence_time_ = mean_recurrence_time;
    return f;
  }

  /// f_n for n >= 1. For bulk-backed laws this materializes the prefix,
  /// so prefer prefix() when more than one value is needed.
  double prob(std::int64_t n) const {
    if (n < 1) throw invalid_input("first-renewal index must be >= 1");
    if (!stored_.empty() || (!pointwise_ && !bulk_)) {
      return n <= std::int64_t(stored_.size()) ? stored_[std::size_t(n - 1)]
                                               : 0.0;
    }
    if (pointwise_) return pointwise_(n);
    return bulk_(n).back();
  }

  /// Validated f_1..f_n (index i holds f_{i+1}).
  std::vector<double> prefix(std::int64_t n) const {
    if (n < 1) throw invalid_input("prefix length must be >= 1");
    std::vector<double> out;
    if (bulk_) {
      out = bulk_(n);
      if (std::int64_t(out.size()) != n)
        throw invalid_input("bulk first-renewal rule returned wrong length");
    } else if (pointwise_) {
      out.resize(std::size_t(n));
      for (std::int64_t i = 1; i <= n; ++i) out[std::size_t(i - 1)] = pointwise_(i);
    } else {
      out.assign(stored_.begin(),
                 stored_.begin() + std::min<std::size_t>(stored_.size(),
                                                         std::size_t(n)));
      out.resize(std::size_t(n), 0.0);
    }
    detail::validate_first_renewal_prefix(out);
    return out;
  }

  bool has_exact_metadata() const { return total_mass_.has_value(); }

  /// Total probability that a renewal ever happens. Less than 1 marks a
  /// transient process.
  double total_mass() const {
    if (!total_mass_)
      throw invalid_input("total mass unknown for this distribution");
    return *total_mass_;
  }

  /// mu = E(T); infinity for null recurrent and transient processes.
  double mean_recurrence_time() const {
    if (!mean_recurrence_time_)
      throw invalid_input("mean recurrence time unknown for this distribution");
    return *mean_recurrence_time_;
  }

  /// Empty placeholder (no renewal mass); assign a factory result over it.
  FirstRenewalDistribution() = default;

 private:
  std::vector<double> stored_;
  std::function<double(std::int64_t)> pointwise_;
  std::function<std::vector<double>(std::int64_t)> bulk_;
  std::optional<double> total_mass_;
  std::optional<double> mean_recurrence_time_;
};

/// Renewal probabilities u_1..u_N and their running sums U_1..U_N.
/// Sequences are 1-indexed through at()/cumulative_at(); u_0 = 1 is a
/// convention of the recurrence, not an element.
class RenewalProbabilities {
 public:
  static RenewalProbabilities from_values(std::vector<double> u) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (u[i] < -kProbTolerance || u[i] > 1.0 + kProbTolerance)
        throw invalid_input("renewal probability u_" + std::to_string(i + 1) +
                            " outside [0,1]");
    }
    RenewalProbabilities r;
    r.u_ = std::move(u);
    r.cumulative_.resize(r.u_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < r.u_.size(); ++i) {
      acc += r.u_[i];
      r.cumulative_[i] = acc;
    }
    return r;
  }

  std::int64_t horizon() const { return std::int64_t(u_.size()); }

  double at(std::int64_t n) const {
    check_index(n);
    return u_[std::size_t(n - 1)];
  }

  double cumulative_at(std::int64_t n) const {
    check_index(n);
    return cumulative_[std::size_t(n - 1)];
  }

  std::span<const double> values() const { return u_; }
  std::span<const double> cumulative() const { return cumulative_; }

 private:
  RenewalProbabilities() = default;
  void check_index(std::int64_t n) const {
    if (n < 1 || n > horizon())
      throw invalid_input("renewal index " + std::to_string(n) +
                          " outside horizon " + std::to_string(horizon()));
  }

  std::vector<double> u_;
  std::vector<double> cumulative_;
};

/// u_n = sum_{k=1..n} f_k u_{n-k} with u_0 = 1, evaluated for n = 1..N.
///
/// Straight O(N^2) evaluation of the recurrence. A mirrored copy of u is
/// kept so both operands of the inner products are contiguous forward
/// ranges.
inline RenewalProbabilities u_from_f(const FirstRenewalDistribution& f,
                                     std::int64_t horizon) {
  if (horizon < 1) throw invalid_input("horizon must be >= 1");
  const std::vector<double> fp = f.prefix(horizon);
  const std::int64_t N = horizon;
  std::vector<double> u(std::size_t(N), 0.0);
  std::vector<double> mirrored(std::size_t(N + 1), 0.0);
  mirrored[std::size_t(N)] = 1.0;  // u_0
  for (std::int64_t n = 1; n <= N; ++n) {
    // sum_k f_k * u_{n-k}: f ascending against u descending, i.e. the
    // mirrored array ascending from position N-n+1.
    const double value =
        detail::dot4(fp.data(), mirrored.data() + (N - n + 1), n);
    u[std::size_t(n - 1)] = value;
    mirrored[std::size_t(N - n)] = value;
  }
  return RenewalProbabilities::from_values(std::move(u));
}

/// Inverse of u_from_f: recover f_1..f_N from u_1..u_N via
/// f_n = u_n - sum_{k=1..n-1} f_k u_{n-k}.
///
/// Throws inconsistent_sequence if the input admits no first-renewal law
/// (negative mass or total mass above one shows up in the inversion).
inline FirstRenewalDistribution f_from_u(const RenewalProbabilities& u) {
  const std::int64_t N = u.horizon();
  const std::span<const double> uv = u.values();
  std::vector<double> f(std::size_t(N), 0.0);
  std::vector<double> mirrored(std::size_t(N), 0.0);  // mirrored[N-k] = f_k
  double mass = 0.0;
  for (std::int64_t n = 1; n <= N; ++n) {
    // sum_{k=1..n-1} f_k u_{n-k} = dot(mirrored[N-n+1..], u[0..n-2])
    const double conv =
        n > 1 ? detail::dot4(mirrored.data() + (N - n + 1), uv.data(), n - 1)
              : 0.0;
    double fn = uv[std::size_t(n - 1)] - conv;
    if (fn < -kProbTolerance)
      throw inconsistent_sequence(
          "not a renewal-probability sequence: inversion gives f_" +
          std::to_string(n) + " = " + std::to_string(fn));
    if (fn < 0.0) fn = 0.0;
    mass += fn;
    if (mass > 1.0 + kProbTolerance)
      throw inconsistent_sequence(
          "not a renewal-probability sequence: first-renewal mass exceeds 1 "
          "at n=" +
          std::to_string(n));
    f[std::size_t(n - 1)] = fn;
    mirrored[std::size_t(N - n)] = fn;
  }
  return FirstRenewalDistribution::from_prefix(std::move(f));
}

enum class RecurrenceKind { positive_recurrent, null_recurrent, transient };

inline const char* to_string(RecurrenceKind k) {
  switch (k) {
    case RecurrenceKind::positive_recurrent: return "positive_recurrent";
    case RecurrenceKind::null_recurrent: return "null_recurrent";
    case RecurrenceKind::transient: return "transient";
  }
  return "?";
}

struct RecurrenceEvidence {
  /// Mass not accounted for by the truncated sum (0 when metadata exact).
  double truncated_tail_mass = 0.0;
  /// Partial sums of n*f_n at geometrically spaced checkpoints.
  std::vector<std::pair<std::int64_t, double>> mu_trajectory;
};

struct RecurrenceClass {
  RecurrenceKind kind = RecurrenceKind::positive_recurrent;
  /// Mean recurrence time; infinity unless positive recurrent.
  double mean_recurrence_time = 0.0;
  /// Set when only a truncated numeric prefix was available and the
  /// unaccounted tail mass exceeds 1e-9; the reported kind is then a
  /// best guess, not authoritative.
  bool undecided = false;
  RecurrenceEvidence evidence;
};

/// Classify a first-renewal law as positive recurrent (mass 1, finite mu),
/// null recurrent (mass 1, infinite mu) or transient (mass < 1).
///
/// With exact metadata the classification is exact. Otherwise the sums
/// are truncated at tail_horizon; the undecided flag is raised when the
/// truncated tail mass exceeds 1e-9, and the positive/null split relies
/// on the observed flattening of the mu partial sums.
inline RecurrenceClass classify(const FirstRenewalDistribution& f,
                                std::int64_t tail_horizon) {
  if (tail_horizon < 1) throw invalid_input("tail horizon must be >= 1");

  RecurrenceClass result;
  double mass = 0.0, mu = 0.0, mu_half = 0.0;
  std::int64_t next_checkpoint = 1;
  const std::vector<double> fp = f.prefix(tail_horizon);
  for (std::int64_t n = 1; n <= tail_horizon; ++n) {
    const double fn = fp[std::size_t(n - 1)];
    mass += fn;
    mu += double(n) * fn;
    if (n == tail_horizon / 2) mu_half = mu;
    if (n == next_checkpoint || n == tail_horizon) {
      result.evidence.mu_trajectory.emplace_back(n, mu);
      next_checkpoint *= 2;
    }
  }
  result.evidence.truncated_tail_mass = std::max(0.0, 1.0 - mass);

  if (f.has_exact_metadata()) {
    const double total = f.total_mass();
    const double mexact = f.mean_recurrence_time();
    if (total < 1.0 - kProbTolerance) {
      result.kind = RecurrenceKind::transient;
      result.mean_recurrence_time = std::numeric_limits<double>::infinity();
    } else if (std::isfinite(mexact)) {
      result.kind = RecurrenceKind::positive_recurrent;
      result.mean_recurrence_time = mexact;
    } else {
      result.kind = RecurrenceKind::null_recurrent;
      result.mean_recurrence_time = std::numeric_limits<double>::infinity();
    }
    result.evidence.truncated_tail_mass = 0.0;
    return result;
  }

  constexpr double kTailTolerance = 1e-9;
  result.undecided = result.evidence.truncated_tail_mass > kTailTolerance;
  if (result.undecided) {
    // Mass visibly short of one: transient is the face-value reading.
    result.kind = RecurrenceKind::transient;
    result.mean_recurrence_time = std::numeric_limits<double>::infinity();
    return result;
  }
  // Mass numerically one; split on whether the mu partial sums have
  // flattened over the second half of the horizon.
  const bool mu_converged = mu - mu_half <= 1e-6 * std::max(1.0, mu);
  if (mu_converged) {
    result.kind = RecurrenceKind::positive_recurrent;
    result.mean_recurrence_time = mu;
  } else {
    result.kind = RecurrenceKind::null_recurrent;
    result.mean_recurrence_time = std::numeric_limits<double>::infinity();
  }
  return result;
}

/// Reusable sampler of renewal indicator sequences over a fixed horizon.
/// Draws i.i.d. inter-arrival gaps from f by inverse CDF; a draw beyond
/// the accumulated mass (defective case) or beyond the remaining window
/// ends the sequence.
class RenewalSampler {
 public:
  RenewalSampler(const FirstRenewalDistribution& f, std::int64_t horizon)
      : cdf_(std::size_t(horizon) + 1, 0.0) {
    const std::vector<double> fp = f.prefix(horizon);
    double acc = 0.0;
    for (std::int64_t n = 1; n <= horizon; ++n) {
      acc += fp[std::size_t(n - 1)];
      cdf_[std::size_t(n)] = acc;
    }
  }

  std::int64_t horizon() const { return std::int64_t(cdf_.size()) - 1; }

  /// Fill `delta` (resized to the horizon) with the indicator sequence.
  void sample(RandomStream& stream, std::vector<std::uint8_t>& delta) const {
    const std::int64_t N = horizon();
    delta.assign(std::size_t(N), 0);
    std::int64_t pos = 0;
    while (pos < N) {
      const double v = stream.next_double();
      const std::int64_t remaining = N - pos;
      if (v > cdf_[std::size_t(remaining)]) break;
      const auto it = std::lower_bound(cdf_.begin() + 1,
                                       cdf_.begin() + 1 + remaining, v);
      pos += std::int64_t(it - cdf_.begin());
      delta[std::size_t(pos - 1)] = 1;
    }
  }

 private:
  std::vector<double> cdf_;  // cdf_[n] = F(n), cdf_[0] = 0
};

/// One-shot convenience around RenewalSampler.
inline std::vector<std::uint8_t> sample_renewals(
    const FirstRenewalDistribution& f, std::int64_t horizon,
    RandomStream& stream) {
  RenewalSampler sampler(f, horizon);
  std::vector<std::uint8_t> delta;
  sampler.sample(stream, delta);
  return delta;
}

}  // namespace renewalci
