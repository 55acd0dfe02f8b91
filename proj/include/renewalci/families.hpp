#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "renewalci/errors.hpp"
#include "renewalci/renewal.hpp"
#include "renewalci/stats.hpp"

namespace renewalci {

enum class GrowthKind { power, logarithmic, bounded };

/// Asymptotic growth of the expected renewal count:
///   power:       U_N ~ constant * N^exponent
///   logarithmic: U_N ~ constant * ln N
///   bounded:     U_N -> constant (transient)
struct GrowthRecord {
  GrowthKind kind = GrowthKind::power;
  double exponent = 1.0;
  double constant = 1.0;
};

/// A named renewal process with closed forms attached: the first-renewal
/// law, optionally a closed-form u_n, the analytic growth of U_N and the
/// exact recurrence class. Entries are immutable and the generators are
/// pure, so families can be shared freely across threads.
struct RenewalFamily {
  std::string name;
  std::map<std::string, double> parameters;
  FirstRenewalDistribution first_renewal;
  std::function<double(std::int64_t)> closed_form_u;  // may be empty
  GrowthRecord growth;
  RecurrenceClass recurrence;

  bool has_closed_form_u() const { return bool(closed_form_u); }

  /// u_1..u_N and cumulative sums, from the closed form when one exists,
  /// otherwise through the convolution recurrence.
  RenewalProbabilities renewal_probabilities(std::int64_t horizon) const {
    if (horizon < 1) throw invalid_input("horizon must be >= 1");
    if (!closed_form_u) return u_from_f(first_renewal, horizon);
    std::vector<double> u(static_cast<std::size_t>(horizon));
    for (std::int64_t n = 1; n <= horizon; ++n)
      u[std::size_t(n - 1)] = closed_form_u(n);
    return RenewalProbabilities::from_values(std::move(u));
  }

  std::string label() const {
    std::ostringstream os;
    os << name;
    if (!parameters.empty()) {
      os << '(';
      bool first = true;
      for (const auto& [key, value] : parameters) {
        if (!first) os << ',';
        os << key << '=' << value;
        first = false;
      }
      os << ')';
    }
    return os.str();
  }
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline RecurrenceClass exact_class(RecurrenceKind kind, double mu) {
  RecurrenceClass c;
  c.kind = kind;
  c.mean_recurrence_time = mu;
  c.undecided = false;
  return c;
}

/// Probability that a simple random walk on Z sits at the origin after n
/// steps: C(n, n/2) 2^-n for even n, 0 otherwise. Evaluated in log space.
inline double srw_z_return_prob(std::int64_t n) {
  if (n <= 0 || n % 2 != 0) return 0.0;
  const std::int64_t m = n / 2;
  return std::exp(log_binomial(2 * m, m) - double(2 * m) * std::log(2.0));
}

/// First-return law of the walk on Z: f_{2m} = u_{2m} / (2m - 1).
inline double srw_z_first_return_prob(std::int64_t n) {
  if (n <= 0 || n % 2 != 0) return 0.0;
  return srw_z_return_prob(n) / double(n - 1);
}

/// zeta(s) for s > 1 by direct summation plus Euler-Maclaurin tail,
/// cached because the power-law family normalizes against it repeatedly.
inline double riemann_zeta(double s) {
  static std::map<double, double> cache;
  static std::mutex mutex;
  {
    std::lock_guard<std::mutex> lock(mutex);
    if (const auto it = cache.find(s); it != cache.end()) return it->second;
  }
  constexpr int kTerms = 20000;
  double acc = 0.0;
  for (int n = 1; n <= kTerms; ++n) acc += std::pow(double(n), -s);
  const double m = double(kTerms);
  acc += std::pow(m, 1.0 - s) / (s - 1.0) - 0.5 * std::pow(m, -s) +
         s * std::pow(m, -s - 1.0) / 12.0;
  std::lock_guard<std::mutex> lock(mutex);
  cache.emplace(s, acc);
  return acc;
}

inline double require_param(const std::map<std::string, double>& params,
                            const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

inline void reject_unknown_params(const std::map<std::string, double>& params,
                                  std::initializer_list<const char*> known,
                                  const std::string& family) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok)
      throw invalid_input("unknown parameter '" + key + "' for family " +
                          family);
  }
}

}  // namespace detail

/// Polya return probability of the simple random walk on Z^3; used as the
/// defective-mass preset standing in for walks in dimension three.
inline constexpr double kPolyaReturnMassD3 = 0.340537329550999;

/// Build a family by name. Supported names and parameters:
///   bernoulli(p)              renewal at each step with probability p
///   srw_z                     returns to the origin of a simple random walk on Z
///   srw_z2                    same walk on Z^2
///   srw_z3                    defective stand-in for Z^3 (Polya mass)
///   defective_geometric(p, mass)   geometric gaps, total renewal mass < 1
///   powerlaw_tail(beta)       f_n proportional to n^-(1+beta), 0 < beta < 1
inline RenewalFamily make_family(std::string_view name,
                                 const std::map<std::string, double>& params = {}) {
  using detail::kInf;
  RenewalFamily fam;
  fam.name = std::string(name);

  if (name == "bernoulli") {
    detail::reject_unknown_params(params, {"p"}, fam.name);
    const double p = detail::require_param(params, "p", 0.5);
    if (!(p > 0.0 && p <= 1.0))
      throw invalid_input("bernoulli: p must be in (0,1]");
    fam.parameters = {{"p", p}};
    fam.first_renewal = FirstRenewalDistribution::from_generator(
        [p](std::int64_t n) { return p * std::pow(1.0 - p, double(n - 1)); },
        1.0, 1.0 / p);
    fam.closed_form_u = [p](std::int64_t) { return p; };
    fam.growth = {GrowthKind::power, 1.0, p};
    fam.recurrence =
        detail::exact_class(RecurrenceKind::positive_recurrent, 1.0 / p);
    return fam;
  }

  if (name == "srw_z") {
    detail::reject_unknown_params(params, {}, fam.name);
    fam.first_renewal = FirstRenewalDistribution::from_generator(
        &detail::srw_z_first_return_prob, 1.0, kInf);
    fam.closed_form_u = &detail::srw_z_return_prob;
    fam.growth = {GrowthKind::power, 0.5, std::sqrt(2.0 / M_PI)};
    fam.recurrence = detail::exact_class(RecurrenceKind::null_recurrent, kInf);
    return fam;
  }

  if (name == "srw_z2") {
    detail::reject_unknown_params(params, {}, fam.name);
    // u_n is the square of the one-dimensional return probability; the
    // first-return law has no closed form and is recovered by inverting
    // the recurrence on the u prefix.
    fam.closed_form_u = [](std::int64_t n) {
      const double v = detail::srw_z_return_prob(n);
      return v * v;
    };
    auto u_rule = fam.closed_form_u;
    fam.first_renewal = FirstRenewalDistribution::from_bulk_generator(
        [u_rule](std::int64_t n) {
          std::vector<double> u(static_cast<std::size_t>(n));
          for (std::int64_t i = 1; i <= n; ++i) u[std::size_t(i - 1)] = u_rule(i);
          return f_from_u(RenewalProbabilities::from_values(std::move(u)))
              .prefix(n);
        },
        1.0, kInf);
    fam.growth = {GrowthKind::logarithmic, 0.0, 1.0 / M_PI};
    fam.recurrence = detail::exact_class(RecurrenceKind::null_recurrent, kInf);
    return fam;
  }

  if (name == "defective_geometric" || name == "srw_z3") {
    const bool preset = name == "srw_z3";
    detail::reject_unknown_params(params, preset
                                              ? std::initializer_list<const char*>{}
                                              : std::initializer_list<const char*>{"p", "mass"},
                                  fam.name);
    const double p = preset ? 0.5 : detail::require_param(params, "p", 0.5);
    const double mass =
        preset ? kPolyaReturnMassD3 : detail::require_param(params, "mass", 0.9);
    if (!(p > 0.0 && p <= 1.0))
      throw invalid_input(fam.name + ": p must be in (0,1]");
    if (!(mass > 0.0 && mass < 1.0))
      throw invalid_input(fam.name + ": mass must be in (0,1)");
    fam.parameters = {{"p", p}, {"mass", mass}};
    fam.first_renewal = FirstRenewalDistribution::from_generator(
        [p, mass](std::int64_t n) {
          return mass * p * std::pow(1.0 - p, double(n - 1));
        },
        mass, kInf);
    // Generating functions give u_n = mass*p*(1-p+mass*p)^(n-1); the total
    // renewal count is geometric with mean mass/(1-mass).
    fam.closed_form_u = [p, mass](std::int64_t n) {
      return mass * p * std::pow(1.0 - p + mass * p, double(n - 1));
    };
    fam.growth = {GrowthKind::bounded, 0.0, mass / (1.0 - mass)};
    fam.recurrence = detail::exact_class(RecurrenceKind::transient, kInf);
    return fam;
  }

  if (name == "powerlaw_tail") {
    detail::reject_unknown_params(params, {"beta"}, fam.name);
    const double beta = detail::require_param(params, "beta", 0.75);
    if (!(beta > 0.0 && beta < 1.0))
      throw invalid_input("powerlaw_tail: beta must be in (0,1)");
    fam.parameters = {{"beta", beta}};
    const double norm = 1.0 / detail::riemann_zeta(1.0 + beta);
    fam.first_renewal = FirstRenewalDistribution::from_generator(
        [norm, beta](std::int64_t n) {
          return norm * std::pow(double(n), -(1.0 + beta));
        },
        1.0, kInf);
    // Tauberian growth constant: U_N ~ sin(pi beta)/(pi C) * N^beta with
    // C the normalizing constant, i.e. zeta(1+beta) sin(pi beta)/pi.
    fam.growth = {GrowthKind::power, beta,
                  detail::riemann_zeta(1.0 + beta) * std::sin(M_PI * beta) / M_PI};
    fam.recurrence = detail::exact_class(RecurrenceKind::null_recurrent, kInf);
    return fam;
  }

  throw unknown_family("unknown renewal family: " + fam.name);
}

/// Default-parameterized instances of every built-in family.
inline std::vector<RenewalFamily> family_catalog() {
  std::vector<RenewalFamily> catalog;
  catalog.push_back(make_family("bernoulli"));
  catalog.push_back(make_family("srw_z"));
  catalog.push_back(make_family("srw_z2"));
  catalog.push_back(make_family("srw_z3"));
  catalog.push_back(make_family("defective_geometric"));
  catalog.push_back(make_family("powerlaw_tail"));
  return catalog;
}

struct GrowthFit {
  double beta_hat = 0.0;
  double c_hat = 0.0;
  double r2 = 0.0;
};

/// Inclusive 1-based index range.
struct IndexWindow {
  std::int64_t first = 1;
  std::int64_t last = 1;
};

/// Least-squares fit of ln U_N against ln N over a window of the
/// cumulative sequence (cumulative[i] = U_{i+1}). beta_hat estimates the
/// growth exponent; a constant window fits slope 0, the transient
/// signature.
inline GrowthFit growth_exponent_fit(std::span<const double> cumulative,
                                     IndexWindow window) {
  if (window.first < 1 || window.last > std::int64_t(cumulative.size()) ||
      window.first > window.last)
    throw invalid_input("growth_exponent_fit: window outside horizon");
  const std::int64_t count = window.last - window.first + 1;
  if (count < 10)
    throw invalid_input("growth_exponent_fit: need at least 10 points");
  std::vector<double> lx(static_cast<std::size_t>(count));
  std::vector<double> ly(static_cast<std::size_t>(count));
  for (std::int64_t n = window.first; n <= window.last; ++n) {
    const double value = cumulative[std::size_t(n - 1)];
    if (!(value > 0.0))
      throw invalid_input("growth_exponent_fit: U_N must be positive");
    lx[std::size_t(n - window.first)] = std::log(double(n));
    ly[std::size_t(n - window.first)] = std::log(value);
  }
  const LinearFit fit = fit_line(lx, ly);
  return GrowthFit{fit.slope, std::exp(fit.intercept), fit.r2};
}

inline GrowthFit growth_exponent_fit(const RenewalProbabilities& u,
                                     IndexWindow window) {
  return growth_exponent_fit(u.cumulative(), window);
}

}  // namespace renewalci
