#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "renewalci/families.hpp"
#include "renewalci/renewal.hpp"
#include "renewalci/rng.hpp"
#include "renewalci/stats.hpp"

using namespace renewalci;
using Catch::Matchers::WithinAbs;

namespace {

FirstRenewalDistribution geometric_f(double p) {
  return FirstRenewalDistribution::from_generator(
      [p](std::int64_t n) { return p * std::pow(1.0 - p, double(n - 1)); }, 1.0,
      1.0 / p);
}

}  // namespace

TEST_CASE("certain renewal: f=(1,0,...) gives u identically one") {
  const auto f = FirstRenewalDistribution::from_prefix({1.0});
  const auto u = u_from_f(f, 5);
  for (std::int64_t n = 1; n <= 5; ++n) REQUIRE(u.at(n) == 1.0);
  REQUIRE(u.cumulative_at(5) == 5.0);
}

TEST_CASE("geometric gaps are the fixed point of the recurrence") {
  const auto u = u_from_f(geometric_f(0.5), 4);
  for (std::int64_t n = 1; n <= 4; ++n)
    REQUIRE_THAT(u.at(n), WithinAbs(0.5, 1e-15));
  REQUIRE_THAT(u.cumulative_at(4), WithinAbs(2.0, 1e-14));

  // u_n stays exactly at p far beyond the first terms
  for (const double p : {0.3, 0.5, 0.9}) {
    const auto long_u = u_from_f(geometric_f(p), 2000);
    double worst = 0.0;
    for (std::int64_t n = 1; n <= 2000; ++n)
      worst = std::max(worst, std::fabs(long_u.at(n) - p));
    REQUIRE(worst < 1e-12);
  }
}

TEST_CASE("walk-on-Z first-return prefix reproduces the enumerated returns") {
  // f_2 = 1/2, f_4 = 1/8 (odd entries zero)
  const auto f = FirstRenewalDistribution::from_prefix({0.0, 0.5, 0.0, 0.125});
  const auto u = u_from_f(f, 4);
  REQUIRE_THAT(u.at(2), WithinAbs(0.5, 1e-15));
  REQUIRE_THAT(u.at(4), WithinAbs(0.375, 1e-15));
  REQUIRE(u.at(1) == 0.0);
  REQUIRE(u.at(3) == 0.0);

  // independent oracle: exhaustive enumeration of all walk paths
  REQUIRE_THAT(u.at(2), WithinAbs(oracles::srw_z_return_probability(2), 1e-15));
  REQUIRE_THAT(u.at(4), WithinAbs(oracles::srw_z_return_probability(4), 1e-15));
  REQUIRE_THAT(f.prob(2),
               WithinAbs(oracles::srw_z_first_return_probability(2), 1e-15));
  REQUIRE_THAT(f.prob(4),
               WithinAbs(oracles::srw_z_first_return_probability(4), 1e-15));
}

TEST_CASE("convolution kernel agrees with the textbook loop") {
  RandomStream stream(555);
  std::vector<double> f(300);
  double left = 1.0;
  for (auto& fn : f) {
    fn = left * 0.1 * stream.next_double();
    left -= fn;
  }
  const auto u = u_from_f(FirstRenewalDistribution::from_prefix(f), 300);
  const std::vector<double> expected = oracles::renewal_recurrence(f);
  for (std::int64_t n = 1; n <= 300; ++n)
    REQUIRE_THAT(u.at(n), WithinAbs(expected[std::size_t(n - 1)], 1e-10));
}

TEST_CASE("invalid first-renewal inputs are rejected") {
  REQUIRE_THROWS_AS(FirstRenewalDistribution::from_prefix({0.5, -0.2}),
                    invalid_input);
  REQUIRE_THROWS_AS(FirstRenewalDistribution::from_prefix({0.7, 0.4}),
                    invalid_input);
  // a hair of negative noise within tolerance is clamped, not rejected
  const auto f = FirstRenewalDistribution::from_prefix({0.5, -1e-15});
  REQUIRE(f.prob(2) == 0.0);
  // generator whose partial sums blow past one fails at materialization
  const auto bad = FirstRenewalDistribution::from_generator(
      [](std::int64_t) { return 0.3; });
  REQUIRE_THROWS_AS(u_from_f(bad, 10), invalid_input);
  REQUIRE_THROWS_AS(u_from_f(geometric_f(0.5), 0), invalid_input);
}

TEST_CASE("inversion recovers f from u") {
  SECTION("all-ones renewal sequence") {
    const auto f =
        f_from_u(RenewalProbabilities::from_values({1.0, 1.0, 1.0, 1.0}));
    REQUIRE_THAT(f.prob(1), WithinAbs(1.0, 1e-15));
    for (std::int64_t n = 2; n <= 4; ++n) REQUIRE_THAT(f.prob(n), WithinAbs(0.0, 1e-15));
  }
  SECTION("constant one-half sequence") {
    const auto f =
        f_from_u(RenewalProbabilities::from_values({0.5, 0.5, 0.5, 0.5}));
    REQUIRE_THAT(f.prob(1), WithinAbs(0.5, 1e-15));
    REQUIRE_THAT(f.prob(2), WithinAbs(0.25, 1e-15));
    REQUIRE_THAT(f.prob(3), WithinAbs(0.125, 1e-15));
    REQUIRE_THAT(f.prob(4), WithinAbs(0.0625, 1e-15));
  }
  SECTION("walk-on-Z values with odd entries zero") {
    const auto f = f_from_u(
        RenewalProbabilities::from_values({0.0, 0.5, 0.0, 0.375}));
    REQUIRE_THAT(f.prob(2), WithinAbs(0.5, 1e-15));
    REQUIRE_THAT(f.prob(4), WithinAbs(0.125, 1e-15));
  }
  SECTION("sequences with no generating law are flagged") {
    REQUIRE_THROWS_AS(
        f_from_u(RenewalProbabilities::from_values({0.9, 0.05})),
        inconsistent_sequence);
  }
}

TEST_CASE("round trip f -> u -> f on every catalog family") {
  constexpr std::int64_t kHorizon = 2000;
  for (const RenewalFamily& family : family_catalog()) {
    const std::vector<double> original = family.first_renewal.prefix(kHorizon);
    const auto recovered =
        f_from_u(u_from_f(family.first_renewal, kHorizon)).prefix(kHorizon);
    double worst = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i)
      worst = std::max(worst, std::fabs(original[i] - recovered[i]));
    INFO("family " << family.label());
    REQUIRE(worst < 1e-10);
  }
}

TEST_CASE("cumulative renewal counts are monotone and bounded by N") {
  for (const RenewalFamily& family : family_catalog()) {
    const auto u = family.renewal_probabilities(500);
    double prev = 0.0;
    for (std::int64_t n = 1; n <= 500; ++n) {
      REQUIRE(u.cumulative_at(n) >= prev);
      REQUIRE(u.cumulative_at(n) <= double(n) + 1e-12);
      prev = u.cumulative_at(n);
    }
  }
  const auto certain = u_from_f(FirstRenewalDistribution::from_prefix({1.0}), 100);
  REQUIRE(certain.cumulative_at(100) == 100.0);
}

TEST_CASE("recurrence classification") {
  SECTION("geometric gaps: positive recurrent with mu = 1/p") {
    const auto cls = classify(geometric_f(0.5), 1000);
    REQUIRE(cls.kind == RecurrenceKind::positive_recurrent);
    REQUIRE_THAT(cls.mean_recurrence_time, WithinAbs(2.0, 1e-12));
    REQUIRE_FALSE(cls.undecided);
  }
  SECTION("walk on Z: null recurrent, infinite mu") {
    const auto cls = classify(make_family("srw_z").first_renewal, 1000);
    REQUIRE(cls.kind == RecurrenceKind::null_recurrent);
    REQUIRE(std::isinf(cls.mean_recurrence_time));
  }
  SECTION("defective geometric: transient") {
    const auto cls = classify(
        make_family("defective_geometric", {{"p", 0.5}, {"mass", 0.9}})
            .first_renewal,
        1000);
    REQUIRE(cls.kind == RecurrenceKind::transient);
  }
  SECTION("bare numeric prefix with visible tail mass comes back undecided") {
    // slow power tail truncated early: mass short of one by far more than 1e-9
    const auto f = FirstRenewalDistribution::from_generator(
        [](std::int64_t n) { return 0.3 * std::pow(double(n), -1.5); });
    const auto cls = classify(f, 200);
    REQUIRE(cls.undecided);
    REQUIRE(cls.evidence.truncated_tail_mass > 1e-9);
  }
  SECTION("numeric prefix of a fast-decaying law classifies cleanly") {
    const auto f = FirstRenewalDistribution::from_generator(
        [](std::int64_t n) { return 0.5 * std::pow(0.5, double(n - 1)); });
    const auto cls = classify(f, 200);
    REQUIRE_FALSE(cls.undecided);
    REQUIRE(cls.kind == RecurrenceKind::positive_recurrent);
    REQUIRE_THAT(cls.mean_recurrence_time, WithinAbs(2.0, 1e-9));
  }
}

TEST_CASE("sampling: certain renewal fires every step for every seed") {
  const auto f = FirstRenewalDistribution::from_prefix({1.0});
  for (const std::uint64_t seed : {1ULL, 77ULL, 123456789ULL}) {
    RandomStream stream(seed);
    const auto delta = sample_renewals(f, 4, stream);
    REQUIRE(delta == std::vector<std::uint8_t>{1, 1, 1, 1});
  }
}

TEST_CASE("sampling: renewal counts match the expected count U_N") {
  constexpr std::int64_t kHorizon = 10000;
  constexpr int kSamples = 1000;
  const auto f = geometric_f(0.5);
  const RenewalSampler sampler(f, kHorizon);
  const double expected = u_from_f(f, kHorizon).cumulative_at(kHorizon);

  RunningStat totals;
  std::vector<std::uint8_t> delta;
  for (int s = 0; s < kSamples; ++s) {
    RandomStream stream = RandomStream::substream(42, 0, std::uint64_t(s));
    sampler.sample(stream, delta);
    std::int64_t count = 0;
    for (const auto d : delta) count += d;
    totals.add(double(count));
  }
  REQUIRE_THAT(totals.mean(),
               WithinAbs(expected, 3.0 * totals.std_error()));
}

TEST_CASE("sampling: defective gaps stop renewing with the right total") {
  // total renewals is geometric with mean mass/(1-mass) = 9; the horizon is
  // long enough that truncation is negligible
  const auto family = make_family("defective_geometric", {{"p", 0.5}, {"mass", 0.9}});
  const RenewalSampler sampler(family.first_renewal, 10000);
  RunningStat totals;
  std::vector<std::uint8_t> delta;
  for (int s = 0; s < 1000; ++s) {
    RandomStream stream = RandomStream::substream(7, 1, std::uint64_t(s));
    sampler.sample(stream, delta);
    std::int64_t count = 0;
    for (const auto d : delta) count += d;
    totals.add(double(count));
  }
  REQUIRE_THAT(totals.mean(), WithinAbs(9.0, 3.0 * totals.std_error()));
}

TEST_CASE("sampling: per-step renewal frequency tracks u_n") {
  constexpr std::int64_t kHorizon = 20;
  constexpr int kPaths = 20000;
  for (const char* name : {"bernoulli", "srw_z"}) {
    const RenewalFamily family = make_family(name);
    const RenewalSampler sampler(family.first_renewal, kHorizon);
    const auto u = family.renewal_probabilities(kHorizon);
    std::vector<std::int64_t> hits(kHorizon, 0);
    std::vector<std::uint8_t> delta;
    for (int p = 0; p < kPaths; ++p) {
      RandomStream stream = RandomStream::substream(11, 2, std::uint64_t(p));
      sampler.sample(stream, delta);
      for (std::int64_t n = 0; n < kHorizon; ++n) hits[std::size_t(n)] += delta[std::size_t(n)];
    }
    for (std::int64_t n = 1; n <= kHorizon; ++n) {
      const double expected = u.at(n);
      const double observed = double(hits[std::size_t(n - 1)]) / kPaths;
      const double se =
          std::sqrt(std::max(expected * (1.0 - expected), 1e-12) / kPaths);
      INFO("family " << name << " at n=" << n);
      REQUIRE_THAT(observed, WithinAbs(expected, 4.0 * se + 1e-12));
    }
  }
}

TEST_CASE("transient family: U_N approaches mass/(1-mass)") {
  const auto family =
      make_family("defective_geometric", {{"p", 0.5}, {"mass", 0.9}});
  const auto u = u_from_f(family.first_renewal, 10000);
  REQUIRE_THAT(u.cumulative_at(10000), WithinAbs(9.0, 1e-3));
}
