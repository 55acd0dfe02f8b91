// Command-line front end: simulate observation sequences, estimate the
// hidden bias from them, and run the Monte Carlo experiment harness.
//
// Exit codes: 0 success, 2 input error, 3 non-identifiable or divergent
// estimation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "renewalci/renewalci.hpp"

namespace {

using nlohmann::ordered_json;
using namespace renewalci;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitNotEstimable = 3;

// ---------------------------------------------------------------------------
// shared option bags
// ---------------------------------------------------------------------------

struct FamilyOptions {
  std::string name;
  std::optional<double> p;
  std::optional<double> mass;
  std::optional<double> beta;

  std::map<std::string, double> params() const {
    std::map<std::string, double> out;
    if (p) out["p"] = *p;
    if (mass) out["mass"] = *mass;
    if (beta) out["beta"] = *beta;
    return out;
  }
};

struct ModelOptions {
  std::string kind = "coin";
  double theta = 0.0;
  double m = 0.0;
  double delta = 0.0;
  double sigma_w = 1.0;
  std::string shape = "gaussian";
  std::string bounds;  // "lo,hi"

  bool any_given = false;  // any model flag appeared on the command line
};

L2Shape shape_from_string(const std::string& s) {
  if (s == "gaussian") return L2Shape::gaussian;
  if (s == "uniform_bounded") return L2Shape::uniform_bounded;
  if (s == "bernoulli_scaled") return L2Shape::bernoulli_scaled;
  throw invalid_input("unknown l2 shape: " + s);
}

std::pair<double, double> parse_bounds(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos)
    throw invalid_input("bounds must be given as lo,hi");
  return {parse_double(std::string_view(text).substr(0, comma)),
          parse_double(std::string_view(text).substr(comma + 1))};
}

std::variant<CoinModel, L2Model> build_model(const ModelOptions& opts) {
  if (opts.kind == "coin") {
    CoinModel model{opts.theta};
    model.validate();
    return model;
  }
  if (opts.kind == "l2") {
    L2Model model;
    model.base_mean = opts.m;
    model.shift = opts.delta;
    model.sigma_w = opts.sigma_w;
    model.shape = shape_from_string(opts.shape);
    if (!opts.bounds.empty()) model.bounds = parse_bounds(opts.bounds);
    model.validate();
    return model;
  }
  throw invalid_input("unknown model kind: " + opts.kind);
}

void add_family_options(CLI::App* cmd, FamilyOptions& fam, bool required) {
  auto* opt = cmd->add_option("--family", fam.name,
                              "renewal family (bernoulli, srw_z, srw_z2, "
                              "srw_z3, defective_geometric, powerlaw_tail)");
  if (required) opt->required();
  cmd->add_option("--p", fam.p, "family parameter p");
  cmd->add_option("--mass", fam.mass, "total renewal mass (defective family)");
  cmd->add_option("--beta", fam.beta, "tail exponent (powerlaw family)");
}

void add_model_options(CLI::App* cmd, ModelOptions& model) {
  const auto mark = [&model](const std::string&) { model.any_given = true; };
  cmd->add_option("--model", model.kind, "observation model: coin or l2")
      ->check(CLI::IsMember({"coin", "l2"}))
      ->each(mark);
  cmd->add_option("--theta", model.theta, "hidden coin bias, |theta| <= 1/2")
      ->each(mark);
  cmd->add_option("--m", model.m, "known base mean (l2 model)")->each(mark);
  cmd->add_option("--delta", model.delta, "hidden mean shift (l2 model)")
      ->each(mark);
  cmd->add_option("--sigma-w", model.sigma_w,
                  "known common standard deviation (l2 model)")
      ->each(mark);
  cmd->add_option("--shape", model.shape,
                  "l2 shape: gaussian, uniform_bounded, bernoulli_scaled")
      ->each(mark);
  cmd->add_option("--bounds", model.bounds,
                  "declared value bounds lo,hi (l2 model)")
      ->each(mark);
}

// ---------------------------------------------------------------------------
// experiment config resolution (JSON file + flag overrides, strict keys)
// ---------------------------------------------------------------------------

struct CliConfig {
  ExperimentConfig experiment;
  std::string out_dir = ".";
  std::string format = "both";  // csv | json | both
  bool verbose = false;
};

void reject_unknown_keys(const ordered_json& obj,
                         std::initializer_list<const char*> known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok)
      throw invalid_input("unknown key '" + key + "' in " + where);
  }
}

CliConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("cannot open config file: " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw invalid_input(std::string("config file is not valid JSON: ") +
                        e.what());
  }
  reject_unknown_keys(j,
                      {"family", "model", "rule", "horizons", "trials", "seed",
                       "apply_k", "out_dir", "format", "threads", "verbose"},
                      "config");
  CliConfig cfg;
  ExperimentConfig& exp = cfg.experiment;
  if (j.contains("family")) {
    const ordered_json& jf = j["family"];
    if (!jf.contains("name"))
      throw invalid_input("config family needs a 'name'");
    exp.family_name = jf["name"].get<std::string>();
    for (const auto& [key, value] : jf.items())
      if (key != "name") exp.family_params[key] = value.get<double>();
  }
  if (j.contains("model")) {
    const ordered_json& jm = j["model"];
    const std::string kind = jm.value("kind", std::string("coin"));
    if (kind == "coin") {
      reject_unknown_keys(jm, {"kind", "theta"}, "config model");
      exp.model = CoinModel{jm.value("theta", 0.0)};
    } else if (kind == "l2") {
      reject_unknown_keys(jm, {"kind", "m", "delta", "sigma_w", "shape", "bounds"},
                          "config model");
      L2Model model;
      model.base_mean = jm.value("m", 0.0);
      model.shift = jm.value("delta", 0.0);
      model.sigma_w = jm.value("sigma_w", 1.0);
      model.shape = shape_from_string(jm.value("shape", std::string("gaussian")));
      if (jm.contains("bounds")) {
        const auto& b = jm["bounds"];
        if (!b.is_array() || b.size() != 2)
          throw invalid_input("config model bounds must be [lo, hi]");
        model.bounds = {b[0].get<double>(), b[1].get<double>()};
      }
      exp.model = model;
    } else {
      throw invalid_input("config model kind must be coin or l2");
    }
  }
  if (j.contains("rule")) {
    const ordered_json& jr = j["rule"];
    reject_unknown_keys(jr, {"method", "gamma"}, "config rule");
    if (jr.contains("method"))
      exp.method = epsilon_method_from_string(jr["method"].get<std::string>());
    if (jr.contains("gamma")) exp.gamma = jr["gamma"].get<double>();
  }
  if (j.contains("horizons"))
    exp.horizons = j["horizons"].get<std::vector<std::int64_t>>();
  if (j.contains("trials")) exp.trials = j["trials"].get<std::int64_t>();
  if (j.contains("seed")) exp.master_seed = j["seed"].get<std::uint64_t>();
  if (j.contains("apply_k")) exp.apply_k = j["apply_k"].get<bool>();
  if (j.contains("threads")) exp.threads = j["threads"].get<int>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("format")) cfg.format = j["format"].get<std::string>();
  if (j.contains("verbose")) cfg.verbose = j["verbose"].get<bool>();
  return cfg;
}

// ---------------------------------------------------------------------------
// output helpers
// ---------------------------------------------------------------------------

std::ofstream open_output_file(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw invalid_input("cannot open output file: " + path);
  return out;
}

ordered_json interval_to_json(const IntervalEstimate& est, bool coin_model) {
  ordered_json j;
  j["gamma"] = est.gamma;
  j["method"] = to_string(est.method);
  j["N"] = est.horizon;
  j["U_N"] = est.expected_renewals;
  j["lower"] = est.lower;
  j["upper"] = est.upper;
  j["point"] = est.point;
  j["k"] = est.correction;
  j["corrected"] = est.corrected;
  if (coin_model)
    j["within_feasible_range"] = within_feasible_range(est, -0.5, 0.5);
  return j;
}

void print_summary_table(const ExperimentResult& result, std::ostream& os) {
  os << "horizon      trials  failures  coverage  mean_width  mean_abs_err  "
        "p90_abs_err  k_ratio\n";
  char line[256];
  for (const HorizonSummary& s : result.summaries) {
    std::snprintf(line, sizeof(line),
                  "%-12lld %-7lld %-9lld %-9.4f %-11.6g %-13.6g %-12.6g %-.6g\n",
                  static_cast<long long>(s.horizon),
                  static_cast<long long>(s.trials),
                  static_cast<long long>(s.failures), s.coverage, s.mean_width,
                  s.mean_abs_error, s.p90_abs_error, s.k_ratio);
    os << line;
  }
}

void write_experiment_artifacts(const ExperimentResult& result,
                                const CliConfig& cfg,
                                const std::string& prefix) {
  namespace fs = std::filesystem;
  if (cfg.format != "csv" && cfg.format != "json" && cfg.format != "both")
    throw invalid_input("format must be csv, json or both");
  fs::create_directories(cfg.out_dir);
  if (cfg.format == "csv" || cfg.format == "both") {
    auto out = open_output_file(
        (fs::path(cfg.out_dir) / (prefix + "_trials.csv")).string());
    result.write_trials_csv(out);
  }
  if (cfg.format == "json" || cfg.format == "both") {
    auto out = open_output_file(
        (fs::path(cfg.out_dir) / (prefix + "_aggregate.json")).string());
    out << result.to_json().dump(2) << '\n';
  }
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_simulate(const FamilyOptions& fam_opts, const ModelOptions& model_opts,
                 std::int64_t horizon, std::uint64_t seed,
                 const std::string& out_path, bool oracle) {
  if (horizon < 1) throw invalid_input("--n must be at least 1");
  const RenewalFamily family = make_family(fam_opts.name, fam_opts.params());
  const auto model = build_model(model_opts);

  RandomStream stream(seed);
  const std::vector<std::uint8_t> delta =
      sample_renewals(family.first_renewal, horizon, stream);
  const ObservationRun run =
      std::holds_alternative<CoinModel>(model)
          ? sample_coin_run(delta, std::get<CoinModel>(model), stream)
          : sample_l2_run(delta, std::get<L2Model>(model), stream);

  if (out_path == "-") {
    write_observation_csv(std::cout, run, oracle);
  } else {
    auto out = open_output_file(out_path);
    write_observation_csv(out, run, oracle);
  }
  return kExitOk;
}

int cmd_estimate(const FamilyOptions& fam_opts, const std::string& in_path,
                 const std::string& model_kind, double base_mean,
                 std::optional<double> sigma_w,
                 std::optional<double> range_width, const std::string& method,
                 double gamma, bool apply_k, const std::string& out_path) {
  const RenewalFamily family = make_family(fam_opts.name, fam_opts.params());
  const EpsilonMethod rule_method = epsilon_method_from_string(method);

  ObservationCsv observations;
  if (in_path == "-") {
    observations = read_observation_csv(std::cin);
  } else {
    std::ifstream in(in_path, std::ios::binary);
    if (!in) throw invalid_input("cannot open observations file: " + in_path);
    observations = read_observation_csv(in);
  }

  const bool coin = model_kind == "coin";
  EpsilonRule rule = EpsilonRule::coin(rule_method, gamma);
  double baseline = 0.5;
  if (!coin) {
    if (model_kind != "l2")
      throw invalid_input("model must be coin or l2");
    baseline = base_mean;
    if (rule_method == EpsilonMethod::hoeffding) {
      if (!range_width)
        throw unsupported_rule(
            "hoeffding rule on the l2 model needs --range-width");
      rule = EpsilonRule::l2_bounded(rule_method, gamma, sigma_w.value_or(1.0),
                                     *range_width);
    } else {
      if (!sigma_w)
        throw invalid_input("l2 model estimation needs --sigma-w");
      rule = EpsilonRule::l2_unbounded(rule_method, gamma, *sigma_w);
    }
  }

  const std::int64_t horizon = observations.rows;
  const RenewalProbabilities u = family.renewal_probabilities(horizon);
  IntervalEstimate est = confidence_interval(
      observations.mean, horizon, u.cumulative_at(horizon), baseline, rule);
  if (apply_k) {
    const double k = correction_k(family, rule);
    if (!std::isfinite(k))
      throw divergent_interval(
          "correction constant does not converge for family " +
          family.label());
    est = corrected_interval(est, k);
  }

  const ordered_json j = interval_to_json(est, coin);
  if (out_path == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    auto out = open_output_file(out_path);
    out << j.dump(2) << '\n';
  }
  return kExitOk;
}

int cmd_experiment(const CliConfig& cfg, const std::string& prefix,
                   bool coverage_mode) {
  if (cfg.verbose) {
    std::cerr << "running " << prefix << " for family "
              << cfg.experiment.family_name << " over "
              << cfg.experiment.horizons.size() << " horizons, "
              << cfg.experiment.trials << " trials, seed "
              << cfg.experiment.master_seed << "\n";
  }
  const ExperimentResult result = coverage_mode
                                      ? run_coverage_study(cfg.experiment)
                                      : run_convergence_sweep(cfg.experiment);
  write_experiment_artifacts(result, cfg, prefix);
  print_summary_table(result, std::cout);
  return kExitOk;
}

int cmd_classify(const FamilyOptions& fam_opts, std::int64_t n_max,
                 const std::string& method, double gamma,
                 const std::string& out_path) {
  const RenewalFamily family = make_family(fam_opts.name, fam_opts.params());
  std::vector<std::int64_t> horizons;
  for (const std::int64_t h : {n_max / 100, n_max / 10, n_max})
    if (h >= 1 && (horizons.empty() || h > horizons.back()))
      horizons.push_back(h);
  const EpsilonRule rule =
      EpsilonRule::coin(epsilon_method_from_string(method), gamma);
  const ConditionReport report = run_condition_classifier(family, horizons, rule);

  ordered_json j;
  j["family"]["name"] = family.name;
  for (const auto& [key, value] : family.parameters) j["family"][key] = value;
  j["rule"] = {{"method", method}, {"gamma", gamma}};
  j["n_max"] = n_max;
  j["beta_hat"] = report.fit.beta_hat;
  j["c_hat"] = report.fit.c_hat;
  j["r2"] = report.fit.r2;
  j["recurrence"] = to_string(report.recurrence.kind);
  j["condition_met"] = report.condition_met;
  j["verdict"] = report.verdict;
  ordered_json traj = ordered_json::array();
  for (const auto& [horizon, value] : report.k_trajectory)
    traj.push_back({{"horizon", horizon}, {"k_ratio", value}});
  j["k_trajectory"] = std::move(traj);

  if (out_path == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    auto out = open_output_file(out_path);
    out << j.dump(2) << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"renewal-driven hidden-bias simulation and estimation"};
  app.require_subcommand(1);

  // --- simulate
  auto* simulate = app.add_subcommand(
      "simulate", "sample one observation sequence and write it as CSV");
  FamilyOptions sim_family;
  ModelOptions sim_model;
  std::int64_t sim_n = 0;
  std::uint64_t sim_seed = 0;
  std::string sim_out = "-";
  bool sim_oracle = false;
  add_family_options(simulate, sim_family, true);
  add_model_options(simulate, sim_model);
  simulate->add_option("--n", sim_n, "horizon (number of observations)")
      ->required();
  simulate->add_option("--seed", sim_seed, "random seed");
  simulate->add_option("--out", sim_out, "output file ('-' for stdout)");
  simulate->add_flag("--oracle", sim_oracle,
                     "include the renewal indicator column");

  // --- estimate
  auto* estimate = app.add_subcommand(
      "estimate", "confidence interval for the hidden bias from a CSV");
  FamilyOptions est_family;
  std::string est_in;
  std::string est_model = "coin";
  double est_m = 0.0;
  std::optional<double> est_sigma_w;
  std::optional<double> est_range_width;
  std::string est_rule = "hoeffding";
  double est_gamma = 0.95;
  bool est_apply_k = false;
  std::string est_out = "-";
  add_family_options(estimate, est_family, true);
  estimate->add_option("--in", est_in, "observations CSV ('-' for stdin)")
      ->required();
  estimate->add_option("--model", est_model, "observation model: coin or l2")
      ->check(CLI::IsMember({"coin", "l2"}));
  estimate->add_option("--m", est_m, "known base mean (l2 model)");
  estimate->add_option("--sigma-w", est_sigma_w,
                       "known standard deviation (l2 model)");
  estimate->add_option("--range-width", est_range_width,
                       "declared range width b-a (l2 hoeffding rule)");
  estimate->add_option("--rule", est_rule, "half-width rule")
      ->check(CLI::IsMember({"chebyshev", "hoeffding", "normal"}));
  estimate->add_option("--gamma", est_gamma, "confidence level in (0,1)");
  estimate->add_flag("--apply-k", est_apply_k,
                     "subtract the correction constant from the interval");
  estimate->add_option("--out", est_out, "output file ('-' for stdout)");

  // --- sweep / coverage
  CliConfig cli_cfg;
  std::string config_path;
  FamilyOptions exp_family;
  ModelOptions exp_model;
  std::string exp_rule;
  std::optional<double> exp_gamma;
  std::vector<std::int64_t> exp_horizons;
  std::optional<std::int64_t> exp_trials;
  std::optional<std::uint64_t> exp_seed;
  bool exp_apply_k = false;
  std::optional<int> exp_threads;
  std::optional<std::string> exp_out_dir;
  std::optional<std::string> exp_format;
  bool exp_verbose = false;

  const auto add_experiment_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config JSON file");
    add_family_options(cmd, exp_family, false);
    add_model_options(cmd, exp_model);
    cmd->add_option("--rule", exp_rule, "half-width rule")
        ->check(CLI::IsMember({"chebyshev", "hoeffding", "normal"}));
    cmd->add_option("--gamma", exp_gamma, "confidence level in (0,1)");
    cmd->add_option("--horizons", exp_horizons, "horizons, comma separated")
        ->delimiter(',');
    cmd->add_option("--trials", exp_trials, "Monte Carlo trials per horizon");
    cmd->add_option("--seed", exp_seed, "master seed");
    cmd->add_flag("--apply-k", exp_apply_k, "apply the correction constant");
    cmd->add_option("--threads", exp_threads, "worker threads");
    cmd->add_option("--out", exp_out_dir, "output directory for artifacts");
    cmd->add_option("--format", exp_format, "artifact format: csv, json, both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    cmd->add_flag("--verbose", exp_verbose, "print progress to stderr");
  };

  auto* sweep = app.add_subcommand(
      "sweep", "interval trajectory across horizons (convergence regimes)");
  add_experiment_options(sweep);
  auto* coverage = app.add_subcommand(
      "coverage", "empirical coverage of the intervals across horizons");
  add_experiment_options(coverage);

  // --- classify
  auto* classify_cmd = app.add_subcommand(
      "classify", "verdict on the interval-convergence growth condition");
  FamilyOptions cls_family;
  std::int64_t cls_n_max = 100000;
  std::string cls_rule = "hoeffding";
  double cls_gamma = 0.95;
  std::string cls_out = "-";
  add_family_options(classify_cmd, cls_family, true);
  classify_cmd->add_option("--n-max", cls_n_max, "largest horizon to inspect");
  classify_cmd->add_option("--rule", cls_rule, "rule for the k trajectory")
      ->check(CLI::IsMember({"chebyshev", "hoeffding", "normal"}));
  classify_cmd->add_option("--gamma", cls_gamma, "confidence level");
  classify_cmd->add_option("--out", cls_out, "output file ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(sim_family, sim_model, sim_n, sim_seed, sim_out,
                          sim_oracle);
    if (estimate->parsed())
      return cmd_estimate(est_family, est_in, est_model, est_m, est_sigma_w,
                          est_range_width, est_rule, est_gamma, est_apply_k,
                          est_out);
    if (classify_cmd->parsed())
      return cmd_classify(cls_family, cls_n_max, cls_rule, cls_gamma, cls_out);

    // sweep / coverage: config file first, flags override
    CliConfig cfg =
        config_path.empty() ? CliConfig{} : load_config_file(config_path);
    if (!exp_family.name.empty()) {
      cfg.experiment.family_name = exp_family.name;
      cfg.experiment.family_params = exp_family.params();
    } else if (!exp_family.params().empty()) {
      throw invalid_input("family parameter flags need --family");
    }
    if (config_path.empty() || exp_model.any_given)
      cfg.experiment.model = build_model(exp_model);
    if (!exp_rule.empty())
      cfg.experiment.method = epsilon_method_from_string(exp_rule);
    if (exp_gamma) cfg.experiment.gamma = *exp_gamma;
    if (!exp_horizons.empty()) cfg.experiment.horizons = exp_horizons;
    if (exp_trials) cfg.experiment.trials = *exp_trials;
    if (exp_seed) cfg.experiment.master_seed = *exp_seed;
    if (exp_apply_k) cfg.experiment.apply_k = true;
    if (exp_threads) cfg.experiment.threads = *exp_threads;
    if (exp_out_dir) cfg.out_dir = *exp_out_dir;
    if (exp_format) cfg.format = *exp_format;
    if (exp_verbose) cfg.verbose = true;

    if (sweep->parsed()) return cmd_experiment(cfg, "sweep", false);
    if (coverage->parsed()) return cmd_experiment(cfg, "coverage", true);
    throw invalid_input("no subcommand selected");
  } catch (const non_identifiable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNotEstimable;
  } catch (const divergent_interval& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNotEstimable;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}
