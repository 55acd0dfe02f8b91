#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ToolResult {
  int exit_code = -1;
  std::string output;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() /
                 ("renewalci_cli_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

ToolResult run_tool(const std::string& args) {
  const fs::path out_file = work_dir() / "stdout.txt";
  const std::string command = std::string(RENEWALCI_TOOL_PATH) + " " + args +
                              " > " + out_file.string() + " 2> " +
                              (work_dir() / "stderr.txt").string();
  const int status = std::system(command.c_str());
  ToolResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("simulate writes a deterministic CSV") {
  const fs::path a = work_dir() / "sim_a.csv";
  const fs::path b = work_dir() / "sim_b.csv";
  const std::string flags =
      "simulate --family bernoulli --p 0.5 --theta 0.3 --n 1000 --seed 7";
  REQUIRE(run_tool(flags + " --out " + a.string()).exit_code == 0);
  REQUIRE(run_tool(flags + " --out " + b.string()).exit_code == 0);
  const std::string text = slurp(a);
  REQUIRE(text == slurp(b));
  REQUIRE(text.rfind("n,value\n", 0) == 0);
  REQUIRE(std::count(text.begin(), text.end(), '\n') == 1001);
  // different seed, different sequence
  const fs::path c = work_dir() / "sim_c.csv";
  REQUIRE(run_tool("simulate --family bernoulli --p 0.5 --theta 0.3 --n 1000 "
                   "--seed 8 --out " +
                   c.string())
              .exit_code == 0);
  REQUIRE(slurp(c) != text);
}

TEST_CASE("simulate oracle mode: deterministic heads at renewals") {
  const auto result = run_tool(
      "simulate --family srw_z --theta 0.5 --n 10 --seed 1 --oracle --out -");
  REQUIRE(result.exit_code == 0);
  std::istringstream is(result.output);
  std::string line;
  REQUIRE(std::getline(is, line));
  REQUIRE(line == "n,delta,value");
  while (std::getline(is, line)) {
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    const std::string delta = line.substr(first + 1, second - first - 1);
    const std::string value = line.substr(second + 1);
    if (delta == "1") REQUIRE(value == "1");
  }
}

TEST_CASE("simulate rejects an out-of-range bias and writes nothing") {
  const fs::path out = work_dir() / "never_written.csv";
  const auto result = run_tool(
      "simulate --family bernoulli --theta 0.7 --n 100 --out " + out.string());
  REQUIRE(result.exit_code == 2);
  REQUIRE_FALSE(fs::exists(out));
}

TEST_CASE("estimate reproduces the worked interval") {
  // fixture with mean exactly 0.65 over 10^4 observations
  const fs::path fixture = work_dir() / "fixture.csv";
  {
    std::ofstream out(fixture, std::ios::binary);
    out << "n,value\n";
    for (int n = 1; n <= 10000; ++n)
      out << n << ',' << (n <= 6500 ? 1 : 0) << '\n';
  }
  const auto hoeffding = run_tool(
      "estimate --family bernoulli --p 0.5 --rule hoeffding --gamma 0.95 --in " +
      fixture.string());
  REQUIRE(hoeffding.exit_code == 0);
  const json j = json::parse(hoeffding.output);
  REQUIRE(j["N"].get<int>() == 10000);
  REQUIRE(j["U_N"].get<double>() == 5000.0);
  REQUIRE_THAT(j["lower"].get<double>(),
               Catch::Matchers::WithinAbs(0.272838, 1e-6));
  REQUIRE_THAT(j["upper"].get<double>(),
               Catch::Matchers::WithinAbs(0.327162, 1e-6));
  REQUIRE_THAT(j["point"].get<double>(), Catch::Matchers::WithinAbs(0.3, 1e-9));
  REQUIRE(j["corrected"].get<bool>() == false);
  REQUIRE(j["within_feasible_range"].get<bool>() == true);

  SECTION("chebyshev is wider around the same midpoint") {
    const auto chebyshev = run_tool(
        "estimate --family bernoulli --p 0.5 --rule chebyshev --gamma 0.95 "
        "--in " +
        fixture.string());
    REQUIRE(chebyshev.exit_code == 0);
    const json jc = json::parse(chebyshev.output);
    REQUIRE_THAT(jc["point"].get<double>(),
                 Catch::Matchers::WithinAbs(0.3, 1e-9));
    REQUIRE(jc["upper"].get<double>() - jc["lower"].get<double>() >
            j["upper"].get<double>() - j["lower"].get<double>());
  }
  SECTION("apply-k on a linear-growth family echoes k = 0") {
    const auto corrected = run_tool(
        "estimate --family bernoulli --p 0.5 --rule hoeffding --gamma 0.95 "
        "--apply-k --in " +
        fixture.string());
    REQUIRE(corrected.exit_code == 0);
    const json jk = json::parse(corrected.output);
    REQUIRE(jk["k"].get<double>() == 0.0);
    REQUIRE(jk["corrected"].get<bool>() == true);
    REQUIRE(jk["lower"].get<double>() == j["lower"].get<double>());
  }
  SECTION("non-convergent correction exits 3") {
    const auto divergent = run_tool(
        "estimate --family srw_z2 --apply-k --in " + fixture.string());
    REQUIRE(divergent.exit_code == 3);
  }
  SECTION("a delta column in the observations never changes the estimate") {
    const fs::path oracle_fixture = work_dir() / "fixture_oracle.csv";
    {
      std::ofstream out(oracle_fixture, std::ios::binary);
      out << "n,delta,value\n";
      for (int n = 1; n <= 10000; ++n)
        out << n << ',' << (n % 2) << ',' << (n <= 6500 ? 1 : 0) << '\n';
    }
    const auto with_delta = run_tool(
        "estimate --family bernoulli --p 0.5 --rule hoeffding --gamma 0.95 "
        "--in " +
        oracle_fixture.string());
    REQUIRE(with_delta.exit_code == 0);
    REQUIRE(json::parse(with_delta.output) == j);
  }
}

TEST_CASE("estimate maps estimation failures to exit codes") {
  const fs::path one_row = work_dir() / "one_row.csv";
  {
    std::ofstream out(one_row, std::ios::binary);
    out << "n,value\n1,1\n";
  }
  // the Z^2 walk has no renewal mass at horizon 1: non-identifiable
  REQUIRE(run_tool("estimate --family srw_z2 --in " + one_row.string())
              .exit_code == 3);

  const fs::path malformed = work_dir() / "malformed.csv";
  {
    std::ofstream out(malformed, std::ios::binary);
    out << "n,value\n1,zero\n";
  }
  REQUIRE(run_tool("estimate --family bernoulli --in " + malformed.string())
              .exit_code == 2);
  REQUIRE(run_tool("estimate --family bernoulli --in " +
                   (work_dir() / "missing.csv").string())
              .exit_code == 2);
}

TEST_CASE("classify reports the growth-condition verdict") {
  const auto z2 = run_tool("classify --family srw_z2 --n-max 100000");
  REQUIRE(z2.exit_code == 0);
  const json j = json::parse(z2.output);
  REQUIRE(j["verdict"] == "violated-null-recurrent");
  REQUIRE(j["beta_hat"].get<double>() < 0.15);
  REQUIRE(j["condition_met"].get<bool>() == false);

  const auto bern = run_tool("classify --family bernoulli --n-max 10000");
  REQUIRE(bern.exit_code == 0);
  REQUIRE(json::parse(bern.output)["verdict"] == "satisfied");

  const auto transient = run_tool("classify --family srw_z3 --n-max 10000");
  REQUIRE(transient.exit_code == 0);
  REQUIRE(json::parse(transient.output)["verdict"] == "violated-transient");
}

TEST_CASE("sweep produces self-describing artifacts") {
  const fs::path cfg_path = work_dir() / "sweep_config.json";
  const fs::path out_dir = work_dir() / "sweep_out";
  {
    std::ofstream out(cfg_path, std::ios::binary);
    out << R"({
  "family": {"name": "bernoulli", "p": 0.5},
  "model": {"kind": "coin", "theta": 0.3},
  "rule": {"method": "hoeffding", "gamma": 0.95},
  "horizons": [1000, 10000],
  "trials": 80,
  "seed": 99,
  "apply_k": false
})";
  }
  const auto result = run_tool("sweep --config " + cfg_path.string() +
                               " --out " + out_dir.string());
  REQUIRE(result.exit_code == 0);
  REQUIRE(fs::exists(out_dir / "sweep_trials.csv"));
  REQUIRE(fs::exists(out_dir / "sweep_aggregate.json"));

  const json agg = json::parse(slurp(out_dir / "sweep_aggregate.json"));
  REQUIRE(agg["config"]["seed"].get<int>() == 99);
  REQUIRE(agg["config"]["family"]["name"] == "bernoulli");
  REQUIRE(agg["horizons"].size() == 2);
  // convergence shows up as a shrinking midpoint error
  REQUIRE(agg["horizons"][1]["mean_abs_error"].get<double>() <
          agg["horizons"][0]["mean_abs_error"].get<double>());

  SECTION("byte-identical artifacts regardless of worker count") {
    const fs::path out1 = work_dir() / "sweep_t1";
    const fs::path out4 = work_dir() / "sweep_t4";
    REQUIRE(run_tool("sweep --config " + cfg_path.string() + " --threads 1 --out " +
                     out1.string())
                .exit_code == 0);
    REQUIRE(run_tool("sweep --config " + cfg_path.string() + " --threads 4 --out " +
                     out4.string())
                .exit_code == 0);
    REQUIRE(slurp(out1 / "sweep_aggregate.json") ==
            slurp(out4 / "sweep_aggregate.json"));
    REQUIRE(slurp(out1 / "sweep_trials.csv") == slurp(out4 / "sweep_trials.csv"));
  }

  SECTION("flag overrides win over the config file") {
    const fs::path out_dir2 = work_dir() / "sweep_out2";
    const auto overridden =
        run_tool("sweep --config " + cfg_path.string() +
                 " --trials 10 --format json --out " + out_dir2.string());
    REQUIRE(overridden.exit_code == 0);
    REQUIRE_FALSE(fs::exists(out_dir2 / "sweep_trials.csv"));
    const json agg2 = json::parse(slurp(out_dir2 / "sweep_aggregate.json"));
    REQUIRE(agg2["config"]["trials"].get<int>() == 10);
  }
}

TEST_CASE("strict config parsing and validation exit with code 2") {
  const fs::path bad_key = work_dir() / "bad_key.json";
  {
    std::ofstream out(bad_key, std::ios::binary);
    out << R"({"family": {"name": "bernoulli"}, "horizon": [100]})";
  }
  REQUIRE(run_tool("sweep --config " + bad_key.string()).exit_code == 2);

  const fs::path bad_model_key = work_dir() / "bad_model_key.json";
  {
    std::ofstream out(bad_model_key, std::ios::binary);
    out << R"({"family": {"name": "bernoulli"}, "model": {"kind": "coin", "bias": 0.3}, "horizons": [100], "trials": 5})";
  }
  REQUIRE(run_tool("sweep --config " + bad_model_key.string()).exit_code == 2);

  REQUIRE(run_tool("coverage --family bernoulli --theta 0.3 --horizons 100 "
                   "--trials 0")
              .exit_code == 2);
  REQUIRE(run_tool("coverage --family nope --theta 0.0 --horizons 100 "
                   "--trials 5")
              .exit_code == 2);
  REQUIRE(run_tool("frobnicate").exit_code == 2);
}
