// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specagent/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "specagent");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = specagent::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "specagent_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(cli({}).code == specagent::kExitUsage);
  CHECK(cli({"frobnicate"}).code == specagent::kExitUsage);
  CHECK(cli({"run", "--config", "no_such_config"}).code == specagent::kExitUsage);
  CHECK(cli({"run", "--config", "demo", "--policy", "fuzzy", "--scenario", "fixtures/ten_step"}).code ==
        specagent::kExitUsage);
  CHECK(cli({"--help"}).code == specagent::kExitOk);
}

TEST_CASE("scripted run writes a trace and replays identically") {
  const auto trace = scratch("ten_step.jsonl");
  const auto r = cli({"run", "--config", "demo", "--scenario", "fixtures/ten_step", "--trace-out", trace.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.starts_with("task_id,mode,status,steps,accepted,fallbacks,intervention_rate,wall_ms,final_answer\n"));
  CHECK(r.out.find("ten_step,speculative,finished,10,8,2,0.200,34500,") != std::string::npos);
  CHECK(r.out.find("777 km") != std::string::npos);

  const auto again = scratch("ten_step_again.jsonl");
  REQUIRE(cli({"run", "--config", "demo", "--scenario", "fixtures/ten_step", "--trace-out", again.string()}).code == 0);
  CHECK(slurp(trace) == slurp(again));

  const auto rep = cli({"replay", "--config", "demo", "--scenario", "fixtures/ten_step", "--trace-in", trace.string()});
  CHECK(rep.code == 0);
  CHECK(rep.out.find("replay,identical") != std::string::npos);

  const auto plain = cli({"replay", "--trace-in", trace.string()});
  CHECK(plain.code == 0);

  const auto mismatch =
      cli({"replay", "--config", "demo", "--tau", "1.0", "--scenario", "fixtures/ten_step", "--trace-in", trace.string()});
  CHECK(mismatch.code == specagent::kExitRuntime);
  CHECK(mismatch.out.find("replay,mismatch") != std::string::npos);

  const auto an = cli({"analyze", "--trace-in", trace.string()});
  CHECK(an.code == 0);
  CHECK(an.out.find("# entropy") != std::string::npos);
  CHECK(an.out.find("# search_exceeds_visit,true") != std::string::npos);
  CHECK(an.out.find("# latency ten_step") != std::string::npos);

  const auto pt = cli({"profile-threshold", "--trace-in", trace.string(), "--target-rate", "0.2"});
  CHECK(pt.code == 0);
  CHECK(pt.out.find("tau,below,n,target_rate,achieved_rate") != std::string::npos);
}

TEST_CASE("baseline run reaches the same answer more slowly") {
  const auto r = cli({"baseline", "--config", "demo", "--scenario", "fixtures/ten_step"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("ten_step,baseline,finished,10,0,10,1.000,60000,") != std::string::npos);
}

TEST_CASE("profile-threshold on a csv file") {
  const auto in = scratch("dev.csv");
  {
    std::ofstream f(in);
    f << "score,label\n";
    for (int i = 1; i <= 100; ++i) f << i << ",x\n";
  }
  const auto r = cli({"profile-threshold", "--input", in.string(), "--target-rate", "0.2"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\n21") != std::string::npos);
  CHECK(cli({"profile-threshold", "--input", in.string(), "--target-rate", "1.5"}).code != 0);
}

TEST_CASE("simulate") {
  const auto r = cli({"simulate", "--config", "sim_default"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mean_step_ms,7500.000") != std::string::npos);
  CHECK(r.out.find("speedup,1.600") != std::string::npos);
  CHECK(r.out.find("expected_mean_step_ms,7500.000") != std::string::npos);
  CHECK(cli({"simulate", "--config", "sim_default"}).out == r.out);

  const auto sweep = cli({"simulate", "--config", "sim_default", "--sweep", "11"});
  REQUIRE(sweep.code == 0);
  CHECK(sweep.out.starts_with("accept_prob,mean_step_ms,speedup\n"));
  CHECK(std::count(sweep.out.begin(), sweep.out.end(), '\n') == 12);
}
