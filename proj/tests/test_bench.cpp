#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "blockflow/bench.hpp"
#include "blockflow/errors.hpp"

using namespace blockflow;

namespace {

CostProfile tiny_profile() {
  CostProfile p;
  p.cycles_per_weight_unit = 1.0;
  p.cycle_time_ns = 1.0;
  return p;
}

Scenario small_scenario(const std::string& id, PatternKind pattern) {
  Scenario s;
  s.id = id;
  s.model.kind = ModelSource::Kind::Random;
  s.model.random.n_blocks = 10;
  s.model.random.n_inports = 2;
  s.model.random.n_outports = 1;
  s.model.random.edge_density = 0.4;
  s.model.random.weight_min = 10;
  s.model.random.weight_max = 500;
  s.model.random.seed = 4;
  s.profile = tiny_profile();
  s.n_cores = 2;
  s.pattern = pattern;
  s.reps = 40;
  s.warmup = 5;
  s.stimulus_gap_ns = 0;
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("trimmed mean drops the stated tails") {
  std::vector<double> one_to_ten{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(trimmed_mean(one_to_ten, 0.8) == 5.5);
  CHECK(trimmed_count(10, 0.8) == 8);
  CHECK(trimmed_count(1000, 0.8) == 800);

  CHECK(trimmed_mean({42.0}, 0.8) == 42.0);
  std::vector<double> constant(17, 3.25);
  CHECK(trimmed_mean(constant, 0.8) == 3.25);
}

TEST_CASE("trimmed mean is permutation-invariant and bounded") {
  std::mt19937_64 rng(7);
  std::vector<double> samples;
  for (int i = 0; i < 101; ++i) samples.push_back(static_cast<double>(rng() % 100000));
  std::vector<double> shuffled = samples;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const double a = trimmed_mean(samples, 0.8);
  const double b = trimmed_mean(shuffled, 0.8);
  CHECK(a == b);
  CHECK(a >= *std::min_element(samples.begin(), samples.end()));
  CHECK(a <= *std::max_element(samples.begin(), samples.end()));
}

TEST_CASE("trimmed mean rejects empty input") {
  CHECK_THROWS_AS(trimmed_mean({}, 0.8), Error);
}

TEST_CASE("run_benchmark collects exactly reps oracle-checked samples") {
  Scenario s = small_scenario("unit-et", PatternKind::EventTrigger);
  BenchResult r = run_benchmark(s);
  CHECK(r.samples_ns.size() == 40);
  CHECK(r.averaged_samples == trimmed_count(40, 0.8));
  CHECK(r.trimmed_mean_ns >= r.min_ns);
  CHECK(r.trimmed_mean_ns <= r.max_ns);
  CHECK(r.pattern_name == "event_trigger");
}

TEST_CASE("run_benchmark handles folding and sync patterns") {
  Scenario s = small_scenario("unit-sync", PatternKind::EventTimeSync);
  s.policy = SyncPolicy::Exact;
  s.virtual_cores = 4;  // folded onto 2 cores
  s.reps = 25;
  BenchResult r = run_benchmark(s);
  CHECK(r.samples_ns.size() == 25);
  CHECK(r.virtual_cores == 4);
  CHECK(r.cores == 2);
}

TEST_CASE("pinning on or off leaves outputs oracle-equal") {
  // the oracle check inside run_benchmark is the assertion; a failure throws
  Scenario on = small_scenario("unit-pin-on", PatternKind::EventAll);
  on.reps = 15;
  Scenario off = on;
  off.id = "unit-pin-off";
  off.pinning = false;
  CHECK_NOTHROW(run_benchmark(on));
  CHECK_NOTHROW(run_benchmark(off));
}

TEST_CASE("export writes a deterministic ordered CSV") {
  BenchResult b;
  b.scenario_id = "b";
  b.model_name = "m";
  b.cores = 2;
  b.virtual_cores = 4;
  b.pattern_name = "timer";
  b.reps = 3;
  b.samples_ns = {10, 20, 30};
  b.trimmed_mean_ns = 20;
  b.min_ns = 10;
  b.max_ns = 30;
  BenchResult a = b;
  a.scenario_id = "a";
  a.pattern_name = "event_all";

  const std::string path = "/tmp/blockflow_test_results.csv";
  export_results({b, a}, path);
  const std::string first = read_file(path);
  export_results({a, b}, path);
  CHECK(read_file(path) == first);  // re-export is byte-identical

  std::istringstream lines(first);
  std::string header, row1, row2;
  std::getline(lines, header);
  std::getline(lines, row1);
  std::getline(lines, row2);
  CHECK(header ==
        "scenario,model,cores,virtual_cores,pattern,reps,trimmed_mean_ns,min_ns,max_ns,"
        "coalesced,drops");
  CHECK(row1.rfind("a,", 0) == 0);  // ordered by id, not completion
  CHECK(row2.rfind("b,", 0) == 0);
  std::remove(path.c_str());
}

TEST_CASE("export refuses an empty result set") {
  CHECK_THROWS_AS(export_results({}, "/tmp/blockflow_empty.csv"), Error);
}
