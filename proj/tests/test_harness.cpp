#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "teamlearn/game.hpp"
#include "teamlearn/harness.hpp"
#include "teamlearn/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

using namespace teamlearn;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.game = make_fig3(0.8);
  spec.algorithm = Algorithm::Windowed;
  LearnerConfig cfg;
  cfg.discount = 0.8;
  cfg.rho = 0.1;
  cfg.gamma = 0.05;
  cfg.kappa = 0.15;
  cfg.lambda = 0.2;
  cfg.delta = 0.4;
  cfg.d = 2.0;
  cfg.q_min = -65.0;
  cfg.q_max = 65.0;
  spec.players = {cfg, cfg};
  spec.phases = 40;
  spec.phase_length = 200;
  spec.seeds = {11, 22, 33};
  return spec;
}

bool records_equal(const std::vector<MetricsRecord>& a, const std::vector<MetricsRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (a[s].seed != b[s].seed) return false;
    if (a[s].policy_index != b[s].policy_index) return false;
    if (a[s].in_opt != b[s].in_opt || a[s].in_eq != b[s].in_eq) return false;
    if (a[s].scores != b[s].scores || a[s].satisfied != b[s].satisfied) return false;
  }
  return true;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("environment step goldens on the two-state team game") {
  Game g = make_fig3(0.8);
  Rng rng(5);
  SUBCASE("stage costs") {
    // state 1 (index 0), both play action 1: cost (1,1)
    auto [c0, n0] = step_environment(g, 0, g.joint_action_index({0, 0}), rng);
    CHECK(c0(0) == doctest::Approx(1.0));
    CHECK(c0(1) == doctest::Approx(1.0));
    (void)n0;
    // state 2 (index 1), both play action 2: cost (13,13)
    auto [c1, n1] = step_environment(g, 1, g.joint_action_index({1, 1}), rng);
    CHECK(c1(0) == doctest::Approx(13.0));
    CHECK(c1(1) == doctest::Approx(13.0));
    (void)n1;
    // state 2, mismatched actions: cost (10,10)
    auto [c2, n2] = step_environment(g, 1, g.joint_action_index({0, 1}), rng);
    CHECK(c2(0) == doctest::Approx(10.0));
    (void)n2;
  }
  SUBCASE("deterministic kernel row") {
    Game d = g;
    d.kernel[0] = Game::Matrix::Zero(4, 2);
    d.kernel[0].col(1).setOnes();
    for (int t = 0; t < 50; ++t) {
      auto [c, next] = step_environment(d, 0, 0, rng);
      (void)c;
      CHECK(next == 1);
    }
  }
  SUBCASE("empirical kernel frequencies") {
    // state 1, both play action 1: P(stay in state 1) = 0.95
    const int ja = g.joint_action_index({0, 0});
    int stays = 0;
    const int n = 1000000;
    for (int t = 0; t < n; ++t) {
      auto [c, next] = step_environment(g, 0, ja, rng);
      (void)c;
      stays += (next == 0);
    }
    const double p = 0.95, sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(stays / double(n) - p) < 3 * sigma);
  }
}

TEST_CASE("experiment validation") {
  ExperimentSpec spec = small_spec();
  CHECK_NOTHROW(spec.validate());
  SUBCASE("player count") {
    spec.players.pop_back();
    CHECK_THROWS(spec.validate());
  }
  SUBCASE("duplicate seeds") {
    spec.seeds = {1, 1};
    CHECK_THROWS(spec.validate());
  }
  SUBCASE("initial state range") {
    spec.initial_state = 2;
    CHECK_THROWS(spec.validate());
  }
}

TEST_CASE("absorbing configuration stays put") {
  // start both players at the optimal policy (u = x, per-player rank 2) with
  // no experimentation, inertia or exploration: the baseline never moves
  ExperimentSpec spec = small_spec();
  for (auto& p : spec.players) {
    p.rho = 0.0;
    p.gamma = 0.0;
    p.kappa = 0.0;
    p.lambda = 1.0;
    p.h_kernel = UpdateKernel::stay();
  }
  spec.initial_baselines = {2, 2};
  auto records = run_experiment(spec);
  for (const auto& rec : records) {
    CHECK(rec.freq_opt == doctest::Approx(1.0));
    CHECK(rec.freq_eq == doctest::Approx(1.0));
    for (long long p : rec.policy_index) CHECK(p == 10);
  }
}

TEST_CASE("runs are bitwise reproducible") {
  ExperimentSpec spec = small_spec();
  auto a = run_experiment(spec);
  auto b = run_experiment(spec);
  CHECK(records_equal(a, b));
  SUBCASE("independent of the thread budget") {
    setenv("TEAMLEARN_THREADS", "1", 1);
    auto serial = run_experiment(spec);
    setenv("TEAMLEARN_THREADS", "3", 1);
    auto parallel = run_experiment(spec);
    unsetenv("TEAMLEARN_THREADS");
    CHECK(records_equal(serial, parallel));
  }
  SUBCASE("seed order does not change per-seed results") {
    ExperimentSpec shuffled = spec;
    shuffled.seeds = {33, 11, 22};
    auto c = run_experiment(shuffled);
    // match by seed value
    for (const auto& rec : c) {
      bool found = false;
      for (const auto& ref : a)
        if (ref.seed == rec.seed) {
          found = true;
          CHECK(ref.policy_index == rec.policy_index);
        }
      CHECK(found);
    }
  }
}

TEST_CASE("metrics CSV export") {
  SUBCASE("no records yields only the header") {
    TempFile tmp("/tmp/teamlearn_empty.csv");
    export_metrics_csv({}, 2, tmp.path);
    const std::string text = read_file(tmp.path);
    CHECK(text == "seed,phase,policy_index,in_opt,in_eq,S_1,S_2,branch_1,branch_2\n");
  }
  SUBCASE("row count and summary consistency") {
    ExperimentSpec spec = small_spec();
    spec.phases = 3;
    spec.seeds = {11, 22};
    auto records = run_experiment(spec);
    TempFile tmp("/tmp/teamlearn_rows.csv");
    export_metrics_csv(records, 2, tmp.path);
    const std::string text = read_file(tmp.path);
    const long rows = std::count(text.begin(), text.end(), '\n');
    CHECK(rows == 1 + 2 * 3);
    // summary recomputed from the CSV matches the in-memory records
    CHECK(summarize_csv_file(tmp.path) == metrics_summary_json(records));
  }
}

TEST_CASE("experiment documents") {
  const std::string doc = R"({
    "game": {
      "players": 1, "states": 1, "actions": [2], "discounts": [0.8],
      "costs": [[[1.0, 0.0]]],
      "kernel": [[[1.0], [1.0]]]
    },
    "algorithm": "alg2",
    "players": [{"rho": 0.05, "gamma": 0.01, "kappa": 0.1, "lambda": 0.3,
                 "delta": 0.4, "d": 0.5, "window": 10}],
    "phases": 5, "phase_length": 50, "seeds": [1, 2]
  })";
  SUBCASE("load and run") {
    ExperimentSpec spec = load_experiment(doc);
    CHECK(spec.algorithm == Algorithm::Windowed);
    CHECK(spec.players[0].window == 10);
    // default q bounds derive from the cost range and discount
    CHECK(spec.players[0].q_max == doctest::Approx(1.0 / 0.2));
    auto records = run_experiment(spec);
    CHECK(records.size() == 2);
    CHECK(static_cast<int>(records[0].policy_index.size()) == 5);
  }
  SUBCASE("unknown algorithm is rejected") {
    std::string bad = doc;
    bad.replace(bad.find("alg2"), 4, "alg9");
    CHECK_THROWS(load_experiment(bad));
  }
}

TEST_CASE("idealized update procedure runs") {
  ExperimentSpec spec = small_spec();
  spec.algorithm = Algorithm::Iup;
  spec.phases = 2000;
  for (auto& p : spec.players) {
    p.gamma = 0.005;
    p.kappa = 0.1;
    p.lambda = 0.5;
    p.h_kernel = UpdateKernel::inertial(0.5);
  }
  spec.seeds = {1, 2, 3, 4, 5};
  auto records = run_experiment(spec);
  double mean = 0.0;
  for (const auto& rec : records) mean += rec.freq_opt;
  mean /= static_cast<double>(records.size());
  // the exact chain concentrates near the optimum at small gamma
  CHECK(mean > 0.8);
}

TEST_CASE("reproduction study plumbing") {
  SUBCASE("specs encode the study design") {
    ExperimentSpec a = repro_spec('A', 0.01, 3, 10);
    CHECK(a.algorithm == Algorithm::Windowed);
    CHECK(a.phase_length == 10000);
    CHECK(a.seeds == std::vector<std::uint64_t>{12345, 12346, 12347});
    ExperimentSpec c = repro_spec('C', 0.01, 2, 10);
    CHECK(c.algorithm == Algorithm::ConstantAspiration);
    CHECK(c.players[0].aspiration == doctest::Approx(30.0));
    CHECK_THROWS(repro_config('E', 0.01, 0.8, 65.0));
  }
  SUBCASE("table rows carry case, gamma and statistics") {
    auto rows = repro_table("A", {0.05}, 2, 5);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].case_id == 'A');
    CHECK(rows[0].gamma == doctest::Approx(0.05));
    CHECK(rows[0].mean_freq_opt >= 0.0);
    CHECK(rows[0].mean_freq_opt <= 1.0);
    CHECK(rows[0].std_freq_opt >= 0.0);
  }
}
