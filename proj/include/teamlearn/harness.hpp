#pragma once

#include "teamlearn/analysis.hpp"
#include "teamlearn/chain.hpp"
#include "teamlearn/game.hpp"
#include "teamlearn/learners.hpp"
#include "teamlearn/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace teamlearn {

enum class Algorithm {
  Windowed,            // phase learner with windowed aspirations
  ConstantAspiration,  // phase learner with a fixed aspiration level
  Iup,                 // idealized update procedure (exact best replies)
};

struct ExperimentSpec {
  Game game;
  Algorithm algorithm = Algorithm::Windowed;
  std::vector<LearnerConfig> players;   // one per player
  int phases = 1000;
  int phase_length = 10000;             // constant T_k
  std::vector<int> phase_schedule;      // optional per-phase lengths, overrides phase_length
  std::vector<std::uint64_t> seeds;
  int initial_state = -1;               // -1 means uniform over states
  std::vector<int> initial_baselines;   // optional per-player policy ranks; empty means uniform draws

  void validate() const {
    game.validate();
    if (static_cast<int>(players.size()) != game.n_players)
      throw std::invalid_argument("experiment: need one learner config per player");
    for (const auto& p : players) p.validate();
    if (phases < 1) throw std::invalid_argument("experiment: phases must be at least 1");
    if (phase_schedule.empty() && phase_length < 1)
      throw std::invalid_argument("experiment: phase length must be at least 1");
    for (int t : phase_schedule)
      if (t < 1) throw std::invalid_argument("experiment: phase lengths must be at least 1");
    if (seeds.empty()) throw std::invalid_argument("experiment: at least one seed required");
    std::vector<std::uint64_t> sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("experiment: seeds must be distinct");
    if (initial_state >= game.n_states) throw std::invalid_argument("experiment: initial state out of range");
    if (!initial_baselines.empty() && static_cast<int>(initial_baselines.size()) != game.n_players)
      throw std::invalid_argument("experiment: initial baselines must list one policy rank per player");
  }
};

struct MetricsRecord {
  std::uint64_t seed = 0;
  std::vector<long long> policy_index;          // per phase, canonical joint index
  std::vector<bool> in_opt, in_eq;              // per phase
  std::vector<std::vector<double>> scores;      // [phase][player]
  std::vector<std::vector<bool>> satisfied;     // [phase][player]
  double freq_opt = 0.0, freq_eq = 0.0;

  void finalize() {
    const double n = static_cast<double>(policy_index.size());
    freq_opt = n > 0 ? std::count(in_opt.begin(), in_opt.end(), true) / n : 0.0;
    freq_eq = n > 0 ? std::count(in_eq.begin(), in_eq.end(), true) / n : 0.0;
  }
};

// Sample one environment step: per-player costs plus the next state drawn
// from the kernel row.
template <typename Scalar>
std::pair<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>, int> step_environment(const GameT<Scalar>& g, int x,
                                                                          int joint_action, Rng& rng) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> costs(g.n_players);
  for (int i = 0; i < g.n_players; ++i) costs(i) = g.cost[i](x, joint_action);
  const Scalar u = static_cast<Scalar>(rng.real());
  Scalar acc = Scalar(0);
  int next = g.n_states - 1;
  for (int y = 0; y < g.n_states; ++y) {
    acc += g.kernel[x](joint_action, y);
    if (u < acc) {
      next = y;
      break;
    }
  }
  return {costs, next};
}

namespace detail {

// Fixed per-seed stream layout: stream 0 drives the environment (initial
// state and transitions), stream i+1 drives player i's learner.
inline Rng environment_rng(std::uint64_t seed) { return Rng(Rng::derive(seed, 0)); }
inline Rng player_rng(std::uint64_t seed, int player) {
  return Rng(Rng::derive(seed, static_cast<std::uint64_t>(player) + 1));
}

inline MetricsRecord run_learner_seed(const ExperimentSpec& spec, const std::set<long long>& opt,
                                      const std::set<long long>& eq, std::uint64_t seed) {
  const Game& g = spec.game;
  const int N = g.n_players;
  Rng env = environment_rng(seed);
  std::vector<LearnerState> agents;
  agents.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    LearnerState s(spec.players[i], g.n_states, g.n_actions[i], Rng::derive(seed, static_cast<std::uint64_t>(i) + 1));
    s.baseline = spec.initial_baselines.empty() ? s.rng.uniform_int(s.n_policies)
                                                : spec.initial_baselines[static_cast<std::size_t>(i)];
    agents.push_back(std::move(s));
  }
  int x = spec.initial_state >= 0 ? spec.initial_state : env.uniform_int(g.n_states);

  MetricsRecord rec;
  rec.seed = seed;
  rec.policy_index.reserve(static_cast<std::size_t>(spec.phases));
  std::vector<int> joint_action(static_cast<std::size_t>(N));
  const bool constant_aspiration = spec.algorithm == Algorithm::ConstantAspiration;
  for (int k = 0; k < spec.phases; ++k) {
    const int T = spec.phase_schedule.empty() ? spec.phase_length
                                              : spec.phase_schedule[static_cast<std::size_t>(
                                                    std::min<std::size_t>(k, spec.phase_schedule.size() - 1))];
    // classify the phase's baseline joint policy before stepping
    std::vector<int> ranks(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) ranks[static_cast<std::size_t>(i)] = agents[static_cast<std::size_t>(i)].baseline;
    const long long idx = g.joint_policy_index(ranks);
    rec.policy_index.push_back(idx);
    rec.in_opt.push_back(opt.count(idx) > 0);
    rec.in_eq.push_back(eq.count(idx) > 0);

    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < N; ++i) joint_action[static_cast<std::size_t>(i)] = select_action(agents[static_cast<std::size_t>(i)], x);
      const int u = g.joint_action_index(joint_action);
      // allocation-free environment step (the hot path of every experiment)
      const double draw = env.real();
      double acc = 0.0;
      int next = g.n_states - 1;
      for (int y = 0; y < g.n_states; ++y) {
        acc += g.kernel[static_cast<std::size_t>(x)](u, y);
        if (draw < acc) {
          next = y;
          break;
        }
      }
      for (int i = 0; i < N; ++i) {
        Transition tr{x, joint_action[static_cast<std::size_t>(i)], g.cost[static_cast<std::size_t>(i)](x, u), next};
        q_step(agents[static_cast<std::size_t>(i)], tr);
        if (constant_aspiration) j_step(agents[static_cast<std::size_t>(i)], tr);
      }
      x = next;
    }

    std::vector<double> scores(static_cast<std::size_t>(N));
    std::vector<bool> sat(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      PhaseOutcome out = constant_aspiration ? end_phase_constant(agents[static_cast<std::size_t>(i)])
                                             : end_phase_windowed(agents[static_cast<std::size_t>(i)]);
      scores[static_cast<std::size_t>(i)] = out.score;
      sat[static_cast<std::size_t>(i)] = out.satisfied;
    }
    rec.scores.push_back(std::move(scores));
    rec.satisfied.push_back(std::move(sat));
  }
  rec.finalize();
  return rec;
}

inline MetricsRecord run_iup_seed(const ExperimentSpec& spec, const ChainModel& chain, const std::set<long long>& opt,
                                  const std::set<long long>& eq, std::uint64_t seed) {
  const Game& g = spec.game;
  Rng env = environment_rng(seed);
  const long long n = g.n_joint_policies();
  long long idx = env.uniform_int(static_cast<int>(n));
  MetricsRecord rec;
  rec.seed = seed;
  for (int k = 0; k < spec.phases; ++k) {
    rec.policy_index.push_back(idx);
    rec.in_opt.push_back(opt.count(idx) > 0);
    rec.in_eq.push_back(eq.count(idx) > 0);
    rec.scores.emplace_back(static_cast<std::size_t>(g.n_players), 0.0);
    rec.satisfied.emplace_back();
    for (int i = 0; i < g.n_players; ++i) rec.satisfied.back().push_back(chain.satisfied_set.count(idx) > 0);
    const double u = env.real();
    double acc = 0.0;
    long long next = n - 1;
    for (long long q = 0; q < n; ++q) {
      acc += chain.matrix(static_cast<int>(idx), static_cast<int>(q));
      if (u < acc) {
        next = q;
        break;
      }
    }
    idx = next;
  }
  rec.finalize();
  return rec;
}

inline int thread_budget() {
  if (const char* env = std::getenv("TEAMLEARN_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace detail

// Run every seed of the experiment; seeds execute concurrently (capped by
// TEAMLEARN_THREADS) with fully isolated state, so results are identical
// for any thread count.
inline std::vector<MetricsRecord> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const Game& g = spec.game;
  const std::set<long long> opt = team_optimal_set(g);
  const std::set<long long> eq = equilibrium_set_deterministic(g);

  ChainModel chain;
  if (spec.algorithm == Algorithm::Iup) {
    std::vector<double> gamma, kappa, lambda;
    std::vector<UpdateKernel> h;
    for (const auto& p : spec.players) {
      gamma.push_back(p.gamma);
      kappa.push_back(p.kappa);
      lambda.push_back(p.lambda);
      h.push_back(p.h_kernel);
    }
    chain = iup_transition_matrix(g, opt, gamma, kappa, lambda, h);
  }

  std::vector<MetricsRecord> records(spec.seeds.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    for (std::size_t s = cursor.fetch_add(1); s < spec.seeds.size(); s = cursor.fetch_add(1)) {
      records[s] = spec.algorithm == Algorithm::Iup
                       ? detail::run_iup_seed(spec, chain, opt, eq, spec.seeds[s])
                       : detail::run_learner_seed(spec, opt, eq, spec.seeds[s]);
    }
  };
  const int n_threads = std::min<int>(detail::thread_budget(), static_cast<int>(spec.seeds.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return records;
}

// --- reproduction study (the two-state team game of make_fig3) ---

struct ReproRow {
  char case_id;
  double gamma;
  double mean_freq_opt;
  double std_freq_opt;
};

// Per-case parameters for the reproduction study.  The free parameters not
// pinned by the study design (rho, delta, d, lambda where only a range is
// given, and the step-size exponent) are calibrated; see README.
inline LearnerConfig repro_config(char case_id, double gamma, double beta, double q_bound) {
  LearnerConfig cfg;
  cfg.discount = beta;
  cfg.gamma = gamma;
  cfg.gamma_schedule = GammaSchedule::Constant;
  cfg.delta = 0.4;
  cfg.step_size_exponent = 0.8;
  cfg.q_min = -q_bound;
  cfg.q_max = q_bound;
  switch (case_id) {
    case 'A':
      cfg.rho = 0.1;
      cfg.lambda = 0.2;
      cfg.kappa = gamma + 0.1;
      cfg.d = 2.0;
      cfg.window = 60;
      cfg.h_kernel = UpdateKernel::inertial(0.2);
      break;
    case 'B':
      cfg.rho = 0.1;
      cfg.lambda = 1.0;
      cfg.kappa = 1.0;
      cfg.d = 2.0;
      cfg.window = 50;
      cfg.h_kernel = UpdateKernel::inertial(1.0);
      break;
    case 'C':
      cfg.rho = 0.02;
      cfg.lambda = 0.2;
      cfg.kappa = gamma + 0.2;
      cfg.aspiration = 30.0;
      cfg.g_kernel = UpdateKernel::inertial(0.2);
      cfg.h_kernel = UpdateKernel::inertial(0.2);
      break;
    case 'D':
      cfg.rho = 0.02;
      cfg.lambda = 1.0;
      cfg.kappa = gamma + 0.2;
      cfg.aspiration = 30.0;
      cfg.g_kernel = UpdateKernel::inertial(1.0);
      cfg.h_kernel = UpdateKernel::inertial(1.0);
      break;
    default:
      throw std::invalid_argument("repro: case must be one of A, B, C, D");
  }
  return cfg;
}

inline ExperimentSpec repro_spec(char case_id, double gamma, int n_seeds, int phases) {
  ExperimentSpec spec;
  spec.game = make_fig3(0.8);
  spec.algorithm = (case_id == 'A' || case_id == 'B') ? Algorithm::Windowed : Algorithm::ConstantAspiration;
  spec.phase_length = case_id == 'A' ? 10000 : (case_id == 'B' ? 5000 : 7500);
  spec.phases = phases;
  const double q_bound = spec.game.max_abs_cost(0) / (1.0 - 0.8);
  for (int i = 0; i < spec.game.n_players; ++i) spec.players.push_back(repro_config(case_id, gamma, 0.8, q_bound));
  for (int s = 0; s < n_seeds; ++s) spec.seeds.push_back(12345 + static_cast<std::uint64_t>(s));
  return spec;
}

inline std::vector<ReproRow> repro_table(const std::string& cases, const std::vector<double>& gammas, int n_seeds = 10,
                                         int phases = 1000) {
  std::vector<ReproRow> rows;
  for (char c : cases) {
    for (double gamma : gammas) {
      ExperimentSpec spec = repro_spec(c, gamma, n_seeds, phases);
      std::vector<MetricsRecord> records = run_experiment(spec);
      double mean = 0.0;
      for (const auto& r : records) mean += r.freq_opt;
      mean /= static_cast<double>(records.size());
      double var = 0.0;
      for (const auto& r : records) var += (r.freq_opt - mean) * (r.freq_opt - mean);
      var = records.size() > 1 ? var / static_cast<double>(records.size() - 1) : 0.0;
      rows.push_back({c, gamma, mean, std::sqrt(var)});
    }
  }
  return rows;
}

}  // namespace teamlearn
