#pragma once

#include "teamlearn/chain.hpp"
#include "teamlearn/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

namespace teamlearn {

// One environment step as seen by a single learner: the global state, the
// learner's own action and realized cost, and the successor state.  It
// deliberately carries no information about the other players, so a
// learner cannot depend on opponent actions by construction.
struct Transition {
  int state;
  int own_action;
  double cost;
  int next_state;
};

enum class GammaSchedule {
  Constant,       // gamma_n = gamma0 (Algorithm 2 and the reproduction runs)
  InverseSquare,  // gamma_n = gamma0 / (n+1)^2, summable
};

struct LearnerConfig {
  double discount = 0.95;   // beta, the learner's own discount factor
  double rho = 0.01;        // action-experimentation probability
  double gamma = 0.01;      // policy-experimentation when satisfied (gamma0 for schedules)
  GammaSchedule gamma_schedule = GammaSchedule::Constant;
  double kappa = 0.1;       // policy-experimentation when unsatisfied
  double lambda = 0.5;      // inertia
  double delta = 1e-4;      // best-reply tolerance
  double d = 1e-4;          // aspiration tolerance above the windowed minimum (windowed variant)
  int window = 30;          // W (windowed variant)
  double aspiration = 0.0;  // Lambda (constant-aspiration variant)
  double step_size_exponent = 0.8;  // alpha_n = 1/(n+1)^theta, theta in (1/2, 1]
  double q_min = -std::numeric_limits<double>::infinity();
  double q_max = std::numeric_limits<double>::infinity();
  UpdateKernel h_kernel = UpdateKernel::inertial(0.5);  // unsatisfied-branch kernel
  UpdateKernel g_kernel = UpdateKernel::inertial(0.5);  // satisfied-branch kernel (constant-aspiration variant)

  void validate() const {
    if (!(discount > 0.0 && discount < 1.0)) throw std::invalid_argument("learner config: discount outside (0,1)");
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(rho) || !in01(gamma) || !in01(kappa) || !in01(lambda))
      throw std::invalid_argument("learner config: probabilities must lie in [0,1]");
    if (!(delta > 0.0)) throw std::invalid_argument("learner config: delta must be positive");
    if (!(d > 0.0)) throw std::invalid_argument("learner config: d must be positive");
    if (window < 1) throw std::invalid_argument("learner config: window must be at least 1");
    if (!(step_size_exponent > 0.5 && step_size_exponent <= 1.0))
      throw std::invalid_argument("learner config: step-size exponent must lie in (1/2, 1]");
    if (!(q_min <= q_max)) throw std::invalid_argument("learner config: empty q bounds");
  }
};

// Runtime state of one independent learner.
struct LearnerState {
  LearnerConfig cfg;
  int n_states = 0;
  int n_actions = 0;
  int n_policies = 0;
  int baseline = 0;  // canonical policy rank (state 0 fastest digit)
  Eigen::MatrixXd q;              // n_states x n_actions
  Eigen::VectorXd j;              // n_states (constant-aspiration variant)
  Eigen::MatrixXi visits;         // per (state, action), reset each phase
  Eigen::VectorXi state_visits;   // per state, reset each phase
  std::deque<double> score_window;
  int phase = 0;
  Rng rng;

  LearnerState(LearnerConfig config, int states, int actions, std::uint64_t seed)
      : cfg(config), n_states(states), n_actions(actions), rng(seed) {
    cfg.validate();
    n_policies = 1;
    for (int x = 0; x < states; ++x) n_policies *= actions;
    q.setZero(states, actions);
    j.setZero(states);
    visits.setZero(states, actions);
    state_visits.setZero(states);
  }

  int baseline_action(int x) const {
    int r = baseline;
    for (int s = 0; s < x; ++s) r /= n_actions;
    return r % n_actions;
  }
};

// Per-phase diagnostics emitted by the end-of-phase update.
struct PhaseOutcome {
  double score = 0.0;        // S (windowed) or S~ (constant aspiration)
  double aspiration = 0.0;   // Lambda used for the satisfaction test
  bool satisfied = false;
  int best_reply_count = 0;
  int new_baseline = 0;
};

// rho-greedy action selection around the baseline policy.
inline int select_action(LearnerState& s, int x) {
  if (s.rng.real() < s.cfg.rho) return s.rng.uniform_int(s.n_actions);
  return s.baseline_action(x);
}

namespace detail {

inline double step_size(int visit_count, double theta) { return 1.0 / std::pow(visit_count + 1.0, theta); }

inline std::vector<int> estimated_best_replies(const LearnerState& s) {
  std::vector<int> br;
  for (int r = 0; r < s.n_policies; ++r) {
    bool ok = true;
    int rank = r;
    for (int x = 0; x < s.n_states && ok; ++x) {
      const int a = rank % s.n_actions;
      rank /= s.n_actions;
      if (s.q(x, a) > s.q.row(x).minCoeff() + s.cfg.delta) ok = false;
    }
    if (ok) br.push_back(r);
  }
  return br;
}

// Draw the next baseline from (1-mix) * kernel + mix * uniform.
inline int draw_next_baseline(LearnerState& s, const UpdateKernel& kernel, const std::vector<int>& br, double mix) {
  if (s.rng.real() < mix) return s.rng.uniform_int(s.n_policies);
  switch (kernel.kind) {
    case UpdateKernel::Kind::Stay:
      return s.baseline;
    case UpdateKernel::Kind::Uniform:
      return s.rng.uniform_int(s.n_policies);
    case UpdateKernel::Kind::Inertial: {
      if (std::find(br.begin(), br.end(), s.baseline) != br.end()) return s.baseline;
      if (s.rng.real() < kernel.lambda) return s.baseline;
      return br[s.rng.uniform_int(static_cast<int>(br.size()))];
    }
    case UpdateKernel::Kind::Custom: {
      double u = s.rng.real(), acc = 0.0;
      for (int r = 0; r < s.n_policies; ++r) {
        acc += kernel.table(s.baseline, r);
        if (u < acc) return r;
      }
      return s.n_policies - 1;
    }
  }
  return s.baseline;
}

inline void clamp_tables(LearnerState& s) {
  s.q = s.q.cwiseMax(s.cfg.q_min).cwiseMin(s.cfg.q_max);
  s.j = s.j.cwiseMax(s.cfg.q_min).cwiseMin(s.cfg.q_max);
}

inline double gamma_at_phase(const LearnerConfig& cfg, int phase) {
  switch (cfg.gamma_schedule) {
    case GammaSchedule::Constant:
      return cfg.gamma;
    case GammaSchedule::InverseSquare:
      return cfg.gamma / ((phase + 1.0) * (phase + 1.0));
  }
  return cfg.gamma;
}

}  // namespace detail

// Q-factor update for the transition's (state, action) entry, with step
// size indexed by the per-pair visit count within the current phase.
inline void q_step(LearnerState& s, const Transition& tr) {
  const double alpha = detail::step_size(s.visits(tr.state, tr.own_action), s.cfg.step_size_exponent);
  s.visits(tr.state, tr.own_action) += 1;
  const double target = tr.cost + s.cfg.discount * s.q.row(tr.next_state).minCoeff();
  s.q(tr.state, tr.own_action) = (1.0 - alpha) * s.q(tr.state, tr.own_action) + alpha * target;
}

// TD(0) state-value update (constant-aspiration variant only).
inline void j_step(LearnerState& s, const Transition& tr) {
  const double alpha = detail::step_size(s.state_visits(tr.state), s.cfg.step_size_exponent);
  s.state_visits(tr.state) += 1;
  s.j(tr.state) = (1.0 - alpha) * s.j(tr.state) + alpha * (tr.cost + s.cfg.discount * s.j(tr.next_state));
}

// End-of-phase update, windowed-aspiration variant: score the baseline
// from the learned Q-factors, compare with the windowed minimum plus d,
// draw the next baseline from the corresponding mixture, then warm-start
// the next phase by clamping Q into bounds and resetting visit counters.
inline PhaseOutcome end_phase_windowed(LearnerState& s) {
  PhaseOutcome out;
  const std::vector<int> br = detail::estimated_best_replies(s);
  out.best_reply_count = static_cast<int>(br.size());
  double score = 0.0;
  for (int x = 0; x < s.n_states; ++x) score += s.q(x, s.baseline_action(x));
  out.score = score;
  double aspiration = std::numeric_limits<double>::infinity();
  for (double past : s.score_window) aspiration = std::min(aspiration, past);
  if (!s.score_window.empty()) aspiration += s.cfg.d;
  out.aspiration = aspiration;
  out.satisfied = score <= aspiration;

  const UpdateKernel inertial = UpdateKernel::inertial(s.cfg.lambda);
  out.new_baseline = out.satisfied ? detail::draw_next_baseline(s, inertial, br, s.cfg.gamma)
                                   : detail::draw_next_baseline(s, s.cfg.h_kernel, br, s.cfg.kappa);
  s.baseline = out.new_baseline;

  s.score_window.push_back(score);
  while (static_cast<int>(s.score_window.size()) > s.cfg.window) s.score_window.pop_front();
  detail::clamp_tables(s);
  s.visits.setZero();
  s.phase += 1;
  return out;
}

// End-of-phase update, constant-aspiration variant: the satisfaction test
// compares the summed TD(0) values against the fixed aspiration level; the
// satisfied branch uses the g kernel with the (possibly vanishing) gamma
// schedule, the unsatisfied branch uses h with constant kappa.
inline PhaseOutcome end_phase_constant(LearnerState& s) {
  PhaseOutcome out;
  const std::vector<int> br = detail::estimated_best_replies(s);
  out.best_reply_count = static_cast<int>(br.size());
  out.score = s.j.sum();
  out.aspiration = s.cfg.aspiration;
  out.satisfied = out.score <= out.aspiration;

  const double gamma_k = detail::gamma_at_phase(s.cfg, s.phase);
  out.new_baseline = out.satisfied ? detail::draw_next_baseline(s, s.cfg.g_kernel, br, gamma_k)
                                   : detail::draw_next_baseline(s, s.cfg.h_kernel, br, s.cfg.kappa);
  s.baseline = out.new_baseline;

  detail::clamp_tables(s);
  s.visits.setZero();
  s.state_visits.setZero();
  s.phase += 1;
  return out;
}

}  // namespace teamlearn
