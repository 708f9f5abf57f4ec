#pragma once

#include "teamlearn/game.hpp"

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <vector>

namespace teamlearn {

// Single-agent MDP obtained by fixing the other players' policies.
template <typename Scalar = double>
struct MdpT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix cost;                  // n_states x n_actions
  std::vector<Matrix> kernel;   // per state: n_actions x n_states
};
using Mdp = MdpT<double>;

// Game-level constants derived from exhaustive oracle scans.
template <typename Scalar = double>
struct GameConstantsT {
  Scalar delta_bar;   // min positive Q-factor gap (+inf sentinel if none)
  Scalar d_bar;       // half the min positive score gap (+inf sentinel)
  bool degenerate_q = false;       // no positive Q gaps anywhere
  bool degenerate_score = false;   // no positive score gaps anywhere
  // score[i][joint_policy_index] = S^i(pi) = sum_x Q*(x, pi^i(x)) against pi^{-i}
  std::vector<std::vector<Scalar>> score;
  // tilde_score[i][joint_policy_index] = sum_x J^i_x(pi)
  std::vector<std::vector<Scalar>> tilde_score;
};
using GameConstants = GameConstantsT<double>;

namespace detail {

// Enumerate opponent joint actions compatible with fixing player `i`'s own
// action, weighting by the opponents' randomized state distributions.
template <typename Scalar, typename Fn>
void for_each_opponent_profile(const GameT<Scalar>& g, int player, const std::vector<RandomizedPolicyT<Scalar>>& others,
                               int x, int own_action, Fn&& fn) {
  const int m = g.n_joint_actions();
  for (int u = 0; u < m; ++u) {
    std::vector<int> a = g.joint_action_unflatten(u);
    if (a[player] != own_action) continue;
    Scalar w = Scalar(1);
    int oi = 0;
    for (int j = 0; j < g.n_players; ++j) {
      if (j == player) continue;
      w *= others[oi].dist_of_state(x, a[j]);
      ++oi;
    }
    if (w != Scalar(0)) fn(u, w);
  }
}

}  // namespace detail

// Marginalize cost and kernel over the opponents' action distributions.
template <typename Scalar>
MdpT<Scalar> induced_mdp(const GameT<Scalar>& g, int player, const std::vector<RandomizedPolicyT<Scalar>>& others) {
  if (static_cast<int>(others.size()) != g.n_players - 1)
    throw std::invalid_argument("induced_mdp: need one policy per opponent");
  for (const auto& pol : others)
    if (pol.dist_of_state.rows() != g.n_states) throw std::invalid_argument("induced_mdp: policy state count mismatch");
  MdpT<Scalar> mdp;
  const int nA = g.n_actions[player];
  mdp.cost.setZero(g.n_states, nA);
  mdp.kernel.assign(g.n_states, typename MdpT<Scalar>::Matrix(nA, g.n_states));
  for (auto& k : mdp.kernel) k.setZero();
  for (int x = 0; x < g.n_states; ++x)
    for (int a = 0; a < nA; ++a)
      detail::for_each_opponent_profile(g, player, others, x, a, [&](int u, Scalar w) {
        mdp.cost(x, a) += w * g.cost[player](x, u);
        mdp.kernel[x].row(a) += w * g.kernel[x].row(u);
      });
  return mdp;
}

template <typename Scalar>
MdpT<Scalar> induced_mdp(const GameT<Scalar>& g, int player, const std::vector<DeterministicPolicy>& others) {
  std::vector<RandomizedPolicyT<Scalar>> rand;
  rand.reserve(others.size());
  int oi = 0;
  for (int j = 0; j < g.n_players; ++j) {
    if (j == player) continue;
    rand.push_back(RandomizedPolicyT<Scalar>::from_deterministic(others[oi], g.n_actions[j]));
    ++oi;
  }
  return induced_mdp(g, player, rand);
}

// Optimal Q-factors by value iteration.  The stopping rule guarantees the
// returned table is within `tol` of the fixed point in sup norm.
template <typename Scalar>
typename MdpT<Scalar>::Matrix value_iteration_q(const MdpT<Scalar>& mdp, Scalar discount, Scalar tol,
                                                long max_iters = 1000000) {
  if (!(tol > Scalar(0))) throw std::invalid_argument("value_iteration_q: tol must be positive");
  const int S = static_cast<int>(mdp.cost.rows()), A = static_cast<int>(mdp.cost.cols());
  using M = typename MdpT<Scalar>::Matrix;
  M q = M::Zero(S, A), qn(S, A);
  const Scalar stop = tol * (Scalar(1) - discount) / (Scalar(2) * discount);
  for (long it = 0; it < max_iters; ++it) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(S);
    for (int y = 0; y < S; ++y) v(y) = q.row(y).minCoeff();
    for (int x = 0; x < S; ++x)
      for (int a = 0; a < A; ++a) qn(x, a) = mdp.cost(x, a) + discount * mdp.kernel[x].row(a).dot(v);
    const Scalar diff = (qn - q).cwiseAbs().maxCoeff();
    q.swap(qn);
    if (diff < stop) return q;
  }
  throw std::runtime_error("value_iteration_q: iteration cap exceeded");
}

// Exact per-state value of a fixed joint randomized policy: solves the
// linear system J = c_pi + beta P_pi J directly.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> policy_value(const GameT<Scalar>& g,
                                                      const std::vector<RandomizedPolicyT<Scalar>>& joint,
                                                      int player) {
  if (static_cast<int>(joint.size()) != g.n_players) throw std::invalid_argument("policy_value: need one policy per player");
  const int S = g.n_states, m = g.n_joint_actions();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> c = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(S);
  using M = typename GameT<Scalar>::Matrix;
  M P = M::Zero(S, S);
  for (int x = 0; x < S; ++x)
    for (int u = 0; u < m; ++u) {
      std::vector<int> a = g.joint_action_unflatten(u);
      Scalar w = Scalar(1);
      for (int j = 0; j < g.n_players; ++j) w *= joint[j].dist_of_state(x, a[j]);
      if (w == Scalar(0)) continue;
      c(x) += w * g.cost[player](x, u);
      P.row(x) += w * g.kernel[x].row(u);
    }
  M lhs = M::Identity(S, S) - g.discount(player) * P;
  return lhs.fullPivLu().solve(c);
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> policy_value(const GameT<Scalar>& g,
                                                      const std::vector<DeterministicPolicy>& joint, int player) {
  std::vector<RandomizedPolicyT<Scalar>> rand;
  rand.reserve(joint.size());
  for (int j = 0; j < g.n_players; ++j)
    rand.push_back(RandomizedPolicyT<Scalar>::from_deterministic(joint[j], g.n_actions[j]));
  return policy_value(g, rand, player);
}

// Deterministic best replies of `player` against fixed deterministic
// opponents: policies whose action is optimal in every state.  Membership
// is tested at tolerance `br_tol` against value iteration run at
// `br_tol/2`, so the tolerance-based set equals the exact set whenever
// br_tol is below the minimum positive Q gap.
template <typename Scalar>
std::vector<int> best_reply_ranks(const GameT<Scalar>& g, int player, const std::vector<DeterministicPolicy>& others,
                                  Scalar br_tol = Scalar(1e-8)) {
  MdpT<Scalar> mdp = induced_mdp(g, player, others);
  typename MdpT<Scalar>::Matrix q = value_iteration_q(mdp, g.discount(player), br_tol / Scalar(2));
  std::vector<int> out;
  const int n_pi = g.n_policies(player);
  for (int r = 0; r < n_pi; ++r) {
    DeterministicPolicy pi = g.policy_unrank(player, r);
    bool ok = true;
    for (int x = 0; x < g.n_states && ok; ++x)
      if (q(x, pi.action_of_state[x]) > q.row(x).minCoeff() + br_tol) ok = false;
    if (ok) out.push_back(r);
  }
  return out;
}

template <typename Scalar>
std::vector<DeterministicPolicy> best_reply_set(const GameT<Scalar>& g, int player,
                                                const std::vector<DeterministicPolicy>& others,
                                                Scalar br_tol = Scalar(1e-8)) {
  std::vector<DeterministicPolicy> out;
  for (int r : best_reply_ranks(g, player, others, br_tol)) out.push_back(g.policy_unrank(player, r));
  return out;
}

namespace detail {

template <typename Scalar>
std::vector<DeterministicPolicy> opponents_of(const GameT<Scalar>& g, const std::vector<int>& joint_ranks, int player) {
  std::vector<DeterministicPolicy> others;
  for (int j = 0; j < g.n_players; ++j)
    if (j != player) others.push_back(g.policy_unrank(j, joint_ranks[j]));
  return others;
}

}  // namespace detail

// S^i(pi): own Q-factors against pi^{-i}, summed over states at pi^i.
template <typename Scalar>
Scalar cost_score(const GameT<Scalar>& g, int player, const std::vector<int>& joint_ranks,
                  Scalar vi_tol = Scalar(1e-10)) {
  MdpT<Scalar> mdp = induced_mdp(g, player, detail::opponents_of(g, joint_ranks, player));
  typename MdpT<Scalar>::Matrix q = value_iteration_q(mdp, g.discount(player), vi_tol);
  DeterministicPolicy pi = g.policy_unrank(player, joint_ranks[player]);
  Scalar s = Scalar(0);
  for (int x = 0; x < g.n_states; ++x) s += q(x, pi.action_of_state[x]);
  return s;
}

// S~^i(pi): exact values of the joint policy summed over states.
template <typename Scalar>
Scalar tilde_score(const GameT<Scalar>& g, int player, const std::vector<int>& joint_ranks) {
  std::vector<DeterministicPolicy> joint;
  for (int j = 0; j < g.n_players; ++j) joint.push_back(g.policy_unrank(j, joint_ranks[j]));
  return policy_value(g, joint, player).sum();
}

// Exhaustive scan over all players and opponent profiles for the minimum
// positive Q-factor gap (delta_bar) and half the minimum positive score
// gap (d_bar).  Positive-gap detection threshold is 1e-9; a scan with no
// positive gaps yields an infinity sentinel plus a degeneracy flag.
template <typename Scalar>
GameConstantsT<Scalar> game_constants(const GameT<Scalar>& g, Scalar vi_tol = Scalar(1e-10)) {
  const long long n_joint = g.n_joint_policies();
  if (n_joint > 65536) throw std::runtime_error("game_constants: joint policy enumeration guard exceeded");
  const Scalar gap_eps = Scalar(1e-9);
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  GameConstantsT<Scalar> out;
  out.delta_bar = inf;
  out.d_bar = inf;
  out.score.assign(g.n_players, std::vector<Scalar>(static_cast<std::size_t>(n_joint), Scalar(0)));
  out.tilde_score.assign(g.n_players, std::vector<Scalar>(static_cast<std::size_t>(n_joint), Scalar(0)));

  for (int i = 0; i < g.n_players; ++i) {
    // enumerate opponent profiles once per player
    long long n_opp = 1;
    std::vector<int> opp_players;
    for (int j = 0; j < g.n_players; ++j)
      if (j != i) {
        n_opp *= g.n_policies(j);
        opp_players.push_back(j);
      }
    for (long long o = 0; o < n_opp; ++o) {
      long long rem = o;
      std::vector<int> joint_ranks(g.n_players, 0);
      std::vector<DeterministicPolicy> others;
      for (int j : opp_players) {
        joint_ranks[j] = static_cast<int>(rem % g.n_policies(j));
        rem /= g.n_policies(j);
        others.push_back(g.policy_unrank(j, joint_ranks[j]));
      }
      MdpT<Scalar> mdp = induced_mdp(g, i, others);
      typename MdpT<Scalar>::Matrix q = value_iteration_q(mdp, g.discount(i), vi_tol);
      // per-state gaps between own actions
      for (int x = 0; x < g.n_states; ++x)
        for (int a = 0; a < g.n_actions[i]; ++a)
          for (int b = a + 1; b < g.n_actions[i]; ++b) {
            const Scalar gap = std::abs(q(x, a) - q(x, b));
            if (gap > gap_eps && gap < out.delta_bar) out.delta_bar = gap;
          }
      // fill scores for all own policies against this profile
      for (int r = 0; r < g.n_policies(i); ++r) {
        joint_ranks[i] = r;
        DeterministicPolicy pi = g.policy_unrank(i, r);
        Scalar s = Scalar(0);
        for (int x = 0; x < g.n_states; ++x) s += q(x, pi.action_of_state[x]);
        const long long idx = g.joint_policy_index(joint_ranks);
        out.score[i][static_cast<std::size_t>(idx)] = s;
        out.tilde_score[i][static_cast<std::size_t>(idx)] = tilde_score(g, i, joint_ranks);
      }
    }
  }
  for (int i = 0; i < g.n_players; ++i)
    for (std::size_t a = 0; a < out.score[i].size(); ++a)
      for (std::size_t b = a + 1; b < out.score[i].size(); ++b) {
        const Scalar gap = std::abs(out.score[i][a] - out.score[i][b]);
        if (gap > gap_eps && gap / Scalar(2) < out.d_bar) out.d_bar = gap / Scalar(2);
      }
  out.degenerate_q = !(out.delta_bar < inf);
  out.degenerate_score = !(out.d_bar < inf);
  return out;
}

}  // namespace teamlearn
