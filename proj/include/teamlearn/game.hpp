#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace teamlearn {

// A deterministic stationary policy for one player: one action per state.
struct DeterministicPolicy {
  int player = 0;
  std::vector<int> action_of_state;

  friend bool operator==(const DeterministicPolicy&, const DeterministicPolicy&) = default;
};

// A randomized stationary policy: one distribution over own actions per state.
template <typename Scalar = double>
struct RandomizedPolicyT {
  int player = 0;
  // rows = states, cols = own actions
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dist_of_state;

  static RandomizedPolicyT from_deterministic(const DeterministicPolicy& pi, int n_actions) {
    RandomizedPolicyT r;
    r.player = pi.player;
    r.dist_of_state.setZero(static_cast<int>(pi.action_of_state.size()), n_actions);
    for (int x = 0; x < r.dist_of_state.rows(); ++x) r.dist_of_state(x, pi.action_of_state[x]) = Scalar(1);
    return r;
  }
};
using RandomizedPolicy = RandomizedPolicyT<double>;

// Finite discounted stochastic game with dense tensors.
//
// Joint actions are flattened player-major with player 0 as the fastest
// digit: joint = sum_i u_i * prod_{j<i} n_actions[j].  The same fastest-
// first convention is used to rank per-player deterministic policies
// (state 0 fastest) and joint policies (player 0 fastest); these ranks are
// the canonical indices used by every other module.
template <typename Scalar = double>
struct GameT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  int n_players = 0;
  int n_states = 0;
  std::vector<int> n_actions;           // per player
  Vector discount;                      // per player, each in (0,1)
  std::vector<Matrix> cost;             // per player: n_states x n_joint_actions
  std::vector<Matrix> kernel;           // per state: n_joint_actions x n_states
  std::vector<std::string> state_labels;   // optional, 1-based numerals by default
  std::vector<std::vector<std::string>> action_labels;  // optional, per player

  int n_joint_actions() const {
    int m = 1;
    for (int a : n_actions) m *= a;
    return m;
  }

  // --- joint-action flattening (player 0 fastest digit) ---

  int joint_action_index(const std::vector<int>& u) const {
    int idx = 0, stride = 1;
    for (int i = 0; i < n_players; ++i) {
      idx += u[i] * stride;
      stride *= n_actions[i];
    }
    return idx;
  }

  std::vector<int> joint_action_unflatten(int idx) const {
    std::vector<int> u(n_players);
    for (int i = 0; i < n_players; ++i) {
      u[i] = idx % n_actions[i];
      idx /= n_actions[i];
    }
    return u;
  }

  // --- per-player deterministic policy ranking (state 0 fastest digit) ---

  int n_policies(int player) const {
    int m = 1;
    for (int x = 0; x < n_states; ++x) m *= n_actions[player];
    return m;
  }

  int policy_rank(const DeterministicPolicy& pi) const {
    int idx = 0, stride = 1;
    for (int x = 0; x < n_states; ++x) {
      idx += pi.action_of_state[x] * stride;
      stride *= n_actions[pi.player];
    }
    return idx;
  }

  DeterministicPolicy policy_unrank(int player, int rank) const {
    DeterministicPolicy pi;
    pi.player = player;
    pi.action_of_state.resize(n_states);
    for (int x = 0; x < n_states; ++x) {
      pi.action_of_state[x] = rank % n_actions[player];
      rank /= n_actions[player];
    }
    return pi;
  }

  std::vector<DeterministicPolicy> enumerate_policies(int player) const {
    std::vector<DeterministicPolicy> out;
    const int m = n_policies(player);
    out.reserve(m);
    for (int r = 0; r < m; ++r) out.push_back(policy_unrank(player, r));
    return out;
  }

  // --- joint policy ranking (player 0 fastest digit) ---

  long long n_joint_policies() const {
    long long m = 1;
    for (int i = 0; i < n_players; ++i) m *= n_policies(i);
    return m;
  }

  long long joint_policy_index(const std::vector<int>& per_player_ranks) const {
    long long idx = 0, stride = 1;
    for (int i = 0; i < n_players; ++i) {
      idx += per_player_ranks[i] * stride;
      stride *= n_policies(i);
    }
    return idx;
  }

  std::vector<int> joint_policy_unflatten(long long idx) const {
    std::vector<int> r(n_players);
    for (int i = 0; i < n_players; ++i) {
      r[i] = static_cast<int>(idx % n_policies(i));
      idx /= n_policies(i);
    }
    return r;
  }

  // Action of each player at state x under the joint policy with the given
  // per-player ranks, flattened to a joint-action index.
  int joint_action_of(const std::vector<int>& per_player_ranks, int x) const {
    int idx = 0, stride = 1;
    for (int i = 0; i < n_players; ++i) {
      int rank = per_player_ranks[i], a = rank;
      for (int s = 0; s < x; ++s) a /= n_actions[i];
      a %= n_actions[i];
      idx += a * stride;
      stride *= n_actions[i];
    }
    return idx;
  }

  void validate() const {
    if (n_players <= 0) throw std::invalid_argument("game: players must be positive");
    if (n_states <= 0) throw std::invalid_argument("game: states must be positive");
    if (static_cast<int>(n_actions.size()) != n_players)
      throw std::invalid_argument("game: actions list length must equal players");
    for (int i = 0; i < n_players; ++i)
      if (n_actions[i] <= 0) throw std::invalid_argument("game: actions[" + std::to_string(i) + "] must be positive");
    if (discount.size() != n_players) throw std::invalid_argument("game: discounts length must equal players");
    for (int i = 0; i < n_players; ++i)
      if (!(discount[i] > Scalar(0) && discount[i] < Scalar(1)))
        throw std::invalid_argument("game: discount[" + std::to_string(i) + "] outside (0,1)");
    const int m = n_joint_actions();
    if (static_cast<int>(cost.size()) != n_players) throw std::invalid_argument("game: costs player count mismatch");
    for (int i = 0; i < n_players; ++i) {
      if (cost[i].rows() != n_states || cost[i].cols() != m)
        throw std::invalid_argument("game: costs[" + std::to_string(i) + "] shape mismatch");
      for (int x = 0; x < n_states; ++x)
        for (int u = 0; u < m; ++u)
          if (!std::isfinite(static_cast<double>(cost[i](x, u))))
            throw std::invalid_argument("game: non-finite cost at player " + std::to_string(i) + ", state " +
                                        std::to_string(x) + ", joint action " + std::to_string(u));
    }
    if (static_cast<int>(kernel.size()) != n_states) throw std::invalid_argument("game: kernel state count mismatch");
    for (int x = 0; x < n_states; ++x) {
      if (kernel[x].rows() != m || kernel[x].cols() != n_states)
        throw std::invalid_argument("game: kernel[" + std::to_string(x) + "] shape mismatch");
      for (int u = 0; u < m; ++u) {
        Scalar row_sum = Scalar(0);
        for (int y = 0; y < n_states; ++y) {
          const Scalar p = kernel[x](u, y);
          if (p < Scalar(0))
            throw std::invalid_argument("game: negative kernel entry at state " + std::to_string(x) +
                                        ", joint action " + std::to_string(u) + ", next state " + std::to_string(y));
          row_sum += p;
        }
        if (std::abs(static_cast<double>(row_sum) - 1.0) > 1e-9)
          throw std::invalid_argument("game: kernel row does not sum to 1 at state " + std::to_string(x) +
                                      ", joint action " + std::to_string(u));
      }
    }
  }

  Scalar max_abs_cost(int player) const { return cost[player].cwiseAbs().maxCoeff(); }
};
using Game = GameT<double>;

// --- example games ---

// 2x2 repeated game with two pure equilibria; a, b > 0.
// Costs (both players): action pair (1,1) -> a, mixed -> a+b, (2,2) -> -a.
template <typename Scalar = double>
GameT<Scalar> make_fig1(Scalar a, Scalar b, Scalar beta1, Scalar beta2) {
  if (!(a > Scalar(0) && b > Scalar(0))) throw std::invalid_argument("fig1: a, b must be positive");
  if (!(beta1 > Scalar(0) && beta1 < Scalar(1) && beta2 > Scalar(0) && beta2 < Scalar(1)))
    throw std::invalid_argument("fig1: discounts outside (0,1)");
  GameT<Scalar> g;
  g.n_players = 2;
  g.n_states = 1;
  g.n_actions = {2, 2};
  g.discount.resize(2);
  g.discount << beta1, beta2;
  typename GameT<Scalar>::Matrix c(1, 4);
  // joint actions player-major: (u1,u2) = (0,0),(1,0),(0,1),(1,1)
  c << a, a + b, a + b, -a;
  g.cost = {c, c};
  typename GameT<Scalar>::Matrix k(4, 1);
  k.setOnes();
  g.kernel = {k};
  g.validate();
  return g;
}

// 3x3 repeated common-interest game used for the aspiration-set examples.
template <typename Scalar = double>
GameT<Scalar> make_fig2(Scalar beta) {
  if (!(beta > Scalar(0) && beta < Scalar(1))) throw std::invalid_argument("fig2: discount outside (0,1)");
  GameT<Scalar> g;
  g.n_players = 2;
  g.n_states = 1;
  g.n_actions = {3, 3};
  g.discount.resize(2);
  g.discount << beta, beta;
  // rows of the bimatrix (player-1 action), columns (player-2 action):
  //   (10,3) (5,7) (20,20)
  //   (5,7) (10,3) (20,20)
  //   (20,20) (20,20) (0,0)
  const double c1[3][3] = {{10, 5, 20}, {5, 10, 20}, {20, 20, 0}};
  const double c2[3][3] = {{3, 7, 20}, {7, 3, 20}, {20, 20, 0}};
  typename GameT<Scalar>::Matrix m1(1, 9), m2(1, 9);
  for (int u2 = 0; u2 < 3; ++u2)
    for (int u1 = 0; u1 < 3; ++u1) {
      m1(0, u1 + 3 * u2) = Scalar(c1[u1][u2]);
      m2(0, u1 + 3 * u2) = Scalar(c2[u1][u2]);
    }
  g.cost = {m1, m2};
  typename GameT<Scalar>::Matrix k(9, 1);
  k.setOnes();
  g.kernel = {k};
  g.validate();
  return g;
}

// Two-state, two-action team: low-cost state 1 is reached with probability
// 0.95 exactly when the state index and both actions agree; otherwise the
// high-cost state 2 is reached with probability 0.95.
template <typename Scalar = double>
GameT<Scalar> make_fig3(Scalar beta) {
  if (!(beta > Scalar(0) && beta < Scalar(1))) throw std::invalid_argument("fig3: discount outside (0,1)");
  GameT<Scalar> g;
  g.n_players = 2;
  g.n_states = 2;
  g.n_actions = {2, 2};
  g.discount.resize(2);
  g.discount << beta, beta;
  // state 1 cost table: [[1,3],[3,1]]; state 2: [[10,10],[10,13]]
  const double cs[2][2][2] = {{{1, 3}, {3, 1}}, {{10, 10}, {10, 13}}};
  typename GameT<Scalar>::Matrix c(2, 4);
  for (int x = 0; x < 2; ++x)
    for (int u2 = 0; u2 < 2; ++u2)
      for (int u1 = 0; u1 < 2; ++u1) c(x, u1 + 2 * u2) = Scalar(cs[x][u1][u2]);
  g.cost = {c, c};
  g.kernel.assign(2, typename GameT<Scalar>::Matrix(4, 2));
  for (int x = 0; x < 2; ++x)
    for (int u2 = 0; u2 < 2; ++u2)
      for (int u1 = 0; u1 < 2; ++u1) {
        const bool coordinated = (x == u1 && u1 == u2);
        const int u = u1 + 2 * u2;
        g.kernel[x](u, 0) = Scalar(coordinated ? 0.95 : 0.05);
        g.kernel[x](u, 1) = Scalar(coordinated ? 0.05 : 0.95);
      }
  g.validate();
  return g;
}

}  // namespace teamlearn
