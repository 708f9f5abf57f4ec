#pragma once

#include "teamlearn/analysis.hpp"
#include "teamlearn/game.hpp"
#include "teamlearn/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

namespace teamlearn {

// Per-player policy-update kernel used inside the idealized procedure.
template <typename Scalar = double>
struct UpdateKernelT {
  enum class Kind { Inertial, Stay, Uniform, Custom };
  Kind kind = Kind::Inertial;
  Scalar lambda = Scalar(0.5);  // inertia for Kind::Inertial
  // Custom: row-stochastic table indexed (current policy, next policy);
  // ignores best-reply sets.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> table;

  static UpdateKernelT inertial(Scalar lam) { return {Kind::Inertial, lam, {}}; }
  static UpdateKernelT stay() { return {Kind::Stay, Scalar(1), {}}; }
  static UpdateKernelT uniform() { return {Kind::Uniform, Scalar(0), {}}; }
  static UpdateKernelT custom(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> t) {
    for (int r = 0; r < t.rows(); ++r) {
      if (std::abs(static_cast<double>(t.row(r).sum()) - 1.0) > 1e-9 || t.row(r).minCoeff() < Scalar(0))
        throw std::invalid_argument("update kernel: custom table row not stochastic");
    }
    return {Kind::Custom, Scalar(0), std::move(t)};
  }
};
using UpdateKernel = UpdateKernelT<double>;

// Inertial best-reply kernel: keep a best reply with certainty; otherwise
// keep the current policy with probability lambda, else jump uniformly to
// a member of the best-reply set.
template <typename Scalar>
Scalar inertial_kernel_prob(int next_rank, int cur_rank, const std::vector<int>& best_replies, Scalar lambda) {
  if (best_replies.empty()) throw std::invalid_argument("inertial_kernel_prob: empty best-reply set");
  const bool cur_in = std::find(best_replies.begin(), best_replies.end(), cur_rank) != best_replies.end();
  if (cur_in) return next_rank == cur_rank ? Scalar(1) : Scalar(0);
  if (next_rank == cur_rank) return lambda;
  const bool next_in = std::find(best_replies.begin(), best_replies.end(), next_rank) != best_replies.end();
  if (next_in) return (Scalar(1) - lambda) / Scalar(best_replies.size());
  return Scalar(0);
}

template <typename Scalar>
Scalar update_kernel_prob(const UpdateKernelT<Scalar>& k, int next_rank, int cur_rank,
                          const std::vector<int>& best_replies, int n_policies) {
  switch (k.kind) {
    case UpdateKernelT<Scalar>::Kind::Inertial:
      return inertial_kernel_prob(next_rank, cur_rank, best_replies, k.lambda);
    case UpdateKernelT<Scalar>::Kind::Stay:
      return next_rank == cur_rank ? Scalar(1) : Scalar(0);
    case UpdateKernelT<Scalar>::Kind::Uniform:
      return Scalar(1) / Scalar(n_policies);
    case UpdateKernelT<Scalar>::Kind::Custom:
      return k.table(cur_rank, next_rank);
  }
  return Scalar(0);
}

// The idealized update procedure as an exact Markov chain over the joint
// deterministic policy space.
template <typename Scalar = double>
struct ChainModelT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix matrix;                        // |Pi| x |Pi| right stochastic
  std::vector<Scalar> gamma, kappa;     // per player
  std::set<long long> satisfied_set;    // policies using the gamma branch
};
using ChainModel = ChainModelT<double>;

// Row(pi) is the product over players of a per-player mixture: policies in
// the satisfied set use (1-gamma) * inertial(lambda) + gamma * uniform,
// all others use (1-kappa) * h + kappa * uniform.
template <typename Scalar>
ChainModelT<Scalar> iup_transition_matrix(const GameT<Scalar>& g, const std::set<long long>& satisfied,
                                          const std::vector<Scalar>& gamma, const std::vector<Scalar>& kappa,
                                          const std::vector<Scalar>& lambda,
                                          const std::vector<UpdateKernelT<Scalar>>& h) {
  const long long n = g.n_joint_policies();
  if (n > 65536) throw std::runtime_error("iup_transition_matrix: joint policy enumeration guard exceeded");
  const int N = g.n_players;
  if (static_cast<int>(gamma.size()) != N || static_cast<int>(kappa.size()) != N ||
      static_cast<int>(lambda.size()) != N || static_cast<int>(h.size()) != N)
    throw std::invalid_argument("iup_transition_matrix: per-player parameter count mismatch");

  detail::BestReplyCache<Scalar> cache(g);
  ChainModelT<Scalar> chain;
  chain.matrix.setZero(static_cast<int>(n), static_cast<int>(n));
  chain.gamma = gamma;
  chain.kappa = kappa;
  chain.satisfied_set = satisfied;

  for (long long p = 0; p < n; ++p) {
    std::vector<int> ranks = g.joint_policy_unflatten(p);
    const bool sat = satisfied.count(p) > 0;
    // per-player distribution over own next policy
    std::vector<std::vector<Scalar>> dist(N);
    for (int i = 0; i < N; ++i) {
      const int n_pi = g.n_policies(i);
      const auto& br = cache.get(i, ranks);
      dist[i].assign(static_cast<std::size_t>(n_pi), Scalar(0));
      const Scalar mix = sat ? gamma[i] : kappa[i];
      for (int r = 0; r < n_pi; ++r) {
        const Scalar base =
            sat ? inertial_kernel_prob(r, ranks[i], br, lambda[i]) : update_kernel_prob(h[i], r, ranks[i], br, n_pi);
        dist[i][static_cast<std::size_t>(r)] = (Scalar(1) - mix) * base + mix / Scalar(n_pi);
      }
    }
    for (long long q = 0; q < n; ++q) {
      std::vector<int> next = g.joint_policy_unflatten(q);
      Scalar prob = Scalar(1);
      for (int i = 0; i < N; ++i) prob *= dist[i][static_cast<std::size_t>(next[i])];
      chain.matrix(static_cast<int>(p), static_cast<int>(q)) = prob;
    }
  }
  return chain;
}

// Dobrushin ergodic coefficient of a right stochastic matrix.
template <typename Derived>
typename Derived::Scalar dobrushin_coefficient(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  Scalar sigma = Scalar(1);
  for (int i = 0; i < a.rows(); ++i)
    for (int k = i + 1; k < a.rows(); ++k) {
      Scalar overlap = Scalar(0);
      for (int j = 0; j < a.cols(); ++j) overlap += std::min(a(i, j), a(k, j));
      sigma = std::min(sigma, overlap);
    }
  return sigma;
}

// Stationary distribution of a right stochastic matrix: direct solve of
// mu = mu A with the normalization constraint for moderate sizes, power
// iteration above that.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> stationary_distribution(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a, bool allow_reducible = false) {
  const int n = static_cast<int>(a.rows());
  // irreducibility proxy: strict positivity of some power would be costly;
  // require strictly positive minimum of A + A^2 unless overridden
  if (!allow_reducible) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> reach = a + a * a;
    if (reach.minCoeff() <= Scalar(0))
      throw std::runtime_error("stationary_distribution: chain not verifiably irreducible (pass override to force)");
  }
  if (n <= 4096) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m = a.transpose();
    m.diagonal().array() -= Scalar(1);
    m.row(0).setOnes();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
    b(0) = Scalar(1);
    return m.fullPivLu().solve(b);
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mu = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Constant(n, Scalar(1) / n);
  for (long it = 0; it < 1000000; ++it) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> next = (mu.transpose() * a).transpose();
    if ((next - mu).template lpNorm<1>() < Scalar(1e-12)) return next;
    mu.swap(next);
  }
  throw std::runtime_error("stationary_distribution: power iteration did not converge");
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> stationary_distribution(const ChainModelT<Scalar>& chain,
                                                                 bool allow_reducible = false) {
  return stationary_distribution(chain.matrix, allow_reducible);
}

// Left-multiply a start distribution through a sequence of matrices.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> propagate(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& mu0,
    const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& matrices) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mu = mu0;
  for (const auto& a : matrices) mu = (mu.transpose() * a).transpose();
  return mu;
}

// For weakly acyclic games driven by inertial kernels: the uniform lower
// bound p_min on reaching an equilibrium along a shortest strict-best-
// reply path, plus the mass the chain puts on the equilibrium set after m
// steps from mu0.
template <typename Scalar>
struct WeaklyAcyclicBound {
  Scalar p_min;
  Scalar mass_on_equilibria;
};

template <typename Scalar>
WeaklyAcyclicBound<Scalar> weakly_acyclic_chain_bound(const GameT<Scalar>& g, const PolicySetReport& report,
                                                      const ChainModelT<Scalar>& chain,
                                                      const std::vector<Scalar>& lambda,
                                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& mu0, int m) {
  if (!report.weakly_acyclic) throw std::runtime_error("weakly_acyclic_chain_bound: game is not weakly acyclic");
  const int L = report.max_path_length_to_eq;
  Scalar p_min = Scalar(1);
  for (int i = 0; i < g.n_players; ++i) {
    const Scalar step = std::min(lambda[i], (Scalar(1) - lambda[i]) / Scalar(g.n_policies(i)));
    p_min *= std::pow(step, Scalar(L));
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mu = mu0;
  for (int s = 0; s < m; ++s) mu = (mu.transpose() * chain.matrix).transpose();
  Scalar mass = Scalar(0);
  for (long long p : report.equilibria) mass += mu(static_cast<int>(p));
  return {p_min, mass};
}

}  // namespace teamlearn
