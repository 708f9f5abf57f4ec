#pragma once

#include "teamlearn/game.hpp"
#include "teamlearn/oracle.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <vector>

namespace teamlearn {

// Structural classification of a game's deterministic joint-policy space.
struct PolicySetReport {
  std::set<long long> team_optimal;   // Pi_opt
  std::set<long long> equilibria;     // Pi_eq
  bool common_interest = false;
  bool weakly_acyclic = false;
  int max_path_length_to_eq = -1;       // L  (max over policies of shortest path)
  int max_path_length_to_cumber = -1;   // L-bar
  std::map<long long, std::vector<long long>> witness_paths;  // policy -> path into Pi_eq
};

struct CumberReport {
  std::vector<std::set<long long>> minimal_sets;
  std::vector<double> lambda;  // empty when no aspiration constraint was used
};

namespace detail {

template <typename Scalar>
std::vector<std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>> all_policy_values(const GameT<Scalar>& g) {
  const long long n = g.n_joint_policies();
  std::vector<std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>> values(
      g.n_players, std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(static_cast<std::size_t>(n)));
  for (long long p = 0; p < n; ++p) {
    std::vector<int> ranks = g.joint_policy_unflatten(p);
    std::vector<DeterministicPolicy> joint;
    for (int j = 0; j < g.n_players; ++j) joint.push_back(g.policy_unrank(j, ranks[j]));
    for (int i = 0; i < g.n_players; ++i) values[i][static_cast<std::size_t>(p)] = policy_value(g, joint, i);
  }
  return values;
}

// Cache of best-reply rank sets keyed by (player, opponent profile).
template <typename Scalar>
class BestReplyCache {
 public:
  explicit BestReplyCache(const GameT<Scalar>& g) : g_(g) {}

  const std::vector<int>& get(int player, const std::vector<int>& joint_ranks) {
    std::vector<int> key = joint_ranks;
    key[player] = -1;
    auto it = cache_[player].find(key);
    if (it != cache_[player].end()) return it->second;
    std::vector<DeterministicPolicy> others;
    for (int j = 0; j < g_.n_players; ++j)
      if (j != player) others.push_back(g_.policy_unrank(j, joint_ranks[j]));
    return cache_[player].emplace(std::move(key), best_reply_ranks(g_, player, others)).first->second;
  }

 private:
  const GameT<Scalar>& g_;
  std::map<int, std::map<std::vector<int>, std::vector<int>>> cache_;
};

inline void tarjan_sccs(const std::vector<std::vector<int>>& graph, std::vector<std::vector<int>>& sccs) {
  const int n = static_cast<int>(graph.size());
  std::vector<int> number(n, -1), low(n, -1), stack_index(n, -1), stack;
  int counter = 0;
  // iterative DFS to avoid recursion limits on large policy graphs
  struct Frame {
    int v;
    std::size_t edge;
  };
  std::vector<Frame> frames;
  for (int root = 0; root < n; ++root) {
    if (number[root] != -1) continue;
    frames.push_back({root, 0});
    while (!frames.empty()) {
      auto& [v, edge] = frames.back();
      if (edge == 0) {
        number[v] = low[v] = counter++;
        stack_index[v] = static_cast<int>(stack.size());
        stack.push_back(v);
      }
      if (edge < graph[v].size()) {
        const int w = graph[v][edge++];
        if (number[w] == -1) {
          frames.push_back({w, 0});
        } else if (number[w] < number[v] && stack_index[w] != -1) {
          low[v] = std::min(low[v], number[w]);
        }
      } else {
        if (low[v] == number[v]) {
          const int cut = stack_index[v];
          std::vector<int> scc(stack.begin() + cut, stack.end());
          for (int w : scc) stack_index[w] = -1;
          stack.resize(static_cast<std::size_t>(cut));
          sccs.push_back(std::move(scc));
        }
        const int child = v;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[child]);
      }
    }
  }
}

}  // namespace detail

// Policies minimizing every player's value in every state simultaneously.
template <typename Scalar>
std::set<long long> team_optimal_set(const GameT<Scalar>& g) {
  const long long n = g.n_joint_policies();
  auto values = detail::all_policy_values(g);
  const Scalar eps = Scalar(1e-9);
  std::set<long long> out;
  for (long long p = 0; p < n; ++p) {
    bool opt = true;
    for (int i = 0; i < g.n_players && opt; ++i)
      for (int x = 0; x < g.n_states && opt; ++x) {
        Scalar best = values[i][0](x);
        for (long long q = 1; q < n; ++q) best = std::min(best, values[i][static_cast<std::size_t>(q)](x));
        if (values[i][static_cast<std::size_t>(p)](x) > best + eps) opt = false;
      }
    if (opt) out.insert(p);
  }
  return out;
}

// Deterministic Markov perfect equilibria: every component a best reply.
template <typename Scalar>
std::set<long long> equilibrium_set_deterministic(const GameT<Scalar>& g) {
  detail::BestReplyCache<Scalar> cache(g);
  std::set<long long> out;
  const long long n = g.n_joint_policies();
  for (long long p = 0; p < n; ++p) {
    std::vector<int> ranks = g.joint_policy_unflatten(p);
    bool eq = true;
    for (int i = 0; i < g.n_players && eq; ++i) {
      const auto& br = cache.get(i, ranks);
      eq = std::binary_search(br.begin(), br.end(), ranks[i]);
    }
    if (eq) out.insert(p);
  }
  return out;
}

// Common interest: a nonempty team-optimal set whose summed values are
// strictly below every non-optimal policy's, for every player.
template <typename Scalar>
bool is_common_interest(const GameT<Scalar>& g) {
  auto opt = team_optimal_set(g);
  if (opt.empty()) return false;
  const long long n = g.n_joint_policies();
  auto values = detail::all_policy_values(g);
  for (int i = 0; i < g.n_players; ++i) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (long long p : opt) best = std::min(best, values[i][static_cast<std::size_t>(p)].sum());
    for (long long p = 0; p < n; ++p) {
      if (opt.count(p)) continue;
      if (!(best < values[i][static_cast<std::size_t>(p)].sum() - Scalar(1e-9))) return false;
    }
  }
  return true;
}

// Successor graph context shared by the set computations below.
template <typename Scalar>
struct SuccessorGraph {
  std::vector<std::vector<int>> adjacency;  // edges exclude the self-loop
};

// Multi-DM strict-best-reply successors of every joint policy.  A policy
// pi~ succeeds pi when every deviating player's new component is a best
// reply to pi^{-i} that strictly improves that player's value in at least
// one state; with aspirations, deviators additionally need a summed value
// above their aspiration level.  The policy itself (empty deviation) is
// always a successor and is not stored as an edge.
template <typename Scalar>
SuccessorGraph<Scalar> strict_best_reply_graph(const GameT<Scalar>& g, const std::vector<Scalar>* lambda = nullptr) {
  const long long n = g.n_joint_policies();
  detail::BestReplyCache<Scalar> cache(g);
  auto values = detail::all_policy_values(g);
  const Scalar eps = Scalar(1e-9);
  SuccessorGraph<Scalar> graph;
  graph.adjacency.assign(static_cast<std::size_t>(n), {});
  for (long long p = 0; p < n; ++p) {
    std::vector<int> ranks = g.joint_policy_unflatten(p);
    // per player: strict best replies against pi^{-i}
    std::vector<std::vector<int>> strict(g.n_players);
    for (int i = 0; i < g.n_players; ++i) {
      if (lambda) {
        std::vector<DeterministicPolicy> joint;
        for (int j = 0; j < g.n_players; ++j) joint.push_back(g.policy_unrank(j, ranks[j]));
        const Scalar stilde = policy_value(g, joint, i).sum();
        if (!(stilde > (*lambda)[i])) continue;  // satisfied players do not deviate
      }
      for (int r : cache.get(i, ranks)) {
        if (r == ranks[i]) continue;
        std::vector<int> dev = ranks;
        dev[i] = r;
        const auto& jd = values[i][static_cast<std::size_t>(g.joint_policy_index(dev))];
        const auto& jp = values[i][static_cast<std::size_t>(p)];
        bool strictly_better = false;
        for (int x = 0; x < g.n_states; ++x)
          if (jd(x) < jp(x) - eps) strictly_better = true;
        if (strictly_better) strict[i].push_back(r);
      }
    }
    // all nonempty combinations of deviating players
    std::vector<int> movers;
    for (int i = 0; i < g.n_players; ++i)
      if (!strict[i].empty()) movers.push_back(i);
    const int k = static_cast<int>(movers.size());
    for (int mask = 1; mask < (1 << k); ++mask) {
      std::vector<int> dev_players;
      for (int b = 0; b < k; ++b)
        if (mask & (1 << b)) dev_players.push_back(movers[b]);
      std::vector<std::size_t> pick(dev_players.size(), 0);
      while (true) {
        std::vector<int> ranks2 = ranks;
        for (std::size_t t = 0; t < dev_players.size(); ++t) ranks2[dev_players[t]] = strict[dev_players[t]][pick[t]];
        graph.adjacency[static_cast<std::size_t>(p)].push_back(static_cast<int>(g.joint_policy_index(ranks2)));
        std::size_t t = 0;
        for (; t < pick.size(); ++t) {
          if (++pick[t] < strict[dev_players[t]].size()) break;
          pick[t] = 0;
        }
        if (t == pick.size()) break;
      }
    }
  }
  return graph;
}

template <typename Scalar>
std::set<long long> strict_best_reply_successors(const GameT<Scalar>& g, long long policy_index,
                                                 const std::vector<Scalar>* lambda = nullptr) {
  auto graph = strict_best_reply_graph(g, lambda);
  std::set<long long> out{policy_index};
  for (int q : graph.adjacency[static_cast<std::size_t>(policy_index)]) out.insert(q);
  return out;
}

// Minimal closed sets of the successor graph: sink components of the SCC
// condensation.  Singleton SCCs without a self-transition are sinks only
// if they have no outgoing edges at all, which for this graph means the
// policy is an equilibrium (or satisfied under the aspiration variant).
template <typename Scalar>
CumberReport minimal_cumber_sets(const GameT<Scalar>& g, const std::vector<Scalar>* lambda = nullptr) {
  auto graph = strict_best_reply_graph(g, lambda);
  std::vector<std::vector<int>> sccs;
  detail::tarjan_sccs(graph.adjacency, sccs);
  const long long n = g.n_joint_policies();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  for (std::size_t c = 0; c < sccs.size(); ++c)
    for (int v : sccs[c]) comp[static_cast<std::size_t>(v)] = static_cast<int>(c);
  CumberReport report;
  if (lambda) report.lambda.assign(lambda->begin(), lambda->end());
  for (std::size_t c = 0; c < sccs.size(); ++c) {
    bool sink = true;
    for (int v : sccs[c])
      for (int w : graph.adjacency[static_cast<std::size_t>(v)])
        if (comp[static_cast<std::size_t>(w)] != static_cast<int>(c)) sink = false;
    if (sink) report.minimal_sets.emplace_back(sccs[c].begin(), sccs[c].end());
  }
  std::sort(report.minimal_sets.begin(), report.minimal_sets.end(),
            [](const std::set<long long>& a, const std::set<long long>& b) { return *a.begin() < *b.begin(); });
  return report;
}

template <typename Scalar>
CumberReport minimal_lambda_cumber_sets(const GameT<Scalar>& g, const std::vector<Scalar>& lambda) {
  return minimal_cumber_sets(g, &lambda);
}

// Full structural report; weak acyclicity by breadth-first search from
// every policy toward the equilibrium set.
template <typename Scalar>
PolicySetReport analyze_game(const GameT<Scalar>& g) {
  PolicySetReport report;
  report.team_optimal = team_optimal_set(g);
  report.equilibria = equilibrium_set_deterministic(g);
  report.common_interest = is_common_interest(g);
  auto graph = strict_best_reply_graph<Scalar>(g);
  const long long n = g.n_joint_policies();

  auto bfs = [&](const std::set<long long>& targets, std::map<long long, std::vector<long long>>* paths) -> int {
    int max_len = 0;
    for (long long s = 0; s < n; ++s) {
      std::vector<int> prev(static_cast<std::size_t>(n), -2);
      std::vector<long long> queue{s};
      prev[static_cast<std::size_t>(s)] = -1;
      long long found = targets.count(s) ? s : -1;
      for (std::size_t qi = 0; qi < queue.size() && found < 0; ++qi) {
        for (int w : graph.adjacency[static_cast<std::size_t>(queue[qi])]) {
          if (prev[static_cast<std::size_t>(w)] != -2) continue;
          prev[static_cast<std::size_t>(w)] = static_cast<int>(queue[qi]);
          if (targets.count(w)) {
            found = w;
            break;
          }
          queue.push_back(w);
        }
      }
      if (found < 0) return -1;
      std::vector<long long> path;
      for (long long v = found; v != -1; v = prev[static_cast<std::size_t>(v)]) path.push_back(v);
      std::reverse(path.begin(), path.end());
      max_len = std::max(max_len, static_cast<int>(path.size()) - 1);
      if (paths) (*paths)[s] = path;
    }
    return max_len;
  };

  report.max_path_length_to_eq = bfs(report.equilibria, &report.witness_paths);
  report.weakly_acyclic = report.max_path_length_to_eq >= 0 && !report.equilibria.empty();
  std::set<long long> cumber_union;
  for (const auto& s : minimal_cumber_sets<Scalar>(g).minimal_sets) cumber_union.insert(s.begin(), s.end());
  report.max_path_length_to_cumber = bfs(cumber_union, nullptr);
  return report;
}

template <typename Scalar>
bool is_weakly_acyclic(const GameT<Scalar>& g) {
  return analyze_game(g).weakly_acyclic;
}

}  // namespace teamlearn
