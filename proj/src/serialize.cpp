#include "teamlearn/serialize.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace teamlearn {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

UpdateKernel parse_kernel(const std::string& text) {
  if (text == "stay") return UpdateKernel::stay();
  if (text == "uniform") return UpdateKernel::uniform();
  const std::string prefix = "inertial:";
  if (text.rfind(prefix, 0) == 0) return UpdateKernel::inertial(std::stod(text.substr(prefix.size())));
  if (text == "inertial") return UpdateKernel::inertial(0.5);
  throw std::runtime_error("unknown update kernel: " + text + " (expected stay, uniform, or inertial:<lambda>)");
}

}  // namespace

Game load_game(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("game document is not valid JSON: ") + e.what());
  }
  Game g;
  g.n_players = doc.at("players").get<int>();
  g.n_states = doc.at("states").get<int>();
  g.n_actions = doc.at("actions").get<std::vector<int>>();
  const auto discounts = doc.at("discounts").get<std::vector<double>>();
  g.discount.resize(static_cast<int>(discounts.size()));
  for (std::size_t i = 0; i < discounts.size(); ++i) g.discount(static_cast<int>(i)) = discounts[i];

  const auto& costs = doc.at("costs");
  if (!costs.is_array() || static_cast<int>(costs.size()) != g.n_players)
    throw std::runtime_error("game: costs must be an array with one entry per player");
  const int m = g.n_joint_actions();
  for (int i = 0; i < g.n_players; ++i) {
    const auto& per_state = costs.at(static_cast<std::size_t>(i));
    if (static_cast<int>(per_state.size()) != g.n_states)
      throw std::runtime_error("game: costs[" + std::to_string(i) + "] must have one row per state");
    Game::Matrix c(g.n_states, m);
    for (int x = 0; x < g.n_states; ++x) {
      const auto& row = per_state.at(static_cast<std::size_t>(x));
      if (static_cast<int>(row.size()) != m)
        throw std::runtime_error("game: costs[" + std::to_string(i) + "][" + std::to_string(x) +
                                 "] must have one entry per joint action");
      for (int u = 0; u < m; ++u) c(x, u) = row.at(static_cast<std::size_t>(u)).get<double>();
    }
    g.cost.push_back(std::move(c));
  }

  const auto& kernel = doc.at("kernel");
  if (!kernel.is_array() || static_cast<int>(kernel.size()) != g.n_states)
    throw std::runtime_error("game: kernel must have one block per state");
  for (int x = 0; x < g.n_states; ++x) {
    const auto& per_action = kernel.at(static_cast<std::size_t>(x));
    if (static_cast<int>(per_action.size()) != m)
      throw std::runtime_error("game: kernel[" + std::to_string(x) + "] must have one row per joint action");
    Game::Matrix k(m, g.n_states);
    for (int u = 0; u < m; ++u) {
      const auto& row = per_action.at(static_cast<std::size_t>(u));
      if (static_cast<int>(row.size()) != g.n_states)
        throw std::runtime_error("game: kernel[" + std::to_string(x) + "][" + std::to_string(u) +
                                 "] must have one entry per next state");
      for (int y = 0; y < g.n_states; ++y) k(u, y) = row.at(static_cast<std::size_t>(y)).get<double>();
    }
    g.kernel.push_back(std::move(k));
  }

  if (doc.contains("labels")) {
    const auto& labels = doc.at("labels");
    if (labels.contains("states")) g.state_labels = labels.at("states").get<std::vector<std::string>>();
    if (labels.contains("actions")) g.action_labels = labels.at("actions").get<std::vector<std::vector<std::string>>>();
  }
  g.validate();
  return g;
}

Game load_game_file(const std::string& path) { return load_game(read_file(path)); }

std::string serialize_game(const Game& g, int indent) {
  json doc;
  doc["players"] = g.n_players;
  doc["states"] = g.n_states;
  doc["actions"] = g.n_actions;
  std::vector<double> discounts(static_cast<std::size_t>(g.discount.size()));
  for (int i = 0; i < g.discount.size(); ++i) discounts[static_cast<std::size_t>(i)] = g.discount(i);
  doc["discounts"] = discounts;
  const int m = g.n_joint_actions();
  json costs = json::array();
  for (int i = 0; i < g.n_players; ++i) {
    json per_state = json::array();
    for (int x = 0; x < g.n_states; ++x) {
      json row = json::array();
      for (int u = 0; u < m; ++u) row.push_back(g.cost[static_cast<std::size_t>(i)](x, u));
      per_state.push_back(std::move(row));
    }
    costs.push_back(std::move(per_state));
  }
  doc["costs"] = std::move(costs);
  json kernel = json::array();
  for (int x = 0; x < g.n_states; ++x) {
    json per_action = json::array();
    for (int u = 0; u < m; ++u) {
      json row = json::array();
      for (int y = 0; y < g.n_states; ++y) row.push_back(g.kernel[static_cast<std::size_t>(x)](u, y));
      per_action.push_back(std::move(row));
    }
    kernel.push_back(std::move(per_action));
  }
  doc["kernel"] = std::move(kernel);
  if (!g.state_labels.empty() || !g.action_labels.empty()) {
    json labels;
    if (!g.state_labels.empty()) labels["states"] = g.state_labels;
    if (!g.action_labels.empty()) labels["actions"] = g.action_labels;
    doc["labels"] = std::move(labels);
  }
  return doc.dump(indent);
}

ExperimentSpec load_experiment(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("experiment document is not valid JSON: ") + e.what());
  }
  ExperimentSpec spec;
  const auto& game = doc.at("game");
  if (game.is_string()) {
    const std::filesystem::path p(game.get<std::string>());
    spec.game = load_game_file(p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string());
  } else {
    spec.game = load_game(game.dump());
  }

  const std::string alg = doc.at("algorithm").get<std::string>();
  if (alg == "alg2" || alg == "windowed") {
    spec.algorithm = Algorithm::Windowed;
  } else if (alg == "alg3" || alg == "constant") {
    spec.algorithm = Algorithm::ConstantAspiration;
  } else if (alg == "iup") {
    spec.algorithm = Algorithm::Iup;
  } else {
    throw std::runtime_error("unknown algorithm: " + alg + " (expected alg2, alg3, or iup)");
  }

  spec.phases = doc.value("phases", 1000);
  if (doc.contains("phase_schedule")) {
    spec.phase_schedule = doc.at("phase_schedule").get<std::vector<int>>();
  } else {
    spec.phase_length = doc.value("phase_length", 10000);
  }
  spec.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
  if (doc.contains("initial_state")) spec.initial_state = doc.at("initial_state").get<int>() - 1;

  const auto& players = doc.at("players");
  if (!players.is_array() || static_cast<int>(players.size()) != spec.game.n_players)
    throw std::runtime_error("experiment: players must be an array with one config per player");
  for (int i = 0; i < spec.game.n_players; ++i) {
    const auto& p = players.at(static_cast<std::size_t>(i));
    LearnerConfig cfg;
    cfg.discount = p.value("discount", spec.game.discount(i));
    cfg.rho = p.value("rho", cfg.rho);
    cfg.gamma = p.value("gamma", cfg.gamma);
    if (p.contains("gamma_schedule")) {
      const std::string sched = p.at("gamma_schedule").get<std::string>();
      if (sched == "constant") {
        cfg.gamma_schedule = GammaSchedule::Constant;
      } else if (sched == "inverse_square") {
        cfg.gamma_schedule = GammaSchedule::InverseSquare;
      } else {
        throw std::runtime_error("unknown gamma schedule: " + sched);
      }
    }
    cfg.kappa = p.value("kappa", cfg.kappa);
    cfg.lambda = p.value("lambda", cfg.lambda);
    cfg.delta = p.value("delta", cfg.delta);
    cfg.d = p.value("d", cfg.d);
    cfg.window = p.value("window", cfg.window);
    cfg.aspiration = p.value("aspiration", cfg.aspiration);
    cfg.step_size_exponent = p.value("step_size_exponent", cfg.step_size_exponent);
    const double default_bound = spec.game.max_abs_cost(i) / (1.0 - cfg.discount);
    cfg.q_min = -default_bound;
    cfg.q_max = default_bound;
    if (p.contains("q_bounds")) {
      const auto bounds = p.at("q_bounds").get<std::vector<double>>();
      if (bounds.size() != 2) throw std::runtime_error("experiment: q_bounds must be [low, high]");
      cfg.q_min = bounds[0];
      cfg.q_max = bounds[1];
    }
    if (p.contains("h_kernel")) cfg.h_kernel = parse_kernel(p.at("h_kernel").get<std::string>());
    if (p.contains("g_kernel")) cfg.g_kernel = parse_kernel(p.at("g_kernel").get<std::string>());
    spec.players.push_back(cfg);
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_file(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const std::string dir = slash == std::string::npos ? std::string(".") : path.substr(0, slash);
  return load_experiment(read_file(path), dir);
}

void export_metrics_csv(const std::vector<MetricsRecord>& records, int n_players, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << "seed,phase,policy_index,in_opt,in_eq";
  for (int i = 1; i <= n_players; ++i) out << ",S_" << i;
  for (int i = 1; i <= n_players; ++i) out << ",branch_" << i;
  out << "\n";
  out.precision(17);
  for (const auto& rec : records) {
    for (std::size_t k = 0; k < rec.policy_index.size(); ++k) {
      out << rec.seed << ',' << k << ',' << rec.policy_index[k] << ',' << (rec.in_opt[k] ? 1 : 0) << ','
          << (rec.in_eq[k] ? 1 : 0);
      for (int i = 0; i < n_players; ++i) out << ',' << rec.scores[k][static_cast<std::size_t>(i)];
      for (int i = 0; i < n_players; ++i) out << ',' << (rec.satisfied[k][static_cast<std::size_t>(i)] ? 1 : 0);
      out << "\n";
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string metrics_summary_json(const std::vector<MetricsRecord>& records) {
  json doc;
  json per_seed = json::array();
  double mean_opt = 0.0, mean_eq = 0.0;
  for (const auto& rec : records) {
    per_seed.push_back({{"seed", rec.seed}, {"freq_opt", rec.freq_opt}, {"freq_eq", rec.freq_eq}});
    mean_opt += rec.freq_opt;
    mean_eq += rec.freq_eq;
  }
  const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
  doc["seeds"] = std::move(per_seed);
  doc["mean_freq_opt"] = mean_opt / n;
  doc["mean_freq_eq"] = mean_eq / n;
  return doc.dump(2);
}

std::string summarize_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
  struct Acc {
    long phases = 0, opt = 0, eq = 0;
  };
  std::map<std::uint64_t, Acc> by_seed;
  std::vector<std::uint64_t> order;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    std::getline(row, field, ',');
    const std::uint64_t seed = std::stoull(field);
    std::getline(row, field, ',');  // phase
    std::getline(row, field, ',');  // policy_index
    std::getline(row, field, ',');
    const int in_opt = std::stoi(field);
    std::getline(row, field, ',');
    const int in_eq = std::stoi(field);
    if (!by_seed.count(seed)) order.push_back(seed);
    Acc& acc = by_seed[seed];
    acc.phases += 1;
    acc.opt += in_opt;
    acc.eq += in_eq;
  }
  json per_seed = json::array();
  double mean_opt = 0.0, mean_eq = 0.0;
  for (std::uint64_t seed : order) {
    const Acc& acc = by_seed[seed];
    const double fo = acc.phases ? static_cast<double>(acc.opt) / acc.phases : 0.0;
    const double fe = acc.phases ? static_cast<double>(acc.eq) / acc.phases : 0.0;
    per_seed.push_back({{"seed", seed}, {"freq_opt", fo}, {"freq_eq", fe}});
    mean_opt += fo;
    mean_eq += fe;
  }
  const double n = order.empty() ? 1.0 : static_cast<double>(order.size());
  json doc;
  doc["seeds"] = std::move(per_seed);
  doc["mean_freq_opt"] = mean_opt / n;
  doc["mean_freq_eq"] = mean_eq / n;
  return doc.dump(2);
}

}  // namespace teamlearn
