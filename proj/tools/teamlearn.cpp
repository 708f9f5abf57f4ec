#include "teamlearn/analysis.hpp"
#include "teamlearn/chain.hpp"
#include "teamlearn/game.hpp"
#include "teamlearn/harness.hpp"
#include "teamlearn/oracle.hpp"
#include "teamlearn/serialize.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace teamlearn;

std::vector<double> parse_csv_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

// One action per state, comma separated, 1-based as in the file format.
DeterministicPolicy parse_policy(const std::string& text, int player, int n_states) {
  DeterministicPolicy pi;
  pi.player = player;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) pi.action_of_state.push_back(std::stoi(item) - 1);
  if (static_cast<int>(pi.action_of_state.size()) != n_states)
    throw std::runtime_error("policy string must list one action per state");
  return pi;
}

json policy_json(const Game& g, long long joint_index) {
  json out = json::array();
  std::vector<int> ranks = g.joint_policy_unflatten(joint_index);
  for (int i = 0; i < g.n_players; ++i) {
    DeterministicPolicy pi = g.policy_unrank(i, ranks[i]);
    json actions = json::array();
    for (int a : pi.action_of_state) actions.push_back(a + 1);
    out.push_back(actions);
  }
  return out;
}

void write_output(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << text << "\n";
}

int cmd_validate(const std::string& file) {
  load_game_file(file);
  std::cout << "ok\n";
  return 0;
}

int cmd_example(const std::string& which, double a, double b, double beta, double beta2, const std::string& out_path) {
  Game g;
  if (which == "fig1") {
    g = make_fig1(a, b, beta, beta2 > 0 ? beta2 : beta);
  } else if (which == "fig2") {
    g = make_fig2(beta);
  } else if (which == "fig3") {
    g = make_fig3(beta);
  } else {
    throw std::runtime_error("unknown example: " + which + " (expected fig1, fig2, or fig3)");
  }
  write_output(serialize_game(g), out_path);
  return 0;
}

int cmd_oracle(const std::string& file, const std::string& what, int player, const std::vector<std::string>& opponents) {
  Game g = load_game_file(file);
  json out;
  if (what == "constants") {
    GameConstants constants = game_constants(g);
    out["delta_bar"] = constants.degenerate_q ? json("inf") : json(constants.delta_bar);
    out["d_bar"] = constants.degenerate_score ? json("inf") : json(constants.d_bar);
    if (constants.degenerate_q) out["warning"] = "degenerate: all Q-factors equal";
    out["score"] = constants.score;
    out["tilde_score"] = constants.tilde_score;
    write_output(out.dump(2), "");
    return 0;
  }
  std::vector<DeterministicPolicy> others;
  int oi = 0;
  for (int j = 0; j < g.n_players; ++j) {
    if (j == player) continue;
    if (oi >= static_cast<int>(opponents.size()))
      throw std::runtime_error("need --opponents with one policy string per opponent");
    others.push_back(parse_policy(opponents[static_cast<std::size_t>(oi)], j, g.n_states));
    ++oi;
  }
  if (what == "qstar") {
    Mdp mdp = induced_mdp(g, player, others);
    Mdp::Matrix q = value_iteration_q(mdp, g.discount(player), 1e-10);
    json rows = json::array();
    for (int x = 0; x < q.rows(); ++x) {
      json row = json::array();
      for (int u = 0; u < q.cols(); ++u) row.push_back(q(x, u));
      rows.push_back(std::move(row));
    }
    out["qstar"] = std::move(rows);
  } else if (what == "br") {
    json brs = json::array();
    for (const DeterministicPolicy& pi : best_reply_set(g, player, others)) {
      json actions = json::array();
      for (int v : pi.action_of_state) actions.push_back(v + 1);
      brs.push_back(std::move(actions));
    }
    out["best_replies"] = std::move(brs);
  } else if (what == "values") {
    std::vector<DeterministicPolicy> joint;
    if (static_cast<int>(opponents.size()) != g.n_players)
      throw std::runtime_error("--what values expects --opponents to list every player's policy");
    for (int j = 0; j < g.n_players; ++j) joint.push_back(parse_policy(opponents[static_cast<std::size_t>(j)], j, g.n_states));
    Eigen::VectorXd v = policy_value(g, joint, player);
    json values = json::array();
    for (int x = 0; x < v.size(); ++x) values.push_back(v(x));
    out["values"] = std::move(values);
  } else {
    throw std::runtime_error("unknown oracle query: " + what + " (expected qstar, values, br, or constants)");
  }
  write_output(out.dump(2), "");
  return 0;
}

int cmd_analyze(const std::string& file, const std::string& lambda_text) {
  Game g = load_game_file(file);
  PolicySetReport report = analyze_game(g);
  json out;
  json opt = json::array(), eq = json::array();
  for (long long p : report.team_optimal) opt.push_back({{"index", p}, {"policy", policy_json(g, p)}});
  for (long long p : report.equilibria) eq.push_back({{"index", p}, {"policy", policy_json(g, p)}});
  out["team_optimal"] = std::move(opt);
  out["equilibria"] = std::move(eq);
  out["common_interest"] = report.common_interest;
  out["weakly_acyclic"] = report.weakly_acyclic;
  out["max_path_length_to_equilibria"] = report.max_path_length_to_eq;
  out["max_path_length_to_cumber"] = report.max_path_length_to_cumber;
  json cumber = json::array();
  for (const auto& s : minimal_cumber_sets(g).minimal_sets) cumber.push_back(std::vector<long long>(s.begin(), s.end()));
  out["minimal_cumber_sets"] = std::move(cumber);
  if (!lambda_text.empty()) {
    std::vector<double> lambda = parse_csv_doubles(lambda_text);
    if (static_cast<int>(lambda.size()) != g.n_players)
      throw std::runtime_error("--lambda must list one aspiration level per player");
    json lc = json::array();
    for (const auto& s : minimal_lambda_cumber_sets(g, lambda).minimal_sets)
      lc.push_back(std::vector<long long>(s.begin(), s.end()));
    out["minimal_lambda_cumber_sets"] = std::move(lc);
    out["lambda"] = lambda;
  }
  write_output(out.dump(2), "");
  return 0;
}

int cmd_chain(const std::string& file, const std::string& gamma_text, const std::string& kappa_text,
              const std::string& h_text, bool stationary, bool dobrushin, int power) {
  Game g = load_game_file(file);
  std::vector<double> gamma = parse_csv_doubles(gamma_text);
  std::vector<double> kappa = parse_csv_doubles(kappa_text);
  if (gamma.size() == 1) gamma.assign(static_cast<std::size_t>(g.n_players), gamma[0]);
  if (kappa.size() == 1) kappa.assign(static_cast<std::size_t>(g.n_players), kappa[0]);
  UpdateKernel h = UpdateKernel::inertial(0.5);
  double lambda = 0.5;
  if (!h_text.empty()) {
    if (h_text == "stay") {
      h = UpdateKernel::stay();
    } else if (h_text == "uniform") {
      h = UpdateKernel::uniform();
    } else if (h_text.rfind("inertial:", 0) == 0) {
      lambda = std::stod(h_text.substr(9));
      h = UpdateKernel::inertial(lambda);
    } else {
      throw std::runtime_error("unknown kernel: " + h_text);
    }
  }
  std::set<long long> opt = team_optimal_set(g);
  ChainModel chain = iup_transition_matrix(g, opt, gamma, kappa, std::vector<double>(static_cast<std::size_t>(g.n_players), lambda),
                                           std::vector<UpdateKernel>(static_cast<std::size_t>(g.n_players), h));
  json out;
  out["n_policies"] = chain.matrix.rows();
  if (dobrushin) out["dobrushin"] = dobrushin_coefficient(chain.matrix);
  if (stationary) {
    Eigen::VectorXd mu = stationary_distribution(chain);
    double mass_opt = 0.0;
    for (long long p : opt) mass_opt += mu(static_cast<int>(p));
    json dist = json::array();
    for (int i = 0; i < mu.size(); ++i) dist.push_back(mu(i));
    out["stationary"] = std::move(dist);
    out["stationary_mass_on_team_optimal"] = mass_opt;
  }
  if (power > 0) {
    const int n = static_cast<int>(chain.matrix.rows());
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(n, 1.0 / n);
    mu = propagate(mu, std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(power), chain.matrix));
    json dist = json::array();
    for (int i = 0; i < mu.size(); ++i) dist.push_back(mu(i));
    out["power"] = std::move(dist);
  }
  write_output(out.dump(2), "");
  return 0;
}

int cmd_run(const std::string& file, const std::string& out_csv, const std::string& out_summary) {
  ExperimentSpec spec = load_experiment_file(file);
  std::vector<MetricsRecord> records = run_experiment(spec);
  if (!out_csv.empty()) export_metrics_csv(records, spec.game.n_players, out_csv);
  const std::string summary = metrics_summary_json(records);
  if (out_summary.empty()) {
    std::cout << summary << "\n";
  } else {
    write_output(summary, out_summary);
  }
  return 0;
}

int cmd_repro(const std::string& cases, const std::string& gammas_text, int seeds, int phases,
              const std::string& out_path) {
  std::vector<double> gammas = parse_csv_doubles(gammas_text);
  std::vector<ReproRow> rows = repro_table(cases, gammas, seeds, phases);
  std::ostringstream out;
  out << "case,gamma,mean_freq_opt,std_freq_opt\n";
  out.precision(6);
  for (const auto& row : rows)
    out << row.case_id << ',' << row.gamma << ',' << row.mean_freq_opt << ',' << row.std_freq_opt << "\n";
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("cannot open file for writing: " + out_path);
    f << out.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized learning in finite discounted stochastic games"};
  app.require_subcommand(1);

  std::string game_file, out_path, which = "fig3", what = "constants", lambda_text, gamma_text = "0.01",
              kappa_text = "0.1", h_text = "inertial:0.5", cases = "A", gammas_text = "0.05,0.01,0.005,0.001",
              out_csv, out_summary;
  std::vector<std::string> opponents;
  double a = 1.0, b = 1.0, beta = 0.8, beta2 = -1.0;
  int player = 0, power = 0, seeds = 10, phases = 1000;
  bool stationary = false, dobrushin = false;

  auto* validate = app.add_subcommand("validate", "Validate a game document");
  validate->add_option("file", game_file)->required();

  auto* example = app.add_subcommand("example", "Emit a built-in example game");
  example->add_option("--which", which, "fig1, fig2, or fig3");
  example->add_option("--a", a);
  example->add_option("--b", b);
  example->add_option("--beta", beta);
  example->add_option("--beta2", beta2);
  example->add_option("--out", out_path);

  auto* oracle = app.add_subcommand("oracle", "Exact single-agent computations");
  oracle->add_option("file", game_file)->required();
  oracle->add_option("--what", what, "qstar, values, br, or constants");
  oracle->add_option("--player", player);
  oracle->add_option("--opponents", opponents, "policy strings, one action per state, 1-based");

  auto* analyze = app.add_subcommand("analyze", "Structural game classification");
  analyze->add_option("file", game_file)->required();
  analyze->add_option("--lambda", lambda_text, "aspiration levels, comma separated");

  auto* chain = app.add_subcommand("chain", "Idealized policy-update chain");
  chain->add_option("file", game_file)->required();
  chain->add_option("--gamma", gamma_text);
  chain->add_option("--kappa", kappa_text);
  chain->add_option("--h-kernel", h_text, "stay, uniform, or inertial:<lambda>");
  chain->add_flag("--stationary", stationary);
  chain->add_flag("--dobrushin", dobrushin);
  chain->add_option("--power", power, "propagate the uniform start m steps");

  auto* run = app.add_subcommand("run", "Run an experiment document");
  run->add_option("file", game_file)->required();
  run->add_option("--out", out_csv, "metrics CSV path");
  run->add_option("--summary", out_summary, "summary JSON path");

  auto* repro = app.add_subcommand("repro", "Reproduction study table");
  repro->add_option("--case", cases, "one or more of A, B, C, D");
  repro->add_option("--gammas", gammas_text);
  repro->add_option("--seeds", seeds);
  repro->add_option("--phases", phases);
  repro->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(game_file);
    if (example->parsed()) return cmd_example(which, a, b, beta, beta2, out_path);
    if (oracle->parsed()) return cmd_oracle(game_file, what, player, opponents);
    if (analyze->parsed()) return cmd_analyze(game_file, lambda_text);
    if (chain->parsed()) return cmd_chain(game_file, gamma_text, kappa_text, h_text, stationary, dobrushin, power);
    if (run->parsed()) return cmd_run(game_file, out_csv, out_summary);
    if (repro->parsed()) return cmd_repro(cases, gammas_text, seeds, phases, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
