#pragma once

#include "teamlearn/game.hpp"
#include "teamlearn/harness.hpp"

#include <string>
#include <vector>

namespace teamlearn {

// Game documents are JSON with fields `players`, `states`, `actions`,
// `discounts`, `costs` ([player][state][joint_action]), `kernel`
// ([state][joint_action][next_state]) and an optional `labels` block.
// Joint actions are flattened player-major (player 0 fastest digit);
// default labels are 1-based numerals.
Game load_game(const std::string& text);
Game load_game_file(const std::string& path);
std::string serialize_game(const Game& g, int indent = 2);

// Experiment documents carry `game` (inline object or a path string),
// `algorithm` (one of "alg2", "alg3", "iup"), `players` (per-player
// config), `phases`, `phase_length` or `phase_schedule`, `seeds`, and an
// optional `initial_state` (1-based).
ExperimentSpec load_experiment(const std::string& text, const std::string& base_dir = ".");
ExperimentSpec load_experiment_file(const std::string& path);

// CSV rows: seed,phase,policy_index,in_opt,in_eq,S_1..S_N,branch_1..branch_N
// where branch_i is 1 when player i took the satisfied branch.
void export_metrics_csv(const std::vector<MetricsRecord>& records, int n_players, const std::string& path);
std::string metrics_summary_json(const std::vector<MetricsRecord>& records);

// Recompute the summary from an exported CSV (self-consistency checks).
std::string summarize_csv_file(const std::string& path);

}  // namespace teamlearn
