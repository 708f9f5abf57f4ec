#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "teamlearn/game.hpp"
#include "teamlearn/serialize.hpp"

#include <set>

using namespace teamlearn;

TEST_CASE("fig1 costs and shape") {
  Game g = make_fig1(1.0, 1.0, 0.8, 0.8);
  CHECK(g.n_players == 2);
  CHECK(g.n_states == 1);
  CHECK(g.n_joint_actions() == 4);
  // joint order (player 0 fastest): (1,1),(2,1),(1,2),(2,2)
  CHECK(g.cost[0](0, 0) == doctest::Approx(1.0));
  CHECK(g.cost[0](0, 1) == doctest::Approx(2.0));
  CHECK(g.cost[0](0, 2) == doctest::Approx(2.0));
  CHECK(g.cost[0](0, 3) == doctest::Approx(-1.0));
  CHECK(g.cost[1] == g.cost[0]);
  CHECK_THROWS(make_fig1(-1.0, 1.0, 0.8, 0.8));
  CHECK_THROWS(make_fig1(1.0, 1.0, 1.0, 0.8));
}

TEST_CASE("fig2 costs") {
  Game g = make_fig2(0.9);
  CHECK(g.n_joint_actions() == 9);
  // (1,1) -> (10,3)
  CHECK(g.cost[0](0, 0) == doctest::Approx(10.0));
  CHECK(g.cost[1](0, 0) == doctest::Approx(3.0));
  // (3,3) -> (0,0)
  CHECK(g.cost[0](0, 8) == doctest::Approx(0.0));
  CHECK(g.cost[1](0, 8) == doctest::Approx(0.0));
  // (2,1) -> (5,7)
  CHECK(g.cost[0](0, 1) == doctest::Approx(5.0));
  CHECK(g.cost[1](0, 1) == doctest::Approx(7.0));
  // (3,1) -> (20,20)
  CHECK(g.cost[0](0, 2) == doctest::Approx(20.0));
  CHECK(g.cost[1](0, 2) == doctest::Approx(20.0));
}

TEST_CASE("fig3 costs and kernel") {
  Game g = make_fig3(0.8);
  CHECK(g.discount(0) == doctest::Approx(0.8));
  // state 2, joint (2,2) -> cost 13 for both players
  CHECK(g.cost[0](1, 3) == doctest::Approx(13.0));
  CHECK(g.cost[1](1, 3) == doctest::Approx(13.0));
  // state 1, joint (1,1): coordinated -> state 1 with probability 0.95
  CHECK(g.kernel[0](0, 0) == doctest::Approx(0.95));
  CHECK(g.kernel[0](0, 1) == doctest::Approx(0.05));
  // state 1, joint (2,2): not coordinated with x=1 -> state 2 w.p. 0.95
  CHECK(g.kernel[0](3, 0) == doctest::Approx(0.05));
  CHECK(g.kernel[0](3, 1) == doctest::Approx(0.95));
  // state 2, joint (2,2): coordinated -> state 1 w.p. 0.95
  CHECK(g.kernel[1](3, 0) == doctest::Approx(0.95));
  // state 2, joint (1,2): mismatch -> state 2 w.p. 0.95
  CHECK(g.kernel[1](2, 1) == doctest::Approx(0.95));
}

TEST_CASE("validation rejects bad tensors") {
  Game g = make_fig3(0.8);
  SUBCASE("kernel row sum") {
    g.kernel[1](2, 0) = 0.0;  // row sums to 0.95
    CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("state 1"), std::invalid_argument);
  }
  SUBCASE("negative kernel entry") {
    g.kernel[0](1, 0) = -0.05;
    g.kernel[0](1, 1) = 1.05;
    CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("negative"), std::invalid_argument);
  }
  SUBCASE("discount bounds") {
    g.discount(1) = 1.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  }
  SUBCASE("non-finite cost") {
    g.cost[0](0, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("non-finite"), std::invalid_argument);
  }
}

TEST_CASE("degenerate single-player single-action game is valid") {
  Game g;
  g.n_players = 1;
  g.n_states = 1;
  g.n_actions = {1};
  g.discount.resize(1);
  g.discount << 0.5;
  g.cost = {Game::Matrix::Zero(1, 1)};
  g.kernel = {Game::Matrix::Ones(1, 1)};
  CHECK_NOTHROW(g.validate());
  CHECK(g.n_joint_policies() == 1);
}

TEST_CASE("policy enumeration") {
  Game g3 = make_fig3(0.8);
  auto pols = g3.enumerate_policies(0);
  CHECK(pols.size() == 4);
  std::set<std::vector<int>> unique;
  for (const auto& p : pols) unique.insert(p.action_of_state);
  CHECK(unique.size() == 4);

  Game g2 = make_fig2(0.9);
  auto pols2 = g2.enumerate_policies(1);
  REQUIRE(pols2.size() == 3);
  CHECK(pols2[0].action_of_state == std::vector<int>{0});
  CHECK(pols2[1].action_of_state == std::vector<int>{1});
  CHECK(pols2[2].action_of_state == std::vector<int>{2});
}

TEST_CASE("joint action flattening is player-major with player 0 fastest") {
  Game g = make_fig2(0.9);
  CHECK(g.joint_action_index({1, 0}) == 1);
  CHECK(g.joint_action_index({0, 1}) == 3);
  CHECK(g.joint_action_index({2, 2}) == 8);
  for (int u = 0; u < g.n_joint_actions(); ++u) CHECK(g.joint_action_index(g.joint_action_unflatten(u)) == u);
}

TEST_CASE("policy and joint-policy rank bijections") {
  Game g = make_fig3(0.8);
  for (int i = 0; i < g.n_players; ++i)
    for (int r = 0; r < g.n_policies(i); ++r) CHECK(g.policy_rank(g.policy_unrank(i, r)) == r);
  for (long long p = 0; p < g.n_joint_policies(); ++p) CHECK(g.joint_policy_index(g.joint_policy_unflatten(p)) == p);
  // joint action of a joint policy: ranks (2,2) is u=x for both players
  CHECK(g.joint_action_of({2, 2}, 0) == 0);
  CHECK(g.joint_action_of({2, 2}, 1) == 3);
}

TEST_CASE("serialize round trip") {
  for (const Game& g : {make_fig1(1.0, 2.0, 0.8, 0.7), make_fig2(0.9), make_fig3(0.8)}) {
    Game back = load_game(serialize_game(g));
    CHECK(back.n_players == g.n_players);
    CHECK(back.n_states == g.n_states);
    CHECK(back.n_actions == g.n_actions);
    CHECK((back.discount - g.discount).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    for (int i = 0; i < g.n_players; ++i)
      CHECK((back.cost[i] - g.cost[i]).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    for (int x = 0; x < g.n_states; ++x)
      CHECK((back.kernel[x] - g.kernel[x]).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
}

TEST_CASE("load_game reports schema violations with coordinates") {
  Game g = make_fig3(0.8);
  std::string text = serialize_game(g);
  // corrupt one kernel row
  auto pos = text.find("0.95");
  text.replace(pos, 4, "0.85");
  CHECK_THROWS_WITH_AS(load_game(text), doctest::Contains("kernel row"), std::invalid_argument);
  CHECK_THROWS_AS(load_game("not json"), std::runtime_error);
  CHECK_THROWS_AS(load_game("{\"players\": 2}"), std::exception);
}
