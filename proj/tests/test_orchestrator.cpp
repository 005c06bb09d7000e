#include <doctest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "test_support.hpp"
#include "toolrl/orchestrator.hpp"

using nlohmann::json;
using namespace toolrl;
using namespace toolrl::orch;

namespace {

const tools::ToolRegistry& registry() {
  static const tools::ToolRegistry r = tools::make_retail_registry();
  return r;
}

tools::ToolCall exchange_call() {
  tools::ToolCall call;
  call.name = "exchange_delivered_order_items";
  call.arguments = {{"order_id", "#W7678072"},
                    {"item_ids", json::array({"3557711149", "2193628750"})},
                    {"new_item_ids", json::array({"8084436579", "8214883393"})},
                    {"payment_method_id", "paypal_5727330"}};
  return call;
}

traj::TaskSpec exchange_task() {
  traj::TaskSpec task;
  task.task_id = "retail_exchange_001";
  task.user_instruction = "Exchange the backpack and the mouse on #W7678072.";
  task.ground_truth_calls = {exchange_call()};
  task.seed_ref = "retail";
  return task;
}

std::vector<std::string> exchange_policy_outputs() {
  return {
      "<think>Find the account first.</think><tool_call>{\"name\": \"find_user_id_by_email\", "
      "\"arguments\": {\"email\": \"noah.brown7922@example.com\"}}</tool_call>",
      "<think>Confirm the order contents.</think><tool_call>{\"name\": \"get_order_details\", "
      "\"arguments\": {\"order_id\": \"#W7678072\"}}</tool_call>",
      "<think>Run the exchange with the PayPal method.</think><tool_call>" +
          tools::tool_call_to_json(exchange_call()).dump() + "</tool_call>",
      "<think>Done.</think>Your exchange is complete. Anything else?",
  };
}

std::unique_ptr<sim::ScriptedUser> exchange_user() {
  return std::make_unique<sim::ScriptedUser>(
      "exchange items",
      std::vector<sim::ScriptEntry>{
          {"", "Hi! Please exchange the backpack and mouse on order #W7678072; email "
               "noah.brown7922@example.com, difference on paypal_5727330."}},
      "Please continue.");
}

LocalSession make_session(std::unique_ptr<sim::UserSimulator> user) {
  return LocalSession(testsupport::retail_store(), registry(), std::move(user));
}

/// Policy that always emits the same user-directed message.
class LoopPolicy final : public sim::PolicyClient {
 public:
  sim::Completion complete(const std::vector<sim::Exchange>&) override {
    return {"<think>keep going</think>Still working on it.", {}, {}};
  }
};

/// User that never stops.
class ChattyUser final : public sim::UserSimulator {
 public:
  std::string next_message(const std::vector<sim::Exchange>&) override { return "Please go on."; }
};

}  // namespace

TEST_SUITE("run_episode") {
  TEST_CASE("scripted replay completes the exchange with terminal reward 1") {
    sim::ScriptedPolicy policy(exchange_policy_outputs());
    LocalSession session = make_session(exchange_user());
    const traj::Trajectory t = run_episode(exchange_task(), policy, session, EpisodeConfig{});

    CHECK(t.task_id == "retail_exchange_001");
    REQUIRE(t.turns.size() == 4);
    CHECK(t.terminal_reward == 1);
    CHECK_FALSE(t.transport_error);

    const auto writes = verify::extract_writes(t, registry());
    REQUIRE(writes.size() == 1);
    CHECK(writes[0] == exchange_call());

    // final turn carries the stop reply from the user
    CHECK(t.turns.back().feedback.text == std::string(sim::kStopToken));
    CHECK(session.store().find_order("#W7678072")->status == retail::OrderStatus::exchanged);
  }

  TEST_CASE("minimal episode: immediate user reply then stop") {
    sim::ScriptedPolicy policy({"<think>greet</think>How can I help you?"});
    auto user = std::make_unique<sim::ScriptedUser>(
        "", std::vector<sim::ScriptEntry>{{"", "opening request"}}, "");
    LocalSession session = make_session(std::move(user));
    const traj::Trajectory t = run_episode(exchange_task(), policy, session, EpisodeConfig{});
    REQUIRE(t.turns.size() == 1);
    CHECK(t.terminal_reward == 0);  // ground truth non-empty, no writes
    CHECK(std::holds_alternative<traj::UserMessage>(t.turns[0].action));
  }

  TEST_CASE("a policy that never stops is cut at max_turns") {
    LoopPolicy policy;
    LocalSession session(testsupport::retail_store(), registry(),
                         std::make_unique<ChattyUser>());
    EpisodeConfig config;
    config.max_turns = 30;
    const traj::Trajectory t = run_episode(exchange_task(), policy, session, config);
    CHECK(t.turns.size() == 30);
    for (std::size_t i = 0; i < t.turns.size(); ++i)
      CHECK(t.turns[i].index == static_cast<int>(i) + 1);
  }

  TEST_CASE("malformed actions surface as environment feedback, not crashes") {
    sim::ScriptedPolicy policy({
        "<tool_call>{broken json</tool_call>",
        "<think>recover</think>Sorry, let me start over. What do you need?",
    });
    LocalSession session = make_session(exchange_user());
    const traj::Trajectory t = run_episode(exchange_task(), policy, session, EpisodeConfig{});
    REQUIRE(t.turns.size() >= 2);
    CHECK(t.turns[0].feedback.text.find("could not be parsed") != std::string::npos);
    CHECK(t.terminal_reward == 0);
  }

  TEST_CASE("stop action ends the episode with empty feedback") {
    sim::ScriptedPolicy policy({"<think>nothing to do here</think>"});
    LocalSession session = make_session(exchange_user());
    const traj::Trajectory t = run_episode(exchange_task(), policy, session, EpisodeConfig{});
    REQUIRE(t.turns.size() == 1);
    CHECK(std::holds_alternative<traj::Stop>(t.turns[0].action));
    CHECK(t.turns[0].feedback.text.empty());
  }

  TEST_CASE("retail episodes embed the verification verdict") {
    sim::ScriptedPolicy policy(exchange_policy_outputs());
    LocalSession session = make_session(exchange_user());
    const traj::Trajectory t = run_episode(exchange_task(), policy, session, EpisodeConfig{});
    REQUIRE(t.verify_report.has_value());
    CHECK(t.verify_report->reward == 1);
    CHECK(t.verify_report->mismatch == "match");
    CHECK(traj::deserialize(traj::serialize(t)) == t);

    sim::ScriptedPolicy idle({"<think>greet</think>Hello, how can I help?"});
    LocalSession session2 = make_session(exchange_user());
    const traj::Trajectory failed = run_episode(exchange_task(), idle, session2, EpisodeConfig{});
    REQUIRE(failed.verify_report.has_value());
    CHECK(failed.verify_report->reward == 0);
    CHECK(failed.verify_report->mismatch == "missing_write");
  }

  TEST_CASE("an immediate user stop still yields one turn") {
    sim::ScriptedPolicy policy({"<think>nobody is here</think>"});
    auto user =
        std::make_unique<sim::ScriptedUser>("", std::vector<sim::ScriptEntry>{}, "fallback");
    LocalSession session = make_session(std::move(user));
    const traj::Trajectory t = run_episode(exchange_task(), policy, session, EpisodeConfig{});
    REQUIRE(t.turns.size() == 1);
    CHECK(std::holds_alternative<traj::Stop>(t.turns[0].action));
  }

  TEST_CASE("math tasks are verified against the final user-directed message") {
    traj::TaskSpec task;
    task.task_id = "math_001";
    task.domain_tag = traj::DomainTag::math;
    task.expected_answer = 42;
    sim::ScriptedPolicy policy({"<think>6*7=42</think>The answer is 42"});
    auto user = std::make_unique<sim::ScriptedUser>(
        "", std::vector<sim::ScriptEntry>{{"", "What is 6 times 7?"}}, "");
    LocalSession session(retail::EntityStore{}, registry(), std::move(user));
    const traj::Trajectory t = run_episode(task, policy, session, EpisodeConfig{});
    CHECK(t.terminal_reward == 1);
  }
}

TEST_SUITE("intervention") {
  namespace {
  tools::ToolCall wrong_cancel() {
    tools::ToolCall call;
    call.name = "cancel_pending_order";
    call.arguments = {{"order_id", "#W5490111"}};
    return call;
  }

  std::string tool_text(const tools::ToolCall& call, const std::string& thought) {
    return "<think>" + thought + "</think><tool_call>" + tools::tool_call_to_json(call).dump() +
           "</tool_call>";
  }
  }  // namespace

  TEST_CASE("decision table") {
    const verify::GroundTruth truth{{exchange_call()}, {}};
    CHECK(intervene(exchange_call(), truth, true, 0) == InterventionDecision::proceed);
    CHECK(intervene(wrong_cancel(), truth, true, 0) == InterventionDecision::retry);
    CHECK(intervene(wrong_cancel(), truth, true, 1) == InterventionDecision::retry);
    CHECK(intervene(wrong_cancel(), truth, true, 2) == InterventionDecision::proceed);
    // reads are never intervened on
    CHECK(intervene(wrong_cancel(), truth, false, 0) == InterventionDecision::proceed);
  }

  TEST_CASE("a deviant write is retried with the corrective sentence injected") {
    sim::ScriptedPolicy policy({
        tool_text(wrong_cancel(), "Cancel the order to make the user happy."),
        tool_text(exchange_call(), "Actually the task is an exchange."),
        "<think>Done.</think>All set. Anything else?",
    });
    LocalSession session = make_session(exchange_user());
    EpisodeConfig config;
    config.intervention_enabled = true;
    const traj::Trajectory t = run_episode(exchange_task(), policy, session, config);

    // the discarded pending turn does not appear in the record
    REQUIRE(t.turns.size() == 2);
    const auto* call = std::get_if<tools::ToolCall>(&t.turns[0].action);
    REQUIRE(call != nullptr);
    CHECK(*call == exchange_call());
    CHECK(t.terminal_reward == 1);

    // the re-query saw the corrective sentence, byte-exact, appended to
    // the discarded reasoning
    REQUIRE(policy.seen().size() >= 2);
    const auto& requery = policy.seen()[1];
    REQUIRE_FALSE(requery.empty());
    const std::string& injected = requery.back().text;
    const std::string sentence = kCorrectiveSentence;
    REQUIRE(injected.size() >= sentence.size());
    CHECK(injected.substr(injected.size() - sentence.size()) == sentence);
    CHECK(injected.find("Cancel the order to make the user happy.") != std::string::npos);
  }

  TEST_CASE("the third deviant action proceeds after two interventions") {
    sim::ScriptedPolicy policy({
        tool_text(wrong_cancel(), "attempt one"),
        tool_text(wrong_cancel(), "attempt two"),
        tool_text(wrong_cancel(), "attempt three"),
        "<think>Done.</think>I cancelled the order. Anything else?",
    });
    LocalSession session = make_session(exchange_user());
    EpisodeConfig config;
    config.intervention_enabled = true;
    const traj::Trajectory t = run_episode(exchange_task(), policy, session, config);

    // three queries happened within one reasoning step; the third executed
    CHECK(policy.seen().size() >= 3);
    const auto* call = std::get_if<tools::ToolCall>(&t.turns[0].action);
    REQUIRE(call != nullptr);
    CHECK(*call == wrong_cancel());
    CHECK(t.turns[0].thought == "attempt three");
    REQUIRE(t.turns[0].tool_outcome.has_value());
    CHECK(t.turns[0].tool_outcome->ok);  // the pending cancel is legal on the store
    CHECK(t.terminal_reward == 0);       // but does not match ground truth
  }

  TEST_CASE("interventions never fire on reads or user messages") {
    sim::ScriptedPolicy policy({
        "<think>look around</think><tool_call>{\"name\": \"get_order_details\", \"arguments\": "
        "{\"order_id\": \"#W7678072\"}}</tool_call>",
        "<think>ask</think>Could you confirm the exchange?",
        tool_text(exchange_call(), "Proceed."),
        "<think>Done.</think>All set!",
    });
    auto user = std::make_unique<sim::ScriptedUser>(
        "exchange items",
        std::vector<sim::ScriptEntry>{
            {"", "Hi! Please exchange the backpack and mouse on order #W7678072."},
            {"confirm", "Yes, please proceed with PayPal."}},
        "Please continue.");
    LocalSession session = make_session(std::move(user));
    EpisodeConfig config;
    config.intervention_enabled = true;
    const traj::Trajectory t = run_episode(exchange_task(), policy, session, config);
    // four scripted outputs, four turns: nothing was discarded or retried
    CHECK(policy.seen().size() == 4);
    CHECK(t.turns.size() == 4);
    CHECK(t.terminal_reward == 1);
  }
}

TEST_SUITE("run_group") {
  TEST_CASE("deterministic actors give identical trajectories") {
    const traj::TaskSpec task = exchange_task();
    const auto group = run_group(
        task, 4, [] { return std::make_unique<sim::ScriptedPolicy>(exchange_policy_outputs()); },
        [] {
          return std::make_unique<LocalSession>(testsupport::retail_store(), registry(),
                                                exchange_user());
        },
        EpisodeConfig{});
    REQUIRE(group.trajectories.size() == 4);
    REQUIRE(group.scalar_rewards.size() == 4);
    const std::string first = traj::serialize(group.trajectories[0]);
    for (const auto& t : group.trajectories) CHECK(traj::serialize(t) == first);
    for (const double r : group.scalar_rewards) CHECK(r == 1.0);
  }

  TEST_CASE("groups of one are allowed here but refused by advantage ops") {
    const auto group = run_group(
        exchange_task(), 1,
        [] { return std::make_unique<sim::ScriptedPolicy>(exchange_policy_outputs()); },
        [] {
          return std::make_unique<LocalSession>(testsupport::retail_store(), registry(),
                                                exchange_user());
        },
        EpisodeConfig{});
    CHECK(group.trajectories.size() == 1);
    CHECK_THROWS_AS(adv::grpo_advantages(group.scalar_rewards), std::invalid_argument);
  }
}

TEST_SUITE("episode_config") {
  TEST_CASE("defaults are pinned") {
    const EpisodeConfig config;
    CHECK(config.max_turns == 30);
    CHECK(config.temperature == 0.7);
    CHECK(config.top_p == 0.95);
    CHECK(config.num_rollout == 4);
    CHECK_FALSE(config.intervention_enabled);
    CHECK(config.intervention_limit == 2);

    const adv::ClipConfig clip;
    CHECK(clip.epsilon == 0.2);
    CHECK(clip.kl_coef == 0.001);
    CHECK(clip.kl_loss_coef == 0.003);
    CHECK(clip.gamma == 1.0);
    CHECK(clip.lambda == 1.0);
  }

  TEST_CASE("config json validates bounds") {
    CHECK_THROWS_AS(episode_config_from_json({{"max_turns", 0}}), std::invalid_argument);
    CHECK_THROWS_AS(episode_config_from_json({{"num_rollout", 0}}), std::invalid_argument);
    const EpisodeConfig c = episode_config_from_json({{"max_turns", 5}, {"temperature", 0.2}});
    CHECK(c.max_turns == 5);
    CHECK(c.temperature == 0.2);
    CHECK(c.top_p == 0.95);
  }
}

TEST_SUITE("transport_failures") {
  namespace {
  class FlakyPolicy final : public sim::PolicyClient {
   public:
    explicit FlakyPolicy(int fail_at) : fail_at_(fail_at) {}
    sim::Completion complete(const std::vector<sim::Exchange>&) override {
      if (++calls_ >= fail_at_) throw sim::TransportError("endpoint went away");
      return {"<think>ok</think>Working on it.", {}, {}};
    }

   private:
    int fail_at_;
    int calls_ = 0;
  };
  }  // namespace

  TEST_CASE("episodes abort with a distinguishable status, not an exception") {
    FlakyPolicy policy(3);
    LocalSession session(testsupport::retail_store(), registry(),
                         std::make_unique<ChattyUser>());
    const traj::Trajectory t = run_episode(exchange_task(), policy, session, EpisodeConfig{});
    CHECK(t.transport_error);
    CHECK_FALSE(t.terminal_reward.has_value());
    CHECK(t.turns.size() == 2);  // the completed turns are retained
  }

  TEST_CASE("failed rollouts score 0 in the group scalars") {
    const traj::TaskSpec task = exchange_task();
    int episode = 0;
    const auto group = run_group(
        task, 3,
        [&]() -> std::unique_ptr<sim::PolicyClient> {
          if (++episode == 2) return std::make_unique<FlakyPolicy>(1);
          return std::make_unique<sim::ScriptedPolicy>(exchange_policy_outputs());
        },
        [] {
          return std::make_unique<LocalSession>(testsupport::retail_store(), registry(),
                                                exchange_user());
        },
        EpisodeConfig{});
    REQUIRE(group.scalar_rewards.size() == 3);
    CHECK(group.scalar_rewards[0] == 1.0);
    CHECK(group.scalar_rewards[1] == 0.0);
    CHECK(group.scalar_rewards[2] == 1.0);
    CHECK(group.trajectories[1].transport_error);
  }
}

TEST_SUITE("reward_sources") {
  TEST_CASE("breakdown totals feed group scalars when present") {
    const traj::TaskSpec task = exchange_task();
    const auto group = run_group(
        task, 2, [] { return std::make_unique<sim::ScriptedPolicy>(exchange_policy_outputs()); },
        [] {
          return std::make_unique<LocalSession>(testsupport::retail_store(), registry(),
                                                exchange_user());
        },
        EpisodeConfig{}, RewardSource::breakdown_total);
    // no breakdown attached yet: falls back to 10 * R(tau)
    CHECK(group.scalar_rewards == std::vector<double>{10.0, 10.0});
  }
}

TEST_SUITE("episode_isolation") {
  TEST_CASE("concurrent episodes never see each other's writes") {
    const retail::EntityStore base = testsupport::retail_store();

    LocalSession session_a(base.snapshot(), registry(), exchange_user());
    auto cancel_user = std::make_unique<sim::ScriptedUser>(
        "", std::vector<sim::ScriptEntry>{{"", "Cancel order #W5490111 please."}}, "");
    LocalSession session_b(base.snapshot(), registry(), std::move(cancel_user));

    traj::Trajectory ta, tb;
    {
      sim::ScriptedPolicy policy_a(exchange_policy_outputs());
      sim::ScriptedPolicy policy_b({
          "<think>cancel it</think><tool_call>{\"name\": \"cancel_pending_order\", "
          "\"arguments\": {\"order_id\": \"#W5490111\"}}</tool_call>",
          "<think>done</think>Cancelled. Anything else?",
      });
      traj::TaskSpec task_b;
      task_b.task_id = "retail_cancel_001";
      tools::ToolCall cancel;
      cancel.name = "cancel_pending_order";
      cancel.arguments = {{"order_id", "#W5490111"}};
      task_b.ground_truth_calls = {cancel};
      task_b.seed_ref = "retail";

      std::thread ra([&] { ta = run_episode(exchange_task(), policy_a, session_a, {}); });
      std::thread rb([&] { tb = run_episode(task_b, policy_b, session_b, {}); });
      ra.join();
      rb.join();
    }
    CHECK(ta.terminal_reward == 1);
    CHECK(tb.terminal_reward == 1);

    // each session shows exactly its own write applied to a fresh snapshot
    retail::EntityStore only_exchange = base.snapshot();
    registry().execute(only_exchange, exchange_call());
    tools::ToolCall cancel;
    cancel.name = "cancel_pending_order";
    cancel.arguments = {{"order_id", "#W5490111"}};
    retail::EntityStore only_cancel = base.snapshot();
    registry().execute(only_cancel, cancel);

    CHECK(session_a.store().state_hash() == only_exchange.state_hash());
    CHECK(session_b.store().state_hash() == only_cancel.state_hash());
    CHECK(session_a.store().state_hash() != session_b.store().state_hash());
  }
}

TEST_SUITE("pass_hat_k") {
  TEST_CASE("all-success matrices score 1.0 for every k") {
    OutcomeMatrix matrix;
    matrix.outcomes = {{1, 1, 1, 1}, {1, 1, 1, 1}, {1, 1, 1, 1}};
    for (int k = 1; k <= 4; ++k) CHECK(pass_hat_k(matrix, k) == 1.0);
  }

  TEST_CASE("any failure kills the all-k term") {
    CHECK(pass_hat_k_task(4, 3, 4) == Rational(0));
  }

  TEST_CASE("worked two-task example") {
    OutcomeMatrix matrix;
    matrix.outcomes = {{1, 1, 1, 1}, {1, 0, 1, 0}};
    CHECK(pass_hat_k(matrix, 1) == 0.75);
    // (1 + C(2,2)/C(4,2)) / 2 = (1 + 1/6) / 2
    CHECK(pass_hat_k(matrix, 2) == doctest::Approx((1.0 + 1.0 / 6.0) / 2.0).epsilon(1e-15));
    CHECK(pass_hat_k_task(4, 2, 2) == Rational(1, 6));
  }

  TEST_CASE("n = k reduces to the all-correct product per task") {
    std::mt19937 rng(31);
    for (int rep = 0; rep < 200; ++rep) {
      const int n = 1 + static_cast<int>(rng() % 6);
      std::vector<int> outcomes(static_cast<std::size_t>(n));
      int product = 1;
      for (auto& o : outcomes) {
        o = static_cast<int>(rng() % 2);
        product &= o;
      }
      const int c = static_cast<int>(std::count(outcomes.begin(), outcomes.end(), 1));
      CHECK(pass_hat_k_task(n, c, n) == Rational(product));
    }
  }

  TEST_CASE("exhaustive subset enumeration oracle") {
    std::mt19937 rng(37);
    for (int rep = 0; rep < 100; ++rep) {
      const int n = 2 + static_cast<int>(rng() % 7);  // up to 8 outcomes
      std::vector<int> outcomes(static_cast<std::size_t>(n));
      for (auto& o : outcomes) o = static_cast<int>(rng() % 2);
      const int c = static_cast<int>(std::count(outcomes.begin(), outcomes.end(), 1));
      for (int k = 1; k <= n; ++k) {
        // enumerate all k-subsets; count the all-success ones
        std::int64_t total = 0, all_success = 0;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
          if (__builtin_popcount(mask) != k) continue;
          ++total;
          bool good = true;
          for (int b = 0; b < n; ++b)
            if ((mask >> b & 1u) && outcomes[static_cast<std::size_t>(b)] == 0) good = false;
          all_success += good;
        }
        CHECK(pass_hat_k_task(n, c, k) == Rational(all_success, total));
      }
    }
  }

  TEST_CASE("antitone in k") {
    std::mt19937 rng(41);
    for (int rep = 0; rep < 300; ++rep) {
      OutcomeMatrix matrix;
      const int tasks = 1 + static_cast<int>(rng() % 6);
      const int n = 2 + static_cast<int>(rng() % 7);
      for (int t = 0; t < tasks; ++t) {
        std::vector<int> outcomes(static_cast<std::size_t>(n));
        for (auto& o : outcomes) o = static_cast<int>(rng() % 2);
        matrix.outcomes.push_back(std::move(outcomes));
      }
      double previous = pass_hat_k(matrix, 1);
      for (int k = 2; k <= n; ++k) {
        const double value = pass_hat_k(matrix, k);
        CHECK(value <= previous);
        previous = value;
      }
    }
  }

  TEST_CASE("k beyond the rollout count is an error") {
    OutcomeMatrix matrix;
    matrix.outcomes = {{1, 1}};
    CHECK_THROWS_AS(pass_hat_k(matrix, 3), std::invalid_argument);
    CHECK_THROWS_AS(pass_hat_k(OutcomeMatrix{}, 1), std::invalid_argument);
  }

  TEST_CASE("batched variant averages disjoint k-batches") {
    OutcomeMatrix matrix;
    matrix.outcomes = {{1, 1, 0, 1}};
    // batches of 2: {1,1} -> 1 and {0,1} -> 0, average 0.5
    CHECK(pass_hat_k_batched(matrix, 2) == 0.5);
  }
}

TEST_SUITE("task_mixer") {
  namespace {
  traj::TaskSpec tagged(const std::string& id) {
    traj::TaskSpec task;
    task.task_id = id;
    return task;
  }
  }  // namespace

  TEST_CASE("round robin over the cycle, sequential within pools") {
    TaskMixer mixer({"retail", "math"},
                    {{"retail", {tagged("r1"), tagged("r2")}}, {"math", {tagged("m1")}}});
    std::vector<std::string> drawn;
    for (int i = 0; i < 6; ++i) drawn.push_back(mixer.next().task_id);
    CHECK(drawn == std::vector<std::string>{"r1", "m1", "r2", "m1", "r1", "m1"});
  }

  TEST_CASE("singleton cycle") {
    TaskMixer mixer({"retail"}, {{"retail", {tagged("r1"), tagged("r2")}}});
    CHECK(mixer.next().task_id == "r1");
    CHECK(mixer.next().task_id == "r2");
    CHECK(mixer.next().task_id == "r1");
  }

  TEST_CASE("counting oracle: tags appear with equal frequency over 3N draws") {
    TaskMixer mixer({"a", "b", "c"}, {{"a", {tagged("a1"), tagged("a2")}},
                                      {"b", {tagged("b1")}},
                                      {"c", {tagged("c1"), tagged("c2"), tagged("c3")}}});
    std::map<char, int> counts;
    for (int i = 0; i < 3 * 50; ++i) counts[mixer.next().task_id[0]]++;
    CHECK(counts['a'] == 50);
    CHECK(counts['b'] == 50);
    CHECK(counts['c'] == 50);
  }

  TEST_CASE("empty pools are rejected up front") {
    CHECK_THROWS_AS(TaskMixer({"retail"}, {}), std::invalid_argument);
    CHECK_THROWS_AS(TaskMixer({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(TaskMixer({"retail"}, {{"retail", {}}}), std::invalid_argument);
  }
}
