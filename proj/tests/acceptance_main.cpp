/// Acceptance suite: one check per release criterion, one pass/fail line
/// each, nonzero exit when anything fails. Run from the repository root
/// (or anywhere; data paths are compiled in).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "mock_chat_server.hpp"
#include "toolrl/advantage.hpp"
#include "toolrl/orchestrator.hpp"
#include "toolrl/service.hpp"

using nlohmann::json;
using namespace toolrl;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& what) {
  if (!condition) throw CheckFailure(what);
}

std::ifstream open_data(const std::string& relative) {
#ifndef TOOLRL_DATA_DIR
#define TOOLRL_DATA_DIR "data"
#endif
  std::ifstream in(std::string(TOOLRL_DATA_DIR) + "/" + relative);
  if (!in) throw CheckFailure("cannot open data file " + relative);
  return in;
}

retail::EntityStore load_retail_seed() {
  auto in = open_data("seeds/retail.json");
  return retail::EntityStore::load_seed(json::parse(in));
}

tools::ToolCall exchange_fixture() {
  tools::ToolCall call;
  call.name = "exchange_delivered_order_items";
  call.arguments = {{"order_id", "#W7678072"},
                    {"item_ids", json::array({"3557711149", "2193628750"})},
                    {"new_item_ids", json::array({"8084436579", "8214883393"})},
                    {"payment_method_id", "paypal_5727330"}};
  return call;
}

// --------------------------------------------------------------------------
// 1. TARL scoring: exact category partition and length fairness.

void criterion_tarl() {
  std::mt19937 rng(1001);
  std::uniform_int_distribution<int> turn_count(1, 30);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const int t = turn_count(rng);
    std::vector<int> scores(static_cast<std::size_t>(t));
    for (auto& s : scores) s = coin(rng);
    const bool with_major = coin(rng) == 1;
    if (with_major) scores[rng() % t] = -1;
    const int terminal = with_major ? 0 : coin(rng);

    const reward::RewardBreakdown b = reward::combine(scores, terminal, t);
    switch (b.category) {
      case reward::Category::Failed:
        require(b.total < Rational(0), "Failed total not < 0: " + b.total.str());
        break;
      case reward::Category::GoodAttempt:
        require(Rational(0) <= b.total && b.total <= Rational(5),
                "GoodAttempt total outside [0,5]: " + b.total.str());
        break;
      case reward::Category::Good:
        require(Rational(10) <= b.total && b.total < Rational(15),
                "Good total outside [10,15): " + b.total.str());
        break;
      case reward::Category::Perfect:
        require(b.total == Rational(15), "Perfect total != 15: " + b.total.str());
        break;
    }
  }
  for (int t = 1; t <= 30; ++t) {
    const reward::RewardBreakdown b = reward::combine(std::vector<int>(t, 1), 1, t);
    require(b.total == Rational(15), "all-ones success total != 15 at T=" + std::to_string(t));
    require(b.category == reward::Category::Perfect, "all-ones success not Perfect");
  }
}

// --------------------------------------------------------------------------
// 2. GRPO/RLOO estimators.

void criterion_group_estimators() {
  std::mt19937 rng(1002);
  std::uniform_int_distribution<std::size_t> group_size(2, 16);
  std::uniform_real_distribution<double> reward_dist(-15.0, 15.0);
  std::uniform_int_distribution<int> binary(0, 1);
  std::uniform_int_distribution<int> flavor(0, 3);

  for (int rep = 0; rep < 10000; ++rep) {
    const std::size_t g = group_size(rng);
    std::vector<double> rewards(g);
    switch (flavor(rng)) {
      case 0:
        for (auto& r : rewards) r = binary(rng);
        break;
      case 1: {
        const double constant = reward_dist(rng);
        for (auto& r : rewards) r = constant;
        break;
      }
      default:
        for (auto& r : rewards) r = reward_dist(rng);
    }

    const auto grpo = adv::grpo_advantages(rewards);
    double mean = 0.0;
    for (const double a : grpo) mean += a;
    mean /= double(g);
    require(std::fabs(mean) <= 1e-9, "GRPO mean beyond 1e-9");
    const bool defined =
        !std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; });
    if (defined) {
      double variance = 0.0;
      for (const double a : grpo) variance += (a - mean) * (a - mean);
      variance /= double(g);
      require(std::fabs(std::sqrt(variance) - 1.0) <= 1e-9, "GRPO std beyond 1e-9 of 1");
    } else {
      for (const double a : grpo) require(a == 0.0, "degenerate GRPO advantage nonzero");
    }

    const auto rloo = adv::rloo_advantages(rewards);
    double sum = 0.0;
    for (const double a : rloo) sum += a;
    require(std::fabs(sum) <= 1e-9, "RLOO sum beyond 1e-9");
  }

  require(adv::grpo_advantages({1, 0, 0, 1}) == std::vector<double>{1, -1, -1, 1},
          "GRPO worked example [1,0,0,1] -> [1,-1,-1,1] not exact");
  const auto rloo = adv::rloo_advantages({1, 0, 0, 0});
  const double third = 1.0 / 3.0;
  require(rloo[0] == 1.0 && rloo[1] == -third && rloo[2] == -third && rloo[3] == -third,
          "RLOO worked example [1,0,0,0] -> [1,-1/3,-1/3,-1/3] not exact");
}

// --------------------------------------------------------------------------
// 3. GAE backward pass vs brute-force forward summation.

std::vector<double> gae_brute_force(const std::vector<double>& rewards,
                                    const std::vector<double>& values, double gamma,
                                    double lambda) {
  const std::size_t n = rewards.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0, weight = 1.0;
    for (std::size_t l = 0; j + l < n; ++l) {
      const double next_value = j + l + 1 < n ? values[j + l + 1] : 0.0;
      acc += weight * (rewards[j + l] + gamma * next_value - values[j + l]);
      weight *= gamma * lambda;
    }
    out[j] = acc;
  }
  return out;
}

void criterion_gae() {
  std::mt19937 rng(1003);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> length(1, 512);
  const double grid[] = {0.0, 0.5, 1.0};
  for (int rep = 0; rep < 1000; ++rep) {
    const double gamma = grid[rep % 3];
    const double lambda = grid[(rep / 3) % 3];
    const std::size_t n = length(rng);
    std::vector<double> rewards(n), values(n);
    for (auto& r : rewards) r = dist(rng);
    for (auto& v : values) v = dist(rng);
    const auto fast = adv::gae(rewards, values, gamma, lambda);
    const auto slow = gae_brute_force(rewards, values, gamma, lambda);
    for (std::size_t j = 0; j < n; ++j)
      require(std::fabs(fast[j] - slow[j]) <= 1e-9, "GAE backward != brute force within 1e-9");
  }

  std::vector<double> rewards(64, 0.0), values(64, 0.0);
  rewards.back() = 2.25;
  for (const double a : adv::gae(rewards, values, 1.0, 1.0))
    require(a == 2.25, "terminal-only GAE is not the constant reward");
}

// --------------------------------------------------------------------------
// 4. PPO clip objective: masking completeness and the scalar clip example.

void criterion_ppo_clip() {
  std::mt19937 rng(1004);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  const adv::LossMask mask = {1, 0, 1, 0, 0, 1, 1, 0, 1, 0};
  std::vector<double> logp_new(10), logp_old(10), advantages(10);
  for (std::size_t i = 0; i < 10; ++i) {
    logp_new[i] = dist(rng);
    logp_old[i] = dist(rng);
    advantages[i] = dist(rng);
  }
  const double baseline = adv::ppo_clip_loss(logp_new, logp_old, advantages, mask, 0.2);
  for (int rep = 0; rep < 200; ++rep) {
    auto mutated_new = logp_new;
    auto mutated_old = logp_old;
    auto mutated_adv = advantages;
    for (std::size_t i = 0; i < 10; ++i) {
      if (mask[i]) continue;
      mutated_new[i] = dist(rng);
      mutated_old[i] = dist(rng);
      mutated_adv[i] = dist(rng);
    }
    const double loss = adv::ppo_clip_loss(mutated_new, mutated_old, mutated_adv, mask, 0.2);
    require(loss == baseline, "environment-token mutation changed the loss");
  }

  const double clipped = adv::ppo_clip_loss({std::log(2.0)}, {0.0}, {1.0}, {1}, 0.2);
  require(clipped == -1.2, "scalar clip example: expected clipped term 1.2");
}

// --------------------------------------------------------------------------
// 5. Verifier: fixture, perturbations, permutation invariance.

void criterion_verifier() {
  const verify::GroundTruth truth{{exchange_fixture()}, {}};
  require(verify::verify({exchange_fixture()}, truth).reward == 1, "fixture does not verify to 1");

  // every single-argument perturbation flips to wrong_args
  for (const std::string field : {"order_id", "payment_method_id"}) {
    tools::ToolCall perturbed = exchange_fixture();
    perturbed.arguments[field] = std::string(perturbed.arguments[field]) + "_x";
    const verify::VerifyReport report = verify::verify({perturbed}, truth);
    require(report.reward == 0 && report.mismatch == verify::Mismatch::wrong_args,
            "perturbing " + field + " did not yield wrong_args");
  }
  for (const std::string field : {"item_ids", "new_item_ids"}) {
    for (std::size_t i = 0; i < 2; ++i) {
      tools::ToolCall perturbed = exchange_fixture();
      perturbed.arguments[field][i] = "0000000000";
      const verify::VerifyReport report = verify::verify({perturbed}, truth);
      require(report.reward == 0 && report.mismatch == verify::Mismatch::wrong_args,
              "perturbing " + field + "[" + std::to_string(i) + "] did not yield wrong_args");
    }
  }

  // permutation invariance, exhaustive over 4 writes
  tools::ToolCall cancel;
  cancel.name = "cancel_pending_order";
  cancel.arguments = {{"order_id", "#W5490111"}};
  tools::ToolCall address;
  address.name = "modify_pending_order_address";
  address.arguments = {{"order_id", "#W5490111"}, {"address", "1 Elm St"}};
  tools::ToolCall returns;
  returns.name = "return_delivered_order_items";
  returns.arguments = {{"order_id", "#W7678072"},
                       {"item_ids", json::array({"3557711149"})},
                       {"payment_method_id", "paypal_5727330"}};
  const std::vector<tools::ToolCall> writes = {exchange_fixture(), cancel, address, returns};
  for (std::size_t truth_size = 0; truth_size <= writes.size(); ++truth_size) {
    verify::GroundTruth subset;
    subset.calls.assign(writes.begin(), writes.begin() + truth_size);
    const verify::VerifyReport baseline = verify::verify(writes, subset);
    std::vector<std::size_t> order = {0, 1, 2, 3};
    do {
      std::vector<tools::ToolCall> permuted;
      for (const auto i : order) permuted.push_back(writes[i]);
      const verify::VerifyReport report = verify::verify(permuted, subset);
      require(report.reward == baseline.reward && report.mismatch == baseline.mismatch,
              "permutation changed the verdict");
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

// --------------------------------------------------------------------------
// 6. pass^k: antitone, n=k product, worked example. Exact rationals per task.

void criterion_pass_k() {
  std::mt19937 rng(1006);
  for (int rep = 0; rep < 1000; ++rep) {
    const int tasks = 1 + static_cast<int>(rng() % 6);
    const int n = 2 + static_cast<int>(rng() % 9);
    orch::OutcomeMatrix matrix;
    for (int t = 0; t < tasks; ++t) {
      std::vector<int> outcomes(static_cast<std::size_t>(n));
      for (auto& o : outcomes) o = static_cast<int>(rng() % 2);
      matrix.outcomes.push_back(std::move(outcomes));
    }
    double previous = orch::pass_hat_k(matrix, 1);
    for (int k = 2; k <= n; ++k) {
      const double value = orch::pass_hat_k(matrix, k);
      require(value <= previous, "pass^k not antitone in k");
      previous = value;
    }
    // n = k: exact all-correct product per task
    for (const auto& outcomes : matrix.outcomes) {
      int product = 1;
      for (const int o : outcomes) product &= o;
      const int c = static_cast<int>(std::count(outcomes.begin(), outcomes.end(), 1));
      require(orch::pass_hat_k_task(n, c, n) == Rational(product),
              "n=k term != all-correct product");
    }
  }

  orch::OutcomeMatrix example;
  example.outcomes = {{1, 1, 1, 1}, {1, 0, 1, 0}};
  require(orch::pass_hat_k(example, 1) == 0.75, "worked example pass^1 != 0.75");
  require(orch::pass_hat_k_task(4, 2, 2) == Rational(1, 6), "worked example task term != 1/6");
}

// --------------------------------------------------------------------------
// 7. End-to-end deterministic episode over the wire protocol.

std::vector<std::string> e2e_policy_outputs() {
  return {
      "<think>Find the account first.</think><tool_call>{\"name\": \"find_user_id_by_email\", "
      "\"arguments\": {\"email\": \"noah.brown7922@example.com\"}}</tool_call>",
      "<think>Confirm the order.</think><tool_call>{\"name\": \"get_order_details\", "
      "\"arguments\": {\"order_id\": \"#W7678072\"}}</tool_call>",
      "<think>Execute the exchange.</think><tool_call>" +
          tools::tool_call_to_json(exchange_fixture()).dump() + "</tool_call>",
      "<think>Wrap up.</think>Your exchange is complete. Anything else?",
  };
}

traj::TaskSpec e2e_task() {
  traj::TaskSpec task;
  task.task_id = "retail_exchange_001";
  task.user_instruction = "Exchange the backpack and mouse on #W7678072.";
  task.ground_truth_calls = {exchange_fixture()};
  task.seed_ref = "retail";
  return task;
}

service::UserFactory e2e_users() {
  return [](const traj::TaskSpec&) {
    return std::make_unique<sim::ScriptedUser>(
        "exchange",
        std::vector<sim::ScriptEntry>{
            {"", "Hi! Please exchange the backpack and mouse on order #W7678072; email "
                 "noah.brown7922@example.com, difference on paypal_5727330."}},
        "Please continue.");
  };
}

void criterion_end_to_end() {
  std::map<std::string, retail::EntityStore> seeds;
  seeds.emplace("retail", load_retail_seed());
  std::map<std::string, traj::TaskSpec> tasks;
  tasks.emplace("retail_exchange_001", e2e_task());
  service::SandboxService svc(std::move(seeds), tools::make_retail_registry(), std::move(tasks),
                              e2e_users());
  httplib::Server server;
  svc.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread serving([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string base_url = "http://127.0.0.1:" + std::to_string(port);

  const auto run_over_wire = [&] {
    sim::ScriptedPolicy policy(e2e_policy_outputs());
    service::HttpSession session(base_url, "retail_exchange_001");
    return orch::run_episode(e2e_task(), policy, session, orch::EpisodeConfig{});
  };

  const traj::Trajectory first = run_over_wire();
  const traj::Trajectory second = run_over_wire();
  server.stop();
  serving.join();

  require(first.terminal_reward == 1, "wire episode terminal reward != 1");
  require(first.turns.size() >= 1 && first.turns.size() <= 30, "turn bound violated");
  require(!first.transport_error, "wire episode flagged a transport error");
  require(traj::serialize(first) == traj::serialize(second),
          "serialization not byte-stable across two runs");

  // wire vs in-process equivalence of the whole episode record
  const tools::ToolRegistry registry = tools::make_retail_registry();
  sim::ScriptedPolicy policy(e2e_policy_outputs());
  orch::LocalSession local(load_retail_seed(), registry, e2e_users()(e2e_task()));
  const traj::Trajectory in_process =
      orch::run_episode(e2e_task(), policy, local, orch::EpisodeConfig{});
  require(traj::serialize(first) == traj::serialize(in_process),
          "wire episode record differs from the in-process record");
}

// --------------------------------------------------------------------------
// 8. Intervention semantics: byte-exact corrective sentence, two-retry limit.

void criterion_intervention() {
  const auto tool_text = [](const tools::ToolCall& call, const std::string& thought) {
    return "<think>" + thought + "</think><tool_call>" + tools::tool_call_to_json(call).dump() +
           "</tool_call>";
  };
  tools::ToolCall wrong_cancel;
  wrong_cancel.name = "cancel_pending_order";
  wrong_cancel.arguments = {{"order_id", "#W5490111"}};

  const tools::ToolRegistry registry = tools::make_retail_registry();
  orch::EpisodeConfig config;
  config.intervention_enabled = true;

  {
    sim::ScriptedPolicy policy({
        tool_text(wrong_cancel, "Cancel first."),
        tool_text(exchange_fixture(), "Correction: exchange instead."),
        "<think>Done.</think>All set. Anything else?",
    });
    orch::LocalSession session(load_retail_seed(), registry, e2e_users()(e2e_task()));
    const traj::Trajectory t = orch::run_episode(e2e_task(), policy, session, config);

    require(policy.seen().size() >= 2, "policy was not re-queried");
    const std::string& injected = policy.seen()[1].back().text;
    const std::string sentence = orch::kCorrectiveSentence;
    require(sentence == "Wait, my previous reasoning might be wrong, let me try again.",
            "corrective sentence constant drifted");
    require(injected.size() >= sentence.size() &&
                injected.substr(injected.size() - sentence.size()) == sentence,
            "corrective sentence not received byte-exactly");
    require(t.terminal_reward == 1, "retried episode did not complete the exchange");
  }

  {
    sim::ScriptedPolicy policy({
        tool_text(wrong_cancel, "attempt one"),
        tool_text(wrong_cancel, "attempt two"),
        tool_text(wrong_cancel, "attempt three"),
        "<think>Done.</think>Cancelled. Anything else?",
    });
    orch::LocalSession session(load_retail_seed(), registry, e2e_users()(e2e_task()));
    const traj::Trajectory t = orch::run_episode(e2e_task(), policy, session, config);
    const auto* executed = std::get_if<tools::ToolCall>(&t.turns.at(0).action);
    require(executed != nullptr && executed->name == "cancel_pending_order",
            "third deviant action did not proceed");
    require(t.turns.at(0).thought == "attempt three", "unexpected attempt proceeded");
    require(t.turns.at(0).tool_outcome && t.turns.at(0).tool_outcome->ok,
            "proceeded action was not executed");
  }
}

// --------------------------------------------------------------------------
// 9. Judge client contract over mock outputs.

void criterion_judge() {
  traj::Trajectory t;
  for (int i = 1; i <= 3; ++i) {
    traj::Turn turn;
    turn.index = i;
    turn.agent_text = "<think>s</think>m" + std::to_string(i);
    turn.action = traj::UserMessage{"m" + std::to_string(i)};
    turn.feedback = {traj::Role::environment, traj::Modality::text, "r", ""};
    t.turns.push_back(turn);
  }

  // valid JSON parses to TurnScores
  const sim::TurnScores valid =
      sim::parse_judge_scores(R"({"score_0":1,"score_1":-1,"score_2":0})", 3);
  require(valid.scores == std::vector<int>{1, -1, 0}, "valid judge JSON mis-parsed");

  // out-of-range values are rejected
  bool rejected = false;
  try {
    sim::parse_judge_scores(R"({"score_0":2,"score_1":0,"score_2":0})", 3);
  } catch (const sim::AdjudicationError&) {
    rejected = true;
  }
  require(rejected, "out-of-range judge value was accepted");

  // duplicate -1 repaired to the earliest, with a warning
  const sim::TurnScores repaired =
      sim::parse_judge_scores(R"({"score_0":0,"score_1":-1,"score_2":-1})", 3);
  require(repaired.scores == std::vector<int>{0, -1, 0}, "duplicate -1 not repaired to earliest");
  require(!repaired.warnings.empty(), "repair produced no warning");

  // malformed output: exactly one retry, then terminal-only fallback
  testsupport::MockChatServer server(
      [](const json&) -> testsupport::MockChatServer::Reply { return {200, "no json here"}; });
  sim::ChatClient client(server.client_config());
  const auto outcome =
      sim::adjudicate_with_retry(client, sim::default_judge_prompt(), t, {}, "policy");
  require(!outcome.has_value(), "malformed judge output did not fall back");
  require(server.hits() == 2, "expected exactly one retry (2 requests), saw " +
                                  std::to_string(server.hits()));
  const reward::RewardBreakdown fallback =
      reward::combine(std::vector<int>(t.turns.size(), 0), 1, static_cast<int>(t.turns.size()));
  require(fallback.total == Rational(10), "terminal-only fallback total != 10 * R");
}

// --------------------------------------------------------------------------
// 10. Statistics: word-boundary #Wait oracle and independent Len recount.

void criterion_stats() {
  const std::regex oracle(R"(\bwait\b)", std::regex::icase);
  std::mt19937 rng(1010);
  const std::vector<std::string> vocabulary = {
      "wait",    "WAIT,",   "Wait.",  "awaits", "kuwait", "waits", "wait3",
      "wait_up", "w8",      "(wait)", "check",  "order",  "again", "WAIT",
      "waiting", "re-wait", "wait-",  "Wait,",
  };
  std::uniform_int_distribution<std::size_t> pick(0, vocabulary.size() - 1);
  std::uniform_int_distribution<int> words(0, 30);
  for (int doc = 0; doc < 100; ++doc) {
    std::string text;
    const int n = words(rng);
    for (int k = 0; k < n; ++k) text += vocabulary[pick(rng)] + " ";
    const auto begin = std::sregex_iterator(text.begin(), text.end(), oracle);
    const int expected = static_cast<int>(std::distance(begin, std::sregex_iterator()));
    require(traj::count_word_occurrences(text, "wait") == expected,
            "wait count disagrees with the regex oracle on: " + text);

    traj::Trajectory t;
    traj::Turn turn;
    turn.index = 1;
    turn.thought = text;
    turn.agent_text = "<think>" + text + "</think>reply";
    turn.action = traj::UserMessage{"reply"};
    turn.feedback = {traj::Role::environment, traj::Modality::text, "ok", ""};
    t.turns.push_back(turn);
    turn.index = 2;
    turn.thought = "";
    turn.agent_text = "closing words here";
    t.turns.push_back(turn);

    const traj::TrajStats s = traj::stats(t);
    require(s.wait_count == expected, "trajectory wait count disagrees with the oracle");
    std::size_t recount = 0;
    for (const auto& tt : t.turns) recount += default_tokenizer().count(tt.agent_text);
    require(s.avg_agent_tokens_per_turn ==
                static_cast<double>(recount) / static_cast<double>(t.turns.size()),
            "avg response length != independent recount / T");
  }
}

struct Criterion {
  int number;
  std::string name;
  std::function<void()> run;
  double budget_seconds;  // 0 = no stated bound
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "TARL category partition and 15-point length fairness", criterion_tarl, 1.0},
      {2, "GRPO/RLOO estimator invariants and worked examples", criterion_group_estimators, 5.0},
      {3, "GAE backward pass equals brute-force summation", criterion_gae, 10.0},
      {4, "PPO clip masking completeness and scalar clip example", criterion_ppo_clip, 0.0},
      {5, "verifier fixture, perturbations, permutation invariance", criterion_verifier, 1.0},
      {6, "pass^k antitone, n=k product, worked example", criterion_pass_k, 0.0},
      {7, "deterministic end-to-end episode over the wire", criterion_end_to_end, 2.0},
      {8, "intervention corrective sentence and two-retry limit", criterion_intervention, 0.0},
      {9, "judge client contract with mock outputs", criterion_judge, 0.0},
      {10, "#Wait regex oracle and response-length recount", criterion_stats, 0.0},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
      criterion.run();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (error.empty() && criterion.budget_seconds > 0 && elapsed > criterion.budget_seconds)
      error = "exceeded the " + std::to_string(criterion.budget_seconds) + "s budget";
    const bool passed = error.empty();
    failures += !passed;
    std::ostringstream line;
    line << (passed ? "[PASS]" : "[FAIL]") << " criterion " << criterion.number << ": "
         << criterion.name << " (" << std::fixed << std::setprecision(2) << elapsed * 1000.0
         << " ms)";
    if (!passed) line << " -- " << error;
    std::cout << line.str() << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
