/// Operator entry points: serve the sandbox, run rollouts, verify, score,
/// compute advantages, and report pass^k.

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "toolrl/advantage.hpp"
#include "toolrl/orchestrator.hpp"
#include "toolrl/service.hpp"
#include "toolrl/simulators.hpp"
#include "toolrl/verifier.hpp"

namespace {

using nlohmann::json;
using namespace toolrl;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<traj::TaskSpec> load_tasks(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open task file " + path);
  std::vector<traj::TaskSpec> tasks;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      tasks.push_back(traj::task_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ConfigError(path + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
  if (tasks.empty()) throw ConfigError(path + ": no tasks");
  return tasks;
}

std::map<std::string, retail::EntityStore> load_seeds(const json& seeds_config) {
  std::map<std::string, retail::EntityStore> seeds;
  for (const auto& [name, path] : seeds_config.items()) {
    try {
      seeds.emplace(name, retail::EntityStore::load_seed(load_json_file(path.get<std::string>())));
    } catch (const retail::SeedError& e) {
      throw ConfigError("seed '" + name + "' (" + path.get<std::string>() + "): " + e.what());
    }
  }
  return seeds;
}

const retail::EntityStore& seed_for(const std::map<std::string, retail::EntityStore>& seeds,
                                    const std::string& seed_ref) {
  static const retail::EntityStore empty;
  if (seed_ref.empty()) return empty;
  auto it = seeds.find(seed_ref);
  if (it == seeds.end()) throw ConfigError("task references unknown seed '" + seed_ref + "'");
  return it->second;
}

void atomic_write(const std::string& path, const std::string& contents) {
  if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty())
    std::filesystem::create_directories(parent);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp);
    out << contents;
  }
  std::filesystem::rename(tmp, path);
}

std::vector<traj::Trajectory> load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open record file " + path);
  try {
    return traj::read_records(in);
  } catch (const traj::ParseError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// actor construction from manifest backend configs

struct ScriptedEpisode {
  std::vector<std::string> policy_outputs;
  json user_config;  // ScriptedUser::from_json input
};

std::map<std::string, ScriptedEpisode> load_scripted_episodes(const std::string& path) {
  const json doc = load_json_file(path);
  std::map<std::string, ScriptedEpisode> episodes;
  for (const auto& [task_id, entry] : doc.items()) {
    ScriptedEpisode e;
    for (const auto& out : entry.value("policy", json::array()))
      e.policy_outputs.push_back(out.get<std::string>());
    e.user_config = entry.value("user", json::object());
    episodes[task_id] = std::move(e);
  }
  return episodes;
}

struct Backends {
  json policy_config;
  json user_config;
  std::map<std::string, ScriptedEpisode> episodes;

  orch::PolicyFactory policy_factory(const traj::TaskSpec& task) const {
    const std::string type = policy_config.value("type", "scripted");
    if (type == "scripted") {
      auto it = episodes.find(task.task_id);
      if (it == episodes.end())
        throw ConfigError("no scripted episode for task '" + task.task_id + "'");
      const std::vector<std::string> outputs = it->second.policy_outputs;
      return [outputs] { return std::make_unique<sim::ScriptedPolicy>(outputs); };
    }
    if (type == "chat") {
      const sim::ChatClientConfig config = sim::chat_config_from_json(policy_config);
      const std::string system_prompt = policy_config.value("system_prompt", "");
      return [config, system_prompt] {
        return std::make_unique<sim::ChatPolicy>(sim::ChatClient(config), system_prompt);
      };
    }
    throw ConfigError("unknown policy backend type '" + type + "'");
  }

  std::function<std::unique_ptr<sim::UserSimulator>()> user_factory(
      const traj::TaskSpec& task) const {
    const std::string type = user_config.value("type", "scripted");
    if (type == "scripted") {
      auto it = episodes.find(task.task_id);
      if (it == episodes.end())
        throw ConfigError("no scripted episode for task '" + task.task_id + "'");
      const json config = it->second.user_config;
      return [config] {
        return std::make_unique<sim::ScriptedUser>(sim::ScriptedUser::from_json(config));
      };
    }
    if (type == "chat") {
      const sim::ChatClientConfig config = sim::chat_config_from_json(user_config);
      const std::string instruction = task.user_instruction;
      return [config, instruction] {
        return std::make_unique<sim::LlmUser>(sim::ChatClient(config), instruction);
      };
    }
    throw ConfigError("unknown user backend type '" + type + "'");
  }
};

// ---------------------------------------------------------------------------
// run

int cmd_run(const std::string& manifest_path, int jobs, unsigned seed,
            const std::string& output_override) {
  const json manifest = load_json_file(manifest_path);
  const std::vector<traj::TaskSpec> tasks = load_tasks(manifest.at("tasks").get<std::string>());
  const auto seeds = load_seeds(manifest.value("seeds", json::object()));
  const tools::ToolRegistry registry = tools::make_retail_registry();
  const orch::EpisodeConfig episode_config =
      orch::episode_config_from_json(manifest.value("episode", json::object()));
  const int rollouts = manifest.value("rollouts_per_task", episode_config.num_rollout);
  std::string output = manifest.value("output", "records.jsonl");
  if (!output_override.empty()) output = output_override;

  Backends backends;
  backends.policy_config = manifest.value("policy", json::object());
  backends.user_config = manifest.value("user", json::object());
  std::string episodes_path;
  if (backends.policy_config.value("type", "scripted") == "scripted")
    episodes_path = backends.policy_config.value("episodes", "");
  if (episodes_path.empty() && backends.user_config.value("type", "scripted") == "scripted")
    episodes_path = backends.user_config.value("episodes", "");
  if (!episodes_path.empty()) backends.episodes = load_scripted_episodes(episodes_path);

  // Validate everything before the first episode starts.
  std::vector<orch::PolicyFactory> policy_factories;
  std::vector<std::function<std::unique_ptr<sim::UserSimulator>()>> user_factories;
  for (const auto& task : tasks) {
    seed_for(seeds, task.seed_ref);
    policy_factories.push_back(backends.policy_factory(task));
    user_factories.push_back(backends.user_factory(task));
  }

  // Episodes are order-stamped: slot (task, rollout) is fixed up front so
  // results are independent of scheduling.
  std::vector<traj::Trajectory> results(tasks.size() * static_cast<std::size_t>(rollouts));
  std::atomic<std::size_t> next_task{0};
  std::atomic<int> failures{0};

  const auto worker = [&] {
    for (std::size_t ti = next_task.fetch_add(1); ti < tasks.size();
         ti = next_task.fetch_add(1)) {
      const traj::TaskSpec& task = tasks[ti];
      for (int r = 0; r < rollouts; ++r) {
        traj::Trajectory trajectory;
        try {
          auto policy = policy_factories[ti]();
          orch::LocalSession session(seed_for(seeds, task.seed_ref).snapshot(), registry,
                                     user_factories[ti]());
          trajectory = orch::run_episode(task, *policy, session, episode_config);
        } catch (const std::exception& e) {
          // episode failures never abort the batch
          trajectory.task_id = task.task_id;
          trajectory.seed_ref = task.seed_ref;
          trajectory.transport_error = true;
          trajectory.score_warnings = {std::string("episode aborted: ") + e.what()};
        }
        if (trajectory.transport_error) failures.fetch_add(1);
        results[ti * static_cast<std::size_t>(rollouts) + static_cast<std::size_t>(r)] =
            std::move(trajectory);
      }
    }
  };

  const int thread_count = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ostringstream lines;
  int successes = 0;
  double wait_sum = 0.0, len_sum = 0.0;
  for (const auto& trajectory : results) {
    lines << traj::serialize(trajectory) << "\n";
    successes += trajectory.terminal_reward.value_or(0);
    if (!trajectory.turns.empty()) {
      const traj::TrajStats s = traj::stats(trajectory);
      wait_sum += s.wait_count;
      len_sum += s.avg_agent_tokens_per_turn;
    }
  }
  atomic_write(output, lines.str());

  const double n = static_cast<double>(results.size());
  const json summary = {{"episodes", results.size()},
                        {"tasks", tasks.size()},
                        {"rollouts_per_task", rollouts},
                        {"seed", seed},
                        {"terminal_reward_rate", successes / n},
                        {"avg_wait", wait_sum / n},
                        {"avg_len", len_sum / n},
                        {"transport_failures", failures.load()},
                        {"output", output}};
  atomic_write(output + ".summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return failures.load() > 0 ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// verify

int cmd_verify(const std::string& input, const std::string& tasks_path, bool with_output_check) {
  const std::vector<traj::Trajectory> records = load_records(input);
  const std::vector<traj::TaskSpec> tasks = load_tasks(tasks_path);
  const tools::ToolRegistry registry = tools::make_retail_registry();
  std::map<std::string, const traj::TaskSpec*> by_id;
  for (const auto& task : tasks) by_id[task.task_id] = &task;

  int matches = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& record = records[i];
    auto it = by_id.find(record.task_id);
    if (it == by_id.end()) throw ConfigError("record " + std::to_string(i + 1) +
                                             " references unknown task '" + record.task_id + "'");
    const traj::TaskSpec& task = *it->second;
    if (task.domain_tag == traj::DomainTag::math && task.expected_answer) {
      std::string final_message;
      for (const auto& turn : record.turns)
        if (const auto* msg = std::get_if<traj::UserMessage>(&turn.action))
          final_message = msg->text;
      const int reward = verify::verify_math(final_message, *task.expected_answer);
      matches += reward;
      std::cout << "record " << i + 1 << " task=" << record.task_id << " reward=" << reward
                << " mode=math\n";
      continue;
    }
    verify::GroundTruth truth{task.ground_truth_calls, task.expected_outputs};
    verify::VerifyReport report =
        verify::verify(verify::extract_writes(record, registry), truth);
    bool output_ok = true;
    if (with_output_check && !task.expected_outputs.empty()) {
      std::vector<std::string> messages;
      for (const auto& turn : record.turns)
        if (const auto* msg = std::get_if<traj::UserMessage>(&turn.action))
          messages.push_back(msg->text);
      output_ok = verify::output_check(messages, task.expected_outputs);
      if (!output_ok) report.reward = 0;
    }
    matches += report.reward;
    std::cout << "record " << i + 1 << " task=" << record.task_id << " reward=" << report.reward
              << " mismatch=" << verify::to_string(report.mismatch)
              << (with_output_check ? (output_ok ? " output_check=pass" : " output_check=fail")
                                    : "")
              << "\n";
  }
  std::cout << "verified " << records.size() << " records, " << matches << " matched\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// score

int cmd_score(const std::string& input, const std::string& output, bool terminal_only,
              const std::string& judge_config_path, const std::string& policy_doc_path,
              const std::string& prompt_path, const std::string& tasks_path) {
  std::vector<traj::Trajectory> records = load_records(input);

  std::optional<sim::ChatClient> judge;
  std::string prompt_template = sim::default_judge_prompt();
  std::string policy_doc;
  std::map<std::string, traj::TaskSpec> tasks;
  if (!terminal_only) {
    if (judge_config_path.empty())
      throw ConfigError("score: provide --judge <config.json> or --terminal-only");
    judge.emplace(sim::chat_config_from_json(load_json_file(judge_config_path)));
    if (!prompt_path.empty()) {
      std::ifstream in(prompt_path);
      if (!in) throw ConfigError("cannot open prompt template " + prompt_path);
      std::ostringstream buffer;
      buffer << in.rdbuf();
      prompt_template = buffer.str();
    }
    if (!policy_doc_path.empty()) {
      std::ifstream in(policy_doc_path);
      if (!in) throw ConfigError("cannot open policy document " + policy_doc_path);
      std::ostringstream buffer;
      buffer << in.rdbuf();
      policy_doc = buffer.str();
    }
    if (!tasks_path.empty())
      for (auto& task : load_tasks(tasks_path)) tasks[task.task_id] = task;
  }

  int fallbacks = 0;
  std::map<std::string, int> histogram;
  for (auto& record : records) {
    const int terminal = record.terminal_reward.value_or(0);
    const int turn_count = static_cast<int>(record.turns.size());
    if (turn_count == 0) continue;

    std::vector<int> scores(static_cast<std::size_t>(turn_count), 0);
    std::vector<std::string> warnings;
    bool use_judge = !terminal_only && judge.has_value();
    if (use_judge) {
      verify::GroundTruth truth;
      std::string instruction;
      if (auto it = tasks.find(record.task_id); it != tasks.end()) {
        truth.calls = it->second.ground_truth_calls;
        instruction = it->second.user_instruction;
      }
      auto judged = sim::adjudicate_with_retry(*judge, prompt_template, record, truth, policy_doc,
                                               instruction);
      if (judged) {
        scores = judged->scores;
        warnings = judged->warnings;
        // A -1 marks the cause of a deviation; with verified success there
        // is none, so stray -1 scores are judge noise.
        if (terminal == 1)
          for (std::size_t i = 0; i < scores.size(); ++i)
            if (scores[i] == -1) {
              scores[i] = 0;
              warnings.push_back("turn " + std::to_string(i + 1) +
                                 ": -1 with terminal success clamped to 0");
            }
      } else {
        use_judge = false;
        ++fallbacks;
        warnings.push_back("judge output unusable after retry; terminal-only fallback");
        std::fill(scores.begin(), scores.end(), 0);
      }
    }

    record.turn_scores = scores;
    record.score_warnings = warnings;
    record.breakdown = reward::combine(scores, terminal, turn_count);
    histogram[reward::to_string(record.breakdown->category)]++;
  }

  std::ostringstream lines;
  for (const auto& record : records) lines << traj::serialize(record) << "\n";
  atomic_write(output, lines.str());

  std::cout << "scored " << records.size() << " records";
  if (fallbacks > 0) std::cout << " (" << fallbacks << " judge fallbacks)";
  std::cout << "\n";
  for (const auto& [category, count] : histogram)
    std::cout << "  " << category << ": " << count << "\n";
  return fallbacks > 0 ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// advantages

int cmd_advantages(const std::string& input, const std::string& output,
                   const std::string& algorithm, const std::string& mode_name, int group_size,
                   double gamma, double lambda) {
  std::vector<traj::Trajectory> records = load_records(input);
  const adv::AssignMode mode = adv::assign_mode_from_string(mode_name);
  if (group_size < 2) throw ConfigError("advantages: group size must be >= 2");

  // consecutive records of the same task form a group
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size();) {
    std::vector<std::size_t> group;
    const std::string& task_id = records[i].task_id;
    while (i < records.size() && records[i].task_id == task_id &&
           group.size() < static_cast<std::size_t>(group_size))
      group.push_back(i++);
    if (group.size() != static_cast<std::size_t>(group_size))
      throw ConfigError("advantages: incomplete group for task '" + task_id + "' (" +
                        std::to_string(group.size()) + "/" + std::to_string(group_size) + ")");
    groups.push_back(std::move(group));
  }

  for (const auto& group_indices : groups) {
    adv::RolloutGroup group;
    for (const std::size_t idx : group_indices) {
      const auto& record = records[idx];
      if (!record.breakdown)
        throw ConfigError("advantages: record for task '" + record.task_id +
                          "' has no breakdown; run score first");
      group.scalar_rewards.push_back(record.breakdown->total.to_double());
    }

    std::vector<double> scalars;
    if (algorithm == "grpo")
      scalars = adv::grpo_advantages(group.scalar_rewards);
    else if (algorithm == "rloo")
      scalars = adv::rloo_advantages(group.scalar_rewards);
    else if (algorithm != "gae")
      throw ConfigError("advantages: unknown algorithm '" + algorithm + "'");

    for (std::size_t g = 0; g < group_indices.size(); ++g) {
      traj::Trajectory& record = records[group_indices[g]];
      const traj::TokenizedTrajectory tokens = traj::tokenize_trajectory(record);
      if (algorithm == "gae") {
        const adv::TokenField assigned =
            adv::assign_rewards(record, *record.breakdown, &group, mode);
        adv::AdvantageField advantages;
        if (mode == adv::AssignMode::per_turn) {
          // turn-final rewards propagate backwards through GAE
          adv::TokenField values(tokens.token_stream.size(), 0.0);
          if (auto it = record.token_fields.find("values"); it != record.token_fields.end()) {
            if (it->second.size() != values.size())
              throw ConfigError("advantages: 'values' array is not token-aligned for task '" +
                                record.task_id + "'");
            values = it->second;
          }
          advantages = adv::gae(assigned, values, gamma, lambda);
        } else {
          // the normalized trajectory reward applied uniformly is already
          // the per-token signal; no backward pass
          advantages = assigned;
        }
        // environment-token positions carry no advantage in the output
        for (std::size_t j = 0; j < advantages.size(); ++j)
          if (!tokens.mask[j]) advantages[j] = 0.0;
        record.token_fields["advantages"] = std::move(advantages);
      } else {
        std::vector<double> field(tokens.token_stream.size(), 0.0);
        for (std::size_t j = 0; j < field.size(); ++j)
          if (tokens.mask[j]) field[j] = scalars[g];
        record.token_fields["advantages"] = std::move(field);
      }
    }
  }

  std::ostringstream lines;
  for (const auto& record : records) lines << traj::serialize(record) << "\n";
  atomic_write(output, lines.str());
  std::cout << "wrote advantages for " << records.size() << " records in " << groups.size()
            << " groups (" << algorithm << ", " << mode_name << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const std::vector<std::string>& inputs, int max_k, bool exclude_transport,
             bool batched) {
  std::vector<traj::Trajectory> records;
  for (const auto& input : inputs)
    for (auto& record : load_records(input)) records.push_back(std::move(record));
  if (records.empty()) throw ConfigError("eval: no records");

  std::map<std::string, std::vector<int>> outcomes_by_task;
  double wait_sum = 0.0, len_sum = 0.0;
  std::size_t stat_count = 0;
  for (const auto& record : records) {
    if (record.transport_error && exclude_transport) continue;
    outcomes_by_task[record.task_id].push_back(record.terminal_reward.value_or(0));
    if (!record.turns.empty()) {
      const traj::TrajStats s = traj::stats(record);
      wait_sum += s.wait_count;
      len_sum += s.avg_agent_tokens_per_turn;
      ++stat_count;
    }
  }
  if (outcomes_by_task.empty()) throw ConfigError("eval: no usable outcomes");

  orch::OutcomeMatrix matrix;
  std::size_t min_rollouts = SIZE_MAX;
  for (const auto& [task_id, outcomes] : outcomes_by_task) {
    min_rollouts = std::min(min_rollouts, outcomes.size());
    matrix.outcomes.push_back(outcomes);
  }
  if (static_cast<std::size_t>(max_k) > min_rollouts)
    throw ConfigError("eval: k=" + std::to_string(max_k) + " exceeds the minimum rollout count (" +
                      std::to_string(min_rollouts) + ")");

  std::cout << std::fixed << std::setprecision(3);
  std::cout << "tasks: " << matrix.outcomes.size() << "  episodes: " << records.size() << "\n";
  std::cout << "#Wait: " << (stat_count ? wait_sum / double(stat_count) : 0.0)
            << "  Len: " << (stat_count ? len_sum / double(stat_count) : 0.0) << "\n";
  for (int k = 1; k <= max_k; ++k) {
    const double value =
        batched ? orch::pass_hat_k_batched(matrix, k) : orch::pass_hat_k(matrix, k);
    std::cout << "pass^" << k << ": " << value << "\n";
  }
  std::cout << "\nper-task outcomes:\n";
  for (const auto& [task_id, outcomes] : outcomes_by_task) {
    std::cout << "  " << task_id << ": ";
    for (const int o : outcomes) std::cout << o;
    std::cout << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// serve

std::atomic<service::SandboxService*> g_service{nullptr};

void handle_signal(int) {
  if (auto* svc = g_service.load()) svc->stop();
}

int cmd_serve(const std::string& config_path) {
  const json config_json = load_json_file(config_path);
  service::ServiceConfig config;
  config.host = config_json.value("host", "127.0.0.1");
  config.port = config_json.value("port", 8080);
  config.max_turns = config_json.value("max_turns", 30);
  config.session_idle_timeout_sec = config_json.value("session_idle_timeout_sec", 3600);
  config.trajectory_log_path = config_json.value("trajectory_log", "");

  auto seeds = load_seeds(config_json.value("seeds", json::object()));
  if (!config_json.contains("tasks")) throw ConfigError("serve: config needs a 'tasks' path");
  std::map<std::string, traj::TaskSpec> tasks;
  for (auto& task : load_tasks(config_json["tasks"].get<std::string>()))
    tasks[task.task_id] = task;

  std::map<std::string, ScriptedEpisode> episodes;
  if (config_json.contains("episodes"))
    episodes = load_scripted_episodes(config_json["episodes"].get<std::string>());
  const json user_backend = config_json.value("user", json({{"type", "scripted"}}));

  service::UserFactory user_factory =
      [episodes, user_backend](const traj::TaskSpec& task) -> std::unique_ptr<sim::UserSimulator> {
    if (user_backend.value("type", "scripted") == "chat")
      return std::make_unique<sim::LlmUser>(
          sim::ChatClient(sim::chat_config_from_json(user_backend)), task.user_instruction);
    auto it = episodes.find(task.task_id);
    if (it == episodes.end())
      return std::make_unique<sim::ScriptedUser>(task.user_instruction,
                                                 std::vector<sim::ScriptEntry>{}, "");
    return std::make_unique<sim::ScriptedUser>(sim::ScriptedUser::from_json(it->second.user_config));
  };

  // empty seed_ref tasks get an empty store
  if (!seeds.count("")) seeds.emplace("", retail::EntityStore());

  const std::string toolset = config_json.value("toolset", "retail");
  if (toolset != "retail")
    throw ConfigError("serve: unknown toolset '" + toolset + "' (available: retail)");

  service::SandboxService svc(std::move(seeds), tools::make_retail_registry(), std::move(tasks),
                              std::move(user_factory), config);
  g_service.store(&svc);
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  std::cout << "sandbox service listening on " << config.host << ":" << config.port << "\n";
  const bool ok = svc.listen();
  g_service.store(nullptr);
  if (!ok) {
    std::cerr << "failed to bind " << config.host << ":" << config.port << "\n";
    return kExitConfig;
  }
  std::cout << "sandbox service drained\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sandbox, rollout and reward tooling for interactive tool-use agents"};
  app.require_subcommand(1);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the sandbox HTTP service");
  std::string serve_config;
  serve->add_option("--config", serve_config, "Service config JSON")->required();

  // run
  auto* run = app.add_subcommand("run", "Collect rollouts into a trajectory file");
  std::string manifest_path, run_output;
  int jobs = 1;
  unsigned rng_seed = 0;
  run->add_option("--manifest", manifest_path, "Run manifest JSON")->required();
  run->add_option("--jobs", jobs, "Parallel tasks");
  run->add_option("--seed", rng_seed, "Sampling seed recorded in the summary");
  run->add_option("--output", run_output, "Override the manifest output path");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Re-verify trajectory records");
  std::string verify_input, verify_tasks;
  bool with_output_check = false;
  verify_cmd->add_option("--input", verify_input, "Trajectory records (JSONL)")->required();
  verify_cmd->add_option("--tasks", verify_tasks, "Task file (JSONL)")->required();
  verify_cmd->add_flag("--output-check", with_output_check,
                       "Also require expected outputs in agent replies");

  // score
  auto* score = app.add_subcommand("score", "Attach turn scores and reward breakdowns");
  std::string score_input, score_output, judge_config, policy_doc, prompt_file, score_tasks;
  bool terminal_only = false;
  score->add_option("--input", score_input, "Trajectory records (JSONL)")->required();
  score->add_option("--output", score_output, "Augmented output path")->required();
  score->add_option("--judge", judge_config, "Judge chat-endpoint config JSON");
  score->add_option("--policy-doc", policy_doc, "Agent policy document shown to the judge");
  score->add_option("--prompt", prompt_file, "Judge prompt template override");
  score->add_option("--tasks", score_tasks, "Task file for ground truth in judge prompts");
  score->add_flag("--terminal-only", terminal_only, "Skip the judge; totals = 10 * R(tau)");

  // advantages
  auto* advantages = app.add_subcommand("advantages", "Compute per-token advantage arrays");
  std::string adv_input, adv_output, algorithm = "grpo", mode = "trajectory_level";
  int group_size = 4;
  double gamma = 1.0, lambda = 1.0;
  advantages->add_option("--input", adv_input, "Scored records (JSONL)")->required();
  advantages->add_option("--output", adv_output, "Output path")->required();
  advantages->add_option("--algorithm", algorithm, "gae | grpo | rloo");
  advantages->add_option("--mode", mode, "per_turn | trajectory_level");
  advantages->add_option("--group-size", group_size, "Rollouts per task group");
  advantages->add_option("--gamma", gamma, "GAE discount");
  advantages->add_option("--lambda", lambda, "GAE trace decay");

  // eval
  auto* eval = app.add_subcommand("eval", "pass^k report over trajectory files");
  std::vector<std::string> eval_inputs;
  int max_k = 4;
  bool exclude_transport = false, batched = false;
  eval->add_option("--input", eval_inputs, "Trajectory records (JSONL)")->required();
  eval->add_option("--max-k", max_k, "Report pass^1..k");
  eval->add_flag("--exclude-transport", exclude_transport,
                 "Drop transport-failed episodes from the denominators");
  eval->add_flag("--batched", batched, "Use disjoint k-sized batches instead of the estimator");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : 1;  // 1 = usage error
  }

  try {
    if (serve->parsed()) return cmd_serve(serve_config);
    if (run->parsed()) return cmd_run(manifest_path, jobs, rng_seed, run_output);
    if (verify_cmd->parsed()) return cmd_verify(verify_input, verify_tasks, with_output_check);
    if (score->parsed())
      return cmd_score(score_input, score_output, terminal_only, judge_config, policy_doc,
                       prompt_file, score_tasks);
    if (advantages->parsed())
      return cmd_advantages(adv_input, adv_output, algorithm, mode, group_size, gamma, lambda);
    if (eval->parsed()) return cmd_eval(eval_inputs, max_k, exclude_transport, batched);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
