#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "toolrl/toolkit.hpp"
#include "toolrl/trajectory.hpp"

namespace toolrl::verify {

struct GroundTruth {
  std::vector<tools::ToolCall> calls;            // write operations
  std::vector<std::string> expected_outputs;     // optional output-check strings
};

enum class Mismatch { match, wrong_args, unnecessary_write, missing_write };

std::string to_string(Mismatch mismatch);

struct VerifyReport {
  int reward = 0;  // 1 for a complete match, 0 otherwise
  Mismatch mismatch = Mismatch::match;
  nlohmann::json details;  // {"matched": [...], "unexpected": [...], "missing": [...]}
};

/// Successful write calls (status ok, state mutated), in execution order.
std::vector<tools::ToolCall> extract_writes(const traj::Trajectory& trajectory,
                                            const tools::ToolRegistry& registry);

/// Canonical argument form used for call comparison: scalars trimmed with
/// numeric strings decimal-normalized; list arguments order-insensitive,
/// except that item_ids/new_item_ids pairs stay positionally paired and
/// compare as a set of pairs.
nlohmann::json canonical_arguments(const nlohmann::json& arguments);

/// True when the call matches some ground-truth call after canonicalization.
bool call_matches_any(const tools::ToolCall& call, const std::vector<tools::ToolCall>& truth);

/// Order-independent multiset comparison of canonicalized write calls.
/// Mismatch precedence: wrong_args > unnecessary_write > missing_write.
VerifyReport verify(const std::vector<tools::ToolCall>& writes, const GroundTruth& truth);

/// True iff every expected string occurs (case-insensitive substring) in
/// the concatenation of the given agent messages.
bool output_check(const std::vector<std::string>& final_agent_messages,
                  const std::vector<std::string>& expected_outputs);

/// 1 iff the last integer in the text equals the expected answer.
int verify_math(const std::string& answer_text, std::int64_t expected);

}  // namespace toolrl::verify
