#pragma once

#include <string>
#include <vector>

#include "toolrl/rational.hpp"

namespace toolrl::reward {

enum class Category { Perfect, Good, GoodAttempt, Failed };

std::string to_string(Category category);
Category category_from_string(const std::string& s);

/// Scaled combination of turn-level judge scores with the terminal
/// verifier reward. All amounts are exact rationals.
struct RewardBreakdown {
  int terminal = 0;                          // binary verifier reward
  std::vector<Rational> turn_contributions;  // one per turn
  Rational total;
  Category category = Category::Failed;

  friend bool operator==(const RewardBreakdown& a, const RewardBreakdown& b) {
    return a.terminal == b.terminal && a.turn_contributions == b.turn_contributions &&
           a.total == b.total && a.category == b.category;
  }
};

/// Scaling knobs. The default places 10 points on terminal success, -5 on
/// the single major deviation, and divides the 5-point positive budget
/// evenly across turns so the turn-level cap is length-independent.
/// Setting positive_scale_numerator to 1 reproduces a literal per-turn
/// 1/T scale for comparison runs.
struct CombineConfig {
  std::int64_t terminal_scale = 10;
  std::int64_t major_penalty = 5;
  std::int64_t positive_scale_numerator = 5;
};

/// Combines per-turn scores (each in {-1, 0, 1}, at most one -1, and a -1
/// only together with terminal failure) into a categorized breakdown.
/// Throws std::invalid_argument on constraint violations; upstream score
/// validation is expected to have repaired judge noise already.
RewardBreakdown combine(const std::vector<int>& scores, int terminal, int turn_count,
                        const CombineConfig& config = {});

/// Category from a finished breakdown (default scaling).
Category categorize(const RewardBreakdown& breakdown, const CombineConfig& config = {});

}  // namespace toolrl::reward
