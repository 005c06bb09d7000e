#include "toolrl/verifier.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace toolrl::verify {

using nlohmann::json;

std::string to_string(Mismatch mismatch) {
  switch (mismatch) {
    case Mismatch::match: return "match";
    case Mismatch::wrong_args: return "wrong_args";
    case Mismatch::unnecessary_write: return "unnecessary_write";
    case Mismatch::missing_write: return "missing_write";
  }
  return "match";
}

std::vector<tools::ToolCall> extract_writes(const traj::Trajectory& trajectory,
                                            const tools::ToolRegistry& registry) {
  std::vector<tools::ToolCall> out;
  for (const auto& turn : trajectory.turns) {
    const auto* call = std::get_if<tools::ToolCall>(&turn.action);
    if (call == nullptr || !registry.is_write(call->name)) continue;
    if (turn.tool_outcome && turn.tool_outcome->ok && turn.tool_outcome->mutated)
      out.push_back(*call);
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool looks_numeric(const std::string& s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++digits;
  if (digits == 0) return false;
  if (i == s.size()) return true;
  if (s[i] != '.') return false;
  ++i;
  std::size_t frac = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++frac;
  return i == s.size() && frac > 0;
}

/// "020.50" -> "20.5", "5.00" -> "5", "-0.10" -> "-0.1".
std::string normalize_decimal(const std::string& s) {
  std::string sign;
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') {
    if (s[i] == '-') sign = "-";
    ++i;
  }
  std::string whole, frac;
  while (i < s.size() && s[i] != '.') whole += s[i++];
  if (i < s.size()) frac = s.substr(i + 1);
  while (whole.size() > 1 && whole.front() == '0') whole.erase(whole.begin());
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  std::string out = whole + (frac.empty() ? "" : "." + frac);
  if (out == "0") return "0";
  return sign + out;
}

json canonical_scalar(const json& value) {
  if (value.is_string()) {
    const std::string t = trim(value.get<std::string>());
    return looks_numeric(t) ? json(normalize_decimal(t)) : json(t);
  }
  if (value.is_number_integer()) return json(normalize_decimal(value.dump()));
  if (value.is_number_float()) return json(normalize_decimal(value.dump()));
  return value;
}

json canonical_value(const json& value) {
  if (value.is_array()) {
    std::vector<std::string> dumped;
    json items = json::array();
    for (const auto& v : value) items.push_back(canonical_value(v));
    for (const auto& v : items) dumped.push_back(v.dump());
    std::sort(dumped.begin(), dumped.end());
    json sorted = json::array();
    for (const auto& d : dumped) sorted.push_back(json::parse(d));
    return sorted;
  }
  if (value.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : value.items()) out[k] = canonical_value(v);
    return out;
  }
  return canonical_scalar(value);
}

}  // namespace

json canonical_arguments(const json& arguments) {
  if (!arguments.is_object()) return canonical_value(arguments);
  json out = json::object();
  // Exchange-style swaps pair item_ids[i] with new_item_ids[i]; the pairs
  // are order-free across the call but positional within it, so they
  // canonicalize to one sorted pair list.
  const bool paired = arguments.contains("item_ids") && arguments.contains("new_item_ids") &&
                      arguments["item_ids"].is_array() && arguments["new_item_ids"].is_array() &&
                      arguments["item_ids"].size() == arguments["new_item_ids"].size();
  for (const auto& [key, value] : arguments.items()) {
    if (paired && (key == "item_ids" || key == "new_item_ids")) continue;
    out[key] = canonical_value(value);
  }
  if (paired) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < arguments["item_ids"].size(); ++i)
      pairs.emplace_back(canonical_scalar(arguments["item_ids"][i]).dump(),
                         canonical_scalar(arguments["new_item_ids"][i]).dump());
    std::sort(pairs.begin(), pairs.end());
    json pair_list = json::array();
    for (const auto& [old_id, new_id] : pairs)
      pair_list.push_back(json::array({json::parse(old_id), json::parse(new_id)}));
    out["item_pairs"] = pair_list;
  }
  return out;
}

namespace {

std::string canonical_key(const tools::ToolCall& call) {
  json j = {{"arguments", canonical_arguments(call.arguments)}, {"name", trim(call.name)}};
  return j.dump();
}

}  // namespace

bool call_matches_any(const tools::ToolCall& call, const std::vector<tools::ToolCall>& truth) {
  const std::string key = canonical_key(call);
  return std::any_of(truth.begin(), truth.end(),
                     [&](const tools::ToolCall& t) { return canonical_key(t) == key; });
}

VerifyReport verify(const std::vector<tools::ToolCall>& writes, const GroundTruth& truth) {
  std::multiset<std::string> got, want;
  std::map<std::string, std::string> key_to_name;
  for (const auto& call : writes) {
    const std::string key = canonical_key(call);
    key_to_name[key] = trim(call.name);
    got.insert(key);
  }
  for (const auto& call : truth.calls) {
    const std::string key = canonical_key(call);
    key_to_name[key] = trim(call.name);
    want.insert(key);
  }

  std::multiset<std::string> extra = got, missing = want;
  json matched = json::array();
  for (const auto& key : want) {
    auto it = extra.find(key);
    if (it != extra.end()) {
      extra.erase(it);
      missing.erase(missing.find(key));
      matched.push_back(json::parse(key));
    }
  }

  VerifyReport report;
  json unexpected = json::array(), absent = json::array();
  for (const auto& key : extra) unexpected.push_back(json::parse(key));
  for (const auto& key : missing) absent.push_back(json::parse(key));
  report.details = {{"matched", matched}, {"unexpected", unexpected}, {"missing", absent}};

  if (extra.empty() && missing.empty()) {
    report.reward = 1;
    report.mismatch = Mismatch::match;
    return report;
  }

  report.reward = 0;
  std::set<std::string> extra_names, missing_names;
  for (const auto& key : extra) extra_names.insert(key_to_name[key]);
  for (const auto& key : missing) missing_names.insert(key_to_name[key]);
  const bool shared_name = std::any_of(extra_names.begin(), extra_names.end(),
                                       [&](const std::string& n) { return missing_names.count(n); });
  if (shared_name)
    report.mismatch = Mismatch::wrong_args;
  else if (!extra.empty())
    report.mismatch = Mismatch::unnecessary_write;
  else
    report.mismatch = Mismatch::missing_write;
  return report;
}

bool output_check(const std::vector<std::string>& final_agent_messages,
                  const std::vector<std::string>& expected_outputs) {
  std::string haystack;
  for (const auto& m : final_agent_messages) {
    haystack += m;
    haystack += "\n";
  }
  std::transform(haystack.begin(), haystack.end(), haystack.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (const auto& expected : expected_outputs) {
    std::string needle = expected;
    std::transform(needle.begin(), needle.end(), needle.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (haystack.find(needle) == std::string::npos) return false;
  }
  return true;
}

int verify_math(const std::string& answer_text, std::int64_t expected) {
  // Last integer in the text, with an optional immediately preceding sign.
  std::optional<std::int64_t> last;
  const std::size_t n = answer_text.size();
  std::size_t i = 0;
  while (i < n) {
    if (!std::isdigit(static_cast<unsigned char>(answer_text[i]))) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    bool negative = false;
    if (begin > 0 && (answer_text[begin - 1] == '-' || answer_text[begin - 1] == '+'))
      negative = answer_text[begin - 1] == '-';
    std::int64_t value = 0;
    bool overflow = false;
    while (i < n && std::isdigit(static_cast<unsigned char>(answer_text[i]))) {
      if (value > (INT64_MAX - 9) / 10) overflow = true;
      if (!overflow) value = value * 10 + (answer_text[i] - '0');
      ++i;
    }
    if (!overflow) last = negative ? -value : value;
  }
  return (last && *last == expected) ? 1 : 0;
}

}  // namespace toolrl::verify
