#include "toolrl/toolkit.hpp"

#include <algorithm>

namespace toolrl::tools {

using nlohmann::json;
using retail::EntityStore;
using retail::Order;
using retail::OrderStatus;
using retail::User;
using retail::Variant;

std::string to_string(ToolKind kind) { return kind == ToolKind::read ? "read" : "write"; }

std::string to_string(ArgType type) {
  switch (type) {
    case ArgType::string: return "string";
    case ArgType::string_list: return "list[string]";
    case ArgType::decimal: return "decimal";
    case ArgType::object: return "object";
  }
  return "string";
}

json ToolSpec::descriptor() const {
  json params_json = json::array();
  for (const auto& p : params)
    params_json.push_back({{"name", p.name}, {"type", to_string(p.type)}, {"required", p.required}});
  json d = {{"name", name},
            {"kind", to_string(kind)},
            {"parameters", params_json},
            {"description", description}};
  if (kind == ToolKind::write) d["mutates"] = mutates;
  return d;
}

ToolCall tool_call_from_json(const json& j) {
  ToolCall call;
  call.name = j.at("name").get<std::string>();
  call.arguments = j.value("arguments", json::object());
  if (!call.arguments.is_object())
    throw std::invalid_argument("tool call arguments must be an object");
  return call;
}

json tool_call_to_json(const ToolCall& call) {
  return {{"name", call.name}, {"arguments", call.arguments}};
}

json tool_result_to_json(const ToolResult& result) {
  json j = {{"status", result.ok ? "ok" : "error"}, {"mutated", result.mutated}};
  if (result.ok) {
    j["payload"] = result.payload;
  } else {
    j["error"] = result.error;
    j["reason_code"] = result.reason_code;
  }
  return j;
}

ToolResult tool_result_from_json(const json& j) {
  ToolResult r;
  r.ok = j.at("status").get<std::string>() == "ok";
  r.mutated = j.value("mutated", false);
  if (r.ok) {
    r.payload = j.value("payload", json());
  } else {
    r.error = j.value("error", "");
    r.reason_code = j.value("reason_code", "");
  }
  return r;
}

void ToolRegistry::register_tool(ToolSpec spec, Handler handler) {
  const std::string name = spec.name;
  tools_[name] = {std::move(spec), std::move(handler)};
}

const ToolSpec* ToolRegistry::find(const std::string& name) const {
  auto it = tools_.find(name);
  return it == tools_.end() ? nullptr : &it->second.first;
}

bool ToolRegistry::is_write(const std::string& name) const {
  const ToolSpec* spec = find(name);
  return spec != nullptr && spec->kind == ToolKind::write;
}

std::vector<ToolSpec> ToolRegistry::list_tools() const {
  std::vector<ToolSpec> out;
  for (const auto& [name, entry] : tools_) out.push_back(entry.first);
  return out;  // map order == name order
}

namespace {

bool type_matches(const json& value, ArgType type) {
  switch (type) {
    case ArgType::string: return value.is_string();
    case ArgType::string_list:
      return value.is_array() &&
             std::all_of(value.begin(), value.end(), [](const json& v) { return v.is_string(); });
    case ArgType::decimal: return value.is_number() || value.is_string();
    case ArgType::object: return value.is_object();
  }
  return false;
}

/// Returns an error result on schema violation, nullopt when valid.
std::optional<ToolResult> validate_args(const ToolSpec& spec, const json& args) {
  if (!args.is_object())
    return ToolResult::failure("schema_violation", "arguments: expected an object");
  for (const auto& p : spec.params) {
    auto it = args.find(p.name);
    if (it == args.end()) {
      if (p.required)
        return ToolResult::failure("schema_violation", "arguments." + p.name + ": missing");
      continue;
    }
    if (!type_matches(*it, p.type))
      return ToolResult::failure("schema_violation",
                                 "arguments." + p.name + ": expected " + to_string(p.type));
  }
  for (const auto& item : args.items()) {
    const std::string& key = item.key();
    const bool known = std::any_of(spec.params.begin(), spec.params.end(),
                                   [&key](const ParamSpec& p) { return p.name == key; });
    if (!known)
      return ToolResult::failure("schema_violation", "arguments." + key + ": unknown parameter");
  }
  return std::nullopt;
}

}  // namespace

ToolResult ToolRegistry::execute(EntityStore& store, const ToolCall& call) const {
  auto it = tools_.find(call.name);
  if (it == tools_.end())
    return ToolResult::failure("unknown_tool", "no tool named '" + call.name + "'");
  const auto& [spec, handler] = it->second;
  if (auto err = validate_args(spec, call.arguments)) return *err;

  if (spec.kind == ToolKind::read) return handler(store, call.arguments);

  // Writes run on a scratch copy; commit only on success (all-or-nothing).
  EntityStore scratch = store.snapshot();
  ToolResult result = handler(scratch, call.arguments);
  if (result.ok) {
    scratch.bump_version();
    store = std::move(scratch);
    result.mutated = true;
  }
  return result;
}

namespace {

json render_payment_history(const Order& order) {
  json history = json::array();
  for (const auto& e : order.payment_history)
    history.push_back({{"method_id", e.method_id}, {"amount", e.amount.str()}});
  return history;
}

json render_order(const EntityStore& store, const Order& order) {
  json items = json::array();
  for (const auto& item_id : order.items) {
    const retail::Product* product = store.product_of_item(item_id);
    const Variant* variant = store.find_variant(item_id);
    items.push_back({{"item_id", item_id},
                     {"product_id", product ? product->product_id : ""},
                     {"name", product ? product->name : ""},
                     {"options", variant ? json(variant->options) : json::object()},
                     {"price", variant ? variant->price.str() : ""}});
  }
  json fulfillments = json::array();
  for (const auto& f : order.fulfillments)
    fulfillments.push_back({{"tracking_id", f.tracking_id}, {"item_ids", f.item_ids}});
  return {{"order_id", order.order_id},
          {"user_id", order.user_id},
          {"address", order.address},
          {"items", items},
          {"status", to_string(order.status)},
          {"payment_history", render_payment_history(order)},
          {"fulfillments", fulfillments}};
}

Money order_total(const EntityStore& store, const Order& order) {
  Money total;
  for (const auto& item_id : order.items) {
    const Variant* v = store.find_variant(item_id);
    if (v != nullptr) total = total + v->price;
  }
  return total;
}

const User* order_user(const EntityStore& store, const Order& order) {
  return store.find_user(order.user_id);
}

bool user_has_method(const User& user, const std::string& method_id) {
  return std::any_of(user.payment_methods.begin(), user.payment_methods.end(),
                     [&](const retail::PaymentMethod& m) { return m.method_id == method_id; });
}

/// Validates the old→new item swap shared by exchange and modify tools.
/// On success fills `price_delta` and performs the positional replacement.
std::optional<ToolResult> swap_items(EntityStore& store, Order& order,
                                     const std::vector<std::string>& item_ids,
                                     const std::vector<std::string>& new_item_ids,
                                     Money& price_delta) {
  if (item_ids.empty())
    return ToolResult::failure("empty_items", "item_ids must be non-empty");
  if (item_ids.size() != new_item_ids.size())
    return ToolResult::failure("count_mismatch",
                               "item_ids and new_item_ids must have the same length");
  std::vector<std::string> remaining = order.items;
  for (const auto& item_id : item_ids) {
    auto it = std::find(remaining.begin(), remaining.end(), item_id);
    if (it == remaining.end())
      return ToolResult::failure("item_not_in_order", "item " + item_id + " is not in the order");
    remaining.erase(it);
  }
  Money old_sum, new_sum;
  for (const auto& item_id : item_ids) old_sum = old_sum + store.find_variant(item_id)->price;
  for (const auto& item_id : new_item_ids) {
    const Variant* v = store.find_variant(item_id);
    if (v == nullptr)
      return ToolResult::failure("unknown_item", "no item " + item_id);
    if (!v->available)
      return ToolResult::failure("item_unavailable", "item " + item_id + " is unavailable");
    new_sum = new_sum + v->price;
  }
  for (std::size_t i = 0; i < item_ids.size(); ++i) {
    auto it = std::find(order.items.begin(), order.items.end(), item_ids[i]);
    *it = new_item_ids[i];
  }
  price_delta = new_sum - old_sum;
  return std::nullopt;
}

struct OrderContext {
  Order* order = nullptr;
  const User* user = nullptr;
};

/// Looks up the order and its user; `result` is set on failure.
std::optional<ToolResult> locate_order(EntityStore& store, const json& args, OrderContext& ctx) {
  const std::string order_id = args.at("order_id").get<std::string>();
  ctx.order = store.find_order_mut(order_id);
  if (ctx.order == nullptr)
    return ToolResult::failure("unknown_order", "no order " + order_id);
  ctx.user = order_user(store, *ctx.order);
  if (ctx.user == nullptr)
    return ToolResult::failure("unknown_user", "order has no resolvable user");
  return std::nullopt;
}

std::optional<ToolResult> check_payment_method(const User& user, const std::string& method_id) {
  if (!user_has_method(user, method_id))
    return ToolResult::failure("unknown_payment_method",
                               "payment method " + method_id + " does not belong to this user");
  return std::nullopt;
}

std::vector<std::string> string_list(const json& v) {
  return v.get<std::vector<std::string>>();
}

}  // namespace

ToolRegistry make_retail_registry() {
  ToolRegistry registry;

  registry.register_tool(
      {"find_user_id_by_email",
       ToolKind::read,
       {{"email", ArgType::string}},
       "Look up a user id by the account email address.",
       {}},
      [](EntityStore& store, const json& args) {
        const User* user = store.find_user_by_email(args.at("email").get<std::string>());
        if (user == nullptr)
          return ToolResult::failure("unknown_user", "no user with that email");
        return ToolResult::success({{"user_id", user->user_id}});
      });

  registry.register_tool(
      {"get_user_details",
       ToolKind::read,
       {{"user_id", ArgType::string}},
       "Fetch a user's profile, payment methods and order ids.",
       {}},
      [](EntityStore& store, const json& args) {
        const User* user = store.find_user(args.at("user_id").get<std::string>());
        if (user == nullptr) return ToolResult::failure("unknown_user", "no such user");
        json methods = json::array();
        for (const auto& m : user->payment_methods)
          methods.push_back({{"method_id", m.method_id}, {"kind", to_string(m.kind)}});
        return ToolResult::success({{"user_id", user->user_id},
                                    {"name", user->name},
                                    {"email", user->email},
                                    {"zip", user->zip},
                                    {"payment_methods", methods},
                                    {"order_ids", user->order_ids}});
      });

  registry.register_tool(
      {"get_order_details",
       ToolKind::read,
       {{"order_id", ArgType::string}},
       "Fetch an order: items, status, address, payment history and fulfillments.",
       {}},
      [](EntityStore& store, const json& args) {
        const Order* order = store.find_order(args.at("order_id").get<std::string>());
        if (order == nullptr) return ToolResult::failure("unknown_order", "no such order");
        return ToolResult::success(render_order(store, *order));
      });

  registry.register_tool(
      {"list_product_variants",
       ToolKind::read,
       {{"product_id", ArgType::string}},
       "List a product's variants with options, price and availability.",
       {}},
      [](EntityStore& store, const json& args) {
        const retail::Product* product =
            store.find_product(args.at("product_id").get<std::string>());
        if (product == nullptr) return ToolResult::failure("unknown_product", "no such product");
        json variants = json::object();
        for (const auto& [item_id, v] : product->variants)
          variants[item_id] = {
              {"options", v.options}, {"price", v.price.str()}, {"available", v.available}};
        return ToolResult::success(
            {{"product_id", product->product_id}, {"name", product->name}, {"variants", variants}});
      });

  registry.register_tool(
      {"calculate_refund",
       ToolKind::read,
       {{"order_id", ArgType::string}, {"item_ids", ArgType::string_list}},
       "Sum the catalog prices of the given items within an order.",
       {}},
      [](EntityStore& store, const json& args) {
        const Order* order = store.find_order(args.at("order_id").get<std::string>());
        if (order == nullptr) return ToolResult::failure("unknown_order", "no such order");
        std::vector<std::string> remaining = order->items;
        Money refund;
        for (const auto& item_id : string_list(args.at("item_ids"))) {
          auto it = std::find(remaining.begin(), remaining.end(), item_id);
          if (it == remaining.end())
            return ToolResult::failure("item_not_in_order",
                                       "item " + item_id + " is not in the order");
          remaining.erase(it);
          refund = refund + store.find_variant(item_id)->price;
        }
        return ToolResult::success({{"order_id", order->order_id}, {"refund", refund.str()}});
      });

  registry.register_tool(
      {"exchange_delivered_order_items",
       ToolKind::write,
       {{"order_id", ArgType::string},
        {"item_ids", ArgType::string_list},
        {"new_item_ids", ArgType::string_list},
        {"payment_method_id", ArgType::string}},
       "Exchange items of a delivered order for new variants; the price "
       "difference is charged or refunded to the given payment method.",
       {"orders"}},
      [](EntityStore& store, const json& args) {
        OrderContext ctx;
        if (auto err = locate_order(store, args, ctx)) return *err;
        if (ctx.order->status != OrderStatus::delivered)
          return ToolResult::failure("not_delivered", "order is not in delivered status");
        const std::string method_id = args.at("payment_method_id").get<std::string>();
        if (auto err = check_payment_method(*ctx.user, method_id)) return *err;
        Money delta;
        if (auto err = swap_items(store, *ctx.order, string_list(args.at("item_ids")),
                                  string_list(args.at("new_item_ids")), delta))
          return *err;
        ctx.order->status = OrderStatus::exchanged;
        ctx.order->payment_history.push_back({method_id, delta});
        return ToolResult::success(render_order(store, *ctx.order));
      });

  registry.register_tool(
      {"return_delivered_order_items",
       ToolKind::write,
       {{"order_id", ArgType::string},
        {"item_ids", ArgType::string_list},
        {"payment_method_id", ArgType::string}},
       "Return items of a delivered order; their price is refunded to the "
       "given payment method.",
       {"orders"}},
      [](EntityStore& store, const json& args) {
        OrderContext ctx;
        if (auto err = locate_order(store, args, ctx)) return *err;
        if (ctx.order->status != OrderStatus::delivered)
          return ToolResult::failure("not_delivered", "order is not in delivered status");
        const std::string method_id = args.at("payment_method_id").get<std::string>();
        if (auto err = check_payment_method(*ctx.user, method_id)) return *err;
        std::vector<std::string> remaining = ctx.order->items;
        Money refund;
        const auto item_ids = string_list(args.at("item_ids"));
        if (item_ids.empty())
          return ToolResult::failure("empty_items", "item_ids must be non-empty");
        for (const auto& item_id : item_ids) {
          auto it = std::find(remaining.begin(), remaining.end(), item_id);
          if (it == remaining.end())
            return ToolResult::failure("item_not_in_order",
                                       "item " + item_id + " is not in the order");
          remaining.erase(it);
          refund = refund + store.find_variant(item_id)->price;
        }
        ctx.order->status = OrderStatus::returned;
        ctx.order->payment_history.push_back({method_id, -refund});
        return ToolResult::success(render_order(store, *ctx.order));
      });

  registry.register_tool(
      {"modify_pending_order_items",
       ToolKind::write,
       {{"order_id", ArgType::string},
        {"item_ids", ArgType::string_list},
        {"new_item_ids", ArgType::string_list},
        {"payment_method_id", ArgType::string}},
       "Swap items of a pending order for new variants; the price difference "
       "is charged or refunded to the given payment method.",
       {"orders"}},
      [](EntityStore& store, const json& args) {
        OrderContext ctx;
        if (auto err = locate_order(store, args, ctx)) return *err;
        if (ctx.order->status != OrderStatus::pending)
          return ToolResult::failure("not_pending", "order is not in pending status");
        const std::string method_id = args.at("payment_method_id").get<std::string>();
        if (auto err = check_payment_method(*ctx.user, method_id)) return *err;
        Money delta;
        if (auto err = swap_items(store, *ctx.order, string_list(args.at("item_ids")),
                                  string_list(args.at("new_item_ids")), delta))
          return *err;
        ctx.order->status = OrderStatus::modified;
        ctx.order->payment_history.push_back({method_id, delta});
        return ToolResult::success(render_order(store, *ctx.order));
      });

  registry.register_tool(
      {"modify_pending_order_address",
       ToolKind::write,
       {{"order_id", ArgType::string}, {"address", ArgType::string}},
       "Change the shipping address of a pending order.",
       {"orders"}},
      [](EntityStore& store, const json& args) {
        OrderContext ctx;
        if (auto err = locate_order(store, args, ctx)) return *err;
        if (ctx.order->status != OrderStatus::pending)
          return ToolResult::failure("not_pending", "order is not in pending status");
        ctx.order->address = args.at("address").get<std::string>();
        return ToolResult::success(render_order(store, *ctx.order));
      });

  registry.register_tool(
      {"modify_pending_order_payment",
       ToolKind::write,
       {{"order_id", ArgType::string}, {"payment_method_id", ArgType::string}},
       "Move a pending order's charge to a different payment method: the "
       "original method is refunded and the new one is charged the order total.",
       {"orders"}},
      [](EntityStore& store, const json& args) {
        OrderContext ctx;
        if (auto err = locate_order(store, args, ctx)) return *err;
        if (ctx.order->status != OrderStatus::pending)
          return ToolResult::failure("not_pending", "order is not in pending status");
        const std::string method_id = args.at("payment_method_id").get<std::string>();
        if (auto err = check_payment_method(*ctx.user, method_id)) return *err;
        if (ctx.order->payment_history.empty())
          return ToolResult::failure("no_payment_method", "order has no payment history");
        const std::string old_method = ctx.order->payment_history.front().method_id;
        if (old_method == method_id)
          return ToolResult::failure("same_method", "order already uses that payment method");
        const Money total = order_total(store, *ctx.order);
        ctx.order->payment_history.push_back({old_method, -total});
        ctx.order->payment_history.push_back({method_id, total});
        return ToolResult::success(render_order(store, *ctx.order));
      });

  registry.register_tool(
      {"cancel_pending_order",
       ToolKind::write,
       {{"order_id", ArgType::string}},
       "Cancel a pending order and refund the original payment method.",
       {"orders"}},
      [](EntityStore& store, const json& args) {
        OrderContext ctx;
        if (auto err = locate_order(store, args, ctx)) return *err;
        if (ctx.order->status != OrderStatus::pending)
          return ToolResult::failure("not_pending", "order is not in pending status");
        if (ctx.order->payment_history.empty())
          return ToolResult::failure("no_payment_method", "order has no payment history");
        const Money total = order_total(store, *ctx.order);
        ctx.order->status = OrderStatus::cancelled;
        ctx.order->payment_history.push_back({ctx.order->payment_history.front().method_id, -total});
        return ToolResult::success(render_order(store, *ctx.order));
      });

  return registry;
}

}  // namespace toolrl::tools
