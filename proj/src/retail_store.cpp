#include "toolrl/retail_store.hpp"

#include <set>

namespace toolrl::retail {

using nlohmann::json;

std::string to_string(PaymentKind kind) {
  switch (kind) {
    case PaymentKind::credit_card: return "credit_card";
    case PaymentKind::paypal: return "paypal";
    case PaymentKind::gift_card: return "gift_card";
  }
  return "credit_card";
}

PaymentKind payment_kind_from_string(const std::string& s) {
  if (s == "credit_card") return PaymentKind::credit_card;
  if (s == "paypal") return PaymentKind::paypal;
  if (s == "gift_card") return PaymentKind::gift_card;
  throw std::invalid_argument("unknown payment kind: " + s);
}

std::string to_string(OrderStatus status) {
  switch (status) {
    case OrderStatus::pending: return "pending";
    case OrderStatus::delivered: return "delivered";
    case OrderStatus::cancelled: return "cancelled";
    case OrderStatus::exchanged: return "exchanged";
    case OrderStatus::returned: return "returned";
    case OrderStatus::modified: return "modified";
  }
  return "pending";
}

OrderStatus order_status_from_string(const std::string& s) {
  if (s == "pending") return OrderStatus::pending;
  if (s == "delivered") return OrderStatus::delivered;
  if (s == "cancelled") return OrderStatus::cancelled;
  if (s == "exchanged") return OrderStatus::exchanged;
  if (s == "returned") return OrderStatus::returned;
  if (s == "modified") return OrderStatus::modified;
  throw std::invalid_argument("unknown order status: " + s);
}

std::string StateHash::hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  std::uint64_t v = digest;
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SeedError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SeedError(path + "." + key, "missing field");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) throw SeedError(path + "." + key, "expected a string");
  return v.get<std::string>();
}

std::vector<std::string> require_string_array(const json& obj, const char* key,
                                              const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_array()) throw SeedError(path + "." + key, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string())
      throw SeedError(path + "." + key + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

const json& section(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw SeedError(key, "missing section");
  if (!it->is_array()) throw SeedError(key, "expected an array");
  return *it;
}

}  // namespace

EntityStore EntityStore::load_seed(const json& doc) {
  if (!doc.is_object()) throw SeedError("$", "seed document must be an object");
  EntityStore store;

  std::set<std::string> emails;
  const json& users = section(doc, "users");
  for (std::size_t i = 0; i < users.size(); ++i) {
    const std::string path = "users[" + std::to_string(i) + "]";
    const json& u = users[i];
    User user;
    user.user_id = require_string(u, "user_id", path);
    user.name = require_string(u, "name", path);
    user.email = require_string(u, "email", path);
    user.zip = require_string(u, "zip", path);
    if (!emails.insert(user.email).second)
      throw SeedError(path + ".email", "duplicate email " + user.email);
    const json& methods = require(u, "payment_methods", path);
    if (!methods.is_array()) throw SeedError(path + ".payment_methods", "expected an array");
    std::set<std::string> method_ids;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const std::string mpath = path + ".payment_methods[" + std::to_string(m) + "]";
      PaymentMethod pm;
      pm.method_id = require_string(methods[m], "method_id", mpath);
      try {
        pm.kind = payment_kind_from_string(require_string(methods[m], "kind", mpath));
      } catch (const std::invalid_argument& e) {
        throw SeedError(mpath + ".kind", e.what());
      }
      if (!method_ids.insert(pm.method_id).second)
        throw SeedError(mpath + ".method_id", "duplicate method_id " + pm.method_id);
      user.payment_methods.push_back(std::move(pm));
    }
    user.order_ids = require_string_array(u, "order_ids", path);
    if (store.users_.count(user.user_id))
      throw SeedError(path + ".user_id", "duplicate user_id " + user.user_id);
    store.users_.emplace(user.user_id, std::move(user));
  }

  const json& products = section(doc, "products");
  for (std::size_t i = 0; i < products.size(); ++i) {
    const std::string path = "products[" + std::to_string(i) + "]";
    const json& p = products[i];
    Product product;
    product.product_id = require_string(p, "product_id", path);
    product.name = require_string(p, "name", path);
    const json& variants = require(p, "variants", path);
    if (!variants.is_object()) throw SeedError(path + ".variants", "expected an object");
    for (const auto& [item_id, v] : variants.items()) {
      const std::string vpath = path + ".variants." + item_id;
      Variant variant;
      const json& opts = require(v, "options", vpath);
      if (!opts.is_object()) throw SeedError(vpath + ".options", "expected an object");
      for (const auto& [k, val] : opts.items()) {
        if (!val.is_string()) throw SeedError(vpath + ".options." + k, "expected a string");
        variant.options[k] = val.get<std::string>();
      }
      try {
        variant.price = Money::from_json(require(v, "price", vpath));
      } catch (const std::invalid_argument& e) {
        throw SeedError(vpath + ".price", e.what());
      }
      if (variant.price < Money())
        throw SeedError(vpath + ".price", "price must be non-negative");
      const json& avail = require(v, "available", vpath);
      if (!avail.is_boolean()) throw SeedError(vpath + ".available", "expected a boolean");
      variant.available = avail.get<bool>();
      if (store.item_to_product_.count(item_id))
        throw SeedError(vpath, "item_id " + item_id + " not globally unique");
      store.item_to_product_.emplace(item_id, product.product_id);
      product.variants.emplace(item_id, std::move(variant));
    }
    if (store.products_.count(product.product_id))
      throw SeedError(path + ".product_id", "duplicate product_id " + product.product_id);
    store.products_.emplace(product.product_id, std::move(product));
  }

  const json& orders = section(doc, "orders");
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const std::string path = "orders[" + std::to_string(i) + "]";
    const json& o = orders[i];
    Order order;
    order.order_id = require_string(o, "order_id", path);
    order.user_id = require_string(o, "user_id", path);
    order.address = require_string(o, "address", path);
    const User* user = store.find_user(order.user_id);
    if (user == nullptr)
      throw SeedError(path + ".user_id", "dangling reference to user " + order.user_id);
    order.items = require_string_array(o, "items", path);
    for (std::size_t k = 0; k < order.items.size(); ++k)
      if (!store.item_to_product_.count(order.items[k]))
        throw SeedError(path + ".items[" + std::to_string(k) + "]",
                        "dangling reference to item " + order.items[k]);
    try {
      order.status = order_status_from_string(require_string(o, "status", path));
    } catch (const std::invalid_argument& e) {
      throw SeedError(path + ".status", e.what());
    }
    const json& history = require(o, "payment_history", path);
    if (!history.is_array()) throw SeedError(path + ".payment_history", "expected an array");
    for (std::size_t h = 0; h < history.size(); ++h) {
      const std::string hpath = path + ".payment_history[" + std::to_string(h) + "]";
      PaymentEntry entry;
      entry.method_id = require_string(history[h], "method_id", hpath);
      bool known = false;
      for (const auto& pm : user->payment_methods) known |= pm.method_id == entry.method_id;
      if (!known)
        throw SeedError(hpath + ".method_id",
                        "dangling reference to payment method " + entry.method_id);
      try {
        entry.amount = Money::from_json(require(history[h], "amount", hpath));
      } catch (const std::invalid_argument& e) {
        throw SeedError(hpath + ".amount", e.what());
      }
      order.payment_history.push_back(std::move(entry));
    }
    const json& fulfillments = require(o, "fulfillments", path);
    if (!fulfillments.is_array()) throw SeedError(path + ".fulfillments", "expected an array");
    for (std::size_t f = 0; f < fulfillments.size(); ++f) {
      const std::string fpath = path + ".fulfillments[" + std::to_string(f) + "]";
      Fulfillment ff;
      ff.tracking_id = require_string(fulfillments[f], "tracking_id", fpath);
      ff.item_ids = require_string_array(fulfillments[f], "item_ids", fpath);
      for (std::size_t k = 0; k < ff.item_ids.size(); ++k)
        if (!store.item_to_product_.count(ff.item_ids[k]))
          throw SeedError(fpath + ".item_ids[" + std::to_string(k) + "]",
                          "dangling reference to item " + ff.item_ids[k]);
      order.fulfillments.push_back(std::move(ff));
    }
    if (store.orders_.count(order.order_id))
      throw SeedError(path + ".order_id", "duplicate order_id " + order.order_id);
    store.orders_.emplace(order.order_id, std::move(order));
  }

  // users[].order_ids must point at existing orders owned by the same user
  for (const auto& [uid, user] : store.users_) {
    for (const auto& oid : user.order_ids) {
      const Order* order = store.find_order(oid);
      if (order == nullptr)
        throw SeedError("users." + uid + ".order_ids", "dangling reference to order " + oid);
      if (order->user_id != uid)
        throw SeedError("users." + uid + ".order_ids", "order " + oid + " belongs to another user");
    }
  }

  store.version_ = 0;
  return store;
}

const User* EntityStore::find_user(const std::string& user_id) const {
  auto it = users_.find(user_id);
  return it == users_.end() ? nullptr : &it->second;
}

const User* EntityStore::find_user_by_email(const std::string& email) const {
  for (const auto& [id, user] : users_)
    if (user.email == email) return &user;
  return nullptr;
}

const Product* EntityStore::find_product(const std::string& product_id) const {
  auto it = products_.find(product_id);
  return it == products_.end() ? nullptr : &it->second;
}

const Order* EntityStore::find_order(const std::string& order_id) const {
  auto it = orders_.find(order_id);
  return it == orders_.end() ? nullptr : &it->second;
}

Order* EntityStore::find_order_mut(const std::string& order_id) {
  auto it = orders_.find(order_id);
  return it == orders_.end() ? nullptr : &it->second;
}

const Product* EntityStore::product_of_item(const std::string& item_id) const {
  auto it = item_to_product_.find(item_id);
  return it == item_to_product_.end() ? nullptr : find_product(it->second);
}

const Variant* EntityStore::find_variant(const std::string& item_id) const {
  const Product* product = product_of_item(item_id);
  if (product == nullptr) return nullptr;
  auto it = product->variants.find(item_id);
  return it == product->variants.end() ? nullptr : &it->second;
}

json EntityStore::canonical_json() const {
  // nlohmann::json objects iterate in sorted key order, which gives the
  // field- and entity-level ordering the canonical form requires.
  json out = json::object();
  json users = json::object();
  for (const auto& [id, u] : users_) {
    json methods = json::array();
    for (const auto& pm : u.payment_methods)
      methods.push_back({{"kind", to_string(pm.kind)}, {"method_id", pm.method_id}});
    users[id] = {{"email", u.email},
                 {"name", u.name},
                 {"order_ids", u.order_ids},
                 {"payment_methods", methods},
                 {"user_id", u.user_id},
                 {"zip", u.zip}};
  }
  json products = json::object();
  for (const auto& [id, p] : products_) {
    json variants = json::object();
    for (const auto& [item_id, v] : p.variants)
      variants[item_id] = {
          {"available", v.available}, {"options", v.options}, {"price", v.price.str()}};
    products[id] = {{"name", p.name}, {"product_id", p.product_id}, {"variants", variants}};
  }
  json orders = json::object();
  for (const auto& [id, o] : orders_) {
    json history = json::array();
    for (const auto& e : o.payment_history)
      history.push_back({{"amount", e.amount.str()}, {"method_id", e.method_id}});
    json fulfillments = json::array();
    for (const auto& f : o.fulfillments)
      fulfillments.push_back({{"item_ids", f.item_ids}, {"tracking_id", f.tracking_id}});
    orders[id] = {{"address", o.address},
                  {"fulfillments", fulfillments},
                  {"items", o.items},
                  {"order_id", o.order_id},
                  {"payment_history", history},
                  {"status", to_string(o.status)},
                  {"user_id", o.user_id}};
  }
  out["orders"] = orders;
  out["products"] = products;
  out["users"] = users;
  out["version"] = version_;
  return out;
}

StateHash EntityStore::state_hash() const {
  return StateHash{fnv1a64(canonical_json().dump())};
}

}  // namespace toolrl::retail
