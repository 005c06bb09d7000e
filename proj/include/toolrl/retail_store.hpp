#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "toolrl/money.hpp"

namespace toolrl::retail {

enum class PaymentKind { credit_card, paypal, gift_card };

std::string to_string(PaymentKind kind);
PaymentKind payment_kind_from_string(const std::string& s);

struct PaymentMethod {
  std::string method_id;
  PaymentKind kind = PaymentKind::credit_card;
};

struct User {
  std::string user_id;
  std::string name;
  std::string email;
  std::string zip;
  std::vector<PaymentMethod> payment_methods;
  std::vector<std::string> order_ids;
};

struct Variant {
  std::map<std::string, std::string> options;
  Money price;
  bool available = true;
};

struct Product {
  std::string product_id;
  std::string name;
  std::map<std::string, Variant> variants;  // keyed by item_id
};

enum class OrderStatus { pending, delivered, cancelled, exchanged, returned, modified };

std::string to_string(OrderStatus status);
OrderStatus order_status_from_string(const std::string& s);

struct PaymentEntry {
  std::string method_id;
  Money amount;  // positive = charge, negative = refund
};

struct Fulfillment {
  std::string tracking_id;
  std::vector<std::string> item_ids;
};

struct Order {
  std::string order_id;
  std::string user_id;
  std::string address;
  std::vector<std::string> items;  // item_ids, duplicates allowed
  OrderStatus status = OrderStatus::pending;
  std::vector<PaymentEntry> payment_history;  // append-only
  std::vector<Fulfillment> fulfillments;
};

/// Raised by load_seed; `path` names the first offending location, e.g.
/// "orders[2].user_id".
class SeedError : public std::runtime_error {
 public:
  SeedError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct StateHash {
  std::uint64_t digest = 0;
  std::string hex() const;
  friend bool operator==(StateHash a, StateHash b) { return a.digest == b.digest; }
  friend bool operator!=(StateHash a, StateHash b) { return a.digest != b.digest; }
};

/// Relational retail state: users, products, orders plus a monotonic write
/// counter. A loaded store validates all cross-references; copies are fully
/// independent (plain value semantics).
class EntityStore {
 public:
  /// Builds a store from a seed document with top-level "users",
  /// "products" and "orders" arrays. Throws SeedError on the first schema
  /// violation or dangling reference.
  static EntityStore load_seed(const nlohmann::json& doc);

  /// Independent deep copy for episode isolation.
  EntityStore snapshot() const { return *this; }

  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  const std::map<std::string, User>& users() const { return users_; }
  const std::map<std::string, Product>& products() const { return products_; }
  const std::map<std::string, Order>& orders() const { return orders_; }

  const User* find_user(const std::string& user_id) const;
  const User* find_user_by_email(const std::string& email) const;
  const Product* find_product(const std::string& product_id) const;
  const Order* find_order(const std::string& order_id) const;
  Order* find_order_mut(const std::string& order_id);

  /// Product owning the given item_id (item_ids are globally unique).
  const Product* product_of_item(const std::string& item_id) const;
  const Variant* find_variant(const std::string& item_id) const;

  /// Canonical content rendering: entities keyed and ordered by id, object
  /// keys sorted, money as fixed two-digit decimal strings, enums as
  /// strings, plus the version counter. This is the byte-level input to
  /// state_hash.
  nlohmann::json canonical_json() const;

  StateHash state_hash() const;

 private:
  std::map<std::string, User> users_;
  std::map<std::string, Product> products_;
  std::map<std::string, Order> orders_;
  std::map<std::string, std::string> item_to_product_;
  std::uint64_t version_ = 0;
};

/// FNV-1a 64-bit over a byte string. Not cryptographic; the contract is
/// determinism over canonical content, not collision resistance.
std::uint64_t fnv1a64(const std::string& bytes);

inline StateHash state_hash(const EntityStore& store) { return store.state_hash(); }

}  // namespace toolrl::retail
