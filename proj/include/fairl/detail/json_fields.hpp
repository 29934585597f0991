#pragma once

#include <json.hpp>

#include <set>
#include <stdexcept>
#include <string>

namespace fairl::detail {

/// Reads known keys of a JSON object into existing defaults; finish() rejects
/// keys that were never asked for.
template <class JsonT>
class JsonFields {
 public:
  JsonFields(const JsonT& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw std::invalid_argument(where_ + ": expected a JSON object");
  }

  template <class T>
  JsonFields& get(const char* key, T& out) {
    known_.insert(key);
    if (j_.contains(key)) {
      try {
        out = j_.at(key).template get<T>();
      } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument(where_ + ": field '" + key + "' has the wrong type");
      }
    }
    return *this;
  }

  bool has(const char* key) {
    known_.insert(key);
    return j_.contains(key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!known_.count(item.key())) {
        throw std::invalid_argument(where_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

 private:
  const JsonT& j_;
  std::string where_;
  std::set<std::string> known_;
};

}  // namespace fairl::detail
