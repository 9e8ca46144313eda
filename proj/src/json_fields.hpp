#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlct/errors.hpp"

namespace nlct::detail {

// Typed access to one JSON object with field paths in every error message.
// Call finish() once all fields were read to reject unknown keys.
class FieldReader {
public:
  FieldReader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_, "expected an object");
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const nlohmann::json& raw(const std::string& key) {
    if (!has(key)) throw ValidationError(path(key), "required field missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) throw ValidationError(path(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(path(key), "must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  double positive(const std::string& key) {
    const double d = number(key);
    if (!(d > 0.0)) throw ValidationError(path(key), "must be > 0");
    return d;
  }
  double positive(const std::string& key, double fallback) { return has(key) ? positive(key) : fallback; }

  double nonnegative(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const double d = number(key);
    if (d < 0.0) throw ValidationError(path(key), "must be >= 0");
    return d;
  }

  std::size_t count(const std::string& key, std::size_t minimum = 1) {
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw ValidationError(path(key), "expected an integer");
    const auto i = v.get<long long>();
    if (i < static_cast<long long>(minimum))
      throw ValidationError(path(key), "must be >= " + std::to_string(minimum));
    return static_cast<std::size_t>(i);
  }
  std::size_t count(const std::string& key, std::size_t minimum, std::size_t fallback) {
    return has(key) ? count(key, minimum) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ValidationError(path(key), "expected a boolean");
    return v.get<bool>();
  }

  std::string text(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) throw ValidationError(path(key), "expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) { return has(key) ? text(key) : fallback; }

  std::string choice(const std::string& key, const std::vector<std::string>& allowed, const std::string& fallback) {
    const std::string s = has(key) ? text(key) : fallback;
    for (const auto& a : allowed)
      if (a == s) return s;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ValidationError(path(key), "must be one of {" + list + "}");
  }

  std::vector<double> numbers(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) throw ValidationError(path(key), "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = path(key) + "[" + std::to_string(i) + "]";
      if (!v[i].is_number()) throw ValidationError(p, "expected a number");
      const double d = v[i].get<double>();
      if (!std::isfinite(d)) throw ValidationError(p, "must be finite");
      out.push_back(d);
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key, std::size_t minimum) {
    const auto& v = raw(key);
    if (!v.is_array() || v.empty()) throw ValidationError(path(key), "expected a non-empty array");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = path(key) + "[" + std::to_string(i) + "]";
      if (!v[i].is_number_integer()) throw ValidationError(p, "expected an integer");
      const auto k = v[i].get<long long>();
      if (k < static_cast<long long>(minimum)) throw ValidationError(p, "must be >= " + std::to_string(minimum));
      out.push_back(static_cast<std::size_t>(k));
    }
    return out;
  }

  FieldReader object(const std::string& key) { return FieldReader(raw(key), path(key)); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ValidationError(path(it.key()), "unknown key");
  }

private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace nlct::detail
