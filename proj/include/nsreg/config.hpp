#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nsreg/io.hpp"

namespace nsreg {

inline constexpr int kSchemaVersion = 1;

/// Every accepted key with its default. A null default accepts a number or null.
inline Json default_config() {
  Json c;
  c["schema_version"] = kSchemaVersion;
  c["seed"] = 7;
  c["output"] = "nsreg-out";
  c["grid"] = {{"n", 32}, {"length", 2 * kPi}, {"dealias_fraction", 2.0 / 3.0}};
  c["data"] = {{"source", "preset"},  // preset | dss_profile | snapshot
               {"preset", "taylor-green"},
               {"amplitude", 1.0},
               {"max_mode", 3},
               {"path", ""},
               {"lambda", 2.0},
               {"inner", 1.5},  // DSS data: cutoff equal to 1 inside, 0 beyond outer
               {"outer", 3.0}};
  c["solver"] = {{"T", 0.7}, {"dt", 1e-3}, {"stride", 25}, {"t_begin", 0.0}, {"store_pressure", false}};
  c["norms"] = Json::array();
  c["diagnostics"] = {
      {"energy_equality", true},
      {"lei", {{"enabled", true}, {"center", {0.3, 0.2, 0.1}}, {"t0", nullptr}, {"tau", 0.02}, {"spatial_scale", 2.5}}},
      {"cylinders", {{"enabled", true}, {"centers", Json::array({Json::array({0.0, 0.0, 0.0})})}, {"random_centers", 2},
                     {"t0", nullptr}, {"radii", Json::array()}}},
      {"decay", {{"enabled", true}, {"x0", {0.0, 0.0, 0.0}}, {"t0", nullptr}, {"theta", 0.25}, {"beta", 0.25},
                 {"r0", nullptr}, {"max_rungs", 6}}},
      {"energy_check", {{"enabled", true}, {"r", 1.0}}},
      {"pressure_check", {{"enabled", false}, {"r", 1.0}, {"s", 2.0}, {"q", 1.5}}},
      {"paraboloid", {{"enabled", true}, {"sigma2", 0.5}, {"probes", 24}, {"radius", nullptr}}}};
  c["budgets"] = {{"eps_ckn", 0.05}, {"c_ckn", 1.0},       {"c1", 1.0},          {"eps_paraboloid", 0.05},
                  {"eps0", 1.0},     {"c0", 0.1},          {"cfl", 0.5},         {"data_gate", 0.0},
                  {"lei_tol", 1e-4}, {"energy_tol", 1e-6}, {"pressure_budget", 0.0}};
  c["dss"] = {{"profile", "swirl"}, {"path", ""}, {"lambda", 2.0}, {"amplitude", 1.0}, {"samples", 64},
              {"smallness_samples", 50}};
  c["bogovskii"] = {{"center", {0.0, 0.0, 0.0}}, {"inner", 0.3}, {"outer", 3.1}, {"p", 2.0}, {"newtonian", true}};
  c["picard"] = {{"T", 0.05}, {"mesh", 32}, {"max_iter", 40}, {"tol", 1e-12}};
  return c;
}

/// Per-kind templates for the norm menu.
inline Json norm_template(const std::string& kind) {
  if (kind == "herz")
    return {{"kind", ""}, {"p", 3.0}, {"s", nullptr}, {"k_min", -3}, {"k_max", 4}, {"flavor", "shell"}};
  if (kind == "lp" || kind == "weak_lp")
    return {{"kind", ""}, {"p", 2.0}, {"center", {0.0, 0.0, 0.0}}, {"inner", 0.0}, {"outer", 1.0}};
  if (kind == "uloc") return {{"kind", ""}, {"q", 2.0}, {"rho", 1.0}};
  if (kind == "nr") return {{"kind", ""}, {"r", 1.0}};
  return nullptr;
}

namespace detail {

/// 1-based line of the first occurrence of "key"; 0 when absent.
inline int line_of(const std::string& text, const std::string& key) {
  if (text.empty()) return 0;
  auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + int(std::count(text.begin(), text.begin() + long(pos), '\n'));
}

inline std::string where(const std::string& text, const std::string& key) {
  int line = line_of(text, key);
  return line > 0 ? "line " + std::to_string(line) + ": " : "";
}

inline bool same_kind(const Json& def, const Json& val) {
  if (def.is_null()) return val.is_null() || val.is_number();
  if (def.is_number()) return val.is_number();
  if (def.is_boolean()) return val.is_boolean();
  if (def.is_string()) return val.is_string();
  if (def.is_array()) return val.is_array();
  if (def.is_object()) return val.is_object();
  return false;
}

inline void merge_strict(Json& base, const Json& user, const std::string& path, const std::string& text) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = it.key(), full = path.empty() ? key : path + "." + key;
    require(base.contains(key), ErrorKind::ConfigError, where(text, key) + "unknown key '" + full + "'");
    Json& slot = base[key];
    require(same_kind(slot, *it), ErrorKind::ConfigError,
            where(text, key) + "key '" + full + "' has type " + it->type_name() + ", expected " +
                (slot.is_null() ? std::string("number or null") : std::string(slot.type_name())));
    if (slot.is_object())
      merge_strict(slot, *it, full, text);
    else
      slot = *it;
  }
}

inline void check_vec3(const Json& v, const std::string& name, const std::string& text) {
  require(v.is_array() && v.size() == 3 && v[0].is_number() && v[1].is_number() && v[2].is_number(),
          ErrorKind::ConfigError, where(text, name) + "'" + name + "' must be a 3-vector");
}

}  // namespace detail

inline Vec3 to_vec3(const Json& v) { return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()}; }

/// Parses and validates; throws ConfigError with a line number when one can be found.
inline Json parse_config(const std::string& text) {
  Json user;
  if (!text.empty()) {
    try {
      user = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      int line = 1 + int(std::count(text.begin(), text.begin() + long(std::min(e.byte, text.size())), '\n'));
      fail(ErrorKind::ConfigError, "line " + std::to_string(line) + ": " + e.what());
    }
  } else {
    user = Json::object();
  }
  require(user.is_object(), ErrorKind::ConfigError, "config must be an object");
  require(user.contains("schema_version") || text.empty(), ErrorKind::ConfigError, "missing schema_version");
  if (user.contains("schema_version"))
    require(user["schema_version"].is_number_integer() && user["schema_version"].get<int>() == kSchemaVersion,
            ErrorKind::ConfigError,
            detail::where(text, "schema_version") + "unsupported schema_version, expected " +
                std::to_string(kSchemaVersion));
  Json cfg = default_config();
  detail::merge_strict(cfg, user, "", text);

  Json norms = Json::array();
  for (const auto& n : cfg["norms"]) {
    require(n.is_object() && n.contains("kind") && n["kind"].is_string(), ErrorKind::ConfigError,
            detail::where(text, "norms") + "each norm entry needs a string 'kind'");
    Json t = norm_template(n["kind"].get<std::string>());
    require(!t.is_null(), ErrorKind::ConfigError,
            detail::where(text, n["kind"].get<std::string>()) + "unknown norm kind '" + n["kind"].get<std::string>() + "'");
    detail::merge_strict(t, n, "norms[]", text);
    if (t.contains("center")) detail::check_vec3(t["center"], "center", text);
    norms.push_back(t);
  }
  cfg["norms"] = norms;

  const Json& d = cfg["diagnostics"];
  detail::check_vec3(d["lei"]["center"], "center", text);
  detail::check_vec3(d["decay"]["x0"], "x0", text);
  for (const auto& c : d["cylinders"]["centers"]) detail::check_vec3(c, "centers", text);
  for (const auto& r : d["cylinders"]["radii"])
    require(r.is_number() && r.get<double>() > 0, ErrorKind::ConfigError,
            detail::where(text, "radii") + "cylinder radii must be positive numbers");
  detail::check_vec3(cfg["bogovskii"]["center"], "center", text);

  for (auto it = cfg["budgets"].begin(); it != cfg["budgets"].end(); ++it) {
    double v = it->get<double>();
    bool gate = it.key() == "data_gate" || it.key() == "pressure_budget";
    require(gate ? v >= 0 : v > 0, ErrorKind::ConfigError,
            detail::where(text, it.key()) + "budget '" + it.key() + "' must be " + (gate ? "non-negative" : "positive"));
  }
  require(cfg["seed"].is_number_integer() && cfg["seed"].get<long long>() >= 0, ErrorKind::ConfigError,
          detail::where(text, "seed") + "seed must be a non-negative integer");
  const std::string src = cfg["data"]["source"].get<std::string>();
  require(src == "preset" || src == "dss_profile" || src == "snapshot", ErrorKind::ConfigError,
          detail::where(text, "source") + "data.source must be preset, dss_profile or snapshot");
  return cfg;
}

/// --budget KEY=VALUE
inline void apply_budget_override(Json& cfg, const std::string& kv) {
  auto eq = kv.find('=');
  require(eq != std::string::npos, ErrorKind::ConfigError, "budget override '" + kv + "' is not KEY=VALUE");
  std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
  require(cfg["budgets"].contains(key), ErrorKind::ConfigError, "unknown budget '" + key + "'");
  double v = 0;
  try {
    std::size_t used = 0;
    v = std::stod(val, &used);
    require(used == val.size(), ErrorKind::ConfigError, "");
  } catch (const std::exception&) {
    fail(ErrorKind::ConfigError, "budget '" + key + "' needs a number, got '" + val + "'");
  }
  bool gate = key == "data_gate" || key == "pressure_budget";
  require(gate ? v >= 0 : v > 0, ErrorKind::ConfigError, "budget '" + key + "' out of range");
  cfg["budgets"][key] = v;
}

inline GridSpec grid_of(const Json& cfg) {
  GridSpec g{cfg["grid"]["n"].get<int>(), cfg["grid"]["length"].get<double>(),
             cfg["grid"]["dealias_fraction"].get<double>()};
  try {
    g.validate();
  } catch (const Error& e) {
    fail(ErrorKind::ConfigError, std::string("grid: ") + e.what());
  }
  return g;
}

inline std::optional<double> optional_number(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace nsreg
