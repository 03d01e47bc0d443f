#include "outflux/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace outflux {

using nlohmann::json;

namespace {

std::string ptr(const std::string& base, const std::string& key) { return base + "/" + key; }

const json& require(const json& obj, const std::string& base, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError(ptr(base, key), "missing required field");
  return obj.at(key);
}

double number(const json& v, const std::string& p) {
  if (!v.is_number()) throw ConfigError(p, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(p, "expected a finite number");
  return x;
}

double positive(const json& v, const std::string& p) {
  const double x = number(v, p);
  if (!(x > 0.0)) throw ConfigError(p, "expected a positive number");
  return x;
}

int integer(const json& v, const std::string& p, int lo) {
  if (!v.is_number_integer()) throw ConfigError(p, "expected an integer");
  const auto x = v.get<long long>();
  if (x < lo) throw ConfigError(p, "expected an integer >= " + std::to_string(lo));
  return static_cast<int>(x);
}

double number_or(const json& obj, const std::string& base, const std::string& key, double fallback) {
  return obj.contains(key) ? number(obj.at(key), ptr(base, key)) : fallback;
}

void only_keys(const json& obj, const std::string& base, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(base.empty() ? "/" : base, "expected an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigError(ptr(base, k), "unknown field");
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string RunConfig::hash() const { return hex64(fnv1a(source.dump())); }

RunConfig parse_config(const json& doc) {
  only_keys(doc, "",
            {"profile", "R_star", "R0", "holes", "gamma", "outlet", "x_left", "inflow", "epsilon",
             "nu", "levels", "first_level", "K", "h", "stretch", "axis_layers", "stop_tol", "force",
             "strips", "collar", "trials", "eps_ladder", "seed"});
  RunConfig c;
  json src;

  const json& prof = require(doc, "", "profile");
  only_keys(prof, "/profile", {"kind", "alpha", "scale"});
  const json& kind = require(prof, "/profile", "kind");
  const double r_star = number(require(doc, "", "R_star"), "/R_star");
  const double scale = prof.contains("scale") ? positive(prof.at("scale"), "/profile/scale") : 1.0;
  if (kind == "constant") {
    c.domain.profile = OutletProfile::constant(scale, r_star);
    src["profile"] = {{"kind", "constant"}, {"scale", scale}};
  } else if (kind == "power") {
    const double alpha = number(require(prof, "/profile", "alpha"), "/profile/alpha");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("/profile/alpha", "expected 0 <= alpha <= 1");
    if (r_star <= -1.0) throw ConfigError("/R_star", "power profiles need R_star > -1");
    c.domain.profile = OutletProfile::power(alpha, scale, r_star);
    src["profile"] = {{"kind", "power"}, {"alpha", alpha}, {"scale", scale}};
  } else {
    throw ConfigError("/profile/kind", "expected \"power\" or \"constant\"");
  }
  src["R_star"] = r_star;

  c.domain.R0 = number(require(doc, "", "R0"), "/R0");
  if (c.domain.R0 < r_star) throw ConfigError("/R0", "R0 must be at least R_star");
  c.domain.gamma = positive(require(doc, "", "gamma"), "/gamma");
  const json& outlet = require(doc, "", "outlet");
  if (outlet == "in") {
    c.domain.outlet = OutletKind::Inner;
  } else if (outlet == "out") {
    c.domain.outlet = OutletKind::Outer;
  } else {
    throw ConfigError("/outlet", "expected \"in\" or \"out\"");
  }
  c.domain.x_left = number_or(doc, "", "x_left", 0.0);
  src["R0"] = c.domain.R0;
  src["gamma"] = c.domain.gamma;
  src["outlet"] = outlet;
  src["x_left"] = c.domain.x_left;

  const json& holes = require(doc, "", "holes");
  if (!holes.is_array()) throw ConfigError("/holes", "expected an array");
  src["holes"] = json::array();
  for (std::size_t i = 0; i < holes.size(); ++i) {
    const std::string base = "/holes/" + std::to_string(i);
    const json& h = holes[i];
    only_keys(h, base, {"center", "radius", "flux", "beta", "swirl"});
    Hole hole{number(require(h, base, "center"), base + "/center"),
              positive(require(h, base, "radius"), base + "/radius")};
    HoleTrace t{number_or(h, base, "flux", 0.0), number_or(h, base, "beta", 0.0),
                number_or(h, base, "swirl", 0.0)};
    if (std::abs(t.beta) >= 1.0) throw ConfigError(base + "/beta", "expected |beta| < 1");
    c.domain.holes.push_back(hole);
    c.data.holes.push_back(t);
    src["holes"].push_back({{"center", hole.center},
                            {"radius", hole.radius},
                            {"flux", t.flux},
                            {"beta", t.beta},
                            {"swirl", t.swirl}});
  }
  c.data.inflow_flux = number_or(doc, "", "inflow", 0.0);
  src["inflow"] = c.data.inflow_flux;

  if (doc.contains("epsilon") && !(doc.at("epsilon").is_string() && doc.at("epsilon") == "auto")) {
    c.epsilon = positive(doc.at("epsilon"), "/epsilon");
    src["epsilon"] = *c.epsilon;
  } else {
    src["epsilon"] = "auto";
  }
  c.eps_ladder = {1.0 / std::log(3.0), 0.2, 0.1, 0.05};
  if (doc.contains("eps_ladder")) {
    const json& l = doc.at("eps_ladder");
    if (!l.is_array() || l.empty()) throw ConfigError("/eps_ladder", "expected a nonempty array");
    c.eps_ladder.clear();
    for (std::size_t i = 0; i < l.size(); ++i) {
      const std::string p = "/eps_ladder/" + std::to_string(i);
      c.eps_ladder.push_back(positive(l[i], p));
      if (i > 0 && !(c.eps_ladder[i] < c.eps_ladder[i - 1]))
        throw ConfigError(p, "expected strictly decreasing values");
    }
  }
  src["eps_ladder"] = c.eps_ladder;

  if (doc.contains("nu")) c.nu = positive(doc.at("nu"), "/nu");
  if (doc.contains("levels")) c.levels = integer(doc.at("levels"), "/levels", 1);
  if (doc.contains("first_level")) c.first_level = integer(doc.at("first_level"), "/first_level", 1);
  if (c.first_level > c.levels) throw ConfigError("/first_level", "must not exceed levels");
  if (doc.contains("K")) {
    c.K = integer(doc.at("K"), "/K", 1);
    if (c.K < c.levels + 1) throw ConfigError("/K", "the ladder must extend past the last level");
  }
  if (doc.contains("h")) c.grid.h = positive(doc.at("h"), "/h");
  if (doc.contains("stretch")) {
    if (!doc.at("stretch").is_boolean()) throw ConfigError("/stretch", "expected a boolean");
    c.grid.stretch = doc.at("stretch").get<bool>();
  }
  if (doc.contains("axis_layers")) c.grid.axis_layers = integer(doc.at("axis_layers"), "/axis_layers", 0);
  if (doc.contains("stop_tol")) c.stop_tol = number(doc.at("stop_tol"), "/stop_tol");
  if (doc.contains("trials")) c.trials = integer(doc.at("trials"), "/trials", 20);
  if (doc.contains("seed")) {
    const json& v = doc.at("seed");
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
      throw ConfigError("/seed", "expected an unsigned integer");
    c.seed = doc.at("seed").get<std::uint64_t>();
  }
  src["nu"] = c.nu;
  src["levels"] = c.levels;
  src["first_level"] = c.first_level;
  src["K"] = c.ladder_size();
  src["h"] = c.grid.h;
  src["stretch"] = c.grid.stretch;
  src["axis_layers"] = c.grid.axis_layers;
  src["stop_tol"] = c.stop_tol;
  src["trials"] = c.trials;
  src["seed"] = c.seed;

  if (doc.contains("force") && !doc.at("force").is_null()) {
    const json& f = doc.at("force");
    only_keys(f, "/force", {"center", "radius", "a1", "a2"});
    ForceConfig fc{number(require(f, "/force", "center"), "/force/center"),
                   positive(require(f, "/force", "radius"), "/force/radius"),
                   number_or(f, "/force", "a1", 0.0), number_or(f, "/force", "a2", 0.0)};
    c.force = fc;
    src["force"] = {{"center", fc.center}, {"radius", fc.radius}, {"a1", fc.a1}, {"a2", fc.a2}};
  } else {
    src["force"] = nullptr;
  }
  if (doc.contains("strips")) {
    only_keys(doc.at("strips"), "/strips", {"delta"});
    if (doc.at("strips").contains("delta")) {
      c.strip_delta = positive(doc.at("strips").at("delta"), "/strips/delta");
      src["strips"] = {{"delta", *c.strip_delta}};
    }
  }
  if (doc.contains("collar")) {
    c.collar = positive(doc.at("collar"), "/collar");
    src["collar"] = *c.collar;
  }
  c.source = std::move(src);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/", "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace outflux
