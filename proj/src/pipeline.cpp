#include "outflux/pipeline.hpp"

#include "outflux/leray_hopf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace outflux {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

json module_versions() {
  json v;
  for (const char* m : {"geometry", "cutoffs", "extension", "bogovskii", "solver", "estimates",
                        "cli_io"})
    v[m] = kVersion;
  return v;
}

// Uniform evaluation grid over [lo, hi] x (-wall_max, wall_max), restricted
// to interior points.
std::vector<Vec2> sample_points(const DomainSpec& spec, double lo, double hi, int n1, int n2) {
  double top = 0.0;
  for (int i = 0; i <= n1; ++i) top = std::max(top, spec.wall(lo + (hi - lo) * i / n1));
  std::vector<Vec2> pts;
  for (int i = 0; i <= n1; ++i) {
    const double x1 = lo + (hi - lo) * i / n1;
    for (int j = 0; j <= n2; ++j) {
      const Vec2 x(x1, -top + 2.0 * top * j / n2);
      if (spec.inside(x)) pts.push_back(x);
    }
  }
  return pts;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::string csv_header(const RunConfig& c, const std::string& kind, const std::string& columns) {
  return "# outflux " + kind + " config=" + c.hash() + " seed=" + std::to_string(c.seed) +
         "\n# columns: " + columns + "\n" + columns + "\n";
}

std::string field_csv(const RunConfig& c, const std::string& kind, const std::vector<Vec2>& pts,
                      const FieldFn& f, const std::string& columns) {
  std::vector<Vec2> values(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { values[i] = f(pts[i]).value; });
  std::string out = csv_header(c, kind, columns);
  for (std::size_t i = 0; i < pts.size(); ++i)
    out += fmt(pts[i](0)) + "," + fmt(pts[i](1)) + "," + fmt(values[i](0)) + "," +
           fmt(values[i](1)) + "\n";
  return out;
}

const char* status_name(StepStatus s) {
  switch (s) {
    case StepStatus::Proved: return "proved";
    case StepStatus::HoldsUnproved: return "holds_unproved";
    case StepStatus::Violated: return "violated";
  }
  return "";
}

template <typename T>
std::vector<bool> as_bools(const std::vector<T>& v) {
  return std::vector<bool>(v.begin(), v.end());
}

}  // namespace

void override_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.source["seed"] = seed;
}

std::function<double(const Vec2&)> two_bump_data(const BogovskiiTransform& t) {
  return [t](const Vec2& x) {
    const Vec2 y = t.forward(x);
    auto b = [&](double c) {
      const double q = 1.0 - ((y(0) - c) * (y(0) - c) + y(1) * y(1)) / 0.04;
      return q > 0.0 ? q * q * q : 0.0;
    };
    return b(0.3) - b(0.7);
  };
}

// ------------------------------------------------------------ manifest

bool RunManifest::ok() const {
  return std::all_of(stages.begin(), stages.end(),
                     [](const StageRecord& s) { return s.status == "completed"; });
}

int RunManifest::exit_code() const {
  for (const auto& s : stages)
    if (s.status != "completed") return s.exit_code;
  return 0;
}

json RunManifest::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["versions"] = module_versions();
  j["inputs"] = config_path.empty() ? json::array() : json::array({config_path});
  j["stages"] = json::array();
  for (const auto& s : stages) {
    json r{{"name", s.name}, {"status", s.status}, {"seconds", s.seconds}};
    if (!s.error.empty()) r["error"] = s.error, r["exit_code"] = s.exit_code;
    j["stages"].push_back(r);
  }
  j["outputs"] = json::array();
  for (const auto& a : outputs) j["outputs"].push_back({{"path", a.path}, {"hash", a.hash}});
  j["seconds"] = seconds;
  return j;
}

// ------------------------------------------------------------------ run

Run::Run(RunConfig config, std::string out_dir, std::string config_path)
    : config_(std::move(config)), out_dir_(std::move(out_dir)) {
  ladder_ = build_ladder(config_.domain.profile, config_.domain.R0, config_.ladder_size());
  manifest_.config_hash = config_.hash();
  manifest_.seed = config_.seed;
  manifest_.config_path = std::move(config_path);
}

std::string Run::write(const std::string& name, const std::string& text) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir_);
  const fs::path p = fs::path(out_dir_) / name;
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw NumericError("cannot write " + p.string());
  Artifact a{p.string(), hex64(fnv1a(text))};
  auto it = std::find_if(manifest_.outputs.begin(), manifest_.outputs.end(),
                         [&](const Artifact& o) { return o.path == a.path; });
  if (it == manifest_.outputs.end())
    manifest_.outputs.push_back(a);
  else
    *it = a;
  return a.path;
}

std::string Run::write_json(const std::string& name, const json& doc) {
  json d = doc;
  d["config_hash"] = config_.hash();
  d["seed"] = config_.seed;
  return write(name, d.dump(2) + "\n");
}

std::string Run::write_manifest() {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir_);
  const fs::path p = fs::path(out_dir_) / "manifest.json";
  std::ofstream(p) << manifest_.to_json().dump(2) << "\n";
  return p.string();
}

const ExtendResult& Run::extend() {
  if (extend_) return *extend_;
  const auto& spec = config_.domain;
  spec.validate();
  ExtendResult r;
  const TrialRegion region{spec.x_left, ladder_.R(config_.levels)};
  auto build = [&](double eps) {
    ExtensionOptions o;
    o.epsilon = eps;
    o.delta = config_.strip_delta;
    o.collar = config_.collar;
    return assemble_extension(spec, config_.data, o);
  };
  std::optional<ExtensionField> chosen;
  for (double eps : config_.eps_ladder) {
    ExtensionField f = build(eps);
    const auto st = leray_hopf_ratio(f.as_function(), spec, region, config_.trials, config_.seed);
    r.rows.push_back({eps, st.ratio, st.quadratic_ratio});
    if (!config_.epsilon && !chosen && st.ratio <= 0.25 * config_.nu) {
      r.epsilon = eps;
      chosen = std::move(f);
    }
  }
  if (config_.epsilon) {
    r.epsilon = *config_.epsilon;
    chosen = build(r.epsilon);
    const auto st = leray_hopf_ratio(chosen->as_function(), spec, region, config_.trials, config_.seed);
    r.epsilon_admissible = st.ratio <= 0.25 * config_.nu;
  } else if (!chosen) {
    // No rung is admissible: keep the smallest and report it.
    r.epsilon = config_.eps_ladder.back();
    r.epsilon_admissible = false;
    chosen = build(r.epsilon);
  }
  r.field = std::move(*chosen);
  const FieldFn A = r.field.as_function();

  r.ledger_flux = r.field.ledger();
  for (int c = 0; c < config_.data.components(); ++c) {
    r.prescribed_flux.push_back(config_.data.flux(c));
    r.quadrature_flux.push_back(boundary_flux(A, spec, c));
  }
  for (int k = 1; k <= std::min(5, ladder_.K()); ++k)
    r.section_flux.push_back(cross_section_flux(A, spec, ladder_.R(k)));

  const auto pts = sample_points(spec, spec.x_left, ladder_.R(config_.levels), 80, 32);
  std::vector<double> div(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    const FieldSample s = A(pts[i]);
    div[i] = std::abs(s.divergence()) / std::max(1.0, s.grad.norm());
  });
  r.divergence_residual = div.empty() ? 0.0 : *std::max_element(div.begin(), div.end());

  json rows = json::array();
  for (const auto& e : r.rows)
    rows.push_back({{"epsilon", e.epsilon}, {"leray_hopf", e.ratio}, {"quadratic", e.quadratic_ratio}});
  write_json("extend.json", {{"epsilon", r.epsilon},
                             {"epsilon_admissible", r.epsilon_admissible},
                             {"leray_hopf", rows},
                             {"fluxes",
                              {{"prescribed", r.prescribed_flux},
                               {"ledger", r.ledger_flux},
                               {"quadrature", r.quadrature_flux},
                               {"sections", r.section_flux}}},
                             {"divergence_residual", r.divergence_residual}});
  write("field_A.csv", field_csv(config_, "extension", pts, A, "x1,x2,A1,A2"));
  extend_ = std::move(r);
  return *extend_;
}

const SolveResult& Run::solve() {
  if (solve_) return *solve_;
  const ExtendResult& ext = extend();
  const auto& spec = config_.domain;
  SolveConfig cfg;
  cfg.nu = config_.nu;
  cfg.epsilon = ext.epsilon;
  cfg.grid = config_.grid;
  cfg.stop_tol = config_.stop_tol;
  const ForceField force = config_.force ? ForceField::bump(config_.force->center, config_.force->radius,
                                                            config_.force->a1, config_.force->a2)
                                         : ForceField::zero();
  const FieldFn A = ext.field.as_function();
  SolveResult r;
  r.state = invade(spec, ladder_, A, force, cfg, config_.first_level, config_.levels);
  if (!force.is_zero())
    r.force_dual_norm = weighted_dual_norm(force, spec, ladder_, config_.levels, config_.grid).value;

  json levels = json::array();
  for (const auto& l : r.state.levels) {
    json steps = json::array();
    for (const auto& s : l.solve.steps)
      steps.push_back({{"lambda", s.lambda},
                       {"iterations", s.iterations},
                       {"energy_residual", s.energy_residual},
                       {"dirichlet", s.dirichlet}});
    json entry{{"level", l.level}, {"y", l.y}, {"steps", steps}, {"halvings", l.solve.halvings}};
    if (l.difference) entry["difference"] = *l.difference;
    if (l.relative_difference) entry["relative_difference"] = *l.relative_difference;
    levels.push_back(entry);

    const DiscreteField v = l.solve.v;
    const FieldFn u = [A, v](const Vec2& x) {
      FieldSample s = A(x);
      s += v.eval(x);
      return s;
    };
    const auto pts = sample_points(spec, spec.x_left, ladder_.R(l.level), 80, 32);
    write("field_l" + std::to_string(l.level) + ".csv",
          field_csv(config_, "velocity level " + std::to_string(l.level), pts, u, "x1,x2,u1,u2"));
  }
  write_json("solve.json", {{"levels", levels},
                            {"stopped_early", r.state.stopped_early},
                            {"epsilon", ext.epsilon},
                            {"nu", config_.nu},
                            {"force_dual_norm", r.force_dual_norm}});
  solve_ = std::move(r);
  return *solve_;
}

const VerifyResult& Run::verify() {
  if (verify_) return *verify_;
  const SolveResult& sol = solve();
  const auto& spec = config_.domain;
  const int kmax = std::min(5, ladder_.K() - 1);
  const int trials = config_.trials;

  std::vector<double> poincare, l4, mult, bog, bog_res;
  bool chain = true, stars = true;
  for (int k = 0; k <= kmax; ++k) {
    const auto cell = ladder_cell(spec, ladder_, k);
    // The same trials are carried to every cell.
    const std::uint64_t s = derive_seed(config_.seed, 1000);
    poincare.push_back(poincare_check(cell, TrialFamily::WallPolynomial, trials, s).constant);
    const auto f4 = l4_check(cell, TrialFamily::WallPolynomial, trials, s);
    l4.push_back(f4.direct.constant);
    mult.push_back(f4.multiplicative);
    chain = chain && f4.chain_holds();
    const BogovskiiTransform t(spec, ladder_, k);
    const auto d = solve_div(t, two_bump_data(t));
    bog.push_back(d.ratio);
    bog_res.push_back(d.residual);
    stars = stars && star_check(t, 200, s).pass() && check_transform(t, 1000).ok(t.L());
  }
  const auto hardy = hardy_check(HardyRegion{}, trials, config_.seed);

  const double c_B = *std::max_element(bog.begin(), bog.end());
  const double c_L4 = *std::max_element(l4.begin(), l4.end());
  const double c_star = c_B, c_2star = c_L4 * c_L4 * c_B / config_.nu;
  VerifyResult r;
  r.ledger = build_ledger(sol.state.levels.back().y, spec, ladder_, c_star, c_2star);
  const auto growth = growth_bound_check(sol.state, spec.profile, ladder_);
  const auto sat = saturation_check(sol.state);
  const auto kind = classify_case(spec.profile, spec.R0);

  json status = json::array();
  for (auto s : r.ledger.claim.status) status.push_back(status_name(s));
  json verdicts = r.ledger.verdicts;
  verdicts["poincare_uniform"] = spread(poincare) <= 2.0;
  verdicts["l4_uniform"] = spread(l4) <= 2.0;
  verdicts["l4_chain"] = chain;
  verdicts["bogovskii_uniform"] = spread(bog) <= 3.0;
  verdicts["transform_checks"] = stars;
  verdicts["growth_stable"] = growth.stable();
  verdicts["saturated"] = sat.saturated();
  r.report = {
      {"inequalities",
       {{"hardy", {{"constant", hardy.constant}, {"doubled", hardy.doubled}}},
        {"poincare", {{"per_k", poincare}, {"constant", *std::max_element(poincare.begin(), poincare.end())}, {"spread", spread(poincare)}}},
        {"l4", {{"per_k", l4}, {"multiplicative", mult}, {"constant", c_L4}, {"spread", spread(l4)}}},
        {"bogovskii", {{"per_k", bog}, {"residual", bog_res}, {"constant", c_B}, {"spread", spread(bog)}}}}},
      {"ledger",
       {{"c_star", c_star},
        {"c_2star", c_2star},
        {"c_data", r.ledger.c_data},
        {"k0", r.ledger.q.k0 ? json(*r.ledger.q.k0) : json(nullptr)},
        {"admissibility", r.ledger.q.admissibility},
        {"recursion", as_bools(r.ledger.claim.recursion)},
        {"claim", status}}},
      {"growth", {{"levels", growth.levels}, {"c_hat", growth.c_hat}, {"argmax", growth.argmax}, {"spread", growth.factor}}},
      {"saturation",
       {{"increments_decreasing", sat.increments_decreasing},
        {"last_fraction", sat.last_fraction},
        {"differences_decreasing", sat.differences_decreasing}}},
      {"case", kind.flux_case == FluxCase::Finite ? "finite" : "infinite"},
      {"verdicts", verdicts}};
  write_json("verify.json", r.report);
  verify_ = std::move(r);
  return *verify_;
}

bool Run::run_stage(const std::string& name) {
  StageRecord rec;
  rec.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (name == "extend")
      extend();
    else if (name == "solve")
      solve();
    else if (name == "verify")
      verify();
    else
      throw ConfigError("/", "unknown stage " + name);
    rec.status = "completed";
  } catch (const ConfigError& e) {
    rec.status = "failed", rec.error = e.what(), rec.exit_code = 2;
  } catch (const PreconditionError& e) {
    rec.status = "failed", rec.error = e.what(), rec.exit_code = 2;
  } catch (const HypothesisError& e) {
    rec.status = "failed", rec.error = e.what(), rec.exit_code = 4;
  } catch (const NumericError& e) {
    rec.status = "failed", rec.error = e.what(), rec.exit_code = 3;
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest_.seconds += rec.seconds;
  manifest_.stages.push_back(rec);
  return rec.status == "completed";
}

std::string emit_plot_data(Run& run, const std::string& kind) {
  const RunConfig& c = run.config();
  if (kind == "ratios") {
    if (!run.extend_result()) throw NotFoundError("ratios: the extend stage has not completed");
    std::string out = csv_header(c, "ratios", "epsilon,leray_hopf,ratio_over_eps,monotone");
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& e : run.extend_result()->rows) {
      out += fmt(e.epsilon) + "," + fmt(e.ratio) + "," + fmt(e.ratio / e.epsilon) + "," +
             (e.ratio < prev ? "1" : "0") + "\n";
      prev = e.ratio;
    }
    return run.write("ratios.csv", out);
  }
  if (kind == "field") {
    if (!run.solve_result()) throw NotFoundError("field: the solve stage has not completed");
    const auto& l = run.solve_result()->state.levels.back();
    const FieldFn A = run.extend_result()->field.as_function();
    const DiscreteField v = l.solve.v;
    const FieldFn u = [A, v](const Vec2& x) {
      FieldSample s = A(x);
      s += v.eval(x);
      return s;
    };
    const auto pts = sample_points(run.domain(), run.domain().x_left, run.ladder().R(l.level), 80, 32);
    return run.write("field.csv", field_csv(c, "field", pts, u, "x1,x2,u1,u2"));
  }
  if (kind == "ladder") {
    if (!run.verify_result()) throw NotFoundError("ladder: the verify stage has not completed");
    const auto& L = run.verify_result()->ledger;
    std::string out = csv_header(c, "ladder", "k,R_k,g,int_gm3,y_k,Q_k");
    for (std::size_t k = 0; k < L.y.size(); ++k)
      out += std::to_string(k) + "," + fmt(L.R[k]) + "," + fmt(L.g[k]) + "," + fmt(L.integral[k]) +
             "," + fmt(L.y[k]) + "," + fmt(L.Q[k]) + "\n";
    return run.write("ladder.csv", out);
  }
  throw ConfigError("/kind", "unknown plot kind " + kind);
}

json bogovskii_report(const Run& run, int k) {
  const BogovskiiTransform t(run.domain(), run.ladder(), k);
  const auto d = solve_div(t, two_bump_data(t));
  const bool star = star_check(t, 200, derive_seed(run.config().seed, 1000 + static_cast<std::uint64_t>(k))).pass();
  return {{"k", k},
          {"ratio", d.ratio},
          {"residual", d.residual},
          {"physical_residual", d.physical_residual},
          {"star_check", star ? "pass" : "fail"},
          {"transform_check", check_transform(t, 1000).ok(t.L()) ? "pass" : "fail"}};
}

RunManifest run_pipeline(const std::string& config_path, const std::string& out_dir,
                         std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_config(config_path);
  if (seed) override_seed(cfg, *seed);
  Run run(std::move(cfg), out_dir, config_path);
  bool ok = true;
  for (const char* stage : {"extend", "solve", "verify"})
    if (ok) ok = run.run_stage(stage);
  if (ok)
    for (const char* kind : {"ratios", "field", "ladder"}) emit_plot_data(run, kind);
  run.write_manifest();
  return run.manifest();
}

}  // namespace outflux
