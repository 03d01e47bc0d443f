// Stage orchestration (extend -> solve -> verify), artifacts and manifests.
#pragma once

#include "outflux/bogovskii.hpp"
#include "outflux/config.hpp"
#include "outflux/estimates.hpp"
#include "outflux/extension.hpp"
#include "outflux/solver.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace outflux {

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpsilonRow {
  double epsilon = 0.0;
  double ratio = 0.0;            // max |int (w.grad)w.A| / |grad w|^2
  double quadratic_ratio = 0.0;  // max int |A|^2 |w|^2 / |grad w|^2
};

struct ExtendResult {
  double epsilon = 0.0;
  bool epsilon_admissible = true;  // ratio <= nu / 4 at the chosen epsilon
  std::vector<EpsilonRow> rows;
  std::vector<double> ledger_flux, quadrature_flux, prescribed_flux;  // per component
  std::vector<double> section_flux;  // at R_1..R_min(5, K)
  double divergence_residual = 0.0;  // max |div A| / max(1, |grad A|) over samples
  ExtensionField field;
};

struct SolveResult {
  ContinuationState state;
  double force_dual_norm = 0.0;
};

struct VerifyResult {
  nlohmann::json report;
  EstimateLedger ledger;
};

struct StageRecord {
  std::string name;
  std::string status;  // "completed" or "failed"
  std::string error;
  int exit_code = 0;
  double seconds = 0.0;
};

struct Artifact {
  std::string path;
  std::string hash;  // FNV-1a of the bytes
};

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string config_path;
  std::vector<StageRecord> stages;
  std::vector<Artifact> outputs;
  double seconds = 0.0;

  bool ok() const;
  /// Exit code of the first failed stage, 0 when all completed.
  int exit_code() const;
  nlohmann::json to_json() const;
};

/// In-memory state of a run writing into `out_dir`.
class Run {
 public:
  Run(RunConfig config, std::string out_dir, std::string config_path = {});

  const RunConfig& config() const { return config_; }
  const DomainSpec& domain() const { return config_.domain; }
  const TruncationLadder& ladder() const { return ladder_; }
  const RunManifest& manifest() const { return manifest_; }

  const ExtendResult& extend();
  const SolveResult& solve();
  const VerifyResult& verify();

  /// Runs the stage and earlier ones, recording failures in the manifest
  /// instead of throwing. Returns false when the stage failed.
  bool run_stage(const std::string& name);

  /// Writes `text` under the output directory with the config-hash header
  /// prepended for CSV files, and records it.
  std::string write(const std::string& name, const std::string& text);
  std::string write_json(const std::string& name, const nlohmann::json& doc);
  std::string write_manifest();

  const std::optional<ExtendResult>& extend_result() const { return extend_; }
  const std::optional<SolveResult>& solve_result() const { return solve_; }
  const std::optional<VerifyResult>& verify_result() const { return verify_; }

 private:
  RunConfig config_;
  std::string out_dir_;
  TruncationLadder ladder_;
  RunManifest manifest_;
  std::optional<ExtendResult> extend_;
  std::optional<SolveResult> solve_;
  std::optional<VerifyResult> verify_;
};

/// kind: "ladder" (k,R_k,g,int_gm3,y_k,Q_k), "field" (x1,x2,u1,u2 of the
/// last level) or "ratios" (epsilon,leray_hopf,ratio_over_eps,monotone).
/// Throws NotFoundError when the producing stage has not completed.
std::string emit_plot_data(Run& run, const std::string& kind);

/// Bogovskii report for cell k: {k, ratio, residual, star_check}.
nlohmann::json bogovskii_report(const Run& run, int k);

/// extend, solve, verify, the three plot files and the manifest.
RunManifest run_pipeline(const std::string& config_path, const std::string& out_dir,
                         std::optional<std::uint64_t> seed = {});

/// Applies a seed override to a parsed config (and its hashed source).
void override_seed(RunConfig& config, std::uint64_t seed);

/// Two-bump divergence data on the rescaled cell, zero mean by symmetry.
std::function<double(const Vec2&)> two_bump_data(const BogovskiiTransform& t);

}  // namespace outflux
