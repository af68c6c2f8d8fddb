#pragma once

#include "loorisk/bounds.hpp"
#include "loorisk/experiments.hpp"
#include "loorisk/risk.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace loorisk {

using Json = nlohmann::ordered_json;

/// Reals with 17 significant digits; empty for a missing value.
std::string format_real(double v);
std::string format_real(const std::optional<double>& v);

// CSV bodies. Column order is fixed:
//   experiment  n,p,lambda,estimator,mse,mse_se,bound_over_n[,mean,mean_se]  (mean columns for figure1)
//   risk        index,per_sample,h_diag,flagged
//   bounds      n,rho,delta,lambda,c0,c1,nu,C_b,C_v,bound_over_n
std::string to_csv(const ExperimentResult& result);
std::string to_csv(const RiskReport<double>& report);
std::string to_csv(const BoundReport<double>& report);

// JSON mirrors. Non-finite reals are written as null; a null per-sample
// risk reads back as +inf, any other null real as NaN.
Json to_json(const SimConfig& cfg);
Json to_json(const ExperimentResult& result);
Json to_json(const RiskReport<double>& report);
Json to_json(const BoundReport<double>& report);
Json to_json(const FitResult<double>& fit);

SimConfig sim_config_from_json(const Json& j);
ExperimentResult experiment_result_from_json(const Json& j);
RiskReport<double> risk_report_from_json(const Json& j);
BoundReport<double> bound_report_from_json(const Json& j);

struct OutputFile {
  std::string path;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string version;
  std::string started;  // UTC, ISO 8601
  std::string finished;
  std::vector<OutputFile> outputs;
};

std::string utc_timestamp();
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

Json to_json(const RunManifest& m);
RunManifest run_manifest_from_json(const Json& j);

/// Writes results.csv and report.json into `out_dir`, then manifest.json with
/// digests of both. Returns the written paths, manifest last.
std::vector<std::filesystem::path> write_results(const std::filesystem::path& out_dir,
                                                 const std::string& csv, const Json& report,
                                                 RunManifest manifest);

/// True when every digest listed in out_dir/manifest.json matches its file.
bool verify_manifest(const std::filesystem::path& out_dir);

}  // namespace loorisk
