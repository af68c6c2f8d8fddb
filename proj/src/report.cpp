#include "loorisk/report.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

namespace loorisk {

namespace fs = std::filesystem;

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

std::string format_real(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string();
}

namespace {

Json real(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json real(const std::optional<double>& v) { return v ? real(*v) : Json(nullptr); }

double get_real(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::optional<double> get_opt(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

Json vector_json(const VectorX<double>& v, bool inf_as_null = true) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(inf_as_null ? real(v(i)) : Json(v(i)));
  return a;
}

VectorX<double> vector_from(const Json& a, double null_value) {
  VectorX<double> v(static_cast<Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    v(static_cast<Index>(i)) = a[i].is_null() ? null_value : a[i].get<double>();
  return v;
}

}  // namespace

std::string to_csv(const ExperimentResult& result) {
  const bool fig = result.kind == ExperimentKind::figure1;
  std::string out = "n,p,lambda,estimator,mse,mse_se,bound_over_n";
  out += fig ? ",mean,mean_se\n" : "\n";
  for (const auto& r : result.rows) {
    out += fmt::format("{},{},{},{},{},{},{}", r.n, r.p, format_real(r.lambda), r.estimator,
                       format_real(r.mse), format_real(r.mse_se), format_real(r.bound_over_n));
    if (fig) out += fmt::format(",{},{}", format_real(r.mean), format_real(r.mean_se));
    out += '\n';
  }
  return out;
}

std::string to_csv(const RiskReport<double>& report) {
  std::string out = "index,per_sample,h_diag,flagged\n";
  std::vector<bool> flagged(static_cast<std::size_t>(report.per_sample.size()), false);
  for (Index i : report.flagged) flagged[static_cast<std::size_t>(i)] = true;
  for (Index i = 0; i < report.per_sample.size(); ++i) {
    const double v = report.per_sample(i);
    out += fmt::format("{},{},{},{}\n", i, std::isfinite(v) ? format_real(v) : std::string("inf"),
                       report.h_diag ? format_real((*report.h_diag)(i)) : std::string(),
                       flagged[static_cast<std::size_t>(i)] ? 1 : 0);
  }
  return out;
}

std::string to_csv(const BoundReport<double>& r) {
  return fmt::format("n,rho,delta,lambda,c0,c1,nu,C_b,C_v,bound_over_n\n{},{},{},{},{},{},{},{},{},{}\n",
                     r.n, format_real(r.rho), format_real(r.delta), format_real(r.lambda),
                     format_real(r.c0), format_real(r.c1), format_real(r.nu), format_real(r.C_b),
                     format_real(r.C_v), format_real(r.bound_over_n));
}

Json to_json(const SimConfig& c) {
  Json j;
  j["n"] = c.n;
  j["p"] = c.p;
  j["k"] = c.k;
  j["covariance"] = to_string(c.covariance);
  j["noise_var"] = c.noise_var;
  j["beta_dist"] = to_string(c.beta_dist);
  j["family"] = std::string(to_string(c.family));
  j["shape"] = c.shape;
  j["lambda"] = c.lambda;
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  j["k_folds"] = c.k_folds;
  j["random_support"] = c.random_support;
  return j;
}

SimConfig sim_config_from_json(const Json& j) {
  SimConfig c;
  c.n = j.at("n").get<Index>();
  c.p = j.at("p").get<Index>();
  c.k = j.at("k").get<Index>();
  c.covariance = covariance_spec_from_string(j.at("covariance").get<std::string>());
  c.noise_var = j.at("noise_var").get<double>();
  c.beta_dist = beta_dist_from_string(j.at("beta_dist").get<std::string>());
  c.family = response_family_from_string(j.at("family").get<std::string>());
  c.shape = j.at("shape").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.reps = j.at("reps").get<Index>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.k_folds = j.at("k_folds").get<std::vector<int>>();
  c.random_support = j.at("random_support").get<bool>();
  return c;
}

Json to_json(const ExperimentResult& res) {
  Json j;
  j["kind"] = std::string(to_string(res.kind));
  Json rows = Json::array();
  for (const auto& r : res.rows) {
    Json row;
    row["n"] = r.n;
    row["p"] = r.p;
    row["lambda"] = r.lambda;
    row["estimator"] = r.estimator;
    row["mse"] = real(r.mse);
    row["mse_se"] = real(r.mse_se);
    row["bound_over_n"] = real(r.bound_over_n);
    row["mean"] = real(r.mean);
    row["mean_se"] = real(r.mean_se);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  if (res.slope_fit) {
    const auto& s = *res.slope_fit;
    j["slope_fit"] = {{"slope", s.slope},
                      {"slope_se", s.slope_se},
                      {"intercept", s.intercept},
                      {"intercept_se", s.intercept_se},
                      {"adj_r2", s.adj_r2}};
  } else {
    j["slope_fit"] = nullptr;
  }
  Json echo = Json::array();
  for (const auto& c : res.config_echo) echo.push_back(to_json(c));
  j["config_echo"] = std::move(echo);
  Json wt = Json::array();
  for (const auto& w : res.wall_time)
    wt.push_back({{"n", w.n}, {"lambda", w.lambda}, {"seconds", w.seconds}});
  j["wall_time"] = std::move(wt);
  return j;
}

ExperimentResult experiment_result_from_json(const Json& j) {
  ExperimentResult res;
  res.kind = experiment_kind_from_string(j.at("kind").get<std::string>());
  for (const auto& row : j.at("rows")) {
    ExperimentRow r;
    r.n = row.at("n").get<Index>();
    r.p = row.at("p").get<Index>();
    r.lambda = row.at("lambda").get<double>();
    r.estimator = row.at("estimator").get<std::string>();
    r.mse = get_real(row.at("mse"));
    r.mse_se = get_opt(row, "mse_se");
    r.bound_over_n = get_opt(row, "bound_over_n");
    r.mean = get_opt(row, "mean");
    r.mean_se = get_opt(row, "mean_se");
    res.rows.push_back(std::move(r));
  }
  if (const auto& s = j.at("slope_fit"); !s.is_null())
    res.slope_fit = SlopeFit{s.at("slope").get<double>(), s.at("slope_se").get<double>(),
                             s.at("intercept").get<double>(), s.at("intercept_se").get<double>(),
                             s.at("adj_r2").get<double>()};
  for (const auto& c : j.at("config_echo")) res.config_echo.push_back(sim_config_from_json(c));
  for (const auto& w : j.at("wall_time"))
    res.wall_time.push_back(
        {w.at("n").get<Index>(), w.at("lambda").get<double>(), w.at("seconds").get<double>()});
  return res;
}

Json to_json(const RiskReport<double>& r) {
  Json j;
  j["method"] = std::string(to_string(r.method));
  j["estimate"] = real(r.estimate);
  j["per_sample"] = vector_json(r.per_sample);
  j["h_diag"] = r.h_diag ? vector_json(*r.h_diag) : Json(nullptr);
  j["active_set"] = r.active_set ? Json(*r.active_set) : Json(nullptr);
  j["flagged"] = r.flagged;
  j["folds"] = r.folds;
  return j;
}

RiskReport<double> risk_report_from_json(const Json& j) {
  RiskReport<double> r;
  r.method = risk_method_from_string(j.at("method").get<std::string>());
  r.estimate = get_real(j.at("estimate"));
  r.per_sample = vector_from(j.at("per_sample"), std::numeric_limits<double>::infinity());
  if (!j.at("h_diag").is_null())
    r.h_diag = vector_from(j.at("h_diag"), std::numeric_limits<double>::quiet_NaN());
  if (!j.at("active_set").is_null()) r.active_set = j.at("active_set").get<std::vector<Index>>();
  r.flagged = j.at("flagged").get<std::vector<Index>>();
  r.folds = j.at("folds").get<int>();
  return r;
}

Json to_json(const BoundReport<double>& r) {
  Json j;
  j["n"] = r.n;
  j["rho"] = real(r.rho);
  j["delta"] = real(r.delta);
  j["lambda"] = real(r.lambda);
  j["c0"] = real(r.c0);
  j["c1"] = real(r.c1);
  j["nu"] = real(r.nu);
  j["C_b"] = real(r.C_b);
  j["C_v"] = real(r.C_v);
  j["bound_over_n"] = real(r.bound_over_n);
  if (r.audit) {
    const auto& a = *r.audit;
    Json aj;
    aj["c0_emp"] = real(a.c0_emp);
    aj["nu_emp"] = real(a.nu_emp);
    aj["c0_tilde_est"] = real(a.c0_tilde_est);
    aj["c4_est"] = real(a.c4_est);
    aj["nu_tilde_est"] = real(a.nu_tilde_est);
    aj["t_grid_size"] = a.t_grid_size;
    aj["audited"] = a.audited;
    Json s = Json::array();
    for (double v : a.sigma_min_per_index) s.push_back(real(v));
    aj["sigma_min_per_index"] = std::move(s);
    j["audit"] = std::move(aj);
  } else {
    j["audit"] = nullptr;
  }
  return j;
}

BoundReport<double> bound_report_from_json(const Json& j) {
  BoundReport<double> r;
  r.n = j.at("n").get<Index>();
  r.rho = get_real(j.at("rho"));
  r.delta = get_real(j.at("delta"));
  r.lambda = get_real(j.at("lambda"));
  r.c0 = get_real(j.at("c0"));
  r.c1 = get_real(j.at("c1"));
  r.nu = get_real(j.at("nu"));
  r.C_b = get_real(j.at("C_b"));
  r.C_v = get_real(j.at("C_v"));
  r.bound_over_n = get_real(j.at("bound_over_n"));
  if (const auto& aj = j.at("audit"); !aj.is_null()) {
    AssumptionAudit<double> a;
    a.c0_emp = get_real(aj.at("c0_emp"));
    a.nu_emp = get_real(aj.at("nu_emp"));
    a.c0_tilde_est = get_real(aj.at("c0_tilde_est"));
    a.c4_est = get_real(aj.at("c4_est"));
    a.nu_tilde_est = get_real(aj.at("nu_tilde_est"));
    a.t_grid_size = aj.at("t_grid_size").get<int>();
    a.audited = aj.at("audited").get<std::vector<Index>>();
    for (const auto& v : aj.at("sigma_min_per_index")) a.sigma_min_per_index.push_back(get_real(v));
    r.audit = std::move(a);
  }
  return r;
}

Json to_json(const FitResult<double>& f) {
  Json j;
  j["beta_hat"] = vector_json(f.beta_hat);
  j["objective"] = real(f.objective);
  j["grad_inf_norm"] = real(f.grad_inf_norm);
  j["iterations"] = f.iterations;
  j["converged"] = f.converged;
  j["gradient_fallback"] = f.gradient_fallback;
  j["step_size"] = real(f.step_size);
  return j;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest failed");
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
  return out;
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

Json to_json(const RunManifest& m) {
  Json j;
  j["command"] = m.command;
  j["config_path"] = m.config_path;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["started"] = m.started;
  j["finished"] = m.finished;
  Json outs = Json::array();
  for (const auto& o : m.outputs)
    outs.push_back({{"path", o.path}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  j["outputs"] = std::move(outs);
  return j;
}

RunManifest run_manifest_from_json(const Json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config_path = j.at("config_path").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.version = j.at("version").get<std::string>();
  m.started = j.at("started").get<std::string>();
  m.finished = j.at("finished").get<std::string>();
  for (const auto& o : j.at("outputs"))
    m.outputs.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>(),
                         o.at("bytes").get<std::uintmax_t>()});
  return m;
}

std::vector<fs::path> write_results(const fs::path& out_dir, const std::string& csv,
                                    const Json& report, RunManifest manifest) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  const std::pair<const char*, std::string> files[] = {{"results.csv", csv},
                                                       {"report.json", report.dump(2) + "\n"}};
  for (const auto& [name, text] : files) {
    const fs::path path = out_dir / name;
    write_file(path, text);
    manifest.outputs.push_back({name, sha256_hex(text), text.size()});
    written.push_back(path);
  }
  if (manifest.finished.empty()) manifest.finished = utc_timestamp();
  const fs::path mpath = out_dir / "manifest.json";
  write_file(mpath, to_json(manifest).dump(2) + "\n");
  written.push_back(mpath);
  return written;
}

bool verify_manifest(const fs::path& out_dir) {
  const auto m = run_manifest_from_json(Json::parse(read_file(out_dir / "manifest.json")));
  for (const auto& o : m.outputs) {
    const fs::path path = out_dir / o.path;
    if (!fs::exists(path) || fs::file_size(path) != o.bytes || sha256_file(path) != o.sha256)
      return false;
  }
  return true;
}

}  // namespace loorisk
