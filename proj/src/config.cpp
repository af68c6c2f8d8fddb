#include "loorisk/config.hpp"

#include "loorisk/rng.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace loorisk {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

Index RunConfig::p_for(Index n) const {
  if (p) return *p;
  if (p_over_n) return std::max<Index>(1, static_cast<Index>(std::llround(*p_over_n * double(n))));
  return n;
}

Index RunConfig::k_for(Index n) const {
  if (k) return *k;
  if (k_over_n) return static_cast<Index>(std::llround(*k_over_n * double(n)));
  return p_for(n);
}

ExperimentConfig RunConfig::experiment() const {
  if (!kind) throw ConfigError(source + ": [experiment] kind is required");
  ExperimentConfig out;
  out.kind = *kind;
  out.model = model;
  out.solver = solver;
  out.threads = threads.value_or(1);
  out.quad_order = quad_order;
  out.include_alo = include_alo;
  for (Index n : ns)
    for (double lam : lambdas) {
      SimConfig c = design;
      c.n = n;
      c.p = p_for(n);
      c.k = k_for(n);
      c.lambda = lam;
      c.reps = reps;
      c.seed = substream_seed(seed, static_cast<std::uint64_t>(n));
      c.k_folds = *kind == ExperimentKind::figure1 ? k_folds : std::vector<int>{};
      out.cells.push_back(std::move(c));
    }
  return out;
}

SimConfig RunConfig::first_cell() const {
  SimConfig c = design;
  c.n = ns.front();
  c.p = p_for(c.n);
  c.k = k_for(c.n);
  c.lambda = lambdas.front();
  c.reps = 1;
  c.seed = substream_seed(seed, static_cast<std::uint64_t>(c.n));
  c.k_folds = k_folds;
  return c;
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"experiment", {"kind", "seed", "reps", "threads", "quad_order", "include_alo"}},
      {"design",
       {"n", "p", "p_over_n", "k", "k_over_n", "covariance", "noise_var", "beta_dist", "family",
        "shape", "random_support"}},
      {"model",
       {"loss", "huber_scale", "smooth_scale", "shape", "reg", "mix", "smooth_sharpness",
        "lambda", "phi"}},
      {"solver", {"tol", "max_iter", "line_search_shrink"}},
      {"data", {"path", "response_column", "header"}},
      {"cv", {"k_folds"}},
      {"audit", {"sample", "t_grid", "abs_tol"}},
  };
  return s;
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

// "section.key" -> 1-based line, for diagnostics (ptree does not keep positions).
std::map<std::string, int> key_lines(const std::string& text) {
  std::map<std::string, int> out;
  std::istringstream in(text);
  std::string line, section;
  for (int no = 1; std::getline(in, line); ++no) {
    line = trim(line);
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      out[section] = no;
    } else if (const auto eq = line.find('='); eq != std::string::npos) {
      out[section + "." + trim(line.substr(0, eq))] = no;
    }
  }
  return out;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string source, std::map<std::string, int> lines)
      : tree_(tree), source_(std::move(source)), lines_(std::move(lines)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto it = lines_.find(key);
    const std::string where =
        it != lines_.end() ? fmt::format("{}:{}", source_, it->second) : source_;
    const auto dot = key.find('.');
    throw ConfigError(fmt::format("{}: [{}] {}: {}", where, key.substr(0, dot),
                                  dot == std::string::npos ? "" : key.substr(dot + 1), what));
  }

  std::optional<std::string> raw(const std::string& key) const {
    if (const auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.')))
      return trim(*v);
    return std::nullopt;
  }

  template <typename T>
  T parse_number(const std::string& key, const std::string& text) const {
    T v{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty())
      fail(key, fmt::format("expected {}, got '{}'",
                            std::is_floating_point_v<T> ? "a number" : "an integer", text));
    if constexpr (std::is_floating_point_v<T>)
      if (!std::isfinite(v)) fail(key, "value must be finite");
    return v;
  }

  template <typename T>
  std::optional<T> number(const std::string& key) const {
    if (auto r = raw(key)) return parse_number<T>(key, *r);
    return std::nullopt;
  }

  template <typename T>
  std::optional<std::vector<T>> list(const std::string& key) const {
    auto r = raw(key);
    if (!r) return std::nullopt;
    std::vector<T> out;
    std::istringstream in(*r);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_number<T>(key, trim(item)));
    if (out.empty()) fail(key, "list is empty");
    return out;
  }

  std::optional<bool> boolean(const std::string& key) const {
    auto r = raw(key);
    if (!r) return std::nullopt;
    if (*r == "true" || *r == "1" || *r == "yes") return true;
    if (*r == "false" || *r == "0" || *r == "no") return false;
    fail(key, "expected true or false, got '" + *r + "'");
  }

  // Parse with a throwing converter, re-raising as a located ConfigError.
  template <typename F>
  auto convert(const std::string& key, const std::string& text, F&& f) const {
    try {
      return f(text);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail(key, e.what());
    }
  }

 private:
  const pt::ptree& tree_;
  std::string source_;
  std::map<std::string, int> lines_;
};

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}:{}: {}", source, e.line(), e.message()));
  }
  const Reader rd(tree, source, key_lines(text));
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) rd.fail(section, "unknown section");
    if (!body.data().empty()) rd.fail(section, "key outside of a section");
    for (const auto& [key, value] : body) {
      if (!value.empty()) rd.fail(section + "." + key, "nested keys are not supported");
      if (!it->second.count(key)) rd.fail(section + "." + key, "unknown key");
    }
  }

  RunConfig c;
  c.source = source;
  if (auto v = rd.raw("experiment.kind"))
    c.kind = rd.convert("experiment.kind", *v, [](const std::string& s) {
      return experiment_kind_from_string(s);
    });
  if (auto v = rd.number<std::uint64_t>("experiment.seed")) c.seed = *v;
  if (auto v = rd.number<Index>("experiment.reps")) {
    if (*v < 1) rd.fail("experiment.reps", "must be >= 1");
    c.reps = *v;
  }
  if (auto v = rd.number<int>("experiment.threads")) {
    if (*v < 1) rd.fail("experiment.threads", "must be >= 1");
    c.threads = *v;
  }
  if (auto v = rd.number<int>("experiment.quad_order")) {
    if (*v < 20) rd.fail("experiment.quad_order", "must be >= 20");
    c.quad_order = *v;
  }
  if (auto v = rd.boolean("experiment.include_alo")) c.include_alo = *v;

  if (auto v = rd.list<Index>("design.n")) {
    for (Index n : *v)
      if (n < 2) rd.fail("design.n", "every n must be >= 2");
    c.ns = *v;
  }
  c.p = rd.number<Index>("design.p");
  c.p_over_n = rd.number<double>("design.p_over_n");
  if (c.p && c.p_over_n) rd.fail("design.p_over_n", "give either p or p_over_n, not both");
  if (c.p && *c.p < 1) rd.fail("design.p", "must be >= 1");
  if (c.p_over_n && !(*c.p_over_n > 0)) rd.fail("design.p_over_n", "must be positive");
  c.k = rd.number<Index>("design.k");
  c.k_over_n = rd.number<double>("design.k_over_n");
  if (c.k && c.k_over_n) rd.fail("design.k_over_n", "give either k or k_over_n, not both");
  if (auto v = rd.raw("design.covariance"))
    c.design.covariance = rd.convert("design.covariance", *v, covariance_spec_from_string);
  if (auto v = rd.number<double>("design.noise_var")) {
    if (*v < 0) rd.fail("design.noise_var", "must be >= 0");
    c.design.noise_var = *v;
  }
  if (auto v = rd.raw("design.beta_dist"))
    c.design.beta_dist = rd.convert("design.beta_dist", *v, beta_dist_from_string);
  if (auto v = rd.raw("design.family"))
    c.design.family = rd.convert("design.family", *v, [](const std::string& s) {
      return response_family_from_string(s);
    });
  if (auto v = rd.number<double>("design.shape")) {
    if (!(*v > 0)) rd.fail("design.shape", "must be positive");
    c.design.shape = *v;
  }
  if (auto v = rd.boolean("design.random_support")) c.design.random_support = *v;
  for (Index n : c.ns) {
    if (c.k_for(n) > c.p_for(n) || c.k_for(n) < 0)
      rd.fail(c.k ? "design.k" : "design.k_over_n",
              fmt::format("needs 0 <= k <= p (n={}, p={}, k={})", n, c.p_for(n), c.k_for(n)));
  }

  if (auto v = rd.raw("model.loss"))
    c.model.loss.family = rd.convert("model.loss", *v, [](const std::string& s) {
      return loss_family_from_string(s);
    });
  c.model.loss.huber_scale = rd.number<double>("model.huber_scale");
  c.model.loss.smooth_scale = rd.number<double>("model.smooth_scale");
  c.model.loss.shape = rd.number<double>("model.shape");
  rd.convert("model.loss", rd.raw("model.loss").value_or("squared"),
             [&](const std::string&) { c.model.loss.validate(); return 0; });
  if (auto v = rd.raw("model.reg"))
    c.model.reg.family = rd.convert("model.reg", *v, [](const std::string& s) {
      return reg_family_from_string(s);
    });
  if (c.model.reg.family == RegFamily::l1) c.model.reg.mix = 1;
  if (auto v = rd.number<double>("model.mix")) c.model.reg.mix = *v;
  if (auto v = rd.number<double>("model.smooth_sharpness")) c.model.reg.smooth_sharpness = *v;
  rd.convert("model.reg", rd.raw("model.reg").value_or("ridge"),
             [&](const std::string&) { c.model.reg.validate(); return 0; });
  if (auto v = rd.list<double>("model.lambda")) {
    for (double l : *v)
      if (!(l > 0)) rd.fail("model.lambda", "every lambda must be positive");
    c.lambdas = *v;
  }
  c.model.lambda = c.lambdas.front();
  if (auto v = rd.raw("model.phi"))
    c.model.phi = rd.convert("model.phi", *v, [](const std::string& s) {
      return error_function_from_string(s);
    });

  if (auto v = rd.number<double>("solver.tol")) {
    if (!(*v > 0)) rd.fail("solver.tol", "must be positive");
    c.solver.tol = *v;
  }
  if (auto v = rd.number<int>("solver.max_iter")) {
    if (*v < 1) rd.fail("solver.max_iter", "must be >= 1");
    c.solver.max_iter = *v;
  }
  if (auto v = rd.number<double>("solver.line_search_shrink")) {
    if (!(*v > 0 && *v < 1)) rd.fail("solver.line_search_shrink", "must lie in (0, 1)");
    c.solver.line_search_shrink = *v;
  }

  if (auto v = rd.raw("data.path")) {
    fs::path p(*v);
    if (p.is_relative() && !source.empty() && source.front() != '<')
      p = fs::path(source).parent_path() / p;
    c.data_path = p;
  }
  c.response_column = rd.raw("data.response_column");
  if (auto v = rd.boolean("data.header")) c.data_header = *v;

  if (auto v = rd.list<int>("cv.k_folds")) {
    for (int K : *v)
      if (K < 2) rd.fail("cv.k_folds", "every K must be >= 2");
    c.k_folds = *v;
  }

  if (auto v = rd.number<Index>("audit.sample")) {
    if (*v < 1) rd.fail("audit.sample", "must be >= 1");
    c.audit_sample = *v;
  }
  if (auto v = rd.number<int>("audit.t_grid")) {
    if (*v < 2) rd.fail("audit.t_grid", "must be >= 2");
    c.audit_t_grid = *v;
  }
  if (auto v = rd.number<double>("audit.abs_tol")) {
    if (*v < 0) rd.fail("audit.abs_tol", "must be >= 0");
    c.audit_abs_tol = *v;
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

fs::path preset_path(const std::string& name) {
  fs::path dir;
  if (const char* env = std::getenv("LOORISK_PRESET_DIR"); env && *env) {
    dir = env;
  } else {
#ifdef LOORISK_PRESET_DIR
    dir = LOORISK_PRESET_DIR;
#else
    dir = "presets";
#endif
  }
  const fs::path path = dir / (name + ".ini");
  if (!fs::exists(path)) throw ConfigError("unknown preset '" + name + "' (looked for " + path.string() + ")");
  return path;
}

Dataset<double> load_csv_dataset(const fs::path& path, bool header,
                                 const std::optional<std::string>& response_column) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file " + path.string());
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::string line;
  int no = 0;
  const auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
  };
  while (std::getline(in, line)) {
    ++no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (header && names.empty()) {
      names = cells;
      continue;
    }
    std::vector<double> row;
    for (const auto& cell : cells) {
      double v = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty())
        throw ConfigError(fmt::format("{}:{}: not a number: '{}'", path.string(), no, cell));
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError(fmt::format("{}:{}: expected {} columns, got {}", path.string(), no,
                                    rows.front().size(), row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(path.string() + ": no data rows");
  const std::size_t cols = rows.front().size();
  if (cols < 2) throw ConfigError(path.string() + ": need a response and at least one feature");
  if (header && names.size() != cols)
    throw ConfigError(path.string() + ": header and data column counts differ");
  std::size_t resp = cols - 1;
  if (response_column) {
    const auto it = std::find(names.begin(), names.end(), *response_column);
    if (it != names.end()) {
      resp = static_cast<std::size_t>(it - names.begin());
    } else {
      std::size_t idx = 0;
      const auto& s = *response_column;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), idx);
      if (ec != std::errc() || ptr != s.data() + s.size() || idx >= cols)
        throw ConfigError(path.string() + ": no response column '" + s + "'");
      resp = idx;
    }
  }
  Dataset<double> d{MatrixX<double>(static_cast<Index>(rows.size()), static_cast<Index>(cols - 1)),
                    VectorX<double>(static_cast<Index>(rows.size()))};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Index j = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (c == resp)
        d.y(static_cast<Index>(i)) = rows[i][c];
      else
        d.X(static_cast<Index>(i), j++) = rows[i][c];
    }
  }
  d.validate();
  return d;
}

}  // namespace loorisk
