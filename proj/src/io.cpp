#include "ebcrl/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ebcrl/errors.hpp"

namespace ebcrl {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e) throw IoError("not a number: '" + s + "'");
  return v;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void check_csv_field(const std::string& s, const std::string& what) {
  if (s.find_first_of(",\"\n\r") != std::string::npos)
    throw ConfigError(what + " '" + s + "' must not contain commas, quotes or newlines");
}

}  // namespace

void write_matrix_csv(const fs::path& path, const Matrix& m, const std::string& prefix) {
  std::string out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (c) out += ',';
    out += prefix + std::to_string(c + 1);
  }
  out += '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

Matrix read_matrix_csv(const fs::path& path, const std::string& prefix) {
  const auto lines = split_lines(read_text_file(path));
  if (lines.empty()) throw IoError(path.string() + ": empty matrix file");
  const auto header = split_csv_line(lines.front());
  if (!prefix.empty())
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] != prefix + std::to_string(c + 1))
        throw ConfigError(path.string() + ": header column " + std::to_string(c + 1) + " is '" +
                          header[c] + "', expected '" + prefix + std::to_string(c + 1) + "'");
  Matrix m(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(header.size()));
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    if (cells.size() != header.size())
      throw IoError(path.string() + ": line " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                    " fields, expected " + std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        m(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = parse_double(cells[c]);
      } catch (const IoError&) {
        throw IoError(path.string() + ": line " + std::to_string(r + 1) + ", column " + std::to_string(c + 1) +
                      ": not a number");
      }
    }
  }
  return m;
}

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ": JSON syntax error at line " + std::to_string(line) + ", column " +
                      std::to_string(col));
  }
}

json read_json_file(const fs::path& path) { return parse_json_text(read_text_file(path), path.string()); }

// ---------------------------------------------------------------- config

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

std::vector<Edge> parse_edges(const json& j, int d, const std::string& where) {
  std::vector<Edge> edges;
  if (!j.is_array()) throw ConfigError(where + " must be an array of [from, to] pairs");
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw ConfigError(where + " entries must be [from, to] integer pairs");
    const int k = e[0].get<int>();
    const int t = e[1].get<int>();
    if (k < 1 || k > d || t < 1 || t > d)
      throw IndexError(where + ": edge [" + std::to_string(k) + ", " + std::to_string(t) +
                       "] references a node outside 1.." + std::to_string(d));
    edges.emplace_back(k - 1, t - 1);
  }
  return edges;
}

std::vector<Edge> named_graph(const std::string& name, int d) {
  std::vector<Edge> edges;
  if (name == "chain") {
    for (int j = 1; j < d; ++j) edges.emplace_back(j - 1, j);
  } else if (name == "complete") {
    for (int a = 0; a < d; ++a)
      for (int b = a + 1; b < d; ++b) edges.emplace_back(a, b);
  } else if (name != "empty") {
    throw ConfigError("graph must be 'chain', 'empty' or 'complete', got '" + name + "'");
  }
  return edges;
}

std::vector<DomainSpec> single_node_domains(int d, int n) {
  std::vector<DomainSpec> out;
  for (int j = 0; j < d; ++j) {
    DomainSpec dom;
    dom.name = "e" + std::to_string(j + 1);
    dom.a.assign(static_cast<std::size_t>(d), 0);
    dom.a[static_cast<std::size_t>(j)] = 1;
    dom.n_samples = n;
    out.push_back(std::move(dom));
  }
  return out;
}

GraphVariant parse_variant(const json& em, const std::string& where) {
  const std::string v = get_or<std::string>(em, "graph_variant", "true-dag", where);
  if (v == "true-dag") return GraphVariant::true_dag();
  if (v == "empty") return GraphVariant::empty();
  if (v == "pooled") return GraphVariant::pooled();
  if (v == "complete") {
    std::vector<int> order = get_or<std::vector<int>>(em, "causal_order", {}, where);
    for (int& o : order) --o;
    return GraphVariant::complete(order);
  }
  throw ConfigError(where + ".graph_variant must be true-dag, empty, complete or pooled");
}

std::string variant_name(const GraphVariant& v) {
  switch (v.kind) {
    case GraphVariant::Kind::TrueDag: return "true-dag";
    case GraphVariant::Kind::Empty: return "empty";
    case GraphVariant::Kind::CompleteFromOrder: return "complete";
    case GraphVariant::Kind::Pooled: return "pooled";
  }
  return "true-dag";
}

EmConfig parse_em(const json& em, const fs::path& base_dir) {
  const std::string w = "em";
  if (!em.is_object()) throw ConfigError("em must be an object");
  reject_unknown(em, {"iterations", "eta", "lambda", "knots", "knot_range", "graph_variant", "causal_order",
                      "clamp_z2_eps", "sigma2_floor", "init", "init_a_file", "init_sigma2", "oracle",
                      "early_stop", "early_stop_tol", "m_step_sweeps", "max_features"},
                 w);
  EmConfig c;
  c.iterations = get_or(em, "iterations", c.iterations, w);
  c.eta = get_or(em, "eta", c.eta, w);
  c.lambda = get_or(em, "lambda", c.lambda, w);
  c.spline.n_basis = get_or(em, "knots", c.spline.n_basis, w);
  if (em.contains("knot_range")) {
    const auto r = get_or<std::vector<double>>(em, "knot_range", {}, w);
    if (r.size() != 2) throw ConfigError("em.knot_range must be [lo, hi]");
    c.spline.lo = r[0];
    c.spline.hi = r[1];
  }
  c.spline.max_features = get_or(em, "max_features", c.spline.max_features, w);
  c.graph_variant = parse_variant(em, w);
  c.clamp_z2_eps = get_or(em, "clamp_z2_eps", c.clamp_z2_eps, w);
  c.sigma2_floor = get_or(em, "sigma2_floor", c.sigma2_floor, w);
  const std::string init = get_or<std::string>(em, "init", "pca", w);
  if (init == "pca") {
    c.init = InitKind::Pca;
  } else if (init == "provided") {
    c.init = InitKind::Provided;
    const std::string f = get_or<std::string>(em, "init_a_file", "", w);
    if (f.empty()) throw ConfigError("em.init = provided needs em.init_a_file");
    fs::path p(f);
    if (p.is_relative()) p = base_dir / p;
    c.init_a = read_matrix_csv(p, "a");
  } else {
    throw ConfigError("em.init must be 'pca' or 'provided'");
  }
  if (em.contains("init_sigma2")) c.init_sigma2 = get_or(em, "init_sigma2", 1.0, w);
  c.oracle = get_or(em, "oracle", c.oracle, w);
  c.early_stop = get_or(em, "early_stop", c.early_stop, w);
  c.early_stop_tol = get_or(em, "early_stop_tol", c.early_stop_tol, w);
  c.m_step_sweeps = get_or(em, "m_step_sweeps", c.m_step_sweeps, w);
  validate_em_config(c);
  return c;
}

RunConfig parse_run_config_impl(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, {"schema_version", "seed", "d_z", "d_x", "edges", "graph", "kappa", "sigma_z", "weight_range",
                     "intervention", "sigma_x2", "mechanism_calibration", "domains", "n_per_domain", "em", "sweep"},
                 "config");
  const std::string w = "config";
  const int version = get_or(j, "schema_version", kSchemaVersion, w);
  if (version != kSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  RunConfig rc;
  rc.source = j;
  auto& b = rc.benchmark;
  b.seed = get_or<std::uint64_t>(j, "seed", 0, w);
  b.d_z = get_or(j, "d_z", b.d_z, w);
  b.d_x = get_or(j, "d_x", b.d_x, w);
  if (b.d_z < 1) throw ConfigError("d_z must be >= 1");
  if (j.contains("edges") && j.contains("graph")) throw ConfigError("config: give either edges or graph, not both");
  if (j.contains("edges")) {
    b.edges = parse_edges(j.at("edges"), b.d_z, "edges");
  } else {
    rc.graph = get_or<std::string>(j, "graph", "chain", w);
    b.edges = named_graph(rc.graph, b.d_z);
  }
  b.kappa = get_or(j, "kappa", b.kappa, w);
  b.sigma_z = get_or(j, "sigma_z", b.sigma_z, w);
  if (j.contains("weight_range")) {
    const auto r = get_or<std::vector<double>>(j, "weight_range", {}, w);
    if (r.size() != 2) throw ConfigError("weight_range must be [lo, hi]");
    b.weight_lo = r[0];
    b.weight_hi = r[1];
  }
  if (j.contains("intervention")) {
    const auto& iv = j.at("intervention");
    if (!iv.is_object()) throw ConfigError("intervention must be an object");
    reject_unknown(iv, {"mean", "std"}, "intervention");
    b.intervention.shift_mean = get_or(iv, "mean", b.intervention.shift_mean, "intervention");
    b.intervention.shift_std = get_or(iv, "std", b.intervention.shift_std, "intervention");
  }
  b.sigma_x2 = get_or(j, "sigma_x2", b.sigma_x2, w);
  if (j.contains("mechanism_calibration")) {
    const auto& mc = j.at("mechanism_calibration");
    if (!mc.is_object()) throw ConfigError("mechanism_calibration must be an object");
    reject_unknown(mc, {"enabled", "samples"}, "mechanism_calibration");
    b.calibrate = get_or(mc, "enabled", b.calibrate, "mechanism_calibration");
    b.calibration_samples = get_or(mc, "samples", b.calibration_samples, "mechanism_calibration");
  }
  rc.n_per_domain = get_or(j, "n_per_domain", rc.n_per_domain, w);
  if (j.contains("domains")) {
    const auto& ds = j.at("domains");
    if (!ds.is_array() || ds.empty()) throw ConfigError("domains must be a non-empty array");
    for (std::size_t e = 0; e < ds.size(); ++e) {
      const std::string where = "domains[" + std::to_string(e) + "]";
      const auto& d = ds[e];
      if (!d.is_object()) throw ConfigError(where + " must be an object");
      reject_unknown(d, {"name", "targets", "n", "weight"}, where);
      DomainSpec dom;
      dom.name = get_or<std::string>(d, "name", "e" + std::to_string(e + 1), where);
      check_csv_field(dom.name, where + ".name");
      dom.a.assign(static_cast<std::size_t>(b.d_z), 0);
      for (int t : get_or<std::vector<int>>(d, "targets", {}, where)) {
        if (t < 1 || t > b.d_z)
          throw IndexError(where + ".targets: node " + std::to_string(t) + " outside 1.." + std::to_string(b.d_z));
        dom.a[static_cast<std::size_t>(t - 1)] = 1;
      }
      if (!d.contains("n")) throw ConfigError(where + ".n is required");
      dom.n_samples = get_or(d, "n", 0, where);
      if (dom.n_samples < 1) throw ConfigError(where + ".n must be >= 1, got " + std::to_string(dom.n_samples));
      dom.weight = get_or(d, "weight", 1.0, where);
      b.domains.push_back(std::move(dom));
    }
  } else {
    rc.auto_domains = true;
    if (rc.n_per_domain < 1) throw ConfigError("n_per_domain must be >= 1");
    b.domains = single_node_domains(b.d_z, rc.n_per_domain);
  }
  validate_benchmark_config(b);
  rc.em = parse_em(j.contains("em") ? j.at("em") : json::object(), base_dir);

  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    if (!s.is_object()) throw ConfigError("sweep must be an object");
    reject_unknown(s, {"param", "values"}, "sweep");
    SweepSpec sw;
    sw.param = get_or<std::string>(s, "param", "", "sweep");
    sw.values = get_or<std::vector<int>>(s, "values", {}, "sweep");
    if (sw.param != "n_per_domain" && sw.param != "d_z")
      throw ConfigError("sweep.param must be 'n_per_domain' or 'd_z'");
    if (sw.values.empty()) throw ConfigError("sweep.values must be non-empty");
    rc.sweep = sw;
    for (int v : sw.values) sweep_point(rc, v);
  }
  return rc;
}

}  // namespace

RunConfig parse_run_config(const json& j) { return parse_run_config_impl(j, fs::current_path()); }

RunConfig load_run_config(const fs::path& path) {
  return parse_run_config_impl(read_json_file(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

json em_config_to_json(const EmConfig& c) {
  json j = {{"iterations", c.iterations},
            {"eta", c.eta},
            {"lambda", c.lambda},
            {"knots", c.spline.n_basis},
            {"knot_range", {c.spline.lo, c.spline.hi}},
            {"max_features", c.spline.max_features},
            {"graph_variant", variant_name(c.graph_variant)},
            {"clamp_z2_eps", c.clamp_z2_eps},
            {"sigma2_floor", c.sigma2_floor},
            {"init", c.init == InitKind::Pca ? "pca" : "provided"},
            {"oracle", c.oracle},
            {"early_stop", c.early_stop},
            {"early_stop_tol", c.early_stop_tol},
            {"m_step_sweeps", c.m_step_sweeps}};
  if (!c.graph_variant.order.empty()) {
    std::vector<int> order = c.graph_variant.order;
    for (int& o : order) ++o;
    j["causal_order"] = order;
  }
  if (c.init_sigma2) j["init_sigma2"] = *c.init_sigma2;
  return j;
}

BenchmarkConfig sweep_point(const RunConfig& rc, int value) {
  if (!rc.sweep) throw ConfigError("config has no sweep section");
  BenchmarkConfig b = rc.benchmark;
  if (rc.sweep->param == "n_per_domain") {
    if (value < 1) throw ConfigError("sweep value for n_per_domain must be >= 1");
    for (auto& d : b.domains) d.n_samples = value;
  } else {
    if (rc.graph.empty() || !rc.auto_domains)
      throw ConfigError("a d_z sweep needs a named graph and automatic domains (no explicit edges/domains)");
    if (value < 1 || value > b.d_x) throw ConfigError("sweep value for d_z must lie in 1..d_x");
    b.d_z = value;
    b.edges = named_graph(rc.graph, value);
    b.domains = single_node_domains(value, rc.n_per_domain);
  }
  validate_benchmark_config(b);
  return b;
}

// ---------------------------------------------------------------- dataset

void save_dataset(const fs::path& dir, const Dataset& data, std::vector<std::string>* written) {
  validate_dataset(data);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
  auto note = [&](const std::string& f) {
    if (written) written->push_back((dir / f).string());
  };
  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["d_z"] = data.d_z();
  meta["d_x"] = data.d_x();
  meta["seed"] = data.seed;
  json edges = json::array();
  for (const auto& [k, t] : data.dag.edges()) edges.push_back({k + 1, t + 1});
  meta["edges"] = edges;
  json doms = json::array();
  for (std::size_t e = 0; e < data.domains.size(); ++e) {
    const auto& d = data.domains[e];
    check_csv_field(d.name, "domain name");
    const std::string tag = "e" + std::to_string(e + 1);
    std::vector<int> targets;
    for (std::size_t j = 0; j < d.a.size(); ++j)
      if (d.a[j]) targets.push_back(static_cast<int>(j) + 1);
    json dj = {{"name", d.name}, {"targets", targets}, {"n", d.n_samples}, {"weight", d.weight},
               {"file", "X_" + tag + ".csv"}};
    write_matrix_csv(dir / ("X_" + tag + ".csv"), data.x[e], "x");
    note("X_" + tag + ".csv");
    if (data.true_z) {
      dj["true_z_file"] = "Z_" + tag + ".csv";
      write_matrix_csv(dir / ("Z_" + tag + ".csv"), (*data.true_z)[e], "z");
      note("Z_" + tag + ".csv");
    }
    doms.push_back(dj);
  }
  meta["domains"] = doms;
  if (data.true_a) {
    meta["true_a_file"] = "A_true.csv";
    write_matrix_csv(dir / "A_true.csv", *data.true_a, "a");
    note("A_true.csv");
  }
  if (data.true_sigma2) meta["true_sigma2"] = *data.true_sigma2;
  write_text_file(dir / "meta.json", meta.dump(2) + "\n");
  note("meta.json");
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  if (!fs::exists(meta_path)) throw IoError("no dataset at " + dir.string() + " (meta.json missing)");
  const json meta = read_json_file(meta_path);
  try {
    if (meta.value("schema_version", 0) != kSchemaVersion)
      throw ConfigError(meta_path.string() + ": unsupported schema_version");
    Dataset data;
    const int dz = meta.at("d_z").get<int>();
    const int dx = meta.at("d_x").get<int>();
    data.dag = build_dag(dz, parse_edges(meta.at("edges"), dz, "meta.edges"));
    data.seed = meta.value("seed", std::uint64_t{0});
    bool have_z = true;
    std::vector<Matrix> zs;
    for (const auto& dj : meta.at("domains")) {
      DomainSpec d;
      d.name = dj.at("name").get<std::string>();
      d.a.assign(static_cast<std::size_t>(dz), 0);
      for (int t : dj.at("targets").get<std::vector<int>>()) {
        if (t < 1 || t > dz) throw IndexError(meta_path.string() + ": target outside 1..d_z");
        d.a[static_cast<std::size_t>(t - 1)] = 1;
      }
      d.n_samples = dj.at("n").get<int>();
      d.weight = dj.value("weight", 1.0);
      Matrix x = read_matrix_csv(dir / dj.at("file").get<std::string>(), "x");
      if (x.cols() != dx) throw ConfigError(meta_path.string() + ": X file width differs from d_x");
      data.x.push_back(std::move(x));
      if (dj.contains("true_z_file")) {
        zs.push_back(read_matrix_csv(dir / dj.at("true_z_file").get<std::string>(), "z"));
      } else {
        have_z = false;
      }
      data.domains.push_back(std::move(d));
    }
    if (have_z && !zs.empty()) data.true_z = std::move(zs);
    if (meta.contains("true_a_file")) data.true_a = read_matrix_csv(dir / meta.at("true_a_file").get<std::string>(), "a");
    if (meta.contains("true_sigma2")) data.true_sigma2 = meta.at("true_sigma2").get<double>();
    validate_dataset(data);
    return data;
  } catch (const json::exception& e) {
    throw IoError(meta_path.string() + ": malformed metadata (" + e.what() + ")");
  }
}

// ---------------------------------------------------------------- fits

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Matrix json_matrix(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Matrix();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) throw IoError("ragged matrix in JSON");
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

}  // namespace

void save_fit(const fs::path& dir, const EmResult& result, const std::string& method, const EmConfig& config,
              bool with_trace, std::vector<std::string>* written) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string());
  auto note = [&](const std::string& f) {
    if (written) written->push_back((dir / f).string());
  };
  const auto& est = result.estimate;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = method;
  j["O"] = matrix_json(est.O);
  j["D"] = std::vector<double>(est.D.data(), est.D.data() + est.D.size());
  j["A"] = matrix_json(est.A());
  j["sigma2"] = est.sigma2;
  j["iterations_run"] = result.iterations_run;
  j["oracle"] = with_trace && config.oracle;
  if (with_trace) j["em"] = em_config_to_json(config);
  json files = json::array();
  for (std::size_t e = 0; e < result.z_hat.size(); ++e) {
    const std::string f = "Zhat_e" + std::to_string(e + 1) + ".csv";
    write_matrix_csv(dir / f, result.z_hat[e], "z");
    note(f);
    files.push_back(f);
  }
  j["z_hat_files"] = files;
  if (with_trace) {
    json trace = json::array();
    std::string csv = "iteration,eta,sigma2,m_objective,score_loss\n";
    for (const auto& t : result.trace) {
      trace.push_back({{"iteration", t.iteration}, {"eta", config.eta}, {"sigma2", t.sigma2},
                       {"m_objective", t.m_objective}, {"score_loss", t.score_loss}});
      csv += std::to_string(t.iteration) + "," + format_double(config.eta) + "," + format_double(t.sigma2) + "," +
             format_double(t.m_objective) + "," + format_double(t.score_loss) + "\n";
    }
    j["trace"] = trace;
    write_text_file(dir / "trace.csv", csv);
    note("trace.csv");
  }
  write_text_file(dir / "estimate.json", j.dump(2) + "\n");
  note("estimate.json");
}

FitRecord load_fit(const fs::path& dir) {
  const fs::path path = dir / "estimate.json";
  if (!fs::exists(path)) throw IoError("no fit result at " + dir.string() + " (estimate.json missing)");
  const json j = read_json_file(path);
  try {
    FitRecord f;
    f.method = j.at("method").get<std::string>();
    f.estimate.O = json_matrix(j.at("O"));
    const auto d = j.at("D").get<std::vector<double>>();
    f.estimate.D = Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(d.size()));
    f.estimate.sigma2 = j.at("sigma2").get<double>();
    f.oracle = j.value("oracle", false);
    for (const auto& file : j.at("z_hat_files")) f.z_hat.push_back(read_matrix_csv(dir / file.get<std::string>(), "z"));
    if (f.estimate.O.cols() != f.estimate.D.size()) throw IoError(path.string() + ": O and D disagree in d_z");
    return f;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": malformed estimate (" + e.what() + ")");
  }
}

// ---------------------------------------------------------------- metrics

namespace {
const std::vector<std::string> kMetricColumns = {"run_id", "seed", "method", "environment", "metric", "value"};
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out;
  std::vector<std::string> extra_names;
  if (!rows.empty())
    for (const auto& [k, v] : rows.front().extra) extra_names.push_back(k);
  for (const auto& n : extra_names) out += n + ",";
  for (std::size_t c = 0; c < kMetricColumns.size(); ++c) out += (c ? "," : "") + kMetricColumns[c];
  out += '\n';
  for (const auto& r : rows) {
    if (r.extra.size() != extra_names.size()) throw ConfigError("metric rows disagree on their leading columns");
    for (const auto& [k, v] : r.extra) out += v + ",";
    const auto& m = r.record;
    check_csv_field(m.method, "method");
    check_csv_field(m.environment, "environment");
    check_csv_field(m.metric, "metric");
    out += std::to_string(m.run_id) + "," + std::to_string(m.seed) + "," + m.method + "," + m.environment + "," +
           m.metric + "," + format_double(m.value) + "\n";
  }
  return out;
}

std::vector<MetricRow> parse_metrics_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ConfigError("metrics CSV is empty");
  const auto header = split_csv_line(lines.front());
  if (header.size() < kMetricColumns.size())
    throw ConfigError("metrics CSV header must end with run_id,seed,method,environment,metric,value");
  const std::size_t n_extra = header.size() - kMetricColumns.size();
  for (std::size_t c = 0; c < kMetricColumns.size(); ++c)
    if (header[n_extra + c] != kMetricColumns[c])
      throw ConfigError("metrics CSV header column " + std::to_string(n_extra + c + 1) + " is '" +
                        header[n_extra + c] + "', expected '" + kMetricColumns[c] + "'");
  if (lines.size() < 2) throw ConfigError("metrics CSV has no data rows");
  std::vector<MetricRow> rows;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto cells = split_csv_line(lines[l]);
    if (cells.size() != header.size())
      throw ConfigError("metrics CSV line " + std::to_string(l + 1) + " has " + std::to_string(cells.size()) +
                        " fields, expected " + std::to_string(header.size()));
    MetricRow r;
    for (std::size_t c = 0; c < n_extra; ++c) r.extra.emplace_back(header[c], cells[c]);
    try {
      r.record.run_id = std::stoi(cells[n_extra]);
      r.record.seed = std::stoull(cells[n_extra + 1]);
      r.record.value = parse_double(cells[n_extra + 5]);
    } catch (const std::exception&) {
      throw ConfigError("metrics CSV line " + std::to_string(l + 1) + ": malformed number");
    }
    r.record.method = cells[n_extra + 2];
    r.record.environment = cells[n_extra + 3];
    r.record.metric = cells[n_extra + 4];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out;
  if (!rows.empty())
    for (const auto& [k, v] : rows.front().extra) out += k + ",";
  out += "method,environment,metric,n,median,q1,q3,iqr\n";
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.extra) out += v + ",";
    const auto& s = r.record;
    out += s.method + "," + s.environment + "," + s.metric + "," + std::to_string(s.n) + "," + format_double(s.median) +
           "," + format_double(s.q1) + "," + format_double(s.q3) + "," + format_double(s.iqr) + "\n";
  }
  return out;
}

}  // namespace ebcrl
