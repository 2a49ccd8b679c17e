#include "ottd/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ottd {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::schema, std::string(what) + ": bad number '" + s + "'");
  }
}

long long parse_int(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::schema, std::string(what) + ": bad integer '" + s + "'");
  }
}

Vector parse_vector(const std::string& s, const char* what) {
  Vector out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(parse_double(tok, what));
  return out;
}

std::string format_vector(const Vector& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_exact(v[i]);
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot open for writing: " + path);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line, section;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail(ErrorKind::schema, "config: malformed section header: " + t);
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorKind::schema, "config: expected key = value: " + t);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) fail(ErrorKind::schema, "config: empty key");
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

ConfigMap load_config(const std::string& path) { return parse_config_text(read_file(path)); }

std::string cfg_get(const ConfigMap& c, const std::string& key, const std::string& fallback) {
  auto it = c.find(key);
  return it == c.end() ? fallback : it->second;
}

double cfg_get_double(const ConfigMap& c, const std::string& key, double fallback) {
  auto it = c.find(key);
  return it == c.end() ? fallback : parse_double(it->second, key.c_str());
}

std::size_t cfg_get_size(const ConfigMap& c, const std::string& key, std::size_t fallback) {
  auto it = c.find(key);
  if (it == c.end()) return fallback;
  const long long v = parse_int(it->second, key.c_str());
  if (v < 0) fail(ErrorKind::schema, "config: " + key + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

bool cfg_get_bool(const ConfigMap& c, const std::string& key, bool fallback) {
  auto it = c.find(key);
  if (it == c.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  fail(ErrorKind::schema, "config: " + key + " must be true/false");
}

std::vector<std::uint64_t> cfg_get_seeds(const ConfigMap& c, const std::string& key,
                                         const std::vector<std::uint64_t>& fallback) {
  auto it = c.find(key);
  if (it == c.end()) return fallback;
  std::vector<std::uint64_t> out;
  std::string norm = it->second;
  std::replace(norm.begin(), norm.end(), ',', ' ');
  std::istringstream is(norm);
  std::string tok;
  while (is >> tok) out.push_back(static_cast<std::uint64_t>(parse_int(tok, key.c_str())));
  if (out.empty()) fail(ErrorKind::schema, "config: " + key + " must list at least one seed");
  return out;
}

std::string format_exact(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_result(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void save_dataset(const std::string& path, const TransitionDataset& dataset) {
  std::ofstream out = open_out(path);
  out << "traj_id,t,s,a,r,s_next,a_next,is_ratio,loop_flag\n";
  auto traj_of = [&](std::size_t idx) -> std::ptrdiff_t {
    for (std::size_t j = 0; j < dataset.trajectory_bounds.size(); ++j)
      if (idx >= dataset.trajectory_bounds[j].first && idx < dataset.trajectory_bounds[j].second)
        return static_cast<std::ptrdiff_t>(j);
    return -1;
  };
  std::size_t within = 0;
  std::ptrdiff_t last_traj = -2;
  for (std::size_t i = 0; i < dataset.transitions.size(); ++i) {
    const Transition& t = dataset.transitions[i];
    const std::ptrdiff_t traj = dataset.kind == TransitionDataset::Kind::trajectory ? traj_of(i) : -1;
    within = traj == last_traj ? within + 1 : 0;
    last_traj = traj;
    out << traj << ',' << within << ',' << t.s << ',' << t.a << ',' << format_exact(t.r) << ',' << t.s_next << ','
        << t.a_next << ',' << format_exact(t.is_ratio) << ',' << (t.loop_flag ? 1 : 0) << '\n';
  }
}

TransitionDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::schema, "dataset file is empty: " + path);
  if (trim(line) != "traj_id,t,s,a,r,s_next,a_next,is_ratio,loop_flag")
    fail(ErrorKind::schema, "dataset header mismatch: " + path);
  TransitionDataset out;
  std::ptrdiff_t current_traj = -1;
  std::size_t traj_begin = 0;
  bool any_traj = false;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_fields(trim(line), ',');
    if (f.size() != 9) fail(ErrorKind::schema, "dataset row arity mismatch");
    const std::ptrdiff_t traj = static_cast<std::ptrdiff_t>(parse_int(f[0], "traj_id"));
    Transition t;
    t.s = static_cast<int>(parse_int(f[2], "s"));
    t.a = static_cast<int>(parse_int(f[3], "a"));
    t.r = parse_double(f[4], "r");
    t.s_next = static_cast<int>(parse_int(f[5], "s_next"));
    t.a_next = static_cast<int>(parse_int(f[6], "a_next"));
    t.is_ratio = parse_double(f[7], "is_ratio");
    t.loop_flag = parse_int(f[8], "loop_flag") != 0;
    if (traj >= 0) {
      any_traj = true;
      if (traj != current_traj) {
        if (current_traj >= 0) out.trajectory_bounds.emplace_back(traj_begin, out.transitions.size());
        current_traj = traj;
        traj_begin = out.transitions.size();
      }
    }
    out.transitions.push_back(t);
  }
  if (any_traj) {
    out.trajectory_bounds.emplace_back(traj_begin, out.transitions.size());
    out.kind = TransitionDataset::Kind::trajectory;
  }
  return out;
}

void save_problem(const std::string& path, const ProblemFile& problem) {
  std::ofstream out = open_out(path);
  const Mdp& m = problem.mdp;
  out << "[mdp]\n";
  out << "n_states = " << m.n_states << "\n";
  out << "n_actions = " << m.n_actions << "\n";
  out << "discount = " << format_exact(m.discount) << "\n";
  out << "rewards = " << format_vector(Vector(m.reward.begin(), m.reward.end())) << "\n";
  for (std::size_t s = 0; s < m.n_states; ++s)
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      Vector row(m.n_states);
      for (std::size_t s2 = 0; s2 < m.n_states; ++s2) row[s2] = m.p(s, a, s2);
      out << "p_" << s << "_" << a << " = " << format_vector(row) << "\n";
    }
  out << "\n[policy]\n";
  for (std::size_t s = 0; s < m.n_states; ++s) {
    Vector row(m.n_actions);
    for (std::size_t a = 0; a < m.n_actions; ++a) row[a] = problem.pi.pi(s, a);
    out << "pi_" << s << " = " << format_vector(row) << "\n";
  }
  if (problem.mu) {
    out << "\n[behavior]\n";
    for (std::size_t s = 0; s < m.n_states; ++s) {
      Vector row(m.n_actions);
      for (std::size_t a = 0; a < m.n_actions; ++a) row[a] = problem.mu->pi(s, a);
      out << "mu_" << s << " = " << format_vector(row) << "\n";
    }
  }
  out << "\n[features]\n";
  out << "d = " << problem.phi.dim() << "\n";
  for (std::size_t r = 0; r < problem.phi.phi.rows; ++r) {
    Vector row(problem.phi.phi.row(r), problem.phi.phi.row(r) + problem.phi.dim());
    out << "row_" << r << " = " << format_vector(row) << "\n";
  }
  if (problem.lambda) out << "\n[lambda]\nweights = " << format_vector(*problem.lambda) << "\n";
  if (problem.theta0) out << "\n[theta0]\nvalues = " << format_vector(*problem.theta0) << "\n";
}

ProblemFile load_problem(const std::string& path) {
  const ConfigMap c = load_config(path);
  ProblemFile out;
  const std::size_t ns = cfg_get_size(c, "mdp.n_states", 0);
  const std::size_t na = cfg_get_size(c, "mdp.n_actions", 0);
  if (ns == 0 || na == 0) fail(ErrorKind::schema, "problem file: missing mdp dimensions");
  out.mdp = Mdp(ns, na, cfg_get_double(c, "mdp.discount", -1.0));
  const Vector rewards = parse_vector(cfg_get(c, "mdp.rewards", ""), "rewards");
  if (rewards.size() != ns * na) fail(ErrorKind::schema, "problem file: rewards arity mismatch");
  out.mdp.reward = rewards;
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t a = 0; a < na; ++a) {
      std::ostringstream key;
      key << "mdp.p_" << s << "_" << a;
      const Vector row = parse_vector(cfg_get(c, key.str(), ""), "transition row");
      if (row.size() != ns) fail(ErrorKind::schema, "problem file: missing " + key.str());
      for (std::size_t s2 = 0; s2 < ns; ++s2) out.mdp.p(s, a, s2) = row[s2];
    }
  out.mdp.validate();

  out.pi = Policy(ns, na);
  for (std::size_t s = 0; s < ns; ++s) {
    std::ostringstream key;
    key << "policy.pi_" << s;
    const Vector row = parse_vector(cfg_get(c, key.str(), ""), "policy row");
    if (row.size() != na) fail(ErrorKind::schema, "problem file: missing " + key.str());
    for (std::size_t a = 0; a < na; ++a) out.pi.pi(s, a) = row[a];
  }
  out.pi.validate();

  if (c.count("behavior.mu_0")) {
    Policy mu(ns, na);
    for (std::size_t s = 0; s < ns; ++s) {
      std::ostringstream key;
      key << "behavior.mu_" << s;
      const Vector row = parse_vector(cfg_get(c, key.str(), ""), "behavior row");
      if (row.size() != na) fail(ErrorKind::schema, "problem file: missing " + key.str());
      for (std::size_t a = 0; a < na; ++a) mu.pi(s, a) = row[a];
    }
    mu.validate();
    out.mu = std::move(mu);
  }

  const std::size_t d = cfg_get_size(c, "features.d", 0);
  if (d == 0) fail(ErrorKind::schema, "problem file: missing features.d");
  Matrix phi(ns * na, d);
  for (std::size_t r = 0; r < ns * na; ++r) {
    std::ostringstream key;
    key << "features.row_" << r;
    const Vector row = parse_vector(cfg_get(c, key.str(), ""), "feature row");
    if (row.size() != d) fail(ErrorKind::schema, "problem file: missing " + key.str());
    for (std::size_t j = 0; j < d; ++j) phi(r, j) = row[j];
  }
  out.phi = FeatureMatrix(std::move(phi));

  if (c.count("lambda.weights")) out.lambda = parse_vector(cfg_get(c, "lambda.weights", ""), "lambda");
  if (c.count("theta0.values")) out.theta0 = parse_vector(cfg_get(c, "theta0.values", ""), "theta0");
  return out;
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream out = open_out(path);
  out << "experiment_id,algorithm,seed,step,max_value_error,emsbe,status\n";
  for (const ResultRow& r : rows)
    out << r.experiment_id << ',' << r.algorithm << ',' << r.seed << ',' << r.step << ','
        << format_result(r.max_value_error) << ',' << format_result(r.emsbe) << ',' << r.status << '\n';
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "experiment_id,algorithm,seed,step,max_value_error,emsbe,status")
    fail(ErrorKind::schema, "results.csv header mismatch: " + path);
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_fields(trim(line), ',');
    if (f.size() != 7) fail(ErrorKind::schema, "results.csv row arity mismatch");
    ResultRow r;
    r.experiment_id = f[0];
    r.algorithm = f[1];
    r.seed = static_cast<std::uint64_t>(parse_int(f[2], "seed"));
    r.step = static_cast<std::size_t>(parse_int(f[3], "step"));
    r.max_value_error = parse_double(f[4], "max_value_error");
    r.emsbe = parse_double(f[5], "emsbe");
    r.status = f[6];
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

struct Span {
  double lo = 0.0, hi = 1.0;
};

Span finite_span(const std::vector<Curve>& curves, bool y, bool positive_only) {
  Span s;
  bool first = true;
  for (const Curve& c : curves)
    for (const auto& [x, yv] : c.points) {
      const double v = y ? yv : x;
      if (!std::isfinite(v) || (positive_only && v <= 0.0)) continue;
      if (first) {
        s.lo = s.hi = v;
        first = false;
      } else {
        s.lo = std::min(s.lo, v);
        s.hi = std::max(s.hi, v);
      }
    }
  if (first) s = {0.0, 1.0};
  if (s.hi <= s.lo) s.hi = s.lo + 1.0;
  return s;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<Curve>& curves) {
  if (curves.empty()) fail(ErrorKind::invalid_input, "write_svg_plot: no curves");
  const double w = 860, h = 560, ml = 80, mr = 30, mt = 50, mb = 60;
  const Span xs = finite_span(curves, false, false);
  const Span ys_pos = finite_span(curves, true, true);
  const bool log_y = ys_pos.hi / std::max(ys_pos.lo, 1e-300) >= 1e3;
  const Span ys = log_y ? Span{std::log10(ys_pos.lo), std::log10(ys_pos.hi)} : finite_span(curves, true, false);

  auto px = [&](double x) { return ml + (x - xs.lo) / (xs.hi - xs.lo) * (w - ml - mr); };
  auto py = [&](double y) {
    const double v = log_y ? std::log10(std::max(y, 1e-300)) : y;
    return h - mb - (v - ys.lo) / (ys.hi - ys.lo) * (h - mt - mb);
  };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ofstream out = open_out(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title << "</text>\n";
  out << "<text x='" << w / 2 << "' y='" << h - 14 << "' text-anchor='middle' font-size='12'>" << x_label
      << "</text>\n";
  out << "<text x='18' y='" << h / 2 << "' text-anchor='middle' font-size='12' transform='rotate(-90 18 "
      << h / 2 << ")'>" << y_label << (log_y ? " (log scale)" : "") << "</text>\n";
  out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
      << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb << "' stroke='black'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xs.lo + (xs.hi - xs.lo) * i / 4.0;
    out << "<text x='" << px(fx) << "' y='" << h - mb + 18 << "' text-anchor='middle' font-size='10'>"
        << format_result(fx) << "</text>\n";
    const double fy = ys.lo + (ys.hi - ys.lo) * i / 4.0;
    out << "<text x='" << ml - 6 << "' y='" << h - mb - (h - mt - mb) * i / 4.0 + 4
        << "' text-anchor='end' font-size='10'>" << format_result(log_y ? std::pow(10.0, fy) : fy)
        << "</text>\n";
  }
  std::size_t ci = 0;
  for (const Curve& c : curves) {
    const char* color = colors[ci % 6];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (const auto& [x, yv] : c.points) {
      if (!std::isfinite(yv) || (log_y && yv <= 0.0)) continue;
      out << px(x) << ',' << py(yv) << ' ';
    }
    out << "'/>\n";
    out << "<text x='" << w - mr - 180 << "' y='" << mt + 16 * (ci + 1) << "' font-size='12' fill='" << color
        << "'>" << c.label << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

}  // namespace ottd
