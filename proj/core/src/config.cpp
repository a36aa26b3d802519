#include "lsfem/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "lsfem/errors.hpp"

namespace lsfem {

namespace {

const std::set<std::string> kSections = {"problem", "method", "mesh", "adapt", "output"};

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string strip_quotes(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream in(cleaned);
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw InvalidArgument(what + ": '" + tok + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

bool ConfigFile::has(const std::string& section, const std::string& key) const { return find(section, key).has_value(); }

std::optional<std::string> ConfigFile::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string ConfigFile::get(const std::string& section, const std::string& key, const std::string& fallback) const {
  return find(section, key).value_or(fallback);
}

double ConfigFile::get_double(const std::string& section, const std::string& key, double fallback) const {
  auto v = find(section, key);
  if (!v) return fallback;
  const auto nums = parse_numbers(*v, section + "." + key);
  if (nums.size() != 1) throw InvalidArgument(section + "." + key + ": expected one number");
  return nums[0];
}

int ConfigFile::get_int(const std::string& section, const std::string& key, int fallback) const {
  auto v = find(section, key);
  if (!v) return fallback;
  int out = 0;
  const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
  if (res.ec != std::errc() || res.ptr != v->data() + v->size()) {
    throw InvalidArgument(section + "." + key + ": '" + *v + "' is not an integer");
  }
  return out;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  auto v = find(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw InvalidArgument(section + "." + key + ": '" + *v + "' is not a boolean");
}

void ConfigFile::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

const ConfigFile::Section& ConfigFile::section(const std::string& name) const {
  static const Section empty;
  auto it = sections_.find(name);
  return it == sections_.end() ? empty : it->second;
}

ConfigFile parse_config(std::string_view text) {
  ConfigFile cfg;
  std::string current;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t line_start = pos;
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_start);
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (!kSections.count(name)) throw ParseError("unknown section [" + name + "]", line_start);
      current = name;
      cfg.add_section(current);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_start);
    if (current.empty()) throw ParseError("key outside of a section", line_start);
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError("empty key", line_start);
    cfg.set(current, key, strip_quotes(trim(line.substr(eq + 1))));
    if (end == text.size()) break;
  }
  return cfg;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

Regime parse_regime(const std::string& s) {
  if (s == "coercive") return Regime::Coercive;
  if (s == "general") return Regime::General;
  throw InvalidArgument("problem.regime: expected coercive or general, got '" + s + "'");
}

ScalarFn expr_fn(const ConfigFile& cfg, const std::string& key, const std::string& fallback) {
  Expr e = parse_expr(cfg.get("problem", key, fallback));
  return [e](const Point& x) { return e.eval(x); };
}

ProblemSpec custom_problem(const ConfigFile& cfg) {
  ProblemSpec p;
  p.name = "custom";
  if (cfg.has("problem", "diffusion_matrix")) {
    if (cfg.has("problem", "diffusion")) throw InvalidArgument("problem: give either diffusion or diffusion_matrix");
    const auto m = parse_numbers(*cfg.find("problem", "diffusion_matrix"), "problem.diffusion_matrix");
    if (m.size() != 3) throw InvalidArgument("problem.diffusion_matrix: expected three numbers a11 a12 a22");
    const Mat2 A{m[0], m[1], m[1], m[2]};
    p.A = [A](const Point&) { return A; };
  } else {
    ScalarFn a = expr_fn(cfg, "diffusion", "1");
    p.A = [a](const Point& x) { return Mat2::scalar(a(x)); };
  }
  const Expr bx = parse_expr(cfg.get("problem", "bx", "0"));
  const Expr by = parse_expr(cfg.get("problem", "by", "0"));
  p.b = [bx, by](const Point& x) { return Vec2{bx.eval(x), by.eval(x)}; };
  p.convection_free = !cfg.has("problem", "bx") && !cfg.has("problem", "by");
  p.c = expr_fn(cfg, "c", "0");
  p.f = expr_fn(cfg, "f", "0");
  p.A_discontinuous = cfg.get_bool("problem", "discontinuous", false);
  if (cfg.has("problem", "dirichlet")) p.dirichlet_sides = parse_sides(*cfg.find("problem", "dirichlet"));

  const bool has_u = cfg.has("problem", "u");
  if (has_u != cfg.has("problem", "ux") || has_u != cfg.has("problem", "uy")) {
    throw InvalidArgument("problem: an exact solution needs all of u, ux, uy");
  }
  if (has_u) {
    ExactSolution ex;
    ex.u = expr_fn(cfg, "u", "0");
    const ScalarFn ux = expr_fn(cfg, "ux", "0");
    const ScalarFn uy = expr_fn(cfg, "uy", "0");
    ex.grad_u = [ux, uy](const Point& x) { return Vec2{ux(x), uy(x)}; };
    const MatrixFn A = p.A;
    const VectorFn grad = ex.grad_u;
    ex.sigma = [A, grad](const Point& x) { return -(A(x) * grad(x)); };
    // div sigma from the equation itself
    const ScalarFn u = ex.u, f = p.f, c = p.c;
    const VectorFn b = p.b;
    ex.div_sigma = [=](const Point& x) { return f(x) - dot(b(x), grad(x)) - c(x) * u(x); };
    p.exact = ex;
  }
  return p;
}

}  // namespace

ProblemSpec problem_from_config(const ConfigFile& cfg) {
  const std::string name = cfg.get("problem", "name", "poisson-sine");
  ProblemSpec p;
  if (name == "custom") {
    p = custom_problem(cfg);
  } else {
    static const std::set<std::string> reserved = {"name", "regime", "weights"};
    ProblemParams params;
    for (const auto& [k, v] : cfg.section("problem")) {
      if (reserved.count(k)) continue;
      params[k] = cfg.get_double("problem", k, 0.0);
    }
    p = builtin_problem(name, params);
  }
  if (cfg.has("problem", "regime")) p.regime_hint = parse_regime(*cfg.find("problem", "regime"));
  if (cfg.has("problem", "weights")) {
    const auto w = parse_numbers(*cfg.find("problem", "weights"), "problem.weights");
    if (w.size() != 3) throw InvalidArgument("problem.weights: expected three numbers r s t");
    p.weights = {w[0], w[1], w[2]};
  }
  p.validate();
  return p;
}

}  // namespace lsfem
