#include "codimred/cli.hpp"

#include "codimred/expression.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#ifndef CODIMRED_VERSION
#define CODIMRED_VERSION "0.0.0"
#endif

namespace codimred::cli {

// Generated at build time from scenarios/*.yaml, sorted by name.
const std::vector<std::pair<const char*, const char*>>& bundled_scenarios();

namespace {

using Json = nlohmann::ordered_json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct CheckInfo {
  const char* name;
  double tol;
  const char* description;
  std::vector<std::pair<const char*, double>> options;
};

const std::vector<CheckInfo>& check_table() {
  static const std::vector<CheckInfo> t = {
      {"curvature_invariant", 1e-9, "R(X,Y)Z stays in TM + V for X, Y, Z in TM + V", {}},
      {"first_normal_contained", 1e-6, "first normal space N^1 lies in V", {}},
      {"jacobi_containment", 1e-4, "Jacobi fields with data in W_0 = TM + V stay in the transported W_t",
       {{"conditions", 20}, {"t_end", 2.0}, {"samples", 64}}},
      {"parallel_subbundle", 1e-5, "V is parallel for the normal connection", {}},
      {"tangent_preservation", 1e-4, "transport around loops in N = exp(V) preserves TN", {{"loops", 12}}},
      {"totally_geodesic", 1e-4, "second fundamental form of N = exp(V) vanishes", {{"pairs", 3}}},
  };
  return t;
}

const CheckInfo* find_check(const std::string& name) {
  for (const CheckInfo& c : check_table()) {
    if (name == c.name) return &c;
  }
  return nullptr;
}

template <class Range, class Fn>
std::string join_names(const Range& r, Fn name) {
  std::string s;
  for (const auto& x : r) s += (s.empty() ? "" : ", ") + std::string(name(x));
  return s;
}

// ---- YAML access with line numbers ----

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    throw ScenarioError(source_, n.IsDefined() ? n.Mark().line + 1 : 0, msg);
  }
  [[noreturn]] void fail(int line, const std::string& msg) const { throw ScenarioError(source_, line, msg); }

  void allow_keys(const YAML::Node& map, std::initializer_list<const char*> keys, const std::string& where) const {
    if (!map.IsMap()) fail(map, where + " must be a mapping");
    for (const auto& kv : map) {
      const std::string k = kv.first.as<std::string>();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
        fail(kv.first, "unknown key '" + k + "' in " + where + "; expected one of: " +
                           join_names(keys, [](const char* a) { return a; }));
      }
    }
  }

  YAML::Node require(const YAML::Node& map, const char* key, const std::string& where) const {
    const YAML::Node n = map[key];
    if (!n) fail(map, where + " is missing '" + key + "'");
    return n;
  }

  std::string text(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a scalar");
    return n.as<std::string>();
  }

  // Numbers may be written as constant expressions such as 2*pi.
  double number(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a number");
    const std::string s = n.as<std::string>();
    double v = 0.0;
    try {
      v = Expression::parse(s, {})(Vec());
    } catch (const ExpressionError& e) {
      fail(n, what + ": " + e.what());
    }
    if (!std::isfinite(v)) fail(n, what + " is not finite");
    return v;
  }

  double number_or(const YAML::Node& map, const char* key, double fallback, const std::string& what) const {
    const YAML::Node n = map[key];
    return n ? number(n, what + "." + key) : fallback;
  }

  int integer(const YAML::Node& n, const std::string& what, int lo) const {
    const double v = number(n, what);
    if (v != std::floor(v) || v < lo || v > 1e7) fail(n, what + " must be an integer >= " + std::to_string(lo));
    return static_cast<int>(v);
  }

  int integer_or(const YAML::Node& map, const char* key, int fallback, const std::string& what, int lo) const {
    const YAML::Node n = map[key];
    return n ? integer(n, what + "." + key, lo) : fallback;
  }

  Expression expression(const YAML::Node& n, const std::vector<std::string>& vars, const std::string& what) const {
    const std::string s = text(n, what);
    try {
      return Expression::parse(s, vars);
    } catch (const ExpressionError& e) {
      fail(n, what + ": " + e.what());
    }
  }

  std::vector<double> numbers(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, what + " must be a list");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(number(n[i], what + "[" + std::to_string(i) + "]"));
    return out;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

// ---- spaces, immersions, bundles ----

SpaceModel parse_space(const Reader& rd, const YAML::Node& n) {
  rd.allow_keys(n, {"kind", "dim", "radius", "holomorphic_curvature"}, "space");
  const std::string kind = rd.text(rd.require(n, "kind", "space"), "space.kind");
  const int dim = rd.integer(rd.require(n, "dim", "space"), "space.dim", 1);
  auto positive = [&](const char* key, double fallback) {
    const double v = rd.number_or(n, key, fallback, "space");
    if (!(v > 0.0)) rd.fail(n[key], std::string("space.") + key + " must be positive");
    return v;
  };
  if (kind == "euclidean") return SpaceModel::euclidean(dim);
  if (kind == "sphere") return SpaceModel::sphere(dim, positive("radius", 1.0));
  if (kind == "hyperbolic") return SpaceModel::hyperbolic(dim, positive("radius", 1.0));
  if (kind == "complex_projective") return SpaceModel::complex_projective(dim, positive("holomorphic_curvature", 4.0));
  rd.fail(n["kind"], "unknown space kind '" + kind + "'; available: complex_projective, euclidean, hyperbolic, sphere");
}

struct Built {
  std::shared_ptr<const Immersion> immersion;
  std::vector<std::pair<double, double>> domain;
  std::string catalog;  // empty for expression immersions
  std::map<std::string, double> params;
  std::vector<std::string> names{"u"};
};

Vec latitude_point(int n, double r, double phi, double u) {
  Vec x = Vec::Zero(n + 1);
  x(0) = r * std::sin(phi) * std::cos(u);
  x(1) = r * std::sin(phi) * std::sin(u);
  x(2) = r * std::cos(phi);
  return x;
}

Built parse_immersion(const Reader& rd, const YAML::Node& n, const SpaceModel& space) {
  rd.allow_keys(n, {"catalog", "params", "coords", "domain"}, "immersion");
  Built b;
  if (n["catalog"]) {
    if (n["coords"]) rd.fail(n["coords"], "immersion: give either 'catalog' or 'coords'");
    b.catalog = rd.text(n["catalog"], "immersion.catalog");
    const YAML::Node params = n["params"];
    auto param = [&](const char* key, double fallback) {
      if (!params) return fallback;
      return rd.number_or(params, key, fallback, "immersion.params");
    };
    if (b.catalog == "latitude_circle") {
      if (params) rd.allow_keys(params, {"phi"}, "immersion.params");
      if (space.kind() != SpaceKind::Sphere || space.dim() < 2) {
        rd.fail(n["catalog"], "latitude_circle needs a sphere of dimension >= 2");
      }
      const double phi = param("phi", 0.6);
      if (!(phi > 0.0 && phi < std::numbers::pi)) rd.fail(params["phi"], "latitude_circle: phi must lie in (0, pi)");
      const int d = space.dim();
      const double r = space.parameter();
      b.params["phi"] = phi;
      b.immersion = std::make_shared<const Immersion>(
          space, 1, [d, r, phi](const Vec& u) { return latitude_point(d, r, phi, u(0)); });
    } else if (b.catalog == "cp1_circle") {
      if (params) rd.allow_keys(params, {"a"}, "immersion.params");
      if (space.kind() != SpaceKind::ComplexProjective) rd.fail(n["catalog"], "cp1_circle needs a complex projective space");
      const double a = param("a", std::numbers::pi / 6);
      if (!(a > 0.0 && a < std::numbers::pi / 2)) rd.fail(params["a"], "cp1_circle: a must lie in (0, pi/2)");
      const int cd = space.chart_dim();
      b.params["a"] = a;
      b.immersion = std::make_shared<const Immersion>(space, 1, [cd, a](const Vec& u) {
        Vec x = Vec::Zero(cd);
        x(0) = std::cos(a);
        x(2) = std::sin(a) * std::cos(u(0));
        x(3) = std::sin(a) * std::sin(u(0));
        return x;
      });
    } else {
      rd.fail(n["catalog"], "unknown immersion '" + b.catalog + "'; available: cp1_circle, latitude_circle");
    }
    b.domain = {{0.0, kTwoPi}};
  } else {
    const YAML::Node names = rd.require(n, "params", "expression immersion");
    if (!names.IsSequence() || names.size() == 0) rd.fail(names, "immersion.params must be a non-empty list of names");
    std::vector<std::string> vars;
    for (const auto& v : names) {
      const std::string s = rd.text(v, "parameter name");
      if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_') || s == "pi") {
        rd.fail(v, "invalid parameter name '" + s + "'");
      }
      vars.push_back(s);
    }
    b.names = vars;
    const YAML::Node coords = rd.require(n, "coords", "expression immersion");
    if (!coords.IsSequence() || static_cast<int>(coords.size()) != space.chart_dim()) {
      rd.fail(coords, "immersion.coords must list " + std::to_string(space.chart_dim()) + " chart coordinates");
    }
    std::vector<Expression> x;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      x.push_back(rd.expression(coords[i], vars, "immersion.coords[" + std::to_string(i) + "]"));
    }
    std::vector<std::vector<Expression>> dx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = 0; j < vars.size(); ++j) dx[i].push_back(x[i].derivative(static_cast<int>(j)));
    }
    const int m = static_cast<int>(vars.size());
    if (m > space.dim()) rd.fail(names, "immersion has more parameters than the space has dimensions");
    b.immersion = std::make_shared<const Immersion>(
        space, m,
        [x](const Vec& u) {
          Vec out(static_cast<long>(x.size()));
          for (std::size_t i = 0; i < x.size(); ++i) out(static_cast<long>(i)) = x[i](u);
          return out;
        },
        [dx, m](const Vec& u) {
          Mat out(static_cast<long>(dx.size()), m);
          for (std::size_t i = 0; i < dx.size(); ++i) {
            for (int j = 0; j < m; ++j) out(static_cast<long>(i), j) = dx[i][static_cast<std::size_t>(j)](u);
          }
          return out;
        });
  }
  if (const YAML::Node d = n["domain"]) {
    if (!d.IsSequence() || static_cast<int>(d.size()) != b.immersion->param_dim()) {
      rd.fail(d, "immersion.domain must give [lo, hi] for each parameter");
    }
    b.domain.clear();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto lh = rd.numbers(d[i], "immersion.domain[" + std::to_string(i) + "]");
      if (lh.size() != 2 || !(lh[1] > lh[0])) rd.fail(d[i], "domain interval must be [lo, hi] with lo < hi");
      b.domain.emplace_back(lh[0], lh[1]);
    }
  } else if (b.domain.empty()) {
    rd.fail(n, "expression immersion needs a 'domain'");
  }
  return b;
}

Vec domain_mid(const Built& b) {
  Vec u(static_cast<long>(b.domain.size()));
  for (std::size_t i = 0; i < b.domain.size(); ++i) u(static_cast<long>(i)) = 0.5 * (b.domain[i].first + b.domain[i].second);
  return u;
}

std::shared_ptr<const NormalSubbundle> parse_bundle(const Reader& rd, const YAML::Node& n, const Built& b) {
  rd.allow_keys(n, {"catalog", "frame"}, "bundle");
  const Immersion& f = *b.immersion;
  const SpaceModel& space = f.space();
  std::shared_ptr<const NormalSubbundle> v;
  if (n["catalog"]) {
    const std::string name = rd.text(n["catalog"], "bundle.catalog");
    if (name == "meridian") {
      if (b.catalog != "latitude_circle") rd.fail(n["catalog"], "meridian bundle needs the latitude_circle immersion");
      const double phi = b.params.at("phi");
      const int d = space.dim();
      v = std::make_shared<const NormalSubbundle>(f, 1, [d, phi](const Vec& u) {
        Mat m = Mat::Zero(d + 1, 1);
        m(0, 0) = std::cos(phi) * std::cos(u(0));
        m(1, 0) = std::cos(phi) * std::sin(u(0));
        m(2, 0) = -std::sin(phi);
        return m;
      });
    } else if (name == "cp1_normal") {
      if (b.catalog != "cp1_circle") rd.fail(n["catalog"], "cp1_normal bundle needs the cp1_circle immersion");
      const double a = b.params.at("a");
      const int cd = space.chart_dim();
      // Horizontal lift of the unit normal inside CP^1; metric length 1 for c = 4.
      const double unit = space.scale();
      v = std::make_shared<const NormalSubbundle>(f, 1, [cd, a, unit](const Vec& u) {
        Mat m = Mat::Zero(cd, 1);
        m(0, 0) = -std::sin(a) / unit;
        m(2, 0) = std::cos(a) * std::cos(u(0)) / unit;
        m(3, 0) = std::cos(a) * std::sin(u(0)) / unit;
        return m;
      });
    } else if (name == "full_normal") {
      v = std::make_shared<const NormalSubbundle>(NormalSubbundle::full_normal(f, domain_mid(b)));
    } else {
      rd.fail(n["catalog"], "unknown bundle '" + name + "'; available: cp1_normal, full_normal, meridian");
    }
  } else {
    const YAML::Node cols = rd.require(n, "frame", "bundle");
    if (!cols.IsSequence() || cols.size() == 0) rd.fail(cols, "bundle.frame must be a non-empty list of columns");
    std::vector<std::vector<Expression>> e;
    const std::vector<std::string>& names = b.names;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const YAML::Node c = cols[j];
      if (!c.IsSequence() || static_cast<int>(c.size()) != space.chart_dim()) {
        rd.fail(c, "bundle.frame columns must list " + std::to_string(space.chart_dim()) + " chart coordinates");
      }
      std::vector<Expression> col;
      for (std::size_t i = 0; i < c.size(); ++i) col.push_back(rd.expression(c[i], names, "bundle.frame"));
      e.push_back(std::move(col));
    }
    const int k = static_cast<int>(e.size());
    if (k > space.dim() - f.param_dim()) rd.fail(cols, "bundle rank exceeds the codimension");
    const int cd = space.chart_dim();
    v = std::make_shared<const NormalSubbundle>(f, k, [e, cd](const Vec& u) {
      Mat m(cd, static_cast<long>(e.size()));
      for (std::size_t j = 0; j < e.size(); ++j) {
        for (int i = 0; i < cd; ++i) m(i, static_cast<long>(j)) = e[j][static_cast<std::size_t>(i)](u);
      }
      return m;
    });
  }
  return v;
}

// ---- checks ----

CheckSpec parse_check(const Reader& rd, const YAML::Node& n) {
  CheckSpec c;
  c.line = n.Mark().line + 1;
  YAML::Node opts;
  if (n.IsScalar()) {
    c.name = n.as<std::string>();
  } else if (n.IsMap()) {
    c.name = rd.text(rd.require(n, "check", "checks entry"), "check");
    opts = n;
  } else {
    rd.fail(n, "checks entries must be a name or a mapping with 'check'");
  }
  const CheckInfo* info = find_check(c.name);
  if (!info) {
    rd.fail(n, "unknown check '" + c.name + "'; available: " +
                   join_names(check_table(), [](const CheckInfo& i) { return i.name; }));
  }
  c.tol = info->tol;
  for (const auto& [k, v] : info->options) c.options[k] = v;
  if (!opts) return c;
  for (const auto& kv : opts) {
    const std::string key = kv.first.as<std::string>();
    if (key == "check") continue;
    if (key == "tol") {
      c.tol = rd.number(kv.second, "tol");
      if (!(c.tol > 0.0)) rd.fail(kv.second, "tol must be positive");
    } else if (key == "expect") {
      const std::string e = rd.text(kv.second, "expect");
      if (e == "pass") {
        c.expect = Expectation::Pass;
      } else if (e == "fail") {
        c.expect = Expectation::Fail;
      } else if (e == "any") {
        c.expect = Expectation::Any;
      } else {
        rd.fail(kv.second, "expect must be pass, fail or any");
      }
    } else if (c.options.count(key)) {
      const double v = rd.number(kv.second, key);
      if (!(v > 0.0)) rd.fail(kv.second, key + " must be positive");
      c.options[key] = v;
    } else {
      std::string allowed = "check, tol, expect";
      for (const auto& [k, unused] : info->options) allowed += std::string(", ") + k;
      rd.fail(kv.first, "unknown key '" + key + "' for " + c.name + "; expected one of: " + allowed);
    }
  }
  return c;
}

std::vector<Vec> tensor_grid(const std::vector<std::pair<double, double>>& domain, int n) {
  std::vector<Vec> out{Vec(0)};
  for (const auto& [lo, hi] : domain) {
    std::vector<Vec> next;
    for (const Vec& g : out) {
      for (int i = 0; i <= n; ++i) {
        Vec x(g.size() + 1);
        x.head(g.size()) = g;
        x(g.size()) = lo + (hi - lo) * i / n;
        next.push_back(x);
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<Vec> diagonal_path(const std::vector<std::pair<double, double>>& domain, int n) {
  std::vector<Vec> out;
  for (int k = 0; k <= n; ++k) {
    Vec x(static_cast<long>(domain.size()));
    for (std::size_t i = 0; i < domain.size(); ++i) {
      x(static_cast<long>(i)) = domain[i].first + (domain[i].second - domain[i].first) * k / n;
    }
    out.push_back(x);
  }
  return out;
}

FrenetData parse_frenet(const Reader& rd, const YAML::Node& n, const SpaceModel& space) {
  rd.allow_keys(n, {"curvatures", "length", "steps", "start", "frame"}, "frenet");
  FrenetData d{space, space.origin(), default_frenet_frame(space), {}, 1.0, 1024};
  const YAML::Node ks = rd.require(n, "curvatures", "frenet");
  if (!ks.IsSequence()) rd.fail(ks, "frenet.curvatures must be a list of expressions in t");
  if (static_cast<int>(ks.size()) > space.dim() - 1) rd.fail(ks, "frenet: at most dim - 1 curvatures");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const Expression e = rd.expression(ks[i], {"t"}, "frenet.curvatures[" + std::to_string(i) + "]");
    d.curvatures.push_back([e](double t) { return e(t); });
  }
  d.length = rd.number(rd.require(n, "length", "frenet"), "frenet.length");
  if (!(d.length > 0.0)) rd.fail(n["length"], "frenet.length must be positive");
  d.steps = rd.integer_or(n, "steps", 4096, "frenet", 2);
  if (const YAML::Node s = n["start"]; s && !(s.IsScalar() && s.as<std::string>() == "default")) {
    const auto x = rd.numbers(s, "frenet.start");
    if (static_cast<int>(x.size()) != space.chart_dim()) rd.fail(s, "frenet.start has the wrong chart dimension");
    try {
      d.start = space.point(Eigen::Map<const Vec>(x.data(), static_cast<long>(x.size())));
    } catch (const Error& e) {
      rd.fail(s, std::string("frenet.start: ") + e.what());
    }
    if (!n["frame"] || (n["frame"].IsScalar() && n["frame"].as<std::string>() == "default")) {
      d.frame = space.frame(d.start);
    }
  }
  if (const YAML::Node f = n["frame"]; f && !(f.IsScalar() && f.as<std::string>() == "default")) {
    if (!f.IsSequence() || static_cast<int>(f.size()) != space.dim()) rd.fail(f, "frenet.frame must list dim columns");
    d.frame = Mat(space.chart_dim(), space.dim());
    for (std::size_t j = 0; j < f.size(); ++j) {
      const auto c = rd.numbers(f[j], "frenet.frame column");
      if (static_cast<int>(c.size()) != space.chart_dim()) rd.fail(f[j], "frenet.frame column has the wrong length");
      for (std::size_t i = 0; i < c.size(); ++i) d.frame(static_cast<long>(i), static_cast<long>(j)) = c[i];
    }
  }
  return d;
}

}  // namespace

const char* tool_version() { return CODIMRED_VERSION; }

ScenarioError::ScenarioError(const std::string& source, int line, const std::string& what)
    : Error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what), line_(line) {}

const char* to_string(Expectation e) {
  switch (e) {
    case Expectation::Pass: return "pass";
    case Expectation::Fail: return "fail";
    case Expectation::Any: return "any";
  }
  return "?";
}

std::vector<std::string> bundled_scenario_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : bundled_scenarios()) out.emplace_back(name);
  return out;
}

std::optional<std::string> bundled_scenario_text(const std::string& name) {
  for (const auto& [n, text] : bundled_scenarios()) {
    if (name == n) return std::string(text);
  }
  return std::nullopt;
}

std::vector<CatalogEntry> catalog(const std::string& filter) {
  std::vector<CatalogEntry> all = {
      {"space", "complex_projective", "CP^n with holomorphic curvature c (default 4); keys dim, holomorphic_curvature"},
      {"space", "euclidean", "R^n; key dim"},
      {"space", "hyperbolic", "H^n on the hyperboloid; keys dim, radius"},
      {"space", "sphere", "S^n in R^(n+1); keys dim, radius"},
      {"immersion", "cp1_circle", "u -> [cos a : sin a e^(iu) : 0 ...] in CP^n; param a"},
      {"immersion", "expression", "coordinate expressions in named parameters over a domain"},
      {"immersion", "latitude_circle", "circle at polar angle phi in the equatorial S^2 of S^n; param phi"},
      {"bundle", "cp1_normal", "normal of cp1_circle inside CP^1"},
      {"bundle", "expression", "frame columns as chart expressions in the immersion parameters (u for catalog immersions)"},
      {"bundle", "frenet", "span{H, nabla-perp H} of a Frenet curve"},
      {"bundle", "full_normal", "the whole normal bundle"},
      {"bundle", "meridian", "span{H} of latitude_circle"},
      {"construction", "frenet", "unit-speed curve from prescribed curvatures kappa_i(t)"},
  };
  for (const CheckInfo& c : check_table()) all.push_back({"check", c.name, c.description});
  for (const auto& [name, text] : bundled_scenarios()) {
    std::string desc;
    try {
      const YAML::Node n = YAML::Load(text);
      if (n["description"]) desc = n["description"].as<std::string>();
    } catch (const YAML::Exception&) {
      desc = "(unreadable)";
    }
    all.push_back({"scenario", name, desc});
  }
  if (filter.empty()) return all;
  std::vector<CatalogEntry> out;
  for (const CatalogEntry& e : all) {
    if (e.kind.find(filter) != std::string::npos || e.name.find(filter) != std::string::npos) out.push_back(e);
  }
  return out;
}

std::string catalog_text(const std::vector<CatalogEntry>& entries) {
  std::size_t wk = 0;
  std::size_t wn = 0;
  for (const auto& e : entries) {
    wk = std::max(wk, e.kind.size());
    wn = std::max(wn, e.name.size());
  }
  std::ostringstream os;
  for (const auto& e : entries) {
    os << std::left << std::setw(static_cast<int>(wk) + 2) << e.kind << std::setw(static_cast<int>(wn) + 2) << e.name
       << e.description << "\n";
  }
  return os.str();
}

std::string catalog_json(const std::vector<CatalogEntry>& entries) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["entries"] = Json::array();
  for (const auto& e : entries) j["entries"].push_back({{"kind", e.kind}, {"name", e.name}, {"description", e.description}});
  return j.dump(2) + "\n";
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  const Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    rd.fail(e.mark.line + 1, e.msg);
  }
  if (!root.IsMap()) rd.fail(root, "scenario must be a mapping");
  rd.allow_keys(root,
                {"name", "description", "space", "immersion", "bundle", "frenet", "grid", "envelope", "checks"},
                "scenario");
  Scenario sc;
  sc.source = source;
  sc.name = rd.text(rd.require(root, "name", "scenario"), "name");
  if (root["description"]) sc.description = rd.text(root["description"], "description");
  const SpaceModel space = parse_space(rd, rd.require(root, "space", "scenario"));

  const YAML::Node grid = root["grid"];
  if (grid) rd.allow_keys(grid, {"samples", "curve_samples"}, "grid");
  const YAML::Node gnode = grid ? grid : YAML::Node(YAML::NodeType::Map);

  if (root["frenet"]) {
    if (root["immersion"] || root["bundle"]) {
      rd.fail(root["frenet"], "a frenet scenario builds its own immersion and bundle");
    }
    const FrenetData d = parse_frenet(rd, root["frenet"], space);
    std::shared_ptr<const FrenetResult> r;
    try {
      r = std::make_shared<const FrenetResult>(frenet_integrate(d));
      sc.bundle = std::make_shared<const NormalSubbundle>(frenet_bundle(r));
    } catch (const Error& e) {
      rd.fail(root["frenet"], std::string("frenet: ") + e.what());
    }
    sc.grid = arc_grid(r->length(), rd.integer_or(gnode, "samples", 64, "grid", 1));
    sc.curve = arc_path(r->length(), rd.integer_or(gnode, "curve_samples", 256, "grid", 2));
  } else {
    const Built b = parse_immersion(rd, rd.require(root, "immersion", "scenario"), space);
    const YAML::Node bnode = rd.require(root, "bundle", "scenario");
    sc.bundle = parse_bundle(rd, bnode, b);
    sc.grid = tensor_grid(b.domain, rd.integer_or(gnode, "samples", 12, "grid", 1));
    for (const Vec& u : sc.grid) {
      try {
        (void)sc.bundle->subspace(u);
      } catch (const Error& ex) {
        rd.fail(bnode, std::string("bundle: ") + ex.what());
      }
    }
    sc.curve = diagonal_path(b.domain, rd.integer_or(gnode, "curve_samples", 256, "grid", 2));
  }

  if (const YAML::Node env = root["envelope"]) {
    rd.allow_keys(env, {"epsilon", "s_nodes", "max_shrinks"}, "envelope");
    sc.envelope.epsilon = rd.number_or(env, "epsilon", sc.envelope.epsilon, "envelope");
    if (!(sc.envelope.epsilon > 0.0)) rd.fail(env["epsilon"], "envelope.epsilon must be positive");
    sc.envelope.s_nodes_per_axis = rd.integer_or(env, "s_nodes", sc.envelope.s_nodes_per_axis, "envelope", 1);
    sc.envelope.max_shrinks = rd.integer_or(env, "max_shrinks", sc.envelope.max_shrinks, "envelope", 0);
  }

  const YAML::Node checks = rd.require(root, "checks", "scenario");
  if (!checks.IsSequence() || checks.size() == 0) rd.fail(checks, "checks must be a non-empty list");
  for (const auto& c : checks) sc.checks.push_back(parse_check(rd, c));
  return sc;
}

Scenario load_scenario(const std::string& file_or_name) {
  std::ifstream in(file_or_name);
  if (in) {
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), file_or_name);
  }
  if (auto text = bundled_scenario_text(file_or_name)) return parse_scenario(*text, file_or_name);
  throw ScenarioError(file_or_name, 0,
                      "no such file or bundled scenario; bundled scenarios: " +
                          join_names(bundled_scenario_names(), [](const std::string& s) { return s; }));
}

double env_tol_scale() {
  const char* v = std::getenv("CODIMRED_TOL_SCALE");
  if (!v || !*v) return 1.0;
  char* end = nullptr;
  const double x = std::strtod(v, &end);
  if (end == v || *end != '\0' || !(x > 0.0) || !std::isfinite(x)) {
    throw Error(std::string("CODIMRED_TOL_SCALE must be a positive number, got '") + v + "'");
  }
  return x;
}

RunReport run_scenario(const Scenario& sc, const RunOptions& opts) {
  if (!(opts.tol_scale > 0.0) || !std::isfinite(opts.tol_scale)) throw Error("tolerance scale must be positive");
  const auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.scenario = sc.name;
  rep.description = sc.description;
  rep.source = sc.source;
  rep.seed = opts.seed;
  rep.tol_scale = opts.tol_scale;

  const NormalSubbundle& v = *sc.bundle;
  const bool needs_envelope = std::any_of(sc.checks.begin(), sc.checks.end(), [](const CheckSpec& c) {
    return c.name == "totally_geodesic" || c.name == "tangent_preservation";
  });
  std::shared_ptr<const Envelope> env;
  std::string env_error;
  if (needs_envelope) {
    try {
      env = std::make_shared<const Envelope>(build_envelope(v, sc.grid, sc.envelope));
    } catch (const std::exception& e) {
      env_error = std::string("envelope: ") + e.what();
    }
  }

  auto run_one = [&](const CheckSpec& c) -> CheckReport {
    const double tol = c.tol * opts.tol_scale;
    const auto opt = [&c](const char* k) { return c.options.at(k); };
    if (c.name == "first_normal_contained") return check_first_normal_contained(v, sc.grid, tol);
    if (c.name == "parallel_subbundle") return check_parallel_subbundle(v, sc.curve, tol);
    if (c.name == "curvature_invariant") return check_curvature_invariant_along(v, sc.grid, tol);
    if (c.name == "totally_geodesic" || c.name == "tangent_preservation") {
      if (!env) throw GeometryError(env_error);
      if (c.name == "totally_geodesic") return check_totally_geodesic(*env, tol, opts.seed, static_cast<int>(opt("pairs")));
      return check_tangent_preservation(*env, grid_loops(*env, static_cast<int>(opt("loops"))), tol);
    }
    if (c.name == "jacobi_containment") {
      const Vec& u = sc.grid.front();
      const Immersion& f = v.immersion();
      const Point p = f.point(u);
      const Subspace w0 = span_union(tangent_space(f, u), v.subspace(u));
      const Vec vel = f.space().from_frame(p, w0.basis_vector(0));
      return check_jacobi_containment(
          f.space(), {p, vel}, w0,
          random_jacobi_conditions(w0, static_cast<int>(opt("conditions")), opts.seed), opt("t_end"), tol,
          static_cast<int>(opt("samples")));
    }
    throw Error("unknown check " + c.name);
  };

  auto guarded = [&](const CheckSpec& c) {
    CheckOutcome out;
    out.expect = c.expect;
    try {
      out.report = run_one(c);
    } catch (const std::exception& e) {
      out.report = make_report(c.name, std::nan(""), c.tol * opts.tol_scale);
      out.error = e.what();
    }
    switch (c.expect) {
      case Expectation::Pass: out.as_expected = out.report.pass; break;
      case Expectation::Fail: out.as_expected = !out.report.pass && out.error.empty(); break;
      case Expectation::Any: out.as_expected = true; break;
    }
    return out;
  };

  if (opts.parallel && sc.checks.size() > 1) {
    std::vector<std::future<CheckOutcome>> fut;
    for (const CheckSpec& c : sc.checks) fut.push_back(std::async(std::launch::async, guarded, std::cref(c)));
    for (auto& f : fut) rep.checks.push_back(f.get());
  } else {
    for (const CheckSpec& c : sc.checks) rep.checks.push_back(guarded(c));
  }
  rep.ok = std::all_of(rep.checks.begin(), rep.checks.end(), [](const CheckOutcome& c) { return c.as_expected; });
  if (opts.timing) {
    rep.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return rep;
}

std::string report_json(const RunReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["tool"] = {{"name", "codimred"}, {"version", tool_version()}};
  j["scenario"] = {{"name", r.scenario}, {"description", r.description}, {"source", r.source}};
  j["checks"] = Json::array();
  for (const CheckOutcome& c : r.checks) {
    Json e;
    e["name"] = c.report.name;
    e["residual"] = c.report.residual;
    e["tol"] = c.report.tolerance;
    e["pass"] = c.report.pass;
    e["expected"] = to_string(c.expect);
    e["verdict"] = codimred::to_string(c.report.verdict);
    e["as_expected"] = c.as_expected;
    e["location"] = c.report.location;
    if (!c.error.empty()) e["error"] = c.error;
    if (!c.report.diagnostics.empty()) e["diagnostics"] = c.report.diagnostics;
    j["checks"].push_back(std::move(e));
  }
  j["verdict"] = r.ok ? "ok" : "mismatch";
  j["seed"] = r.seed;
  j["tol_scale"] = r.tol_scale;
  j["runtime_ms"] = r.runtime_ms;
  return j.dump(2) + "\n";
}

std::string report_text(const RunReport& r) {
  std::ostringstream os;
  os << "scenario " << r.scenario << " (seed " << r.seed << ", tol scale " << r.tol_scale << ")\n";
  std::size_t w = 0;
  for (const auto& c : r.checks) w = std::max(w, c.report.name.size());
  for (const auto& c : r.checks) {
    os << "  " << std::left << std::setw(static_cast<int>(w) + 2) << c.report.name << std::right
       << "residual " << std::setw(11) << std::scientific << std::setprecision(3) << c.report.residual << "  tol "
       << std::setw(9) << std::setprecision(1) << c.report.tolerance << std::defaultfloat << "  "
       << std::setw(12) << std::left << codimred::to_string(c.report.verdict) << "expected " << std::setw(5)
       << to_string(c.expect) << (c.as_expected ? "ok" : "MISMATCH") << std::right << "\n";
    if (!c.error.empty()) {
      os << "    error: " << c.error << "\n";
    } else if (!c.report.pass && !c.report.location.empty()) {
      os << "    worst at " << c.report.location << "\n";
    }
  }
  int matched = 0;
  for (const auto& c : r.checks) matched += c.as_expected ? 1 : 0;
  os << "verdict: " << (r.ok ? "ok" : "mismatch") << " (" << matched << "/" << r.checks.size()
     << " as expected)\n";
  return os.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical checks for codimension reduction of submanifolds", "codimred"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  std::string target;
  std::string out_path;
  std::uint64_t seed = 0;
  double tol_scale = 0.0;
  bool json = false;
  bool no_timing = false;
  bool serial = false;
  CLI::App* run = app.add_subcommand("run", "run a scenario file or bundled scenario");
  run->add_option("scenario", target, "scenario file or bundled name")->required();
  run->add_option("--out", out_path, "also write the JSON report here");
  run->add_option("--seed", seed, "seed for randomized checks");
  CLI::Option* scale_opt =
      run->add_option("--tol-scale", tol_scale, "multiply every tolerance (default $CODIMRED_TOL_SCALE or 1)");
  run->add_flag("--json", json, "print the JSON report instead of text");
  run->add_flag("--no-timing", no_timing, "report runtime_ms as 0");
  run->add_flag("--serial", serial, "run checks one after another");

  bool cat_json = false;
  std::string filter;
  CLI::App* cat = app.add_subcommand("catalog", "list built-in spaces, immersions, bundles, checks and scenarios");
  cat->add_flag("--json", cat_json, "machine-readable listing");
  cat->add_option("filter", filter, "keep entries whose kind or name contains this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  if (*cat) {
    const auto entries = catalog(filter);
    out << (cat_json ? catalog_json(entries) : catalog_text(entries));
    return 0;
  }

  RunOptions opts;
  opts.seed = seed;
  opts.parallel = !serial;
  opts.timing = !no_timing;
  try {
    opts.tol_scale = scale_opt->count() ? tol_scale : env_tol_scale();
    if (!(opts.tol_scale > 0.0) || !std::isfinite(opts.tol_scale)) throw Error("--tol-scale must be positive");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  Scenario sc;
  try {
    sc = load_scenario(target);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  const RunReport rep = run_scenario(sc, opts);
  const std::string js = report_json(rep);
  out << (json ? js : report_text(rep));
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!(f << js)) {
      err << "error: cannot write " << out_path << "\n";
      return 2;
    }
  }
  return rep.ok ? 0 : 1;
}

}  // namespace codimred::cli
