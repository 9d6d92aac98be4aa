#include "parevo/scenario.hpp"

#include "parevo/certificates.hpp"
#include "parevo/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace parevo {

namespace {

const std::vector<std::string> kSections = {"domain",       "coefficients", "boundary", "scheme",
                                            "window",       "time",         "initial",  "certificates",
                                            "kernel",       "gradest",      "output"};

const std::map<std::string, std::vector<std::string>> kKeys = {
    {"", {"name", "seed"}},
    {"domain", {"kind", "dim", "center", "radius"}},
    {"coefficients", {"catalog"}},
    {"boundary", {"kind", "gamma", "beta"}},
    {"scheme", {"theta", "dt", "rannacher", "drift", "h", "h_theta", "R", "refinements", "tol"}},
    {"window", {"lower", "upper"}},
    {"time", {"s", "t"}},
    {"initial", {"field"}},
    {"certificates", {"lyapunov", "lambda", "compactness", "c1", "c2", "epsilon", "gauge", "H", "delta0"}},
    {"kernel", {"probes", "radii", "threshold", "expect"}},
    {"gradest", {"T", "ceiling", "batch", "waive", "expect"}},
    {"output", {"dir"}},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
  return out;
}

std::string fmt_vec(const Vec& v, int dim) {
  return dim == 2 ? fmt(v[0]) + " " + fmt(v[1]) : fmt(v[0]);
}

struct Entry {
  std::string value;
  int line;
};

// Section contents in file order; duplicate keys are reported.
using Section = std::map<std::string, Entry>;

class Reader {
 public:
  Reader(const std::string& section, const Section& sec, std::vector<ParseIssue>& issues)
      : name_(section), sec_(sec), issues_(issues) {}

  bool has(const std::string& key) const { return sec_.count(key) > 0; }

  void fail(const std::string& key, const std::string& msg) const {
    auto it = sec_.find(key);
    issues_.push_back({it == sec_.end() ? 0 : it->second.line, field(key), msg});
  }

  std::string field(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  std::string str(const std::string& key, const std::string& def) const {
    auto it = sec_.find(key);
    return it == sec_.end() ? def : it->second.value;
  }

  double num(const std::string& key, double def) const {
    auto it = sec_.find(key);
    if (it == sec_.end()) return def;
    double v;
    if (!parse_double(it->second.value, v)) {
      fail(key, "expected a number, got '" + it->second.value + "'");
      return def;
    }
    return v;
  }

  long long integer(const std::string& key, long long def) const {
    auto it = sec_.find(key);
    if (it == sec_.end()) return def;
    const std::string& s = it->second.value;
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      fail(key, "expected an integer, got '" + s + "'");
      return def;
    }
    return v;
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    auto it = sec_.find(key);
    if (it == sec_.end()) return out;
    std::istringstream is(it->second.value);
    std::string tok;
    while (is >> tok) {
      double v;
      if (!parse_double(tok, v)) {
        fail(key, "expected numbers, got '" + tok + "'");
        return {};
      }
      out.push_back(v);
    }
    return out;
  }

  ParamMap params(const std::string& prefix) const {
    ParamMap out;
    for (const auto& [k, e] : sec_) {
      if (k.rfind(prefix, 0) != 0) continue;
      double v;
      if (!parse_double(e.value, v))
        fail(k, "expected a number, got '" + e.value + "'");
      else
        out[k.substr(prefix.size())] = v;
    }
    return out;
  }

  static bool parse_double(const std::string& s, double& v) {
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
  }

 private:
  std::string name_;
  const Section& sec_;
  std::vector<ParseIssue>& issues_;
};

bool param_key(const std::string& section, const std::string& key) {
  if (section == "coefficients" || section == "initial") return key.rfind("param.", 0) == 0;
  if (section == "certificates")
    return key.rfind("lyapunov.", 0) == 0 || key.rfind("compactness.", 0) == 0 || key.rfind("gauge.", 0) == 0;
  return false;
}

void check_catalog_params(const Reader& r, const std::string& prefix, const std::string& catalog,
                          const ParamMap& given, const ParamMap& defaults, std::vector<ParseIssue>& issues) {
  std::vector<std::string> names;
  for (const auto& [k, v] : defaults) names.push_back(k);
  for (const auto& [k, v] : given) {
    if (defaults.count(k)) continue;
    std::string msg = "unknown parameter '" + k + "' for " + catalog;
    const std::string s = suggest(k, names);
    if (!s.empty()) msg += " (did you mean '" + s + "'?)";
    issues.push_back({0, r.field(prefix + k), msg});
  }
}

std::optional<CatalogSpec> read_field(const Reader& r, const std::string& key, const Domain* domain,
                                      std::vector<ParseIssue>& issues) {
  if (!r.has(key)) return std::nullopt;
  CatalogSpec spec{r.str(key, ""), r.params(key + ".")};
  const auto& cat = scalar_field_catalog();
  if (std::find(cat.begin(), cat.end(), spec.name) == cat.end()) {
    std::string msg = "unknown scalar field '" + spec.name + "'";
    const std::string s = suggest(spec.name, cat);
    if (!s.empty()) msg += " (did you mean '" + s + "'?)";
    r.fail(key, msg);
    return spec;
  }
  check_catalog_params(r, key + ".", spec.name, spec.params, scalar_field_defaults(spec.name), issues);
  (void)domain;
  return spec;
}

void check_expect(const Reader& r, const std::string& value) {
  if (value != "pass" && value != "fail") r.fail("expect", "expect must be 'pass' or 'fail'");
}

std::vector<Vec> parse_points(const Reader& r, const std::string& key, int dim) {
  std::vector<Vec> out;
  std::string text = r.str(key, "");
  std::istringstream is(text);
  std::string chunk;
  while (std::getline(is, chunk, ';')) {
    std::istringstream cs(chunk);
    std::vector<double> c;
    std::string tok;
    while (cs >> tok) {
      double v;
      if (!Reader::parse_double(tok, v)) {
        r.fail(key, "expected numbers, got '" + tok + "'");
        return {};
      }
      c.push_back(v);
    }
    if (c.empty()) continue;
    if (static_cast<int>(c.size()) != dim) {
      r.fail(key, "each point needs " + std::to_string(dim) + " coordinate(s)");
      return {};
    }
    out.push_back(point(c[0], dim == 2 ? c[1] : 0.0));
  }
  return out;
}

Vec read_vec(const Reader& r, const std::string& key, int dim, const Vec& def) {
  if (!r.has(key)) return def;
  const std::vector<double> v = r.list(key);
  if (static_cast<int>(v.size()) != dim) {
    r.fail(key, "expected " + std::to_string(dim) + " number(s)");
    return def;
  }
  return point(v[0], dim == 2 ? v[1] : 0.0);
}

}  // namespace

// ---------------------------------------------------------------------------

Domain DomainSpec::build() const {
  if (kind == "whole-space") return Domain::whole_space(dim);
  if (kind == "half-space") return Domain::half_space(dim);
  if (kind == "exterior-ball") return Domain::exterior_ball(dim, center, radius);
  throw Error(ErrorKind::Config, "unknown domain kind '" + kind + "'");
}

BoundaryCondition BoundarySpec::build(const Domain& domain) const {
  if (kind == "dirichlet" || !domain.has_boundary()) return BoundaryCondition::make_dirichlet();
  if (kind == "neumann") return BoundaryCondition::make_neumann(domain);
  if (kind == "robin") return BoundaryCondition::make_robin(domain, gamma);
  if (kind == "oblique") {
    const Vec b = beta.normalized();
    const double g = gamma;
    return BoundaryCondition::make_oblique([b](double, const Vec&) { return b; }, [g](double, const Vec&) { return g; });
  }
  throw Error(ErrorKind::Config, "unknown boundary kind '" + kind + "'");
}

std::string Scenario::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : serialize(*this)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ParseResult::message() const {
  std::ostringstream os;
  for (const auto& i : issues) {
    if (i.line > 0) os << "line " << i.line << ": ";
    if (!i.field.empty()) os << i.field << ": ";
    os << i.message << "\n";
  }
  return os.str();
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string suggest(const std::string& word, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t bd = 4;
  for (const auto& c : candidates) {
    const std::size_t d = edit_distance(word, c);
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  return best;
}

ParseResult parse_scenario(const std::string& text) {
  ParseResult result;
  auto& issues = result.issues;
  Scenario sc;
  std::map<std::string, Section> sections;
  std::map<std::string, int> section_line;
  sections[""];

  std::istringstream is(text);
  std::string raw, current;
  int lineno = 0;
  bool preamble = true;
  bool skipping = false;  // inside an unknown section
  while (std::getline(is, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (preamble) sc.comments.push_back(raw);
      continue;
    }
    preamble = false;
    if (line.front() == '[') {
      if (line.back() != ']') {
        issues.push_back({lineno, "", "malformed section header '" + line + "'"});
        skipping = true;
        continue;
      }
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), name) == kSections.end()) {
        std::string msg = "unknown section '" + name + "'";
        const std::string s = suggest(name, kSections);
        if (!s.empty()) msg += " (did you mean '" + s + "'?)";
        issues.push_back({lineno, name, msg});
        skipping = true;
        continue;
      }
      if (section_line.count(name)) issues.push_back({lineno, name, "duplicate section"});
      section_line[name] = lineno;
      current = name;
      skipping = false;
      sections[current];
      continue;
    }
    if (skipping) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      issues.push_back({lineno, current, "expected 'key = value'"});
      continue;
    }
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto& known = kKeys.at(current);
    if (std::find(known.begin(), known.end(), key) == known.end() && !param_key(current, key)) {
      std::vector<std::string> cands = known;
      if (current.empty()) cands.insert(cands.end(), kSections.begin(), kSections.end());
      std::string msg = "unknown field '" + key + "'";
      const std::string s = suggest(key, cands);
      if (!s.empty()) msg += " (did you mean '" + s + "'?)";
      issues.push_back({lineno, current.empty() ? key : current + "." + key, msg});
      continue;
    }
    if (sections[current].count(key)) issues.push_back({lineno, key, "duplicate field"});
    sections[current][key] = {value, lineno};
  }

  // top level
  {
    Reader r("", sections[""], issues);
    sc.name = r.str("name", "");
    if (sc.name.empty()) issues.push_back({0, "name", "missing name"});
    const long long seed = r.integer("seed", 1);
    if (seed < 0) r.fail("seed", "seed must be non-negative");
    sc.seed = static_cast<std::uint64_t>(seed);
  }

  // domain
  if (!section_line.count("domain")) {
    issues.push_back({0, "domain", "missing domain"});
  } else {
    Reader r("domain", sections["domain"], issues);
    sc.domain.kind = r.str("kind", "");
    const std::vector<std::string> kinds = {"whole-space", "half-space", "exterior-ball"};
    if (!r.has("kind")) {
      issues.push_back({section_line["domain"], "domain.kind", "missing field"});
    } else if (std::find(kinds.begin(), kinds.end(), sc.domain.kind) == kinds.end()) {
      std::string msg = "unknown domain kind '" + sc.domain.kind + "'";
      const std::string s = suggest(sc.domain.kind, kinds);
      if (!s.empty()) msg += " (did you mean '" + s + "'?)";
      r.fail("kind", msg);
    }
    sc.domain.dim = static_cast<int>(r.integer("dim", 1));
    if (sc.domain.dim != 1 && sc.domain.dim != 2) r.fail("dim", "dim must be 1 or 2");
    const int dim = std::clamp(sc.domain.dim, 1, 2);
    if (sc.domain.kind == "exterior-ball") {
      if (dim != 2) r.fail("dim", "exterior-ball needs dim = 2");
      sc.domain.center = read_vec(r, "center", dim, Vec::Zero());
      sc.domain.radius = r.num("radius", 1.0);
      if (!(sc.domain.radius > 0.0)) r.fail("radius", "radius must be positive");
    } else {
      if (r.has("center")) r.fail("center", "center only applies to exterior-ball");
      if (r.has("radius")) r.fail("radius", "radius only applies to exterior-ball");
    }
  }
  const int dim = std::clamp(sc.domain.dim, 1, 2);

  // coefficients
  if (!section_line.count("coefficients")) {
    issues.push_back({0, "coefficients", "missing coefficients"});
  } else {
    Reader r("coefficients", sections["coefficients"], issues);
    sc.coefficients.name = r.str("catalog", "");
    sc.coefficients.params = r.params("param.");
    const auto& cat = coefficient_catalog();
    if (!r.has("catalog")) {
      issues.push_back({section_line["coefficients"], "coefficients.catalog", "missing field"});
    } else if (std::find(cat.begin(), cat.end(), sc.coefficients.name) == cat.end()) {
      std::string msg = "unknown catalog entry '" + sc.coefficients.name + "'";
      const std::string s = suggest(sc.coefficients.name, cat);
      if (!s.empty()) msg += " (did you mean '" + s + "'?)";
      r.fail("catalog", msg);
    } else {
      check_catalog_params(r, "param.", sc.coefficients.name, sc.coefficients.params,
                           coefficient_defaults(sc.coefficients.name), issues);
    }
  }

  // boundary
  {
    Reader r("boundary", sections["boundary"], issues);
    sc.boundary.kind = r.str("kind", "dirichlet");
    const std::vector<std::string> kinds = {"dirichlet", "neumann", "robin", "oblique"};
    if (std::find(kinds.begin(), kinds.end(), sc.boundary.kind) == kinds.end()) {
      std::string msg = "unknown boundary kind '" + sc.boundary.kind + "'";
      const std::string s = suggest(sc.boundary.kind, kinds);
      if (!s.empty()) msg += " (did you mean '" + s + "'?)";
      r.fail("kind", msg);
    }
    const bool has_gamma = sc.boundary.kind == "robin" || sc.boundary.kind == "oblique";
    sc.boundary.gamma = r.num("gamma", 0.0);
    if (r.has("gamma") && !has_gamma) r.fail("gamma", "gamma only applies to robin and oblique conditions");
    if (sc.boundary.kind == "oblique") {
      if (!r.has("beta"))
        issues.push_back({section_line.count("boundary") ? section_line["boundary"] : 0, "boundary.beta",
                          "missing field"});
      sc.boundary.beta = read_vec(r, "beta", dim, Vec::Zero());
      if (r.has("beta") && sc.boundary.beta.norm() == 0.0) r.fail("beta", "beta must be nonzero");
    } else if (r.has("beta")) {
      r.fail("beta", "beta only applies to oblique conditions");
    }
  }

  // scheme
  {
    Reader r("scheme", sections["scheme"], issues);
    SchemeSpec& s = sc.scheme;
    s.theta = r.num("theta", s.theta);
    s.dt = r.num("dt", s.dt);
    s.rannacher = static_cast<int>(r.integer("rannacher", s.rannacher));
    s.drift = r.str("drift", s.drift);
    s.h = r.num("h", s.h);
    s.h_theta = r.num("h_theta", s.h_theta);
    s.R = r.num("R", s.R);
    s.refinements = static_cast<int>(r.integer("refinements", s.refinements));
    s.tol = r.num("tol", s.tol);
    if (!(s.theta >= 0.5 && s.theta <= 1.0)) r.fail("theta", "theta must lie in [0.5, 1]");
    if (!(s.dt > 0.0)) r.fail("dt", "dt must be positive");
    if (s.rannacher < 0 || s.rannacher % 2) r.fail("rannacher", "rannacher must be a non-negative even number");
    if (s.drift != "upwind" && s.drift != "central") r.fail("drift", "drift must be 'upwind' or 'central'");
    if (!(s.h > 0.0)) r.fail("h", "h must be positive");
    if (!(s.h_theta >= 0.0)) r.fail("h_theta", "h_theta must be non-negative");
    if (!(s.R > 0.0)) r.fail("R", "R must be positive");
    if (s.refinements < 0) r.fail("refinements", "refinements must be non-negative");
    if (!(s.tol > 0.0)) r.fail("tol", "tolerance must be positive");
  }

  // window
  if (section_line.count("window")) {
    Reader r("window", sections["window"], issues);
    sc.window.present = true;
    for (const char* k : {"lower", "upper"})
      if (!r.has(k)) issues.push_back({section_line["window"], std::string("window.") + k, "missing field"});
    sc.window.lower = read_vec(r, "lower", dim, Vec::Zero());
    sc.window.upper = read_vec(r, "upper", dim, Vec::Zero());
    for (int a = 0; a < dim; ++a)
      if (!(sc.window.lower[a] < sc.window.upper[a])) {
        r.fail("upper", "window upper must exceed lower");
        break;
      }
  }

  // time
  {
    Reader r("time", sections["time"], issues);
    sc.s = r.num("s", 0.0);
    sc.t = r.num("t", 1.0);
    if (!(sc.t > sc.s)) r.fail("t", "t must exceed s");
  }

  // initial
  {
    Reader r("initial", sections["initial"], issues);
    if (r.has("field")) {
      auto f = read_field(r, "field", nullptr, issues);
      sc.initial = *f;
      sc.initial.params = r.params("param.");
      if (std::find(scalar_field_catalog().begin(), scalar_field_catalog().end(), sc.initial.name) !=
          scalar_field_catalog().end())
        check_catalog_params(r, "param.", sc.initial.name, sc.initial.params, scalar_field_defaults(sc.initial.name),
                             issues);
    }
  }

  // certificates
  if (section_line.count("certificates")) {
    Reader r("certificates", sections["certificates"], issues);
    CertificateSpec& c = sc.certificates;
    c.present = true;
    c.lyapunov = read_field(r, "lyapunov", nullptr, issues);
    c.lambda = r.num("lambda", c.lambda);
    c.compactness = read_field(r, "compactness", nullptr, issues);
    c.c1 = r.num("c1", c.c1);
    c.c2 = r.num("c2", c.c2);
    c.epsilon = r.num("epsilon", c.epsilon);
    c.gauge = read_field(r, "gauge", nullptr, issues);
    c.H = r.num("H", c.H);
    c.delta0 = r.num("delta0", c.delta0);
    for (const char* k : {"lambda"})
      if (r.has(k) && !c.lyapunov) r.fail(k, "lambda needs a lyapunov field");
    for (const char* k : {"c1", "c2", "epsilon"})
      if (r.has(k) && !c.compactness) r.fail(k, std::string(k) + " needs a compactness field");
    if (r.has("H") && !c.gauge) r.fail("H", "H needs a gauge field");
    if (c.compactness && !(c.c1 > 0.0 && c.c2 > 0.0 && c.epsilon > 0.0))
      r.fail("c1", "compactness constants must be positive");
    if (!(c.delta0 >= 0.0)) r.fail("delta0", "delta0 must be non-negative");
  }

  // kernel
  if (section_line.count("kernel")) {
    Reader r("kernel", sections["kernel"], issues);
    KernelSpec& k = sc.kernel;
    k.present = true;
    k.probes = parse_points(r, "probes", dim);
    k.radii = r.list("radii");
    k.threshold = r.num("threshold", k.threshold);
    k.expect = r.str("expect", k.expect);
    if (!(k.threshold > 0.0)) r.fail("threshold", "tolerance must be positive");
    for (double v : k.radii)
      if (!(v > 0.0)) {
        r.fail("radii", "radii must be positive");
        break;
      }
    check_expect(r, k.expect);
  }

  // gradest
  if (section_line.count("gradest")) {
    Reader r("gradest", sections["gradest"], issues);
    GradestSpec& g = sc.gradest;
    g.present = true;
    g.T = r.num("T", g.T);
    g.ceiling = r.num("ceiling", g.ceiling);
    g.batch = static_cast<int>(r.integer("batch", g.batch));
    const std::string w = r.str("waive", "false");
    if (w != "true" && w != "false") r.fail("waive", "waive must be 'true' or 'false'");
    g.waive = w == "true";
    g.expect = r.str("expect", g.expect);
    if (!(g.T > sc.s)) r.fail("T", "T must exceed s");
    if (!(g.ceiling >= 0.0)) r.fail("ceiling", "ceiling must be non-negative");
    if (g.batch < 0) r.fail("batch", "batch must be non-negative");
    check_expect(r, g.expect);
  }

  if (section_line.count("output")) {
    Reader r("output", sections["output"], issues);
    sc.output = r.str("dir", "");
  }

  std::stable_sort(issues.begin(), issues.end(), [](const ParseIssue& a, const ParseIssue& b) {
    return (a.line == 0 ? 1 << 30 : a.line) < (b.line == 0 ? 1 << 30 : b.line);
  });
  if (issues.empty()) result.scenario = std::move(sc);
  return result;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot read scenario '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ParseResult r = parse_scenario(ss.str());
  if (!r.ok()) throw Error(ErrorKind::Config, path + ":\n" + r.message());
  return *r.scenario;
}

std::string serialize(const Scenario& sc) {
  std::ostringstream os;
  const int dim = sc.domain.dim;
  for (const auto& c : sc.comments) os << c << "\n";
  os << "name = " << sc.name << "\n";
  os << "seed = " << sc.seed << "\n";

  auto params = [&](const std::string& prefix, const ParamMap& p) {
    for (const auto& [k, v] : p) os << prefix << k << " = " << fmt(v) << "\n";
  };

  os << "\n[domain]\nkind = " << sc.domain.kind << "\ndim = " << dim << "\n";
  if (sc.domain.kind == "exterior-ball")
    os << "center = " << fmt_vec(sc.domain.center, dim) << "\nradius = " << fmt(sc.domain.radius) << "\n";

  os << "\n[coefficients]\ncatalog = " << sc.coefficients.name << "\n";
  params("param.", sc.coefficients.params);

  os << "\n[boundary]\nkind = " << sc.boundary.kind << "\n";
  if (sc.boundary.kind == "robin" || sc.boundary.kind == "oblique") os << "gamma = " << fmt(sc.boundary.gamma) << "\n";
  if (sc.boundary.kind == "oblique") os << "beta = " << fmt_vec(sc.boundary.beta, dim) << "\n";

  const SchemeSpec& s = sc.scheme;
  os << "\n[scheme]\ntheta = " << fmt(s.theta) << "\ndt = " << fmt(s.dt) << "\nrannacher = " << s.rannacher
     << "\ndrift = " << s.drift << "\nh = " << fmt(s.h) << "\nh_theta = " << fmt(s.h_theta) << "\nR = " << fmt(s.R)
     << "\nrefinements = " << s.refinements << "\ntol = " << fmt(s.tol) << "\n";

  if (sc.window.present)
    os << "\n[window]\nlower = " << fmt_vec(sc.window.lower, dim) << "\nupper = " << fmt_vec(sc.window.upper, dim)
       << "\n";

  os << "\n[time]\ns = " << fmt(sc.s) << "\nt = " << fmt(sc.t) << "\n";

  os << "\n[initial]\nfield = " << sc.initial.name << "\n";
  params("param.", sc.initial.params);

  if (sc.certificates.present) {
    const CertificateSpec& c = sc.certificates;
    os << "\n[certificates]\n";
    if (c.lyapunov) {
      os << "lyapunov = " << c.lyapunov->name << "\n";
      params("lyapunov.", c.lyapunov->params);
      os << "lambda = " << fmt(c.lambda) << "\n";
    }
    if (c.compactness) {
      os << "compactness = " << c.compactness->name << "\n";
      params("compactness.", c.compactness->params);
      os << "c1 = " << fmt(c.c1) << "\nc2 = " << fmt(c.c2) << "\nepsilon = " << fmt(c.epsilon) << "\n";
    }
    if (c.gauge) {
      os << "gauge = " << c.gauge->name << "\n";
      params("gauge.", c.gauge->params);
      os << "H = " << fmt(c.H) << "\n";
    }
    if (c.delta0 > 0.0) os << "delta0 = " << fmt(c.delta0) << "\n";
  }

  if (sc.kernel.present) {
    const KernelSpec& k = sc.kernel;
    os << "\n[kernel]\nprobes = ";
    for (size_t i = 0; i < k.probes.size(); ++i) os << (i ? "; " : "") << fmt_vec(k.probes[i], dim);
    os << "\nradii = " << fmt_list(k.radii) << "\nthreshold = " << fmt(k.threshold) << "\nexpect = " << k.expect
       << "\n";
  }

  if (sc.gradest.present) {
    const GradestSpec& g = sc.gradest;
    os << "\n[gradest]\nT = " << fmt(g.T) << "\nceiling = " << fmt(g.ceiling) << "\nbatch = " << g.batch
       << "\nwaive = " << (g.waive ? "true" : "false") << "\nexpect = " << g.expect << "\n";
  }

  if (!sc.output.empty()) os << "\n[output]\ndir = " << sc.output << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

const char* to_string(Status s) {
  switch (s) {
    case Status::Pass:
      return "pass";
    case Status::Fail:
      return "fail";
    case Status::ExpectedFail:
      return "expected-fail";
  }
  return "?";
}

bool RunReport::unexpected_failure() const {
  return std::any_of(results.begin(), results.end(), [](const auto& r) { return r.status == Status::Fail; });
}

void RunReport::write(std::ostream& os) const {
  os << "scenario = " << scenario << "\n";
  os << "scenario-hash = " << hash << "\n";
  os << "command = " << command << "\n";
  for (const auto& r : results) {
    os << "\n[" << r.name << "]\n";
    os << "status = " << to_string(r.status) << "\n";
    for (const auto& [k, v] : r.metrics) os << k << " = " << fmt(v) << "\n";
    for (const auto& a : r.artifacts) os << "artifact = " << a << "\n";
    os << "seconds = " << fmt(std::round(r.seconds * 1000.0) / 1000.0) << "\n";
    if (!r.note.empty()) {
      std::istringstream is(r.note);
      std::string line;
      while (std::getline(is, line)) os << "  " << line << "\n";
    }
  }
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Numerical:
      return 2;
    case ErrorKind::Hypothesis:
      return 3;
    default:
      return 1;
  }
}

int exit_code(const RunReport& report) { return report.unexpected_failure() ? 3 : 0; }

EvolutionOperator build_operator(const Scenario& sc, std::optional<int> refine) {
  const Domain domain = sc.domain.build();
  CoefficientSet coeffs = make_coefficients(sc.coefficients.name, sc.coefficients.params, sc.domain.dim);
  BoundaryCondition bc = sc.boundary.build(domain);
  SchemeConfig scheme;
  scheme.theta = sc.scheme.theta;
  scheme.dt = sc.scheme.dt;
  scheme.rannacher = sc.scheme.rannacher;
  scheme.drift = sc.scheme.drift == "central" ? DriftScheme::Central : DriftScheme::Upwind;
  scheme.validate();
  RefinementPolicy policy;
  policy.R = sc.scheme.R;
  policy.h = sc.scheme.h;
  policy.h_theta = sc.scheme.h_theta;
  policy.tol = sc.scheme.tol;
  policy.max_refinements = refine.value_or(sc.scheme.refinements);
  if (sc.window.present) policy.window = Window{sc.window.lower, sc.window.upper};
  return EvolutionOperator(std::move(coeffs), std::move(bc), domain, scheme, policy);
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Status judge(bool ok, const std::string& expect) {
  if (expect == "fail") return ok ? Status::Fail : Status::ExpectedFail;
  return ok ? Status::Pass : Status::Fail;
}

std::string capture(const auto& report) {
  std::ostringstream os;
  report.write(os);
  return os.str();
}

std::vector<Vec> default_probes(const EvolutionOperator& G) {
  const Window& K = G.policy().window;
  if (G.grid()->kind() == GridKind::Polar) {
    const double r = K.lower[0] + 1.0;
    return {G.domain().center() + Vec(r, 0.0)};
  }
  Vec p = 0.5 * (K.lower + K.upper);
  if (G.domain().kind() == DomainKind::HalfSpace) p[G.domain().dim() - 1] = std::min(1.0, K.upper[G.domain().dim() - 1]);
  return {p};
}

void validate_all(const Scenario& sc, const EvolutionOperator& G, RunReport& rep) {
  SamplerConfig cfg;
  cfg.s = sc.s;
  cfg.T = std::max(sc.t, sc.gradest.present ? sc.gradest.T : sc.t);
  cfg.seed = sc.seed;
  const SampleCloud cloud = make_cloud(G.domain(), cfg);
  const CoefficientSet& coeffs = G.coefficients();
  const BoundaryCondition& bc = G.boundary();
  const Domain& domain = G.domain();

  auto add = [&](const std::string& name, bool pass, std::vector<std::pair<std::string, double>> metrics,
                 std::string note, Clock::time_point t0) {
    ExperimentResult r;
    r.name = name;
    r.status = pass ? Status::Pass : Status::Fail;
    r.metrics = std::move(metrics);
    r.note = std::move(note);
    r.seconds = since(t0);
    rep.results.push_back(std::move(r));
  };

  auto t0 = Clock::now();
  const EllipticityReport ell = check_ellipticity(coeffs, domain, cloud);
  add("ellipticity", ell.pass, {{"eta0", ell.eta0}, {"c_min", ell.c_min}}, capture(ell), t0);

  const CertificateSpec& c = sc.certificates;
  if (c.lyapunov) {
    t0 = Clock::now();
    const ScalarField phi = make_scalar_field(c.lyapunov->name, c.lyapunov->params, domain);
    const LyapunovCertificate cert = check_lyapunov(coeffs, bc, domain, phi, c.lambda, cloud);
    add("lyapunov", cert.pass, {{"margin", cert.margin}, {"boundary_margin", cert.boundary_margin}}, capture(cert), t0);
  }
  if (c.gauge) {
    t0 = Clock::now();
    const ScalarField phi = make_scalar_field(c.gauge->name, c.gauge->params, domain);
    const GaugeCertificate cert = check_gauge(coeffs, bc, domain, phi, c.H, cloud);
    add("gauge", cert.pass, {{"M", cert.M}, {"margin", cert.margin}, {"boundary_margin", cert.boundary_margin}},
        capture(cert), t0);
  }
  if (c.compactness) {
    t0 = Clock::now();
    const ScalarField psi = make_scalar_field(c.compactness->name, c.compactness->params, domain);
    const CompactnessCertificate cert = check_compactness(coeffs, domain, psi, c.c1, c.c2, c.epsilon, cloud);
    add("compactness", cert.pass, {{"margin", cert.margin}}, capture(cert), t0);
  }
  if (c.delta0 > 0.0) {
    t0 = Clock::now();
    const GradientHypothesesReport g = check_gradient_hypotheses(coeffs, domain, c.delta0, cloud);
    add("gradient-hypotheses", g.pass,
        {{"M1", g.M1}, {"L1", g.L1}, {"L2", g.L2}, {"L3", g.L3}, {"L4", g.L4}, {"L5", g.L5}}, capture(g), t0);
  }
}

}  // namespace

RunReport run_command(const Scenario& sc_in, const std::string& command, const RunOptions& opts) {
  Scenario sc = sc_in;
  if (opts.seed) sc.seed = *opts.seed;
  RunReport rep;
  rep.scenario = sc.name;
  rep.hash = sc.hash();
  rep.command = command;
  const std::string prov = "scenario-hash " + rep.hash;

  std::string dir = opts.out_dir;
  if (dir.empty()) dir = sc.output;
  if (dir.empty()) {
    const char* env = std::getenv("PAREVO_OUT");
    dir = std::string(env && *env ? env : "out") + "/" + sc.name;
  }
  std::filesystem::create_directories(dir);
  auto path = [&](const std::string& f) { return (std::filesystem::path(dir) / f).string(); };

  const EvolutionOperator G = build_operator(sc, opts.refine);
  const Domain& domain = G.domain();
  const InitialData f = [phi = make_scalar_field(sc.initial.name, sc.initial.params, domain), s = sc.s](const Vec& x) {
    return phi(s, x).value;
  };

  if (command == "validate") {
    validate_all(sc, G, rep);
  } else if (command == "solve") {
    const auto t0 = Clock::now();
    ExperimentResult r;
    r.name = "solve";
    DiscreteField u = [&] {
      if (G.policy().max_refinements == 0) return G.apply(sc.t, sc.s, f);
      SolveRequest req{G.coefficients(), G.boundary(), domain, G.scheme(), sc.s, sc.t, f,
                       G.policy().R,     G.policy().h, G.policy().h_theta};
      Refinement ref = refine_until(req, G.policy().window, G.policy().tol, G.policy().max_refinements);
      for (const auto& step : ref.log)
        if (std::isfinite(step.difference)) r.metrics.push_back({"refinement_difference", step.difference});
      return ref.field;
    }();
    const auto nodes = u.grid->window_nodes(G.policy().window);
    r.metrics.insert(r.metrics.begin(), {{"sup", u.sup()}, {"sup_window", u.sup(nodes)}, {"integral", u.integral()},
                                         {"nodes", static_cast<double>(u.grid->size())}});
    write_trajectory_csv(path("solution.csv"), {u}, prov);
    r.artifacts.push_back("solution.csv");
    if (u.grid->dim() == 1) {
      std::vector<double> xs, ys;
      for (int k : nodes) {
        xs.push_back(u.grid->node(k)[0]);
        ys.push_back(u.values[k]);
      }
      write_svg_plot(path("solution.svg"), sc.name + ": u(t, x)", xs, ys);
      r.artifacts.push_back("solution.svg");
    }
    r.seconds = since(t0);
    rep.results.push_back(std::move(r));
  } else if (command == "kernel") {
    const auto t0 = Clock::now();
    const std::vector<Vec> probes = sc.kernel.probes.empty() ? default_probes(G) : sc.kernel.probes;
    const KernelEstimate k = estimate_kernel(G, sc.t, sc.s, probes);
    ExperimentResult r;
    r.name = "kernel";
    bool ok = k.positive_on_window;
    for (int i = 0; i < k.mass.size(); ++i) {
      r.metrics.push_back({"mass_" + std::to_string(i), k.mass[i]});
      if (G.boundary().dirichlet() || G.coefficients().c0 >= 0.0) ok = ok && k.mass[i] <= k.mass_bound + 2e-3;
    }
    r.metrics.push_back({"mass_bound", k.mass_bound});
    r.metrics.push_back({"min_value", k.min_value});
    r.status = judge(ok, sc.kernel.expect);
    write_kernel_csv(path("kernel.csv"), k, prov);
    write_kernel_summary(path("kernel_summary.csv"), k, sc.kernel.radii, prov);
    r.artifacts = {"kernel.csv", "kernel_summary.csv"};
    r.seconds = since(t0);
    rep.results.push_back(std::move(r));
  } else if (command == "tightness") {
    const auto t0 = Clock::now();
    const std::vector<Vec> probes = sc.kernel.probes.empty() ? default_probes(G) : sc.kernel.probes;
    std::vector<double> radii = sc.kernel.radii;
    if (radii.empty()) radii = {1, 2, 3, 4};
    const auto rows = tightness_profile(G, sc.t, sc.s, probes, radii);
    ExperimentResult r;
    r.name = "tightness";
    std::vector<double> xs, ys;
    for (const auto& row : rows) {
      r.metrics.push_back({"tail_" + fmt(row.n), row.sup_tail});
      xs.push_back(row.n);
      ys.push_back(row.sup_tail);
    }
    r.status = judge(!rows.empty() && rows.back().sup_tail <= sc.kernel.threshold, sc.kernel.expect);
    write_tightness_csv(path("tightness.csv"), rows, prov);
    write_svg_plot(path("tightness.svg"), sc.name + ": sup tail mass", xs, ys, false, sc.kernel.threshold);
    r.artifacts = {"tightness.csv", "tightness.svg"};
    r.seconds = since(t0);
    rep.results.push_back(std::move(r));
  } else if (command == "gradest") {
    const auto t0 = Clock::now();
    const GradestSpec& g = sc.gradest;
    const double T = g.present ? g.T : sc.t;
    std::vector<InitialData> batch{f};
    for (const auto& b : random_bumps(G, g.batch, sc.seed)) batch.push_back(b);
    std::optional<GradientHypothesesReport> hyp;
    if (!g.waive) {
      SamplerConfig cfg;
      cfg.s = sc.s;
      cfg.T = T;
      cfg.seed = sc.seed;
      const double delta0 = sc.certificates.delta0 > 0.0 ? sc.certificates.delta0 : 0.5;
      hyp = check_gradient_hypotheses(G.coefficients(), domain, delta0, make_cloud(domain, cfg));
    }
    const GradEstReport est = gradient_constant(G, sc.s, T, batch, hyp ? &*hyp : nullptr, g.waive);
    ExperimentResult r;
    r.name = "gradest";
    r.metrics = {{"C", est.C}, {"median", est.median()}, {"max_to_median", est.max_to_median()},
                 {"batch", static_cast<double>(est.batch)}};
    if (g.ceiling > 0.0) r.metrics.push_back({"ceiling", g.ceiling});
    r.note = est.warning;
    r.status = judge(g.ceiling <= 0.0 || est.C <= g.ceiling, g.expect);
    write_series_csv(path("gradest.csv"), "t_minus_s", "kappa", est.times, est.kappa, prov);
    write_svg_plot(path("gradest.svg"), sc.name + ": kappa(t)", est.times, est.kappa, true,
                   g.ceiling > 0.0 ? g.ceiling : std::nan(""));
    r.artifacts = {"gradest.csv", "gradest.svg"};
    r.seconds = since(t0);
    rep.results.push_back(std::move(r));
  } else {
    throw Error(ErrorKind::Config, "unknown command '" + command + "'");
  }

  std::ofstream os(path("report.txt"));
  rep.write(os);
  return rep;
}

}  // namespace parevo
