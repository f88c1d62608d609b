#include "ferro/scenario.hpp"

#include "ferro/errors.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ferro {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
  int column = 0;  // of the value
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

std::string trim(const std::string& s, std::size_t* lead = nullptr) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    if (lead) *lead = s.size();
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  if (lead) *lead = b;
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s, bool allow_dot) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [&](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           (allow_dot && c == '.');
  });
}

std::vector<Section> tokenize(const std::string& text) {
  std::vector<Section> out;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::size_t lead = 0;
    const std::string line = trim(body, &lead);
    if (line.empty()) continue;
    const int col0 = static_cast<int>(lead) + 1;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError(lineno, col0 + static_cast<int>(line.size()), "expected ']'");
      }
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (!valid_name(name, true)) {
        throw ParseError(lineno, col0 + 1, "invalid section name '" + name + "'");
      }
      out.push_back({name, lineno, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(lineno, col0, "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!valid_name(key, false)) {
      throw ParseError(lineno, col0, "invalid key '" + key + "'");
    }
    if (out.empty()) throw ParseError(lineno, col0, "entry outside a section");
    std::size_t vlead = 0;
    const std::string rest = line.substr(eq + 1);
    const std::string value = trim(rest, &vlead);
    const int vcol = col0 + static_cast<int>(eq + 1 + vlead);
    if (value.empty()) throw ParseError(lineno, vcol, "missing value");
    out.back().entries.push_back({key, value, lineno, vcol});
  }
  return out;
}

struct Token {
  std::string text;
  int column;
};

std::vector<Token> split(const Entry& e) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < e.value.size()) {
    while (i < e.value.size() && (e.value[i] == ' ' || e.value[i] == '\t')) ++i;
    if (i >= e.value.size()) break;
    std::size_t j = i;
    while (j < e.value.size() && e.value[j] != ' ' && e.value[j] != '\t') ++j;
    out.push_back({e.value.substr(i, j - i), e.column + static_cast<int>(i)});
    i = j;
  }
  return out;
}

double to_double(const Entry& e, const Token& t) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.text.c_str(), &end);
  if (end != t.text.c_str() + t.text.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ParseError(e.line, t.column, "expected a number, got '" + t.text + "'");
  }
  return v;
}

long long to_int(const Entry& e, const Token& t) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(t.text.c_str(), &end, 10);
  if (end != t.text.c_str() + t.text.size() || errno == ERANGE) {
    throw ParseError(e.line, t.column, "expected an integer, got '" + t.text + "'");
  }
  return v;
}

std::vector<double> numbers(const Entry& e, std::size_t skip = 0) {
  std::vector<double> out;
  const auto toks = split(e);
  for (std::size_t i = skip; i < toks.size(); ++i) out.push_back(to_double(e, toks[i]));
  return out;
}

double number(const Entry& e) {
  const auto toks = split(e);
  if (toks.size() != 1) {
    throw ParseError(e.line, e.column, "expected a single number");
  }
  return to_double(e, toks[0]);
}

long long integer(const Entry& e) {
  const auto toks = split(e);
  if (toks.size() != 1) {
    throw ParseError(e.line, e.column, "expected a single integer");
  }
  return to_int(e, toks[0]);
}

/// Key lookup on one section with unknown/duplicate-key bookkeeping.
class Reader {
 public:
  Reader(const Section& s, std::vector<std::string>& violations)
      : s_(s), v_(violations) {}

  const Entry* get(const std::string& key) {
    used_.insert(key);
    const Entry* found = nullptr;
    for (const auto& e : s_.entries) {
      if (e.key != key) continue;
      if (found) {
        v_.push_back("[" + s_.name + "] line " + std::to_string(e.line) +
                     ": duplicate key '" + key + "'");
        break;
      }
      found = &e;
    }
    return found;
  }
  std::vector<const Entry*> all(const std::string& key) {
    used_.insert(key);
    std::vector<const Entry*> out;
    for (const auto& e : s_.entries) {
      if (e.key == key) out.push_back(&e);
    }
    return out;
  }
  void finish() {
    for (const auto& e : s_.entries) {
      if (!used_.count(e.key)) {
        v_.push_back("[" + s_.name + "] line " + std::to_string(e.line) +
                     ": unknown key '" + e.key + "'");
      }
    }
  }

 private:
  const Section& s_;
  std::vector<std::string>& v_;
  std::set<std::string> used_;
};

PotentialConfig read_potential(const Section& sec, std::vector<std::string>& v) {
  Reader r(sec, v);
  PotentialConfig p;
  if (const auto* e = r.get("family")) p.family = e->value;
  if (const auto* e = r.get("acts_on")) p.acts_on = e->value;
  if (const auto* e = r.get("H")) p.H = numbers(*e);
  if (const auto* e = r.get("Ps")) p.Ps = number(*e);
  if (const auto* e = r.get("a")) p.a = numbers(*e);
  if (const auto* e = r.get("c")) p.c = number(*e);
  if (const auto* e = r.get("p")) p.p = number(*e);
  if (const auto* e = r.get("kappa")) p.kappa = number(*e);
  r.finish();
  return p;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmt(v[i]);
  }
  return out;
}

ActsOn parse_acts_on(const std::string& s) {
  if (s == "full") return ActsOn::Full;
  if (s == "remanent_strain") return ActsOn::RemanentStrain;
  if (s == "polarization") return ActsOn::Polarization;
  throw InvalidArgument("acts_on must be full, remanent_strain or polarization, got '" + s + "'");
}

int block_size(const PotentialConfig& p, int dim) {
  const InternalLayout lay{dim};
  std::string on = p.acts_on;
  if (on.empty()) on = p.family == "quadratic" ? "full" : "polarization";
  if (on == "remanent_strain") return lay.strain_size();
  if (on == "polarization") return dim;
  return lay.size();
}

void check_potential(const PotentialConfig& p, int dim, bool flow,
                     const std::string& where, std::vector<std::string>& v) {
  static const std::set<std::string> f_families{"quadratic", "log_radial",
                                                "log_directional", "sum"};
  static const std::set<std::string> g_families{"power_law", "ball"};
  if (p.family.empty()) {
    v.push_back(where + ".family required");
    return;
  }
  const auto& allowed = flow ? g_families : f_families;
  if (!allowed.count(p.family)) {
    v.push_back(where + ".family '" + p.family + "' is not one of " +
                (flow ? "power_law, ball" : "quadratic, log_radial, log_directional, sum"));
    return;
  }
  if (!p.acts_on.empty()) {
    if (flow) {
      v.push_back(where + ".acts_on is not allowed for flow potentials");
    } else if (p.acts_on != "full" && p.acts_on != "remanent_strain" &&
               p.acts_on != "polarization") {
      v.push_back(where + ".acts_on must be full, remanent_strain or polarization");
    } else if (p.family.rfind("log_", 0) == 0 && p.acts_on != "polarization") {
      v.push_back(where + ".acts_on must be polarization for " + p.family);
    }
  }
  if (p.family == "quadratic") {
    const int nb = block_size(p, dim);
    if (p.H.size() != 1 && p.H.size() != static_cast<std::size_t>(nb * nb)) {
      v.push_back(where + ".H needs 1 or " + std::to_string(nb * nb) + " values");
    }
  }
  if ((p.family == "log_radial" || p.family == "log_directional") && !(p.Ps > 0.0)) {
    v.push_back(where + ".Ps must be > 0");
  }
  if (p.family == "log_directional") {
    double n2 = 0.0;
    for (double x : p.a) n2 += x * x;
    if (p.a.size() != static_cast<std::size_t>(dim) || n2 == 0.0) {
      v.push_back(where + ".a needs " + std::to_string(dim) + " values, not all zero");
    }
  }
  if (p.family == "power_law") {
    if (!(p.c > 0.0)) v.push_back(where + ".c must be > 0");
    if (!(p.p >= 2.0)) v.push_back(where + ".p must be >= 2");
  }
  if (p.family == "ball" && !(p.kappa > 0.0)) v.push_back(where + ".kappa must be > 0");
  if (p.family == "sum") {
    if (p.terms.empty()) v.push_back(where + " of family sum needs [potential.f.term] sections");
    for (std::size_t i = 0; i < p.terms.size(); ++i) {
      const std::string w = where + ".term[" + std::to_string(i + 1) + "]";
      if (p.terms[i].family == "sum") {
        v.push_back(w + " cannot itself be a sum");
        continue;
      }
      check_potential(p.terms[i], dim, false, w, v);
    }
  } else if (!p.terms.empty()) {
    v.push_back(where + ".term sections require family = sum");
  }
}

void serialize_potential(std::ostringstream& os, const std::string& name,
                         const PotentialConfig& p) {
  os << "[" << name << "]\n";
  os << "family = " << p.family << "\n";
  if (!p.acts_on.empty()) os << "acts_on = " << p.acts_on << "\n";
  if (p.family == "quadratic") os << "H = " << join(p.H) << "\n";
  if (p.family == "log_radial" || p.family == "log_directional") {
    os << "Ps = " << fmt(p.Ps) << "\n";
  }
  if (p.family == "log_directional") os << "a = " << join(p.a) << "\n";
  if (p.family == "power_law") os << "c = " << fmt(p.c) << "\np = " << fmt(p.p) << "\n";
  if (p.family == "ball") os << "kappa = " << fmt(p.kappa) << "\n";
  for (const auto& t : p.terms) {
    os << "\n";
    serialize_potential(os, name + ".term", t);
  }
}

Mat square(const std::vector<double>& v, int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = v[static_cast<std::size_t>(i * n + j)];
  }
  return m;
}

int num_cells_of(const Scenario& s) {
  int boxes = 1, fact = 1;
  for (int c : s.cells) boxes *= c;
  for (int k = 2; k <= s.dim; ++k) fact *= k;
  return boxes * fact;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  const auto sections = tokenize(text);
  std::vector<std::string> v;
  Scenario s;
  std::map<std::string, int> seen;
  bool has_f = false, has_g = false, has_time_level = false, has_levels = false;
  const Section* f_sec = nullptr;
  std::vector<const Section*> terms;
  for (const auto& sec : sections) {
    if (sec.name != "potential.f.term" && seen[sec.name]++) {
      v.push_back("line " + std::to_string(sec.line) + ": duplicate section [" + sec.name + "]");
      continue;
    }
    if (sec.name == "grid") {
      Reader r(sec, v);
      if (const auto* e = r.get("dim")) s.dim = static_cast<int>(integer(*e));
      std::vector<long long> cells;
      if (const auto* e = r.get("cells")) {
        for (const auto& t : split(*e)) cells.push_back(to_int(*e, t));
      }
      for (long long c : cells) s.cells.push_back(static_cast<int>(c));
      if (const auto* e = r.get("lengths")) s.lengths = numbers(*e);
      r.finish();
    } else if (sec.name == "material") {
      Reader r(sec, v);
      if (const auto* e = r.get("elastic")) {
        const auto toks = split(*e);
        s.elastic_kind = toks.front().text;
        s.elastic = numbers(*e, 1);
      }
      auto list_or_none = [&](const char* key, std::vector<double>& out) {
        if (const auto* e = r.get(key)) out = e->value == "none" ? std::vector<double>{} : numbers(*e);
      };
      list_or_none("dielectric", s.dielectric);
      list_or_none("coupling", s.coupling);
      list_or_none("hardening", s.hardening);
      r.finish();
    } else if (sec.name == "potential.f") {
      has_f = true;
      f_sec = &sec;
    } else if (sec.name == "potential.f.term") {
      terms.push_back(&sec);
    } else if (sec.name == "potential.g") {
      has_g = true;
      s.g = read_potential(sec, v);
    } else if (sec.name == "time") {
      Reader r(sec, v);
      if (const auto* e = r.get("T")) s.T = number(*e);
      if (const auto* e = r.get("level")) {
        s.level = static_cast<int>(integer(*e));
        has_time_level = true;
      }
      if (const auto* e = r.get("levels")) {
        has_levels = true;
        const auto dots = e->value.find("..");
        Entry lo = *e, hi = *e;
        if (dots == std::string::npos) {
          s.level_min = s.level_max = static_cast<int>(integer(*e));
        } else {
          lo.value = e->value.substr(0, dots);
          hi.value = e->value.substr(dots + 2);
          hi.column = e->column + static_cast<int>(dots + 2);
          s.level_min = static_cast<int>(integer(lo));
          s.level_max = static_cast<int>(integer(hi));
        }
      }
      if (const auto* e = r.get("regularization")) {
        if (e->value == "auto") {
          s.regularization.reset();
        } else {
          s.regularization = number(*e);
        }
      }
      r.finish();
    } else if (sec.name == "loads") {
      Reader r(sec, v);
      if (const auto* e = r.get("shape")) s.load_shape = e->value;
      for (const Entry* e : r.all("sample")) {
        const auto vals = numbers(*e);
        if (vals.size() < 2) {
          throw ParseError(e->line, e->column, "sample needs 't b_1 .. b_d q'");
        }
        LoadSample ls;
        ls.t = vals.front();
        ls.q = vals.back();
        ls.b.assign(vals.begin() + 1, vals.end() - 1);
        s.loads.push_back(std::move(ls));
      }
      r.finish();
    } else if (sec.name == "initial") {
      Reader r(sec, v);
      if (const auto* e = r.get("z0")) {
        s.z0 = e->value == "zero" ? std::vector<double>{} : numbers(*e);
      }
      for (const Entry* e : r.all("cell")) {
        const auto toks = split(*e);
        CellOverride co;
        co.cell = static_cast<int>(to_int(*e, toks.front()));
        co.z = numbers(*e, 1);
        s.z0_cells.push_back(std::move(co));
      }
      r.finish();
    } else if (sec.name == "output") {
      Reader r(sec, v);
      if (const auto* e = r.get("checkpoints")) {
        s.checkpoints = e->value == "auto" ? std::vector<double>{} : numbers(*e);
      }
      if (const auto* e = r.get("seed")) {
        const long long seed = integer(*e);
        if (seed < 0) v.push_back("output.seed must be >= 0");
        s.seed = static_cast<unsigned long long>(seed);
      }
      r.finish();
    } else if (sec.name == "tolerances") {
      Reader r(sec, v);
      if (const auto* e = r.get("step")) s.tol.step = number(*e);
      if (const auto* e = r.get("energy")) s.tol.energy = number(*e);
      if (const auto* e = r.get("mvs")) s.tol.mvs = number(*e);
      if (const auto* e = r.get("linear")) s.tol.linear = number(*e);
      if (const auto* e = r.get("fixed_point")) s.tol.fixed_point = number(*e);
      if (const auto* e = r.get("max_iterations")) {
        s.tol.max_iterations = static_cast<int>(integer(*e));
      }
      r.finish();
    } else {
      v.push_back("line " + std::to_string(sec.line) + ": unknown section [" + sec.name + "]");
    }
  }
  if (f_sec) {
    s.f = read_potential(*f_sec, v);
    for (const Section* t : terms) s.f.terms.push_back(read_potential(*t, v));
  } else if (!terms.empty()) {
    v.push_back("[potential.f.term] requires a [potential.f] section");
  }
  if (!seen.count("grid")) v.push_back("grid required");
  if (!has_f) v.push_back("potential.f required");
  if (!has_g) v.push_back("potential.g required");
  // Broadcast one-entry grid lists and fill the documented defaults.
  if (s.dim >= 1 && s.dim <= 3) {
    if (s.cells.size() == 1) s.cells.assign(static_cast<std::size_t>(s.dim), s.cells.front());
    if (s.lengths.empty()) s.lengths.assign(static_cast<std::size_t>(s.dim), 1.0);
    if (s.lengths.size() == 1) s.lengths.assign(static_cast<std::size_t>(s.dim), s.lengths.front());
    if (s.dielectric.empty()) s.dielectric.assign(static_cast<std::size_t>(s.dim), 1.0);
  }
  if (!has_levels) s.level_min = s.level_max = s.level;
  if (has_levels && !has_time_level) s.level = s.level_max;
  const auto more = validate_scenario(s);
  v.insert(v.end(), more.begin(), more.end());
  if (!has_f || !has_g) {
    // validate_scenario reports empty families; keep only the schema message.
    v.erase(std::remove_if(v.begin(), v.end(),
                           [&](const std::string& m) {
                             return (!has_f && m == "potential.f.family required") ||
                                    (!has_g && m == "potential.g.family required");
                           }),
            v.end());
  }
  if (!v.empty()) throw ValidationError(v);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> v;
  if (s.dim < 1 || s.dim > 3) {
    v.push_back("grid.dim must be 1, 2 or 3");
    return v;
  }
  const int d = s.dim;
  const int sz = sym_size(d);
  const int n = s.internal_size();
  const auto ud = static_cast<std::size_t>(d);
  bool grid_ok = true;
  if (s.cells.size() != ud) {
    v.push_back("grid.cells needs 1 or " + std::to_string(d) + " values");
    grid_ok = false;
  } else if (std::any_of(s.cells.begin(), s.cells.end(), [](int c) { return c < 1; })) {
    v.push_back("grid.cells must be >= 1");
    grid_ok = false;
  }
  if (s.lengths.size() != ud) {
    v.push_back("grid.lengths needs 1 or " + std::to_string(d) + " values");
  } else if (std::any_of(s.lengths.begin(), s.lengths.end(), [](double l) { return !(l > 0.0); })) {
    v.push_back("grid.lengths must be > 0");
  }
  if (s.elastic_kind == "isotropic") {
    if (s.elastic.size() != 2) v.push_back("material.elastic isotropic needs 'lambda mu'");
  } else if (s.elastic_kind == "packed") {
    if (s.elastic.size() != static_cast<std::size_t>(sz * sz)) {
      v.push_back("material.elastic packed needs " + std::to_string(sz * sz) + " values");
    }
  } else {
    v.push_back("material.elastic must start with isotropic or packed");
  }
  if (s.dielectric.size() != ud && s.dielectric.size() != ud * ud) {
    v.push_back("material.dielectric needs " + std::to_string(d) + " or " +
                std::to_string(d * d) + " values");
  }
  if (!s.coupling.empty() && s.coupling.size() != static_cast<std::size_t>(d * sz)) {
    v.push_back("material.coupling needs none or " + std::to_string(d * sz) + " values");
  }
  if (!s.hardening.empty() && s.hardening.size() != 1 &&
      s.hardening.size() != static_cast<std::size_t>(n * n)) {
    v.push_back("material.hardening needs none, 1 or " + std::to_string(n * n) + " values");
  }
  check_potential(s.f, d, false, "potential.f", v);
  check_potential(s.g, d, true, "potential.g", v);
  if (!(s.T > 0.0)) v.push_back("time.T must be > 0");
  auto level_ok = [](int m) { return m >= 0 && m <= 24; };
  if (!level_ok(s.level)) v.push_back("time.level must be in 0..24");
  if (!level_ok(s.level_min) || !level_ok(s.level_max)) {
    v.push_back("time.levels must lie in 0..24");
  }
  if (s.level_min > s.level_max) v.push_back("time.levels must satisfy m0 <= m1");
  if (s.regularization && !(*s.regularization >= 0.0)) {
    v.push_back("time.regularization must be 'auto' or >= 0");
  }
  if (s.load_shape != "uniform" && s.load_shape != "sine") {
    v.push_back("loads.shape must be uniform or sine");
  }
  for (std::size_t i = 0; i < s.loads.size(); ++i) {
    if (s.loads[i].b.size() != ud) {
      v.push_back("loads.sample " + std::to_string(i + 1) + " needs t, " +
                  std::to_string(d) + " body-force values and q");
    }
    if (i > 0 && !(s.loads[i].t > s.loads[i - 1].t)) {
      v.push_back("loads.sample times must be strictly increasing");
    }
  }
  if (!s.loads.empty() && (s.loads.front().t > 0.0 || s.loads.back().t < s.T)) {
    v.push_back("loads.sample times must cover [0, T]");
  }
  if (!s.z0.empty() && s.z0.size() != static_cast<std::size_t>(n)) {
    v.push_back("initial.z0 needs zero or " + std::to_string(n) + " values");
  }
  const int cells = grid_ok ? num_cells_of(s) : 0;
  for (const auto& co : s.z0_cells) {
    if (grid_ok && (co.cell < 0 || co.cell >= cells)) {
      v.push_back("initial.cell " + std::to_string(co.cell) + " is out of range 0.." +
                  std::to_string(cells - 1));
    }
    if (co.z.size() != static_cast<std::size_t>(n)) {
      v.push_back("initial.cell " + std::to_string(co.cell) + " needs " +
                  std::to_string(n) + " values");
    }
  }
  for (double t : s.checkpoints) {
    if (!(t > 0.0 && t <= s.T)) v.push_back("output.checkpoints must lie in (0, T]");
  }
  if (!(s.tol.step > 0.0) || !(s.tol.energy > 0.0) || !(s.tol.mvs > 0.0) ||
      !(s.tol.linear > 0.0) || !(s.tol.fixed_point > 0.0)) {
    v.push_back("tolerances must be > 0");
  }
  if (s.tol.max_iterations < 1) v.push_back("tolerances.max_iterations must be >= 1");

  // Domain of f for the initial state, once everything it needs is valid.
  if (v.empty()) {
    try {
      const PotentialSpec f = build_potential(s.f, d);
      const InternalLayout lay{d};
      Vec base = Vec::Zero(n);
      for (int i = 0; i < static_cast<int>(s.z0.size()); ++i) base(i) = s.z0[static_cast<std::size_t>(i)];
      std::map<int, Vec> over;
      for (const auto& co : s.z0_cells) {
        over[co.cell] = Eigen::Map<const Vec>(co.z.data(), n);
      }
      bool base_reported = false;
      for (int c = 0; c < cells; ++c) {
        const auto it = over.find(c);
        const Vec& z = it == over.end() ? base : it->second;
        if (std::isfinite(eval(f, lay, z))) continue;
        if (it == over.end()) {
          if (!base_reported) {
            v.push_back("initial.z0 lies outside dom(f) in cell " + std::to_string(c));
            base_reported = true;
          }
        } else {
          v.push_back("initial.cell " + std::to_string(c) + " lies outside dom(f)");
        }
      }
    } catch (const Error& e) {
      v.push_back(std::string("potential.f: ") + e.what());
    }
  }
  return v;
}

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream os;
  os << "[grid]\ndim = " << s.dim << "\ncells = ";
  for (std::size_t i = 0; i < s.cells.size(); ++i) os << (i ? " " : "") << s.cells[i];
  os << "\nlengths = " << join(s.lengths) << "\n\n";
  os << "[material]\nelastic = " << s.elastic_kind << " " << join(s.elastic) << "\n";
  os << "dielectric = " << join(s.dielectric) << "\n";
  os << "coupling = " << (s.coupling.empty() ? "none" : join(s.coupling)) << "\n";
  os << "hardening = " << (s.hardening.empty() ? "none" : join(s.hardening)) << "\n\n";
  serialize_potential(os, "potential.f", s.f);
  os << "\n";
  serialize_potential(os, "potential.g", s.g);
  os << "\n[time]\nT = " << fmt(s.T) << "\nlevel = " << s.level << "\nlevels = " << s.level_min
     << ".." << s.level_max << "\nregularization = "
     << (s.regularization ? fmt(*s.regularization) : std::string("auto")) << "\n\n";
  os << "[loads]\nshape = " << s.load_shape << "\n";
  for (const auto& l : s.loads) {
    std::vector<double> row{l.t};
    row.insert(row.end(), l.b.begin(), l.b.end());
    row.push_back(l.q);
    os << "sample = " << join(row) << "\n";
  }
  os << "\n[initial]\nz0 = " << (s.z0.empty() ? "zero" : join(s.z0)) << "\n";
  for (const auto& co : s.z0_cells) os << "cell = " << co.cell << " " << join(co.z) << "\n";
  os << "\n[output]\ncheckpoints = "
     << (s.checkpoints.empty() ? "auto" : join(s.checkpoints)) << "\nseed = " << s.seed << "\n\n";
  os << "[tolerances]\nstep = " << fmt(s.tol.step) << "\nenergy = " << fmt(s.tol.energy)
     << "\nmvs = " << fmt(s.tol.mvs) << "\nlinear = " << fmt(s.tol.linear)
     << "\nfixed_point = " << fmt(s.tol.fixed_point)
     << "\nmax_iterations = " << s.tol.max_iterations << "\n";
  return os.str();
}

MaterialTensors build_tensors(const Scenario& s) {
  const int d = s.dim;
  const int sz = sym_size(d);
  const int n = s.internal_size();
  const ElasticParams el = s.elastic_kind == "isotropic"
                               ? ElasticParams::isotropic(s.elastic[0], s.elastic[1])
                               : ElasticParams::from_packed(square(s.elastic, sz));
  const DielectricParams di =
      s.dielectric.size() == static_cast<std::size_t>(d)
          ? DielectricParams::diagonal(Eigen::Map<const Vec>(s.dielectric.data(), d))
          : DielectricParams::full(square(s.dielectric, d));
  CouplingParams co = CouplingParams::none();
  if (!s.coupling.empty()) {
    Mat e(d, sz);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < sz; ++j) e(i, j) = s.coupling[static_cast<std::size_t>(i * sz + j)];
    }
    co = CouplingParams::full(e);
  }
  HardeningParams ha = HardeningParams::none();
  if (s.hardening.size() == 1) {
    if (s.hardening[0] != 0.0) ha = HardeningParams::identity(s.hardening[0], n);
  } else if (!s.hardening.empty()) {
    ha = HardeningParams::full(square(s.hardening, n));
  }
  return make_tensors(d, el, di, co, ha);
}

PotentialSpec build_potential(const PotentialConfig& cfg, int dim) {
  const std::string& fam = cfg.family;
  if (fam == "power_law") return make_power_law(cfg.c, cfg.p);
  if (fam == "ball") return make_ball_indicator(cfg.kappa);
  if (fam == "log_radial") return make_log_radial(cfg.Ps);
  if (fam == "log_directional") {
    Vec a = Eigen::Map<const Vec>(cfg.a.data(), static_cast<int>(cfg.a.size()));
    return make_log_directional(cfg.Ps, a.normalized());
  }
  if (fam == "quadratic") {
    const ActsOn on = cfg.acts_on.empty() ? ActsOn::Full : parse_acts_on(cfg.acts_on);
    const int nb = block_size(cfg, dim);
    const Mat H = cfg.H.size() == 1 ? Mat(cfg.H[0] * Mat::Identity(nb, nb)) : square(cfg.H, nb);
    return make_quadratic(H, on);
  }
  if (fam == "sum") {
    std::vector<PotentialSpec> terms;
    for (const auto& t : cfg.terms) terms.push_back(build_potential(t, dim));
    return make_sum(std::move(terms));
  }
  throw UnsupportedFamily("unknown family '" + fam + "'");
}

Model::Model(const Scenario& s) : scenario_(s) {
  const auto problems = validate_scenario(s);
  if (!problems.empty()) throw ValidationError(problems);
  LinearSolverOptions lo;
  lo.relative_tolerance = s.tol.linear;
  system_ = std::make_unique<AssembledSystem>(Grid(s.dim, s.cells, s.lengths),
                                              build_tensors(s), lo);
  f_ = build_potential(s.f, s.dim);
  g_ = build_potential(s.g, s.dim);

  const Grid& grid = system_->grid();
  Vec shape = Vec::Ones(grid.num_nodes());
  if (s.load_shape == "sine") {
    for (int k = 0; k < grid.num_nodes(); ++k) {
      const Vec x = grid.node_coords(k);
      double v = 1.0;
      for (int a = 0; a < s.dim; ++a) v *= std::sin(kPi * x(a) / grid.length(a));
      shape(k) = v;
    }
  }
  std::vector<LoadSample> samples = s.loads;
  if (samples.empty()) samples.push_back({0.0, std::vector<double>(static_cast<std::size_t>(s.dim), 0.0), 0.0});
  for (const auto& ls : samples) {
    const Vec b = Eigen::Map<const Vec>(ls.b.data(), s.dim);
    times_.push_back(ls.t);
    b_samples_.push_back(b * shape.transpose());
    q_samples_.push_back(ls.q * shape);
    zhat_samples_.push_back(system_->load_trace(b_samples_.back(), q_samples_.back()));
  }
}

double Model::regularization(int level) const {
  if (scenario_.regularization) return *scenario_.regularization;
  return 1.0 / std::max(level, 1);
}

Mat Model::initial_state() const {
  const int n = scenario_.internal_size();
  Mat z = system_->zero_field();
  if (!scenario_.z0.empty()) {
    const Vec base = Eigen::Map<const Vec>(scenario_.z0.data(), n);
    z.colwise() = base;
  }
  for (const auto& co : scenario_.z0_cells) {
    z.col(co.cell) = Eigen::Map<const Vec>(co.z.data(), n);
  }
  return z;
}

std::vector<std::pair<Mat, Vec>> Model::averaged_loads(const TimeGrid& tg) const {
  std::vector<Mat> q_as_mat;
  for (const auto& q : q_samples_) q_as_mat.push_back(q);
  const auto b = average_series(times_, b_samples_, tg);
  const auto q = average_series(times_, q_as_mat, tg);
  std::vector<std::pair<Mat, Vec>> out;
  for (std::size_t i = 0; i < b.size(); ++i) out.emplace_back(b[i], Vec(q[i].col(0)));
  return out;
}

SteppedProblem Model::problem(int level) const {
  const TimeGrid tg = make_time_grid(scenario_.T, level);
  StepOptions opt;
  opt.step_tol = scenario_.tol.step;
  opt.fixed_point_tol = scenario_.tol.fixed_point;
  opt.max_iterations = scenario_.tol.max_iterations;
  opt.seed = scenario_.seed;
  return SteppedProblem(*system_, f_, g_, tg, regularization(level),
                        average_loads(times_, zhat_samples_, tg), opt);
}

}  // namespace ferro
