#include "voldisc/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "voldisc/mlcont.hpp"
#include "voldisc/poisson.hpp"

namespace voldisc {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

// Numbers separated by commas and/or whitespace.
std::vector<double> parse_number_list(const std::string& text, const std::string& where) {
  std::string t = text;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  std::vector<double> out;
  double x;
  while (in >> x) out.push_back(x);
  in.clear();
  std::string rest;
  in >> rest;
  if (!rest.empty()) throw parse_error(where + ": cannot read number '" + rest + "'");
  return out;
}

double parse_one_number(const std::string& text, const std::string& where) {
  std::vector<double> v = parse_number_list(text, where);
  if (v.size() != 1) throw parse_error(where + ": expected a single number, got '" + text + "'");
  return v.front();
}

long parse_one_integer(const std::string& text, const std::string& where) {
  double x = parse_one_number(text, where);
  long n = static_cast<long>(x);
  if (static_cast<double>(n) != x) throw parse_error(where + ": expected an integer, got '" + text + "'");
  return n;
}

// Matrix literal: rows separated by ';', row entries by spaces/commas.
// Shorthands: "eye" (optionally "eye*c") and "zero" use the declared dimension.
Mat<double> parse_matrix(const std::string& text, long dim, const std::string& where) {
  std::string body = trim(text);
  std::string lowered = lower(body);
  if (lowered == "zero") return Mat<double>::Zero(dim, dim);
  if (lowered.rfind("eye", 0) == 0) {
    double c = 1.0;
    std::string rest = trim(body.substr(3));
    if (!rest.empty()) {
      if (rest.front() != '*') throw parse_error(where + ": expected eye or eye*<scale>");
      c = parse_one_number(rest.substr(1), where);
    }
    return Mat<double>(c * Mat<double>::Identity(dim, dim));
  }
  std::vector<std::string> rows = split_on(body, ';');
  std::vector<std::vector<double>> entries;
  std::size_t cols = 0;
  for (const std::string& r : rows) {
    if (r.empty()) continue;
    entries.push_back(parse_number_list(r, where));
    if (cols == 0) cols = entries.back().size();
    if (entries.back().size() != cols) throw parse_error(where + ": ragged matrix rows");
  }
  if (entries.empty() || cols == 0) throw parse_error(where + ": empty matrix literal");
  Mat<double> m(static_cast<Eigen::Index>(entries.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entries[i][j];
  return m;
}

// Kernel text forms:
//   delta | cesaro:<alpha> | geometric:<scale>,<ratio> | explicit:<v0>,<v1>,...
//   weylfrac:<alpha> | fracforcing:<alpha> | fracforcing-sum:<a1 a2 ...>;<index>[;<shared>]
KernelSpec<double> parse_kernel(const std::string& text, const std::string& where) {
  std::string body = trim(text);
  std::string head = lower(body);
  std::string arg;
  std::size_t colon = body.find(':');
  if (colon != std::string::npos) {
    head = lower(trim(body.substr(0, colon)));
    arg = trim(body.substr(colon + 1));
  }
  if (head == "delta") {
    if (!arg.empty()) throw parse_error(where + ": delta kernel takes no parameters");
    return KernelSpec<double>::delta();
  }
  if (head == "cesaro") return KernelSpec<double>::cesaro(parse_one_number(arg, where));
  if (head == "geometric") {
    std::vector<double> p = parse_number_list(arg, where);
    if (p.size() != 2) throw parse_error(where + ": geometric kernel needs scale,ratio");
    return KernelSpec<double>::geometric(p[0], p[1]);
  }
  if (head == "explicit") {
    std::vector<double> p = parse_number_list(arg, where);
    if (p.empty()) throw parse_error(where + ": explicit kernel needs values");
    return KernelSpec<double>::explicit_values(p);
  }
  if (head == "weylfrac") return KernelSpec<double>::weyl_frac(parse_one_number(arg, where));
  if (head == "fracforcing") return frac_forcing_kernel<double>(parse_one_number(arg, where));
  if (head == "fracforcing-sum") {
    std::vector<std::string> parts = split_on(arg, ';');
    if (parts.size() < 2 || parts.size() > 3)
      throw parse_error(where + ": fracforcing-sum needs <orders>;<index>[;<shared order>]");
    std::vector<double> alphas = parse_number_list(parts[0], where);
    long idx = parse_one_integer(parts[1], where);
    std::optional<double> shared;
    if (parts.size() == 3) shared = parse_one_number(parts[2], where);
    return frac_forcing_sum_kernel<double>(alphas, static_cast<int>(idx), shared);
  }
  throw parse_error(where + ": unknown kernel form '" + body + "'");
}

struct RawSection {
  // preserves encounter order of keys for deterministic diagnostics
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::pair<std::string, long>> lines;  // key -> config line

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }
};

std::string csv_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == ',' || c == '\n' || c == '\r') out.push_back(';');
    else out.push_back(c);
  }
  return out;
}

std::string format_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3e", x);
  return buf;
}

}  // namespace

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open scenario file '" + path + "'");

  std::map<std::string, RawSection> sections;
  std::vector<PipelineStep> pipeline;
  std::string section;
  std::string line;
  long lineno = 0;
  auto where = [&](long ln) { return path + ":" + std::to_string(ln); };

  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw parse_error(where(lineno) + ": unterminated section header");
      section = lower(trim(body.substr(1, body.size() - 2)));
      if (section.empty()) throw parse_error(where(lineno) + ": empty section name");
      continue;
    }
    if (section.empty())
      throw parse_error(where(lineno) + ": content before the first [section] header");
    if (section == "pipeline") {
      std::string cmd = lower(body);
      std::string arg;
      std::size_t colon = cmd.find(':');
      if (colon != std::string::npos) {
        arg = cmd.substr(colon + 1);
        cmd = cmd.substr(0, colon);
      }
      pipeline.push_back(PipelineStep{cmd, arg, lineno});
      continue;
    }
    std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw parse_error(where(lineno) + ": expected key = value in section [" + section + "]");
    std::string key = lower(trim(body.substr(0, eq)));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw parse_error(where(lineno) + ": empty key");
    sections[section].entries.emplace_back(key, value);
    sections[section].lines.emplace_back(key, lineno);
  }

  Scenario s;
  s.pipeline = pipeline;

  auto line_of = [&](const std::string& sec, const std::string& key) -> long {
    auto it = sections.find(sec);
    if (it == sections.end()) return 0;
    for (const auto& [k, ln] : it->second.lines)
      if (k == key) return ln;
    return 0;
  };
  auto ctx = [&](const std::string& sec, const std::string& key) {
    long ln = line_of(sec, key);
    return (ln ? where(ln) : path) + ": [" + sec + "] " + key;
  };

  if (auto it = sections.find("scenario"); it != sections.end()) {
    for (const auto& [k, v] : it->second.entries) {
      if (k == "name") s.name = v;
      else if (k == "dim") s.dim = parse_one_integer(v, ctx("scenario", k));
      else if (k == "horizon") s.horizon = parse_one_integer(v, ctx("scenario", k));
      else if (k == "window") s.window = parse_one_integer(v, ctx("scenario", k));
      else if (k == "out") s.out_dir = v;
      else throw parse_error(ctx("scenario", k) + ": unknown key");
    }
  }
  if (s.dim < 1) throw parse_error(path + ": [scenario] dim must be >= 1");
  if (s.horizon < 1) throw parse_error(path + ": [scenario] horizon must be >= 1");
  if (s.window < 1) throw parse_error(path + ": [scenario] window must be >= 1");

  // operators + kernels + lags -> ProblemSpec
  auto ops = sections.find("operators");
  auto kerns = sections.find("kernels");
  if (ops != sections.end() || kerns != sections.end()) {
    if (ops == sections.end() || kerns == sections.end())
      throw parse_error(path + ": sections [operators] and [kernels] must appear together");
    ProblemSpec<double> spec;
    spec.C = Mat<double>::Identity(s.dim, s.dim);
    std::map<long, Mat<double>> As;
    for (const auto& [k, v] : ops->second.entries) {
      if (k == "b") spec.Bs = {parse_matrix(v, s.dim, ctx("operators", k))};
      else if (k == "c") spec.C = parse_matrix(v, s.dim, ctx("operators", k));
      else if (k.size() > 1 && k.front() == 'a') {
        long i = parse_one_integer(k.substr(1), ctx("operators", k));
        if (i < 1) throw parse_error(ctx("operators", k) + ": term indices start at 1");
        As[i] = parse_matrix(v, s.dim, ctx("operators", k));
      } else {
        throw parse_error(ctx("operators", k) + ": unknown key (expected b, c, a1, a2, ...)");
      }
    }
    if (spec.Bs.empty()) spec.Bs = {Mat<double>::Identity(s.dim, s.dim)};
    std::map<long, KernelSpec<double>> as_kernels;
    for (const auto& [k, v] : kerns->second.entries) {
      if (k == "k") spec.k = parse_kernel(v, ctx("kernels", k));
      else if (k.size() > 1 && k.front() == 'a') {
        long i = parse_one_integer(k.substr(1), ctx("kernels", k));
        if (i < 1) throw parse_error(ctx("kernels", k) + ": term indices start at 1");
        as_kernels[i] = parse_kernel(v, ctx("kernels", k));
      } else {
        throw parse_error(ctx("kernels", k) + ": unknown key (expected k, a1, a2, ...)");
      }
    }
    std::map<long, long> lags;
    if (auto lg = sections.find("lags"); lg != sections.end()) {
      for (const auto& [k, v] : lg->second.entries) {
        if (k.size() > 1 && k.front() == 'v') {
          long i = parse_one_integer(k.substr(1), ctx("lags", k));
          long lag = parse_one_integer(v, ctx("lags", k));
          if (lag < 0) throw parse_error(ctx("lags", k) + ": lags must be >= 0");
          lags[i] = lag;
        } else {
          throw parse_error(ctx("lags", k) + ": unknown key (expected v1, v2, ...)");
        }
      }
    }
    long n = 0;
    for (const auto& [i, m] : As) n = std::max(n, i);
    for (const auto& [i, m] : as_kernels) n = std::max(n, i);
    for (long i = 1; i <= n; ++i) {
      if (!As.count(i))
        throw parse_error(path + ": [operators] missing a" + std::to_string(i));
      if (!as_kernels.count(i))
        throw parse_error(path + ": [kernels] missing a" + std::to_string(i));
      spec.As.push_back(As[i]);
      spec.kernels.push_back(as_kernels[i]);
      spec.lags.push_back(lags.count(i) ? lags[i] : 0);
    }
    try {
      spec.validate();
    } catch (const std::exception& e) {
      // semantic defects surface with the file named, like syntax errors
      throw parse_error(path + ": " + e.what());
    }
    s.spec = std::move(spec);
    s.has_spec = true;
  }

  if (auto it = sections.find("forcing"); it != sections.end()) {
    for (const auto& [k, v] : it->second.entries) {
      if (k == "f") {
        std::string head = lower(v);
        if (head == "delta") {
          s.f_kind = "delta";
        } else if (head.rfind("explicit", 0) == 0) {
          std::size_t colon = v.find(':');
          if (colon == std::string::npos)
            throw parse_error(ctx("forcing", k) + ": explicit forcing needs values");
          s.f_kind = "explicit";
          s.f_values = parse_number_list(v.substr(colon + 1), ctx("forcing", k));
          if (s.f_values.empty())
            throw parse_error(ctx("forcing", k) + ": explicit forcing needs values");
        } else {
          throw parse_error(ctx("forcing", k) + ": forcing must be delta or explicit:<values>");
        }
      } else if (k == "x") {
        std::vector<double> xs = parse_number_list(v, ctx("forcing", k));
        s.x = Mat<double>(static_cast<Eigen::Index>(xs.size()), 1);
        for (std::size_t i = 0; i < xs.size(); ++i) s.x(static_cast<Eigen::Index>(i), 0) = xs[i];
      } else if (k == "lo") {
        s.f_lo = parse_one_integer(v, ctx("forcing", k));
      } else if (k == "h") {
        s.h_period = parse_number_list(v, ctx("forcing", k));
      } else if (k == "q") {
        s.q_values = parse_number_list(v, ctx("forcing", k));
      } else if (k == "weight") {
        s.weight = parse_one_number(v, ctx("forcing", k));
        if (s.weight < 0) throw parse_error(ctx("forcing", k) + ": weight must be >= 0");
      } else {
        throw parse_error(ctx("forcing", k) + ": unknown key");
      }
    }
  }
  if (s.x.size() == 0) s.x = Mat<double>::Ones(s.dim, 1);
  if (s.x.rows() != s.dim)
    throw parse_error(path + ": [forcing] x has " + std::to_string(s.x.rows()) +
                      " entries, expected " + std::to_string(s.dim));

  if (auto it = sections.find("tolerances"); it != sections.end()) {
    for (const auto& [k, v] : it->second.entries) {
      if (k == "identity") s.tol_identity = parse_one_number(v, ctx("tolerances", k));
      else if (k == "solve") s.tol_solve = parse_one_number(v, ctx("tolerances", k));
      else throw parse_error(ctx("tolerances", k) + ": unknown key");
    }
    if (!(s.tol_identity > 0) || !(s.tol_solve > 0))
      throw parse_error(path + ": [tolerances] values must be > 0");
  }

  if (auto it = sections.find("poisson"); it != sections.end()) {
    for (const auto& [k, v] : it->second.entries) {
      if (k == "a") s.p_a = parse_one_number(v, ctx("poisson", k));
      else if (k == "omega") s.p_omega = parse_one_number(v, ctx("poisson", k));
      else if (k == "scheme") {
        s.p_scheme = lower(v);
        if (s.p_scheme != "laguerre" && s.p_scheme != "composite")
          throw parse_error(ctx("poisson", k) + ": scheme must be laguerre or composite");
      } else if (k == "nodes") {
        s.p_nodes = static_cast<int>(parse_one_integer(v, ctx("poisson", k)));
      } else if (k == "target") {
        s.p_target = parse_one_number(v, ctx("poisson", k));
      } else if (k == "bound") {
        s.growth_bound = parse_one_number(v, ctx("poisson", k));
      } else if (k == "rate") {
        s.growth_rate = parse_one_number(v, ctx("poisson", k));
      } else {
        throw parse_error(ctx("poisson", k) + ": unknown key");
      }
    }
  }

  if (auto it = sections.find("ml"); it != sections.end()) {
    for (const auto& [k, v] : it->second.entries) {
      if (k == "matrix") s.ml_matrix = parse_matrix(v, s.dim, ctx("ml", k));
      else if (k == "alpha") s.ml_alpha = parse_one_number(v, ctx("ml", k));
      else if (k == "flavor") {
        s.ml_flavor = lower(v);
        if (s.ml_flavor != "caputo" && s.ml_flavor != "rl")
          throw parse_error(ctx("ml", k) + ": flavor must be caputo or rl");
      } else if (k == "rate") {
        s.ml_rate = parse_one_number(v, ctx("ml", k));
      } else if (k == "sampled") {
        s.sampled_path = v;
      } else {
        throw parse_error(ctx("ml", k) + ": unknown key");
      }
    }
  }

  static const char* known[] = {"scenario", "operators", "kernels",    "lags",    "forcing",
                                "tolerances", "poisson",   "ml",         "pipeline"};
  for (const auto& [name, sec] : sections) {
    bool ok = false;
    for (const char* kn : known) ok = ok || (name == kn);
    if (!ok) throw parse_error(path + ": unknown section [" + name + "]");
  }

  if (s.pipeline.empty()) throw parse_error(path + ": [pipeline] section with steps is required");
  for (const PipelineStep& st : s.pipeline) {
    static const char* cmds[] = {"build-family", "build-shifted", "poissonize", "summability",
                                 "solve",        "exp-solve",     "verify",     "ap-decompose",
                                 "report"};
    bool ok = false;
    for (const char* c : cmds) ok = ok || (st.command == c);
    if (!ok) throw parse_error(where(st.line) + ": unknown pipeline step '" + st.command + "'");
    if (st.command == "verify") {
      if (st.arg != "existence" && st.arg != "multiterm" && st.arg != "weyl")
        throw parse_error(where(st.line) +
                          ": verify needs one of existence | multiterm | weyl, got '" + st.arg +
                          "'");
    } else if (!st.arg.empty()) {
      throw parse_error(where(st.line) + ": step '" + st.command + "' takes no argument");
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// execution

namespace {

struct CertRow {
  std::string name;
  SummabilityCertificate cert;
};

struct RunContext {
  std::optional<ExistenceFamily<double>> family;
  std::optional<SummabilityCertificate> cert;
  std::optional<SolutionBundle<double>> bundle;
  std::optional<GridSequence<double>> u_grid;  // initial-value solution (for ap)
  std::optional<APDecomposition<double>> ap;
  std::vector<CertRow> certs;
  double transform_error = 0.0;
  // fitted continuous-family growth data (for the weighted transform certificate)
  std::optional<double> fit_bound, fit_rate, fit_sigma;
};

const char* criterion_name(SummabilityCertificate::Criterion c) {
  switch (c) {
    case SummabilityCertificate::Criterion::general: return "general";
    case SummabilityCertificate::Criterion::commuting: return "commuting";
    case SummabilityCertificate::Criterion::growth: return "growth";
    default: return "none";
  }
}

// forcing sequence: profile values times x on [lo, lo + window + lookahead],
// zero-extended exactly on both sides of the profile
BiSequence<double> build_forcing(const Scenario& s) {
  long lookahead = s.has_spec ? s.spec.v_max() : 0;
  long hi = s.f_lo + s.window + lookahead;
  BiSequence<double> f = BiSequence<double>::zeros(s.f_lo, hi, s.x.rows(), 1);
  f.decay = Decay::zero();
  if (s.f_kind == "delta") {
    f.at(s.f_lo) = s.x;
  } else {
    for (std::size_t i = 0; i < s.f_values.size(); ++i) {
      long v = s.f_lo + static_cast<long>(i);
      if (v > hi) break;
      f.at(v) = s.f_values[i] * s.x;
    }
  }
  return f;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw precondition_error(msg);
}

ContinuousFamily<double> continuous_source(const Scenario& s, RunContext& ctx) {
  if (!s.sampled_path.empty()) {
    std::ifstream in(s.sampled_path);
    if (!in) throw parse_error("cannot open sampled family file '" + s.sampled_path + "'");
    std::vector<double> ts;
    std::vector<Mat<double>> vals;
    std::string line;
    long lineno = 0;
    double maxnorm = 0.0;
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      std::string body = trim(line);
      if (body.empty()) continue;
      std::vector<double> nums =
          parse_number_list(body, s.sampled_path + ":" + std::to_string(lineno));
      if (nums.size() != static_cast<std::size_t>(1 + s.dim * s.dim))
        throw parse_error(s.sampled_path + ":" + std::to_string(lineno) + ": expected t plus " +
                          std::to_string(s.dim * s.dim) + " row-major entries");
      ts.push_back(nums[0]);
      Mat<double> m(s.dim, s.dim);
      for (long i = 0; i < s.dim; ++i)
        for (long j = 0; j < s.dim; ++j)
          m(i, j) = nums[static_cast<std::size_t>(1 + i * s.dim + j)];
      maxnorm = std::max(maxnorm, frobenius_norm(m));
      vals.push_back(std::move(m));
    }
    double M = s.growth_bound.value_or(maxnorm * 1.000001);
    double rate = s.growth_rate.value_or(0.0);
    ctx.fit_bound = M;
    ctx.fit_rate = rate;
    ctx.fit_sigma = 0.0;
    return ContinuousFamily<double>::sampled_grid(std::move(ts), std::move(vals), M, rate);
  }
  require(s.ml_matrix.has_value(),
          "poissonize: needs [ml] matrix/alpha/flavor or [ml] sampled = <file>");
  auto flavor = (s.ml_flavor == "rl") ? MLFamily<double>::Flavor::riemann_liouville
                                      : MLFamily<double>::Flavor::caputo;
  MLFamily<double> fam = make_ml_family(*s.ml_matrix, s.ml_alpha, flavor, s.ml_rate);
  ctx.fit_bound = s.growth_bound.value_or(fam.growth_bound);
  ctx.fit_rate = s.growth_rate.value_or(fam.growth_rate);
  ctx.fit_sigma = fam.singular_power();
  return fam.continuous();
}

SummabilityCertificate weighted_certificate(const Scenario& s, RunContext& ctx, double omega) {
  if (ctx.fit_bound.has_value()) {
    return poisson_growth_certificate(*ctx.fit_bound, *ctx.fit_rate, s.p_a, s.p_omega,
                                      ctx.fit_sigma.value_or(0.0), omega);
  }
  ProblemSpec<double> wspec = weighted_problem(s.spec, omega);
  ExistenceFamily<double> wfam = weighted_family(wspec, *ctx.family, omega);
  return summability_check(wspec, wfam);
}

// --- CSV writers ------------------------------------------------------------

void write_family_csv(const std::string& dir, const ExistenceFamily<double>& fam) {
  std::ofstream out(dir + "/family.csv", std::ios::binary);
  long d = fam.S_seq.rows();
  out << "v";
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) out << ",S_" << i << j;
  out << ",frobenius_norm\n";
  for (long v = 0; v <= fam.horizon(); ++v) {
    const Mat<double>& m = fam.S_seq.at(static_cast<int>(v));
    out << v;
    for (long i = 0; i < d; ++i)
      for (long j = 0; j < d; ++j) out << "," << format_real(m(i, j));
    out << "," << format_real(frobenius_norm(m)) << "\n";
  }
}

void write_solution_csv(const std::string& dir, const SolutionBundle<double>& b) {
  std::ofstream out(dir + "/solution.csv", std::ios::binary);
  long d = b.u.rows();
  out << "v";
  for (long i = 0; i < d; ++i) out << ",u_" << i;
  for (long i = 0; i < d; ++i) out << ",g_" << i;
  out << ",residual,tail\n";
  const SolutionResidualReport& r = b.residual_report;
  for (long v = b.u.lo; v <= b.u.hi(); ++v) {
    out << v;
    for (long i = 0; i < d; ++i) out << "," << format_real(b.u.at(v)(i, 0));
    for (long i = 0; i < d; ++i)
      out << "," << (b.g.contains(v) ? format_real(b.g.at(v)(i, 0)) : "nan");
    long ri = v - r.lo;
    if (ri >= 0 && ri < static_cast<long>(r.residual.size()))
      out << "," << format_real(r.residual[static_cast<std::size_t>(ri)]) << ","
          << format_real(r.tail[static_cast<std::size_t>(ri)]);
    else
      out << ",nan,nan";
    out << "\n";
  }
}

void write_ap_csv(const std::string& dir, const APDecomposition<double>& ap) {
  std::ofstream out(dir + "/ap.csv", std::ios::binary);
  long d = ap.H.rows();
  out << "v";
  for (long i = 0; i < d; ++i) out << ",H_" << i;
  for (long i = 0; i < d; ++i) out << ",Q_" << i;
  out << ",Q_norm\n";
  for (long v = 0; v <= ap.Q.horizon(); ++v) {
    out << v;
    for (long i = 0; i < d; ++i) out << "," << format_real(ap.H.at(v)(i, 0));
    for (long i = 0; i < d; ++i) out << "," << format_real(ap.Q.at(static_cast<int>(v))(i, 0));
    out << "," << format_real(frobenius_norm(ap.Q.at(static_cast<int>(v)))) << "\n";
  }
}

void write_steps_csv(const std::string& dir, const std::string& name,
                     const std::vector<StepResult>& steps) {
  std::ofstream out(dir + "/steps.csv", std::ios::binary);
  out << "# scenario " << name << "\n";
  out << "index,name,max_residual,tolerance,max_tail,check,pass,note\n";
  for (const StepResult& st : steps) {
    out << st.index << "," << csv_escape(st.name) << "," << format_real(st.max_residual) << ","
        << format_real(st.tol) << "," << format_real(st.max_tail) << ","
        << (st.is_check ? 1 : 0) << "," << (st.pass ? 1 : 0) << "," << csv_escape(st.note)
        << "\n";
  }
}

void write_certs_csv(const std::string& dir, const std::vector<CertRow>& certs) {
  std::ofstream out(dir + "/certificates.csv", std::ios::binary);
  out << "name,criterion,margin,total_bound,partial_sum,extrapolated_tail,tail_heuristic_valid,"
         "certified\n";
  for (const CertRow& c : certs) {
    out << csv_escape(c.name) << "," << criterion_name(c.cert.criterion) << ","
        << format_real(c.cert.margin) << "," << format_real(c.cert.total_bound) << ","
        << format_real(c.cert.partial_sum) << "," << format_real(c.cert.extrapolated_tail) << ","
        << (c.cert.tail_heuristic_valid ? 1 : 0) << "," << (c.cert.certified ? 1 : 0) << "\n";
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<std::string> lines;
  if (!in) return lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

// Report text is produced exclusively from steps.csv / certificates.csv so the
// standalone report command regenerates it byte-identically.
std::string regenerate_report(const std::string& dir, bool write) {
  std::vector<std::string> steps = read_lines(dir + "/steps.csv");
  if (steps.empty()) throw parse_error("no steps.csv in '" + dir + "'");
  std::string name = "scenario";
  std::size_t first = 0;
  if (!steps.empty() && steps[0].rfind("# scenario ", 0) == 0) {
    name = steps[0].substr(11);
    first = 1;
  }
  std::ostringstream out;
  out << "report for scenario '" << name << "'\n";
  out << std::string(22 + name.size(), '-') << "\n\n";
  out << "steps:\n";
  bool all_pass = true;
  long checks = 0;
  for (std::size_t i = first; i < steps.size(); ++i) {
    std::vector<std::string> f = split_on(steps[i], ',');
    if (f.size() < 8 || f[0] == "index") continue;
    double resid = std::strtod(f[2].c_str(), nullptr);
    double tol = std::strtod(f[3].c_str(), nullptr);
    double tail = std::strtod(f[4].c_str(), nullptr);
    bool is_check = f[5] == "1";
    bool pass = f[6] == "1";
    out << "  " << f[0] << ". " << f[1];
    for (std::size_t pad = f[1].size(); pad < 18; ++pad) out << ' ';
    out << "  residual " << format_short(resid) << "  tol " << format_short(tol) << "  tail "
        << format_short(tail);
    if (is_check) {
      ++checks;
      out << "  [" << (pass ? "PASS" : "FAIL") << "]";
      all_pass = all_pass && pass;
    } else {
      out << "  [" << (pass ? "ok" : "error") << "]";
      all_pass = all_pass && pass;
    }
    if (!f[7].empty()) out << "  (" << f[7] << ")";
    out << "\n";
  }
  std::vector<std::string> certs = read_lines(dir + "/certificates.csv");
  if (certs.size() > 1) {
    out << "\ncertificates:\n";
    for (std::size_t i = 1; i < certs.size(); ++i) {
      std::vector<std::string> f = split_on(certs[i], ',');
      if (f.size() < 8) continue;
      out << "  " << f[0] << ": criterion=" << f[1] << " margin=" << format_short(std::strtod(f[2].c_str(), nullptr))
          << " total_bound=" << format_short(std::strtod(f[3].c_str(), nullptr));
      if (f[1] == "growth") {
        // growth certificates are analytic bounds; there is no partial-sum
        // heuristic to report
        out << " (analytic bound)";
      } else {
        out << " partial_sum=" << format_short(std::strtod(f[4].c_str(), nullptr))
            << " tail_estimate=" << format_short(std::strtod(f[5].c_str(), nullptr))
            << (f[6] == "1" ? " (heuristic valid)" : " (heuristic unsettled)");
      }
      out << " certified=" << (f[7] == "1" ? "yes" : "no") << "\n";
    }
  }
  out << "\noverall: " << (all_pass ? "PASS" : "FAIL") << " (" << checks << " check"
      << (checks == 1 ? "" : "s") << ")\n";
  std::string text = out.str();
  if (write) {
    std::ofstream rep(dir + "/report.txt", std::ios::binary);
    rep << text;
  }
  return text;
}

RunOutcome run_scenario(const Scenario& s, bool write_artifacts) {
  RunOutcome outcome;
  RunContext ctx;
  if (write_artifacts) std::filesystem::create_directories(s.out_dir);

  long index = 0;
  for (const PipelineStep& stp : s.pipeline) {
    ++index;
    StepResult r;
    r.index = index;
    r.name = stp.command + (stp.arg.empty() ? "" : ":" + stp.arg);
    try {
      if (stp.command == "build-family") {
        require(s.has_spec, "build-family: scenario has no [operators]/[kernels] sections");
        ctx.family = build_family(s.spec, s.horizon, s.tol_identity);
        r.max_residual = ctx.family->construction_residual;
        r.tol = s.tol_identity;
        if (write_artifacts) write_family_csv(s.out_dir, *ctx.family);
      } else if (stp.command == "build-shifted") {
        require(s.has_spec, "build-shifted: scenario has no [operators]/[kernels] sections");
        GridSequence<double> seed = min_norm_seed(s.spec);
        ctx.family = build_family_shifted(s.spec, seed, s.horizon, 1e-8, s.tol_identity);
        r.max_residual = ctx.family->construction_residual;
        r.tol = s.tol_identity;
        if (write_artifacts) write_family_csv(s.out_dir, *ctx.family);
      } else if (stp.command == "poissonize") {
        ContinuousFamily<double> T = continuous_source(s, ctx);
        QuadratureSpec q;
        q.scheme = (s.p_scheme == "laguerre") ? QuadratureSpec::Scheme::laguerre
                                              : QuadratureSpec::Scheme::composite;
        q.nodes = s.p_nodes;
        q.target_tol = s.p_target;
        double err = 0.0;
        ExistenceFamily<double> fam;
        fam.S_seq = poisson_family(T, s.p_a, s.p_omega, s.horizon, q, &err);
        if (s.has_spec) detail::fill_AiS(s.spec, fam);
        detail::fill_norm_partial(fam);
        fam.construction_residual = err;
        ctx.family = std::move(fam);
        ctx.transform_error = err;
        r.max_residual = err;
        r.tol = s.p_target;
        r.note = "quadrature error estimate";
        if (write_artifacts) write_family_csv(s.out_dir, *ctx.family);
      } else if (stp.command == "summability") {
        require(s.has_spec && ctx.family.has_value(),
                "summability: needs a problem and a built family");
        ctx.cert = summability_check(s.spec, *ctx.family);
        ctx.certs.push_back({"summability", *ctx.cert});
        r.max_residual = ctx.cert->total_bound;
        r.tol = 0.0;
        r.is_check = true;
        r.pass = ctx.cert->certified;
        r.note = std::string("criterion=") + criterion_name(ctx.cert->criterion) +
                 " margin=" + format_short(ctx.cert->margin);
      } else if (stp.command == "solve") {
        require(s.has_spec && ctx.family.has_value(), "solve: needs a problem and a built family");
        if (!ctx.cert) {
          ctx.cert = summability_check(s.spec, *ctx.family);
          ctx.certs.push_back({"summability", *ctx.cert});
        }
        BiSequence<double> f = build_forcing(s);
        ctx.bundle = solve_bundle(s.spec, *ctx.family, *ctx.cert, f, s.f_lo, s.f_lo + s.window,
                                  s.tol_solve);
        const auto& rep = ctx.bundle->residual_report;
        r.max_residual = rep.max_residual;
        r.max_tail = rep.max_tail;
        r.tol = rep.tol;
        r.is_check = true;
        r.pass = rep.pass;
        if (write_artifacts) write_solution_csv(s.out_dir, *ctx.bundle);
      } else if (stp.command == "exp-solve") {
        require(s.has_spec && ctx.family.has_value(),
                "exp-solve: needs a problem and a built family");
        SummabilityCertificate wcert = weighted_certificate(s, ctx, s.weight);
        ctx.certs.push_back({"weighted-summability", wcert});
        BiSequence<double> f = build_forcing(s);
        ctx.bundle = exp_weighted_solution(s.spec, *ctx.family, f, s.weight, wcert, s.f_lo,
                                           s.f_lo + s.window, s.tol_solve);
        const auto& rep = ctx.bundle->residual_report;
        r.max_residual = rep.max_residual;
        r.max_tail = rep.max_tail;
        r.tol = rep.tol;
        r.is_check = true;
        r.pass = rep.pass;
        r.note = "weight=" + format_short(s.weight);
        if (write_artifacts) write_solution_csv(s.out_dir, *ctx.bundle);
      } else if (stp.command == "verify" && stp.arg == "existence") {
        require(s.has_spec && ctx.family.has_value(),
                "verify:existence: needs a problem and a built family");
        ResidualReport rep = verify_existence(s.spec, *ctx.family, s.tol_identity);
        r.max_residual = rep.max_residual;
        r.tol = rep.tol;
        r.is_check = true;
        r.pass = rep.pass;
      } else if (stp.command == "verify" && (stp.arg == "multiterm" || stp.arg == "weyl")) {
        require(s.has_spec && ctx.bundle.has_value(),
                "verify:" + stp.arg + ": needs a solved bundle");
        const SolutionBundle<double>& b = *ctx.bundle;
        bool weighted = b.weight.has_value() && *b.weight > 0.0;
        BiSequence<double> f = build_forcing(s);
        SolutionResidualReport rep;
        if (stp.arg == "multiterm") {
          ProblemSpec<double> wspec = weighted ? weighted_problem(s.spec, *b.weight) : s.spec;
          if (weighted) f = exp_weight(f, *b.weight);
          const BiSequence<double>& u = weighted ? b.u_weighted : b.u;
          const BiSequence<double>& g = weighted ? b.g_weighted : b.g;
          rep = verify_multiterm(wspec, f, u, g, g.lo, g.hi(), s.tol_solve);
          if (weighted) r.note = "weighted form";
        } else {
          // weighted kernels stop being difference operators, so the Weyl form
          // is always checked on the physical (unweighted) data
          rep = verify_weyl_multiterm(s.spec, f, b.u, b.g, b.g.lo, b.g.hi(), s.tol_solve);
          if (weighted) r.note = "physical form";
        }
        r.max_residual = rep.max_residual;
        r.max_tail = rep.max_tail;
        r.tol = rep.tol;
        r.is_check = true;
        r.pass = rep.pass;
      } else if (stp.command == "ap-decompose") {
        require(s.has_spec && ctx.family.has_value(),
                "ap-decompose: needs a problem and a built family");
        require(!s.h_period.empty(), "ap-decompose: needs [forcing] h = <period block>");
        if (!ctx.cert) {
          ctx.cert = summability_check(s.spec, *ctx.family);
          ctx.certs.push_back({"summability", *ctx.cert});
        }
        long p = static_cast<long>(s.h_period.size());
        // the decomposition grid runs over the window, not the family horizon:
        // near the family horizon the periodic part is truncated at the same
        // order as the vanishing part, which would corrupt the tail-rate fit
        long W = std::min(s.window, s.horizon);
        std::vector<double> forcing(static_cast<std::size_t>(W) + 1);
        for (long v = 0; v <= W; ++v) {
          double g = s.h_period[static_cast<std::size_t>(v % p)];
          if (static_cast<std::size_t>(v) < s.q_values.size())
            g += s.q_values[static_cast<std::size_t>(v)];
          forcing[static_cast<std::size_t>(v)] = g;
        }
        ConvolutionSolution<double> sol =
            convolution_solution(s.spec, *ctx.family, forcing, s.x, s.tol_solve);
        ctx.u_grid = sol.u;
        ctx.ap = ap_decomposition(*ctx.family, *ctx.cert, *ctx.u_grid, s.h_period, s.x, W / 2);
        r.max_residual = ctx.ap->periodicity_defect;
        r.max_tail = ctx.ap->h_tail_bound;
        r.tol = s.tol_identity;
        r.is_check = true;
        r.pass = ctx.ap->periodicity_defect <= s.tol_identity;
        r.note = std::string(sol.strong ? "strong" : "mild") +
                 " solution; vanishing-part rate=" + format_short(ctx.ap->q_fitted_rate) +
                 (ctx.ap->q_fit_valid ? "" : " (fit unsettled)");
        if (write_artifacts) write_ap_csv(s.out_dir, *ctx.ap);
      } else if (stp.command == "report") {
        if (write_artifacts) {
          std::vector<StepResult> so_far = outcome.steps;
          r.note = "artifacts flushed";
          so_far.push_back(r);
          write_steps_csv(s.out_dir, s.name, so_far);
          write_certs_csv(s.out_dir, ctx.certs);
          regenerate_report(s.out_dir, true);
        }
      } else {
        throw argument_error("unknown pipeline step '" + stp.command + "'");
      }
    } catch (const std::exception& e) {
      r.pass = false;
      r.note = e.what();
      outcome.steps.push_back(r);
      outcome.error = true;
      break;
    }
    if (r.is_check && !r.pass) outcome.checks_pass = false;
    outcome.steps.push_back(r);
  }

  if (write_artifacts) {
    write_steps_csv(s.out_dir, s.name, outcome.steps);
    write_certs_csv(s.out_dir, ctx.certs);
    regenerate_report(s.out_dir, true);
  }
  return outcome;
}

}  // namespace voldisc
