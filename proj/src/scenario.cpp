#include "degen/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "degen/errors.hpp"
#include "degen/field_io.hpp"

namespace degen {

namespace {

using json = nlohmann::ordered_json;

// Reading context: source text for line lookup plus the current key path.
struct Ctx {
  const std::string& text;
  const std::string& source;

  int line_of(const std::string& key) const {
    const auto pos = text.find("\"" + key + "\"");
    if (pos == std::string::npos) return 0;
    return 1 + int(std::count(text.begin(), text.begin() + std::ptrdiff_t(pos), '\n'));
  }

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    const auto leaf = path.substr(path.find_last_of('.') + 1);
    const int line = line_of(leaf);
    std::string where = source;
    if (line > 0) where += ":" + std::to_string(line);
    throw Error(ErrorKind::ConfigError, where + ": key '" + path + "': " + msg);
  }
};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void only_keys(const Ctx& ctx, const json& obj, const std::string& path, std::set<std::string> allowed) {
  if (!obj.is_object()) ctx.fail(path, "expected an object");
  for (const auto& [k, _] : obj.items())
    if (!allowed.count(k)) ctx.fail(join(path, k), "unknown key");
}

double as_number(const Ctx& ctx, const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
  }
  ctx.fail(path, "expected a number or \"inf\"");
}

double num(const Ctx& ctx, const json& obj, const std::string& path, const std::string& key, double def) {
  if (!obj.contains(key)) return def;
  return as_number(ctx, obj.at(key), join(path, key));
}

int integer(const Ctx& ctx, const json& obj, const std::string& path, const std::string& key, int def) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) ctx.fail(join(path, key), "expected an integer");
  return v.get<int>();
}

std::string str(const Ctx& ctx, const json& obj, const std::string& path, const std::string& key,
                const std::string& def, std::set<std::string> choices = {}) {
  if (!obj.contains(key)) return def;
  const auto& v = obj.at(key);
  if (!v.is_string()) ctx.fail(join(path, key), "expected a string");
  const auto s = v.get<std::string>();
  if (!choices.empty() && !choices.count(s)) {
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    ctx.fail(join(path, key), "'" + s + "' is not one of " + list);
  }
  return s;
}

Eigen::VectorXd vec(const Ctx& ctx, const json& v, const std::string& path) {
  if (!v.is_array()) ctx.fail(path, "expected an array of numbers");
  Eigen::VectorXd out(Index(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(Index(i)) = as_number(ctx, v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

Eigen::MatrixXd mat(const Ctx& ctx, const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) ctx.fail(path, "expected an array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  Eigen::MatrixXd out(Index(v.size()), Index(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto row = vec(ctx, v[i], path + "[" + std::to_string(i) + "]");
    if (std::size_t(row.size()) != cols) ctx.fail(path, "rows have different lengths");
    out.row(Index(i)) = row.transpose();
  }
  return out;
}

const char* kCoefficientNames[7] = {"b", "c", "d", "e", "f", "g", "h"};

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + int(std::count(text.begin(), text.begin() + std::ptrdiff_t(upto), '\n'));
    throw Error(ErrorKind::ConfigError, source + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  const Ctx ctx{text, source};
  only_keys(ctx, root, "",
            {"grid", "form", "metric", "exponents", "coefficients", "operator", "solution", "solve", "balls", "params",
             "refinements", "drift_tolerance", "geometry", "structure", "corollary", "description"});
  Scenario s;
  s.source = source;

  if (root.contains("grid")) {
    const auto& g = root["grid"];
    only_keys(ctx, g, "grid", {"dim", "half_width", "h"});
    s.grid.dim = integer(ctx, g, "grid", "dim", 2);
    s.grid.half_width = num(ctx, g, "grid", "half_width", 1.0);
    s.grid.h = num(ctx, g, "grid", "h", 1.0 / 32);
    if (s.grid.dim < 1 || s.grid.dim > 3) ctx.fail("grid.dim", "must be 1, 2 or 3");
    if (!(s.grid.h > 0) || !(s.grid.half_width > s.grid.h) || std::isinf(s.grid.half_width))
      ctx.fail("grid.h", "need 0 < h < half_width < inf");
  }

  if (root.contains("form")) {
    const auto& f = root["form"];
    only_keys(ctx, f, "form", {"preset", "c", "alpha", "scale", "path"});
    s.form.preset = str(ctx, f, "form", "preset", "identity", {"identity", "scaled", "grushin", "file"});
    s.form.c = num(ctx, f, "form", "c", 1);
    s.form.alpha = num(ctx, f, "form", "alpha", 1);
    s.form.scale = num(ctx, f, "form", "scale", 1);
    s.form.path = str(ctx, f, "form", "path", "");
    if (s.form.preset == "file" && s.form.path.empty()) ctx.fail("form.path", "required for the file preset");
    if (s.form.preset == "scaled" && !(s.form.c > 0)) ctx.fail("form.c", "must be positive");
    if (s.form.preset == "grushin" && s.grid.dim < 2) ctx.fail("form.preset", "grushin needs dim >= 2");
  }
  s.metric = str(ctx, root, "", "metric", "euclidean", {"euclidean", "subunit"});

  if (root.contains("exponents")) {
    const auto& e = root["exponents"];
    only_keys(ctx, e, "exponents", {"p", "sigma", "gamma", "psi", "delta"});
    s.p = num(ctx, e, "exponents", "p", 2);
    s.sigma = num(ctx, e, "exponents", "sigma", 3);
    s.gamma = num(ctx, e, "exponents", "gamma", s.p);
    s.psi = num(ctx, e, "exponents", "psi", s.p);
    s.delta = num(ctx, e, "exponents", "delta", s.p);
    if (!(s.p > 1) || std::isinf(s.p)) ctx.fail("exponents.p", "must lie in (1, inf)");
    if (!(s.sigma > 1) || std::isinf(s.sigma)) ctx.fail("exponents.sigma", "must lie in (1, inf)");
  }
  const auto rr = check_ranges(s.p, s.sigma, s.gamma, s.psi, s.delta);
  if (!rr.ok) {
    std::ostringstream msg;
    msg << source << ": exponents outside their ranges:";
    if (!rr.gamma_ok) msg << " gamma must lie in (1, " << rr.gamma_max << ")";
    if (!rr.psi_ok) msg << " psi must lie in (1, " << rr.psi_max << ")";
    if (!rr.delta_ok) msg << " delta must lie in (1, " << rr.delta_max << ")";
    throw Error(ErrorKind::RangeViolation, msg.str());
  }

  if (root.contains("coefficients")) {
    const auto& c = root["coefficients"];
    if (c.is_string()) {
      if (c.get<std::string>() != "operator") ctx.fail("coefficients", "expected an object or \"operator\"");
      s.coefficients_from_operator = true;
    } else {
      only_keys(ctx, c, "coefficients", {"b", "c", "d", "e", "f", "g", "h"});
      for (int i = 0; i < 7; ++i) {
        const std::string key = kCoefficientNames[i];
        if (!c.contains(key)) continue;
        const auto& v = c.at(key);
        const std::string path = "coefficients." + key;
        if (v.is_object()) {
          only_keys(ctx, v, path, {"file"});
          s.coefficients[i].path = str(ctx, v, path, "file", "");
        } else {
          s.coefficients[i].value = as_number(ctx, v, path);
          if (!(s.coefficients[i].value >= 0) || std::isinf(s.coefficients[i].value))
            ctx.fail(path, "must be finite and nonnegative");
        }
      }
    }
  }

  if (root.contains("operator")) {
    const auto& o = root["operator"];
    only_keys(ctx, o, "operator", {"name", "H", "G", "g", "F", "f", "R", "S", "T", "Rbar", "q"});
    s.op.name = str(ctx, o, "operator", "name", "p-laplacian", {"p-laplacian", "linear-divergence", "yamabe-type"});
    const int n = s.grid.dim;
    if (s.op.name == "linear-divergence") {
      auto& L = s.op.linear;
      L.H = o.contains("H") ? vec(ctx, o["H"], "operator.H") : Eigen::VectorXd::Zero(n);
      L.G = o.contains("G") ? vec(ctx, o["G"], "operator.G") : Eigen::VectorXd::Zero(n);
      L.g = o.contains("g") ? vec(ctx, o["g"], "operator.g") : Eigen::VectorXd::Zero(n);
      L.F = num(ctx, o, "operator", "F", 0);
      L.f = num(ctx, o, "operator", "f", 0);
      L.R = o.contains("R") ? mat(ctx, o["R"], "operator.R") : Eigen::MatrixXd::Identity(n, n);
      L.S = o.contains("S") ? mat(ctx, o["S"], "operator.S") : Eigen::MatrixXd::Identity(n, n);
      L.T = o.contains("T") ? mat(ctx, o["T"], "operator.T") : Eigen::MatrixXd::Identity(n, n);
    } else if (s.op.name == "yamabe-type") {
      s.op.R = num(ctx, o, "operator", "R", 0);
      s.op.Rbar = num(ctx, o, "operator", "Rbar", 0);
      s.op.q = num(ctx, o, "operator", "q", 2);
    }
  }

  if (root.contains("solution")) {
    const auto& u = root["solution"];
    only_keys(ctx, u, "solution", {"preset", "axis", "path"});
    s.solution.preset = str(ctx, u, "solution", "preset", "coordinate", {"coordinate", "solve", "file"});
    s.solution.axis = integer(ctx, u, "solution", "axis", 0);
    s.solution.path = str(ctx, u, "solution", "path", "");
    if (s.solution.axis < 0 || s.solution.axis >= s.grid.dim) ctx.fail("solution.axis", "outside the grid dimension");
    if (s.solution.preset == "file" && s.solution.path.empty()) ctx.fail("solution.path", "required for file");
  }

  if (root.contains("solve")) {
    const auto& v = root["solve"];
    only_keys(ctx, v, "solve",
              {"kind", "rhs", "rhs_value", "boundary", "axis", "max_iter", "damping", "tolerance", "regularization"});
    s.solve.kind = str(ctx, v, "solve", "kind", "linear", {"linear", "plaplacian"});
    s.solve.rhs = str(ctx, v, "solve", "rhs", "zero", {"zero", "constant"});
    s.solve.rhs_value = num(ctx, v, "solve", "rhs_value", 0);
    s.solve.boundary = str(ctx, v, "solve", "boundary", "coordinate", {"coordinate", "zero"});
    s.solve.axis = integer(ctx, v, "solve", "axis", 0);
    s.solve.picard.max_iter = integer(ctx, v, "solve", "max_iter", 200);
    s.solve.picard.damping = num(ctx, v, "solve", "damping", 1.0);
    s.solve.picard.tolerance = num(ctx, v, "solve", "tolerance", 1e-6);
    s.solve.picard.regularization = num(ctx, v, "solve", "regularization", 1e-8);
    if (s.solve.axis < 0 || s.solve.axis >= s.grid.dim) ctx.fail("solve.axis", "outside the grid dimension");
  }

  if (root.contains("balls")) {
    const auto& b = root["balls"];
    if (!b.is_array() || b.empty()) ctx.fail("balls", "expected a nonempty array");
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::string path = "balls[" + std::to_string(i) + "]";
      only_keys(ctx, b[i], path, {"center", "radius"});
      BallSpec ball;
      ball.center = b[i].contains("center") ? vec(ctx, b[i]["center"], path + ".center")
                                            : Eigen::VectorXd::Zero(s.grid.dim);
      ball.radius = num(ctx, b[i], path, "radius", 0.5);
      if (ball.center.size() != s.grid.dim) ctx.fail(path + ".center", "dimension differs from the grid");
      if (!(ball.radius > 0) || std::isinf(ball.radius)) ctx.fail(path + ".radius", "must be positive and finite");
      s.balls.push_back(ball);
    }
  } else {
    s.balls.push_back({Eigen::VectorXd::Zero(s.grid.dim), 0.5});
  }

  if (root.contains("params")) {
    const auto& q = root["params"];
    only_keys(ctx, q, "params", {"eps1", "eps2", "eps3", "tau", "sstar", "t", "jmax", "psi0", "cstar"});
    auto& P = s.params;
    P.eps1 = num(ctx, q, "params", "eps1", P.eps1);
    P.eps2 = num(ctx, q, "params", "eps2", P.eps2);
    P.eps3 = num(ctx, q, "params", "eps3", P.eps3);
    P.tau = num(ctx, q, "params", "tau", P.tau);
    P.sstar = num(ctx, q, "params", "sstar", P.sstar);
    P.t = num(ctx, q, "params", "t", P.t);
    P.jmax = integer(ctx, q, "params", "jmax", P.jmax);
    P.cstar = num(ctx, q, "params", "cstar", P.cstar);
    P.psi0 = str(ctx, q, "params", "psi0", "proof", {"proof", "statement"}) == "proof" ? Psi0Convention::Proof
                                                                                       : Psi0Convention::Statement;
    for (const char* k : {"eps1", "eps2", "eps3"})
      if (!(num(ctx, q, "params", k, 1) > 0 && num(ctx, q, "params", k, 1) <= 1))
        ctx.fail(std::string("params.") + k, "must lie in (0, 1]");
    if (!(P.tau > 0 && P.tau < 1)) ctx.fail("params.tau", "must lie in (0, 1)");
    if (P.jmax < 1 || P.jmax > 60) ctx.fail("params.jmax", "must lie in [1, 60]");
    if (!(P.sstar > s.p * s.sigma / (s.sigma - 1))) ctx.fail("params.sstar", "must exceed p sigma'");
    if (!(P.t >= 1)) ctx.fail("params.t", "must be >= 1");
  }

  if (root.contains("refinements")) {
    const auto& r = root["refinements"];
    const auto v = vec(ctx, r, "refinements");
    if (v.size() == 0) ctx.fail("refinements", "expected a nonempty array");
    for (Index i = 0; i < v.size(); ++i) {
      if (!(v(i) > 0)) ctx.fail("refinements", "spacings must be positive");
      s.refinements.push_back(v(i));
    }
  } else {
    s.refinements.push_back(s.grid.h);
  }
  s.drift_tolerance = num(ctx, root, "", "drift_tolerance", 0.2);

  if (root.contains("geometry")) {
    const auto& g = root["geometry"];
    only_keys(ctx, g, "geometry", {"centers", "radii", "eps"});
    if (g.contains("centers")) {
      const auto& cs = g["centers"];
      if (!cs.is_array()) ctx.fail("geometry.centers", "expected an array of points");
      for (std::size_t i = 0; i < cs.size(); ++i) {
        auto c = vec(ctx, cs[i], "geometry.centers[" + std::to_string(i) + "]");
        if (c.size() != s.grid.dim) ctx.fail("geometry.centers", "dimension differs from the grid");
        s.geometry.centers.push_back(c);
      }
    }
    if (g.contains("radii")) {
      const auto r = vec(ctx, g["radii"], "geometry.radii");
      s.geometry.radii.assign(r.data(), r.data() + r.size());
    }
    if (g.contains("eps")) {
      const auto e = vec(ctx, g["eps"], "geometry.eps");
      s.geometry.eps.assign(e.data(), e.data() + e.size());
    }
  }
  if (s.geometry.centers.empty()) s.geometry.centers.push_back(Eigen::VectorXd::Zero(s.grid.dim));
  if (s.geometry.radii.empty()) s.geometry.radii = {0.1, 0.15, 0.2, 0.3};

  if (root.contains("structure")) {
    const auto& st = root["structure"];
    only_keys(ctx, st, "structure", {"max_cells", "nsphere", "strict", "mode"});
    s.structure.mode = str(ctx, st, "structure", "mode", "full", {"full", "trace"});
    s.structure.max_cells = integer(ctx, st, "structure", "max_cells", 64);
    s.structure.nsphere = integer(ctx, st, "structure", "nsphere", 16);
    if (st.contains("strict")) {
      if (!st["strict"].is_boolean()) ctx.fail("structure.strict", "expected true or false");
      s.structure.strict = st["strict"].get<bool>();
    }
    if (s.structure.max_cells < 1) ctx.fail("structure.max_cells", "must be positive");
  }

  if (root.contains("corollary")) {
    const auto& c = root["corollary"];
    only_keys(ctx, c, "corollary", {"variant", "qstar", "c0", "eps", "B", "C", "D", "E", "F", "G", "H"});
    s.corollary = str(ctx, c, "corollary", "variant", "allp", {"allp", "all<p", "first>p", "second>p"});
    auto& in = s.corollary_input;
    in.qstar = num(ctx, c, "corollary", "qstar", double(s.grid.dim));
    in.c0 = num(ctx, c, "corollary", "c0", 0);
    in.eps = num(ctx, c, "corollary", "eps", 0.01);
    in.expB = num(ctx, c, "corollary", "B", 0);
    in.expC = num(ctx, c, "corollary", "C", 0);
    in.expD = num(ctx, c, "corollary", "D", 0);
    in.expE = num(ctx, c, "corollary", "E", 0);
    in.expF = num(ctx, c, "corollary", "F", 0);
    in.expG = num(ctx, c, "corollary", "G", 0);
    in.expH = num(ctx, c, "corollary", "H", 0);
  }

  // Every ball must be resolved by at least 8 cells across on the coarsest grid.
  const double coarsest = *std::max_element(s.refinements.begin(), s.refinements.end());
  for (std::size_t i = 0; i < s.balls.size(); ++i)
    if (2 * s.balls[i].radius / coarsest < 8)
      ctx.fail("balls[" + std::to_string(i) + "].radius", "fewer than 8 cells across on the coarsest grid");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Scenario s = parse_scenario(ss.str(), path.string());
  // Relative file references resolve against the config's directory.
  const auto base = path.parent_path();
  const auto rebase = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  rebase(s.form.path);
  rebase(s.solution.path);
  for (auto& c : s.coefficients) rebase(c.path);
  return s;
}

void override_refinements(Scenario& s, int levels) {
  if (levels < 1) throw Error(ErrorKind::ConfigError, "--refine needs at least one level");
  s.refinements.clear();
  for (int i = 0; i < levels; ++i) s.refinements.push_back(s.grid.h / std::pow(2.0, i));
  for (std::size_t i = 0; i < s.balls.size(); ++i)
    if (2 * s.balls[i].radius / s.grid.h < 8)
      throw Error(ErrorKind::ConfigError, "ball " + std::to_string(i) + " has fewer than 8 cells across");
}

GridDomain build_grid(const Scenario& s, double h) { return GridDomain::centered(s.grid.dim, s.grid.half_width, h); }

QuadraticFormField build_form(const Scenario& s, const GridDomain& grid) {
  const int n = s.grid.dim;
  if (s.form.preset == "identity") return QuadraticFormField::identity(n);
  if (s.form.preset == "scaled") return QuadraticFormField::scaled(n, s.form.c);
  if (s.form.preset == "grushin") return QuadraticFormField::grushin(n, s.form.alpha, s.form.scale);
  const FieldFile f = read_field(s.form.path);
  if (f.layout != FieldLayout::Matrix || f.grid.dim() != n)
    throw Error(ErrorKind::ConfigError, s.form.path.string() + " is not an n x n matrix field");
  (void)grid;
  return QuadraticFormField::sampled(f.grid, f.data.transpose());
}

QuasimetricSpace build_space(const Scenario& s, const QuadraticFormField& Q, const GridDomain& grid) {
  if (s.metric == "subunit") return QuasimetricSpace::subunit(Q, grid);
  return QuasimetricSpace::euclidean();
}

BuiltinOperator build_operator(const Scenario& s, const QuadraticFormField& Q) {
  if (s.op.name == "linear-divergence") return linear_divergence(Q, s.op.linear);
  if (s.op.name == "yamabe-type") return yamabe_type(Q, s.op.R, s.op.Rbar, s.op.q);
  return p_laplacian(Q, s.p);
}

StructuralCoefficients build_coefficients(const Scenario& s, const QuadraticFormField& Q, const GridDomain& grid) {
  if (s.coefficients_from_operator) return build_operator(s, Q).coeffs;
  StructuralCoefficients c;
  c.p = s.p;
  c.gamma = s.gamma;
  c.psi = s.psi;
  c.delta = s.delta;
  CoefficientField* slots[7] = {&c.b, &c.c, &c.d, &c.e, &c.f, &c.g, &c.h};
  for (int i = 0; i < 7; ++i) {
    const auto& spec = s.coefficients[i];
    if (spec.path.empty()) {
      *slots[i] = CoefficientField::constant(spec.value);
      continue;
    }
    const FieldFile f = read_field(spec.path);
    if (f.layout != FieldLayout::Scalar || !f.grid.same_layout(grid))
      throw Error(ErrorKind::ConfigError,
                  spec.path.string() + ": coefficient field must be scalar on the scenario grid (no refinement)");
    *slots[i] = CoefficientField::cells(f.data.col(0));
  }
  return c;
}

DiscreteProblem build_problem(const Scenario& s, const QuadraticFormField& Q, const GridDomain& grid) {
  ScalarField rhs = ScalarField::Constant(grid.size(), s.solve.rhs == "constant" ? s.solve.rhs_value : 0.0);
  ScalarField bnd = ScalarField::Zero(grid.size());
  if (s.solve.boundary == "coordinate")
    bnd = grid.sample([axis = s.solve.axis](const Point& x) { return x(axis); });
  return DiscreteProblem{grid, Q, rhs, bnd, s.p};
}

SolveResult run_solve(const Scenario& s, const QuadraticFormField& Q, const GridDomain& grid) {
  const DiscreteProblem pb = build_problem(s, Q, grid);
  if (s.solve.kind == "plaplacian") {
    if (s.form.preset != "identity")
      throw Error(ErrorKind::ConfigError, "the p-Laplacian solver uses Q = I; set form.preset to identity");
    return solve_plaplacian(grid, s.p, pb.rhs, pb.boundary, s.solve.picard);
  }
  return solve_linear_divergence(pb);
}

SobolevPair build_solution(const Scenario& s, const QuadraticFormField& Q, const GridDomain& grid) {
  if (s.solution.preset == "coordinate")
    return pair_from_values(grid.sample([axis = s.solution.axis](const Point& x) { return x(axis); }), grid);
  if (s.solution.preset == "solve") return run_solve(s, Q, grid).u;
  const FieldFile f = read_field(s.solution.path);
  if (f.layout != FieldLayout::Scalar || !f.grid.same_layout(grid))
    throw Error(ErrorKind::ConfigError, s.solution.path.string() + ": solution must be scalar on the scenario grid");
  return pair_from_values(f.data.col(0), grid);
}

}  // namespace degen
