#include "degen/commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "degen/errors.hpp"
#include "degen/field_io.hpp"

namespace degen {

namespace {

using json = nlohmann::ordered_json;

json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json num(double v, const char* ref) { return json{{"value", number(v)}, {"ref", ref}}; }

json nums(const std::vector<double>& v, const char* ref) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return json{{"values", a}, {"ref", ref}};
}

json pairs(const std::vector<std::pair<double, double>>& v, const char* ref) {
  json a = json::array();
  for (const auto& [x, y] : v) a.push_back(json::array({number(x), number(y)}));
  return json{{"values", a}, {"ref", ref}};
}

json point(const Point& x) {
  json a = json::array();
  for (Index i = 0; i < x.size(); ++i) a.push_back(number(x(i)));
  return a;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + p.string());
  out << text;
}

void write_report(const CommandOptions& opt, const json& report) {
  write_text(opt.out / "report.json", report.dump(2) + "\n");
}

// Runs tasks 0..count-1 on up to `threads` workers; rethrows the lowest-index failure.
void parallel_for(int count, int threads, const std::function<void(int)>& task) {
  std::vector<std::exception_ptr> errors(count);
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::mutex m;
  int next = 0;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        int i;
        {
          std::lock_guard<std::mutex> lock(m);
          if (next >= count) return;
          i = next++;
        }
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

json z_json(const ZTerms& z, const char* ref) {
  return json{{"total", num(z.total, ref)},
              {"b_term", num(z.b, "first-order coefficient term of the Z form")},
              {"c_term", num(z.c, "gradient coefficient term of the Z form")},
              {"h_term", num(z.h, "coercivity defect term of the Z form")},
              {"d_term", num(z.d, "zero-order coefficient term of the Z form")}};
}

std::string steps_csv(const IterationTrace& tr) {
  std::ostringstream o;
  o << "j,Y,q,log_x,log_y,log_z,caloric_measured,recursion_lhs,recursion_rhs,recursion_measured,log_recursion_C\n";
  for (const auto& s : tr.steps)
    o << s.j << ',' << fmt(s.Y) << ',' << fmt(s.q) << ',' << fmt(s.log_x) << ',' << fmt(s.log_y) << ','
      << fmt(s.log_z) << ',' << fmt(s.caloric_measured) << ',' << fmt(s.recursion_lhs) << ','
      << fmt(s.recursion_rhs) << ',' << fmt(s.recursion_measured) << ',' << fmt(s.log_recursion_C) << '\n';
  return o.str();
}

json trace_json(const IterationTrace& tr) {
  std::vector<double> cal, rec;
  for (const auto& s : tr.steps) {
    cal.push_back(s.caloric_measured);
    rec.push_back(s.recursion_measured);
  }
  return json{{"caloric_measured", nums(cal, "measured constant of the caloric energy inequality per step")},
              {"recursion_measured", nums(rec, "measured rooted constant of the iteration recursion per step")},
              {"cascade_norms", nums(tr.cascade_norms, "power means of the shifted solution at s p X^j on tau B")},
              {"sup_tau_ball", num(tr.sup_tau_ball, "ess sup of the shifted solution on tau B")},
              {"gradient",
               {{"lhs", num(tr.gradient.lhs, "L^p norm of the form gradient on tau B")},
                {"rhs", num(tr.gradient.rhs, "Zbar-weighted gradient estimate right side")},
                {"ratio", num(tr.gradient.ratio, "gradient estimate ratio lhs/rhs")}}}};
}

bool cascade_nondecreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1] * (1 - 1e-12)) return false;
  return true;
}

std::string run_tag(std::size_t ball, std::size_t level) {
  return "b" + std::to_string(ball) + "_r" + std::to_string(level);
}

struct Level {
  GridDomain grid;
  QuadraticFormField Q;
  FormSamples Qs;
  QuasimetricSpace space;
  StructuralCoefficients coeffs;
  SobolevPair u;
};

Level build_level(const Scenario& s, double h) {
  GridDomain grid = build_grid(s, h);
  QuadraticFormField Q = build_form(s, grid);
  FormSamples Qs(Q, grid);
  QuasimetricSpace space = build_space(s, Q, grid);
  StructuralCoefficients coeffs = build_coefficients(s, Q, grid);
  SobolevPair u = build_solution(s, Q, grid);
  return Level{std::move(grid), std::move(Q), std::move(Qs), std::move(space), std::move(coeffs), std::move(u)};
}

json corollary_json(const CorollaryReport& c) {
  return json{{"variant", to_string(c.variant)},
              {"K", num(c.K, "inhomogeneous constant K of the corollary")},
              {"eta", num(c.eta, "exponent of r in K")},
              {"eta_positive", c.eta_positive},
              {"theta", num(c.theta, "integrability exponent theta of the solution")},
              {"C1_zero", c.C1_zero},
              {"C2_zero", c.C2_zero},
              {"avnorm_sp", num(c.avnorm_sp, "power mean of |u| at s p")},
              {"avnorm_theta", num(c.avnorm_theta, "power mean of |u| at theta")},
              {"avnorm_psigma", num(c.avnorm_psigma, "power mean of |u| at p sigma")},
              {"Zstar_strong", num(c.Zstar_strong, "Z* with sup norms of the coefficients")},
              {"rhs", num(c.rhs, "corollary right side with unit constants")},
              {"qstar_limit", num(c.qstar_limit, "largest admissible q* for the declared exponents")}};
}

}  // namespace

int threads_from_env() {
  const char* v = std::getenv("DEGEN_THREADS");
  if (!v) return 1;
  const int t = std::atoi(v);
  return t > 0 ? t : 1;
}

ExitCode exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidParams:
    case ErrorKind::RangeViolation:
    case ErrorKind::ExponentBelowP:
    case ErrorKind::ExponentAboveP:
    case ErrorKind::InvalidConstant:
    case ErrorKind::InvalidForm:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::IoError:
    case ErrorKind::PreconditionViolated:
    case ErrorKind::IntegrabilityViolated:
    case ErrorKind::NotSymmetric:
    case ErrorKind::NotNonnegDefinite:
    case ErrorKind::NotSubunit:
    case ErrorKind::DegenerateRadii:
    case ErrorKind::EmptyBall:
      return kExitConfig;
    default:
      return kExitNumeric;
  }
}

int cmd_verify_bound(const Scenario& s, const CommandOptions& opt, std::ostream& log) {
  const std::size_t L = s.refinements.size(), B = s.balls.size();
  std::vector<std::vector<BoundReport>> reps(L, std::vector<BoundReport>(B));
  std::vector<std::optional<CorollaryReport>> cors(L);
  parallel_for(int(L), opt.threads, [&](int i) {
    const Level lv = build_level(s, s.refinements[i]);
    for (std::size_t b = 0; b < B; ++b) {
      const auto ball = ball_membership(lv.space, lv.grid, s.balls[b].center, s.balls[b].radius);
      reps[i][b] = verify_main_bound(lv.u, ball, lv.coeffs, s.params, lv.Qs, lv.space, lv.grid, s.sigma);
      if (s.corollary && b == 0)
        cors[i] = corollary_constants(corollary_variant_from_string(*s.corollary), lv.coeffs, ball, lv.grid,
                                      s.corollary_input, s.params, s.sigma, &lv.u.w);
    }
  });

  bool pass = true;
  json runs = json::array();
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t b = 0; b < B; ++b) {
      const auto& r = reps[i][b];
      const std::string csv = "steps_" + run_tag(b, i) + ".csv";
      write_text(opt.out / csv, steps_csv(r.trace));
      const bool ok = r.chain.holds && std::isfinite(r.measured_C) && r.Zbar.total >= 1;
      pass = pass && ok;
      runs.push_back(json{
          {"level", i},
          {"ball", b},
          {"h", num(s.refinements[i], "grid spacing")},
          {"center", point(s.balls[b].center)},
          {"radius", num(s.balls[b].radius, "ball radius r")},
          {"k", num(r.k, "shift constant k built from e, f, g")},
          {"k_limit", r.k_limit},
          {"Zbar", z_json(r.Zbar, "Z form with barred coefficients")},
          {"Z", z_json(r.Z, "Z form with plain coefficients")},
          {"chain",
           {{"barred", num(r.chain.barred, "barred coefficient terms")},
            {"split", num(r.chain.split, "barred terms split by Minkowski")},
            {"bound", num(r.chain.bound, "unbarred bound of the split terms")},
            {"holds", r.chain.holds}}},
          {"Psi0", num(r.Psi0, "exponent Psi0 of Zbar in the local bound")},
          {"s", num(r.s, "dual of s*/p")},
          {"X", num(r.X, "iteration ratio sigma/s")},
          {"avnorm_sp", num(r.avnorm_sp, "power mean of ubar at s p on B")},
          {"rhs_bound", num(r.rhs_bound, "Zbar^Psi0 times the s p power mean")},
          {"measured_sup", num(r.measured_sup, "ess sup of ubar on tau B")},
          {"measured_C", num(r.measured_C, "measured constant of the local bound")},
          {"r1", num(r.r1, "admissible radius r1 at the center")},
          {"radius_admissible", r.radius_admissible},
          {"cutoffs",
           {{"N", num(r.cutoffs.N, "growth factor N of the cutoff gradients")},
            {"Csstar", num(r.cutoffs.Csstar, "measured cutoff gradient constant")},
            {"Csstar_predicted", num(r.cutoffs.Csstar_predicted, "predicted cutoff gradient constant")}}},
          {"trace", trace_json(r.trace)},
          {"steps_csv", csv},
          {"pass", ok}});
    }

  json sweeps = json::array();
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<double> cs, gs;
    for (std::size_t i = 0; i < L; ++i) {
      cs.push_back(reps[i][b].measured_C);
      gs.push_back(reps[i][b].trace.gradient.ratio);
    }
    const auto a = assess_sweep(cs, s.drift_tolerance);
    const auto g = assess_sweep(gs, s.drift_tolerance);
    pass = pass && a.stable;
    sweeps.push_back(json{{"ball", b},
                          {"measured_C", nums(cs, "measured constant of the local bound per refinement")},
                          {"drift", num(a.drift, "relative drift max/min - 1 of the measured constant")},
                          {"stable", a.stable},
                          {"gradient_ratio", nums(gs, "gradient estimate ratio per refinement")},
                          {"gradient_drift", num(g.drift, "relative drift of the gradient ratio")},
                          {"gradient_stable", g.stable}});
  }

  json report{{"command", "verify-bound"}, {"config", s.source}, {"pass", pass}, {"runs", runs}, {"sweeps", sweeps}};
  if (s.corollary) {
    json c = json::array();
    for (const auto& r : cors) c.push_back(corollary_json(*r));
    report["corollary"] = c;
  }
  write_report(opt, report);
  log << "verify-bound: " << (pass ? "PASS" : "FAIL") << " (" << L << " refinements, " << B << " balls)\n";
  return pass ? kExitPass : kExitBoundFail;
}

int cmd_trace_iteration(const Scenario& s, const CommandOptions& opt, std::ostream& log) {
  const std::size_t L = s.refinements.size(), B = s.balls.size();
  std::vector<std::vector<IterationTrace>> traces(L, std::vector<IterationTrace>(B));
  std::vector<std::vector<double>> zbar(L, std::vector<double>(B));
  parallel_for(int(L), opt.threads, [&](int i) {
    const Level lv = build_level(s, s.refinements[i]);
    for (std::size_t b = 0; b < B; ++b) {
      const auto ball = ball_membership(lv.space, lv.grid, s.balls[b].center, s.balls[b].radius);
      const auto cut = cutoff_sequence(ball, s.params.tau, s.params.jmax, lv.Qs, lv.grid, s.params.sstar);
      const auto sh = shift_solution(lv.u, ball, lv.coeffs, s.params, s.sigma);
      zbar[i][b] = sh.Zbar.total;
      traces[i][b] = iteration_trace(lv.u, ball, cut, lv.coeffs, s.params, lv.Qs, lv.grid, s.sigma);
    }
  });
  bool pass = true;
  json runs = json::array();
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t b = 0; b < B; ++b) {
      const auto& tr = traces[i][b];
      const std::string csv = "steps_" + run_tag(b, i) + ".csv";
      write_text(opt.out / csv, steps_csv(tr));
      bool finite = true;
      for (const auto& st : tr.steps)
        finite = finite && std::isfinite(st.caloric_measured) && std::isfinite(st.recursion_measured);
      const bool mono = cascade_nondecreasing(tr.cascade_norms);
      const bool ok = finite && mono;
      pass = pass && ok;
      json t = trace_json(tr);
      t["level"] = i;
      t["ball"] = b;
      t["h"] = num(s.refinements[i], "grid spacing");
      t["Zbar"] = num(zbar[i][b], "Z form with barred coefficients");
      t["cascade_nondecreasing"] = mono;
      t["steps_csv"] = csv;
      t["pass"] = ok;
      runs.push_back(t);
    }
  write_report(opt, json{{"command", "trace-iteration"}, {"config", s.source}, {"pass", pass}, {"runs", runs}});
  log << "trace-iteration: " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitPass : kExitBoundFail;
}

int cmd_check_structure(const Scenario& s, const CommandOptions& opt, std::ostream& log) {
  const GridDomain grid = build_grid(s, s.refinements.front());
  const QuadraticFormField Q = build_form(s, grid);
  const BuiltinOperator bo = build_operator(s, Q);
  const StructuralCoefficients coeffs = s.coefficients_from_operator ? bo.coeffs : build_coefficients(s, Q, grid);

  std::vector<Index> cells;
  const auto masked = grid.masked_cells();
  const std::size_t stride = std::max<std::size_t>(1, masked.size() / std::size_t(s.structure.max_cells));
  for (std::size_t i = 0; i < masked.size() && int(cells.size()) < s.structure.max_cells; i += stride)
    cells.push_back(masked[i]);
  const auto samples = full_samples(grid, cells, s.structure.nsphere);
  StructOptions so;
  so.strict = s.structure.strict;

  const auto direct = check_struct(bo.op, coeffs, Q, grid, samples, so);
  const auto op3 = struct_to_struct3(bo.op);
  const auto three = check_struct3(op3, coeffs, Q, grid, samples, so);
  OperatorSampler stripped = op3;
  stripped.Atilde = nullptr;
  const auto back = check_struct(struct3_to_struct(stripped, Q), coeffs, Q, grid, samples, so);
  // Relaxed form: only z = u(x), xi = grad u(x) along the scenario solution.
  const SobolevPair u = build_solution(s, Q, grid);
  const auto trace = check_struct(bo.op, coeffs, Q, grid, trace_samples(grid, cells, u.w, u.v), so);

  const auto vjson = [&](const StructReport& r) {
    json v = json::array();
    for (std::size_t i = 0; i < r.violations.size() && i < 100; ++i) {
      const auto& x = r.violations[i];
      v.push_back(json{{"cell", x.cell},
                       {"x", point(grid.center(x.cell))},
                       {"z", number(x.z)},
                       {"xi", point(x.xi)},
                       {"condition", x.condition},
                       {"lhs", num(x.lhs, "left side of the structure inequality")},
                       {"rhs", num(x.rhs, "right side of the structure inequality")}});
    }
    return json{{"checked", r.checked},
                {"violation_count", r.violations.size()},
                {"reconstructed_atilde", r.reconstructed_atilde},
                {"violations", v}};
  };
  const bool pass = s.structure.mode == "trace" ? trace.ok() : direct.ok() && three.ok() && back.ok();
  std::ostringstream csv;
  csv << "check,cell,condition,z,lhs,rhs\n";
  const std::pair<const char*, const StructReport*> all[] = {
      {"struct", &direct}, {"struct3", &three}, {"round_trip", &back}, {"solution_trace", &trace}};
  for (const auto& [name, r] : all)
    for (const auto& x : r->violations)
      csv << name << ',' << x.cell << ',' << x.condition << ',' << fmt(x.z) << ',' << fmt(x.lhs) << ',' << fmt(x.rhs)
          << '\n';
  write_text(opt.out / "violations.csv", csv.str());
  write_report(opt, json{{"command", "check-structure"},
                         {"config", s.source},
                         {"operator", bo.op.name},
                         {"form", Q.name()},
                         {"mode", s.structure.mode},
                         {"pass", pass},
                         {"struct", vjson(direct)},
                         {"struct3", vjson(three)},
                         {"round_trip", vjson(back)},
                         {"solution_trace", vjson(trace)}});
  log << "check-structure: " << (pass ? "PASS" : "FAIL") << " (" << samples.size() << " samples)\n";
  return pass ? kExitPass : kExitBoundFail;
}

int cmd_geometry(const Scenario& s, const CommandOptions& opt, std::ostream& log) {
  const GridDomain grid = build_grid(s, s.refinements.front());
  const QuadraticFormField Q = build_form(s, grid);
  const QuasimetricSpace space = build_space(s, Q, grid);
  const auto dq = estimate_Dqstar(space, grid, s.geometry.centers, s.geometry.radii);
  const auto db = estimate_doubling(space, grid, dq.samples);
  const auto cp = check_compatibility(space, grid, s.geometry.centers, s.geometry.eps, s.geometry.radii);

  std::ostringstream csv;
  csv << "center,radius,measure\n";
  json samples = json::array();
  for (const auto& b : dq.samples) {
    std::string c;
    for (Index i = 0; i < b.center.size(); ++i) c += (i ? " " : "") + fmt(b.center(i));
    csv << c << ',' << fmt(b.radius) << ',' << fmt(b.measure) << '\n';
  }
  write_text(opt.out / "balls.csv", csv.str());
  json entries = json::array();
  for (const auto& e : cp.entries)
    entries.push_back(json{{"center", point(e.center)},
                           {"metric_finite", e.metric_finite},
                           {"cond1", e.cond1},
                           {"cond0", e.cond0},
                           {"closure_inside", e.closure_inside},
                           {"r0", num(e.r0, "distance to the boundary r0")},
                           {"delta_of_eps", pairs(e.delta_of_eps, "metric radius delta inside the Euclidean ball of radius eps")},
                           {"s_of_r", pairs(e.s_of_r, "Euclidean radius s inside the metric ball of radius r")}});
  const bool pass = cp.cond1 && cp.cond0 && cp.closure_inside;
  write_report(opt, json{{"command", "geometry"},
                         {"config", s.source},
                         {"metric", space.backend_name()},
                         {"pass", pass},
                         {"qstar", num(dq.qstar, "measure growth exponent q*")},
                         {"c0", num(dq.c0, "measure growth constant c0")},
                         {"center_slopes", nums(dq.center_slopes, "log-log slope of |B(y, r)| per center")},
                         {"Cdoub", num(db.Cdoub, "doubling constant")},
                         {"Dstar", num(db.Dstar, "doubling dimension log2 Cdoub")},
                         {"doubling_saturated", db.saturated},
                         {"compatibility",
                          {{"cond1", cp.cond1}, {"cond0", cp.cond0}, {"closure_inside", cp.closure_inside},
                           {"entries", entries}}}});
  log << "geometry: q* = " << fmt(dq.qstar) << ", compatibility " << (pass ? "ok" : "FLAGGED") << "\n";
  return pass ? kExitPass : kExitBoundFail;
}

int cmd_solve(const Scenario& s, const CommandOptions& opt, std::ostream& log) {
  const std::size_t L = s.refinements.size();
  std::vector<std::optional<SolveResult>> res(L);
  std::vector<std::optional<GridDomain>> grids(L);
  parallel_for(int(L), opt.threads, [&](int i) {
    GridDomain grid = build_grid(s, s.refinements[i]);
    const QuadraticFormField Q = build_form(s, grid);
    res[i] = run_solve(s, Q, grid);
    grids[i] = grid;
  });
  bool ok = true;
  json runs = json::array();
  for (std::size_t i = 0; i < L; ++i) {
    const auto& r = *res[i];
    const std::string stem = "u_r" + std::to_string(i);
    write_scalar(opt.out / stem, *grids[i], r.u.w, "u");
    write_field(opt.out / (stem + "_grad"), *grids[i], FieldLayout::Vector, r.u.v.transpose(), "grad u");
    ok = ok && r.converged;
    runs.push_back(json{{"level", i},
                        {"h", num(s.refinements[i], "grid spacing")},
                        {"residual", num(r.residual, "relative residual of the discrete system")},
                        {"shift", num(r.shift, "diagonal shift used by the factorization")},
                        {"iterations", r.iterations},
                        {"converged", r.converged},
                        {"field", stem}});
  }
  write_report(opt, json{{"command", "solve"}, {"config", s.source}, {"kind", s.solve.kind}, {"pass", ok}, {"runs", runs}});
  log << "solve: " << (ok ? "converged" : "NOT converged") << "\n";
  return ok ? kExitPass : kExitNumeric;
}

int run_command(const std::string& name, const std::filesystem::path& config, const CommandOptions& opt,
                std::ostream& log) {
  try {
    Scenario s = load_scenario(config);
    if (opt.refine) override_refinements(s, *opt.refine);
    std::filesystem::create_directories(opt.out);
    if (name == "verify-bound") return cmd_verify_bound(s, opt, log);
    if (name == "check-structure") return cmd_check_structure(s, opt, log);
    if (name == "geometry") return cmd_geometry(s, opt, log);
    if (name == "trace-iteration") return cmd_trace_iteration(s, opt, log);
    if (name == "solve") return cmd_solve(s, opt, log);
    log << "error: unknown command '" << name << "'\n";
    return kExitConfig;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace degen
