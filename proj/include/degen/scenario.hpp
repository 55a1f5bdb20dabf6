#pragma once

// JSON scenario files: grid, form preset, exponents, coefficients, operator,
// solution source, balls, estimate parameters, and the refinement sweep.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "degen/moser.hpp"
#include "degen/operators.hpp"
#include "degen/weak_solutions.hpp"

namespace degen {

struct GridSpec {
  int dim = 2;
  double half_width = 1.0;
  double h = 1.0 / 32;
};

struct FormSpec {
  std::string preset = "identity";  // identity | scaled | grushin | file
  double c = 1;                      // scaled
  double alpha = 1, scale = 1;       // grushin
  std::filesystem::path path;        // file: stem of a matrix-layout field
};

struct CoefficientSpec {
  double value = 0;
  std::filesystem::path path;  // scalar field file, overrides value
};

struct OperatorSpec {
  std::string name = "p-laplacian";  // p-laplacian | linear-divergence | yamabe-type
  LinearData linear;
  double R = 0, Rbar = 0, q = 2;
};

struct SolveSpec {
  std::string kind = "linear";     // linear | plaplacian
  std::string rhs = "zero";        // zero | constant
  double rhs_value = 0;
  std::string boundary = "coordinate";  // coordinate | zero
  int axis = 0;
  PicardOptions picard;
};

struct SolutionSpec {
  std::string preset = "coordinate";  // coordinate | solve | file
  int axis = 0;
  std::filesystem::path path;
};

struct BallSpec {
  Point center;
  double radius = 0.5;
};

struct GeometrySpec {
  std::vector<Point> centers;
  std::vector<double> radii;
  std::vector<double> eps{0.25, 0.5};
};

struct StructureSpec {
  int max_cells = 64;
  int nsphere = 16;
  bool strict = false;
  // Which sample set decides pass: "full" (all z, xi) or "trace" (z = u, xi = grad u).
  // Both are always reported.
  std::string mode = "full";
};

struct Scenario {
  std::string source;
  GridSpec grid;
  FormSpec form;
  std::string metric = "euclidean";  // euclidean | subunit
  double p = 2, sigma = 3, gamma = 2, psi = 2, delta = 2;
  // b, c, d, e, f, g, h
  std::array<CoefficientSpec, 7> coefficients;
  bool coefficients_from_operator = false;
  OperatorSpec op;
  SolutionSpec solution;
  SolveSpec solve;
  std::vector<BallSpec> balls;
  EstimateParams params;
  std::vector<double> refinements;  // grid spacings, coarse to fine
  double drift_tolerance = 0.2;
  GeometrySpec geometry;
  StructureSpec structure;
  std::optional<std::string> corollary;
  CorollaryInput corollary_input;
};

// Throws ConfigError with the file, line, and key that failed.
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

// `levels` spacings h, h/2, ... starting at the configured grid spacing.
void override_refinements(Scenario& s, int levels);

GridDomain build_grid(const Scenario& s, double h);
QuadraticFormField build_form(const Scenario& s, const GridDomain& grid);
QuasimetricSpace build_space(const Scenario& s, const QuadraticFormField& Q, const GridDomain& grid);
StructuralCoefficients build_coefficients(const Scenario& s, const QuadraticFormField& Q, const GridDomain& grid);
BuiltinOperator build_operator(const Scenario& s, const QuadraticFormField& Q);
// Boundary and rhs fields for the configured solve.
DiscreteProblem build_problem(const Scenario& s, const QuadraticFormField& Q, const GridDomain& grid);
SolveResult run_solve(const Scenario& s, const QuadraticFormField& Q, const GridDomain& grid);
SobolevPair build_solution(const Scenario& s, const QuadraticFormField& Q, const GridDomain& grid);

}  // namespace degen
