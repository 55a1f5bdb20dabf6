#pragma once

// Built-in operators with structural coefficients that make them satisfy the
// structure conditions relative to their form Q.

#include "degen/structural.hpp"

namespace degen {

struct BuiltinOperator {
  OperatorSampler op;
  StructuralCoefficients coeffs;
};

// A = |sqrt(Q) xi|^{p-2} Q xi, A~ = |sqrt(Q) xi|^{p-2} sqrt(Q) xi, B = 0.
BuiltinOperator p_laplacian(const QuadraticFormField& Q, double p);

struct LinearData {
  Eigen::VectorXd H, G, g;  // n-vectors
  double F = 0, f = 0;
  // Rows are the subunit decompositions of the fields R_i, S_i, T_i; each row has norm <= 1.
  Eigen::MatrixXd R, S, T;
};

// A = Q xi - sqrt(Q) S^T G z + sqrt(Q) T^T g,
// A~ = sqrt(Q) xi - S^T G z + T^T g,
// B = f - <H, R sqrt(Q) xi> - F z.
BuiltinOperator linear_divergence(const QuadraticFormField& Q, const LinearData& data);

// A = Q xi, A~ = sqrt(Q) xi, B = R z - Rbar |z|^{q-2} z with R, Rbar >= 0.
BuiltinOperator yamabe_type(const QuadraticFormField& Q, double R, double Rbar, double q);

}  // namespace degen
