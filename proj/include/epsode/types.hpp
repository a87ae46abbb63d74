#pragma once

#include <Eigen/Dense>

namespace epsode {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Dense symmetric matrix. Both triangles are stored; routines that accept a
// SymMatrix assume (and preserve) symmetry.
using SymMatrix = Eigen::MatrixXd;

}  // namespace epsode
