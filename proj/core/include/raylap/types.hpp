#pragma once

#include <Eigen/Dense>

namespace raylap {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Batches of points: one point per row, rows contiguous.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense symmetric matrix stored in full; both triangles hold identical values.
using SymMatrix = Mat;

}  // namespace raylap
