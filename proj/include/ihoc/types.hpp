#pragma once

#include <Eigen/Dense>

namespace ihoc {

using Vec = Eigen::VectorXd;
using Row = Eigen::RowVectorXd;  // co-vectors (psi, f0_x, gradients) are rows
using Mat = Eigen::MatrixXd;

struct Tolerance {
  double abs = 1e-9;
  double rel = 1e-9;
};

}  // namespace ihoc
