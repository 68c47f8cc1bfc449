#pragma once

#include <Eigen/Core>

namespace plom {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace plom
