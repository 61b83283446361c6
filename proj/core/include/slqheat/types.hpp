#pragma once
#include <Eigen/Dense>

namespace slqheat {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace slqheat
