#pragma once

#include <Eigen/Core>

namespace netls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

template <class Real>
using MatrixT = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <class Real>
using VectorT = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// Extended precision used for traces that feed the finite-time mechanism.
using Extended = long double;

}  // namespace netls
