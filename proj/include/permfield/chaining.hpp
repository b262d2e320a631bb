#pragma once

#include <Eigen/Dense>
#include <vector>

#include "permfield/errors.hpp"

namespace permfield {

/// Majorizing-measure functional over a finite family with the given pairwise
/// distances: J(a) = sup_i int_0^a log(1 / sigma(B(i,r))) dr, integrated
/// exactly (ball weights are piecewise constant in r).
///
/// `distances` must be a metric matrix (symmetry, zero diagonal, triangle
/// inequality); `sigma` a probability vector. Returns +inf when some point
/// carries zero mass and a > 0.
double j_functional(const Eigen::MatrixXd& distances, const Eigen::VectorXd& sigma,
                    double a, double metric_tol = 1e-12);

/// Empirical Orlicz norm for Xi(x) = e^x - 1:
/// inf{ c > 0 : mean(exp(|x_i|/c) - 1) <= 1 }, found by bisection.
/// Throws HeavyTail if no admissible c <= c_max exists.
double orlicz_norm(const std::vector<double>& samples, double c_max = 1e12);

}  // namespace permfield
