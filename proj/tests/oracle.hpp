#pragma once

// Test-only reference minimizer for the weighted TV objective. Independent
// of the production solver: projected subgradient descent with diminishing
// steps, refined by cyclic coordinate-wise golden-section search over [0,1].
// Restricted to tiny instances (n <= 8, m <= 12).

#include <Eigen/Core>

#include "epinet/denoise.hpp"

namespace epinet::testing {

Eigen::VectorXd oracle_denoise(const DenoiseProblem& problem);

// True when re-solving under small target perturbations moves the minimizer
// by less than `tol` (used to detect unique-minimizer instances).
bool oracle_minimizer_is_stable(const DenoiseProblem& problem,
                                double tol = 1e-4);

}  // namespace epinet::testing
