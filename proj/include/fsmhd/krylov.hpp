#pragma once

#include <Eigen/Dense>

#include <functional>

namespace fsmhd {

using LinOp = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct KrylovResult {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

// Restarted GMRES with right preconditioning. Converged when
// ||b - A x|| <= max(tol * ||b||, atol).
KrylovResult gmres(const LinOp& A, const LinOp& M, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol,
                   int max_iter, int restart = 40, double atol = 0.0);

}  // namespace fsmhd
