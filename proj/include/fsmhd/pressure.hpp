#pragma once

#include "fsmhd/state.hpp"

namespace fsmhd {

struct EllipticOptions {
    double tol = 1e-10;
    int max_iter = 500;
    double solvability_tol = 1e-8;
};

struct EllipticStats {
    int iterations = 0;
    double rel_residual = 0.0;
    double lambda = 0.0;  // Neumann only: scaled flux shift absorbed by the bordering
};

// E = (1/J) P P^T with P = [[J,0,-p1],[0,J,-p2],[0,0,1]]; J Delta^phi = div(E grad)
Eigen::Matrix3d coefficient_matrix(const SurfaceState& S, Eigen::Index i);
double coefficient_min_eigenvalue(const SurfaceState& S);
// sum over the grid of (grad w)^T E (grad u) with quadrature weights
double energy_form(const SurfaceState& S, const Field& u, const Field& w);

// Delta^phi q = rhs on interior rows, q = top_values on z = 0, dz q = 0 on z = -L.
Field solve_dirichlet(const SurfaceState& S, const Field& rhs, const Eigen::ArrayXd& top_values,
                      const EllipticOptions& opt = {}, EllipticStats* stats = nullptr);

// Delta^phi q = rhs on interior rows, grad^phi q . N = top_flux on z = 0,
// dz q = 0 on z = -L, gauge mean(q|z=0) = 0. The discrete system is bordered by
// a constant flux shift; SolvabilityViolation if that shift exceeds the tolerance.
Field solve_neumann(const SurfaceState& S, const Field& rhs, const Eigen::ArrayXd& top_flux,
                    const EllipticOptions& opt = {}, EllipticStats* stats = nullptr,
                    const Field* guess = nullptr);

// -v.grad^phi v + b.grad^phi b (+ force)
Vec3 momentum_transport(const MhdState& st, const Vec3* force = nullptr);
// div^phi of momentum_transport
Field pressure_source(const MhdState& st, const Vec3* force = nullptr);
// g h - sigma M + 2 eps (S^phi v n).n on z = 0
Eigen::ArrayXd dynamic_pressure_data(const MhdState& st);

Field solve_pressure_dirichlet(const MhdState& st, const EllipticOptions& opt = {}, EllipticStats* stats = nullptr,
                               const Vec3* force = nullptr);
// vt is the computational-frame time derivative of v (stage data from the stepper)
Field solve_pressure_neumann(const MhdState& st, const Vec3& vt, const EllipticOptions& opt = {},
                             EllipticStats* stats = nullptr, const Vec3* force = nullptr);

}  // namespace fsmhd
