#pragma once

// Manufactured free-surface MHD solution (d_h = 1) with exact source terms.
// v and b come from stream functions, so both are divergence free in physical
// space; b vanishes on the exact surface; all fields vanish to high order at
// x3 = -L, where the stepper keeps the bottom row fixed.

#include "fsmhd/stepper.hpp"

#include <vector>

namespace fsmhd {

struct Mms {
    double L = 3.0, a0 = 0.05, U = 0.1, eps = 0.02, grav = 1.0;

    Eigen::ArrayXd h_exact(const HalfSpaceGrid& g, double t) const;
    // exact v, b, q at the grid points of the mapped domain of S
    void sample(const SurfaceState& S, double t, Vec3& v, Vec3& b, Field& q) const;
    // exact data, projected and with q from one elliptic solve
    MhdState initial(const GridPtr& g) const;
    // exact sources for the physical equations
    Forcing forcing() const;

    struct Errors {
        double v = 0, b = 0, h = 0;
    };
    // max-norm errors against the exact solution at st.t
    Errors errors(const MhdState& st) const;
};

struct MmsStudy {
    std::vector<double> dt;
    std::vector<Mms::Errors> errors;
    std::vector<double> order_v, order_b;  // log2 ratios of successive levels
    double min_order = 0.0;                // smallest of order_v and order_b
};

// Temporal convergence under dt halving: `levels` runs to time T from dt0.
MmsStudy mms_temporal_study(const Mms& m, const GridPtr& g, double dt0, double T, int levels = 3,
                            const StepConfig& base = {});

}  // namespace fsmhd
