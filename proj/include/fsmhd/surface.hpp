#pragma once

#include "fsmhd/grid.hpp"

#include <memory>

namespace fsmhd {

// Smooth even cutoff: 1 on |s| <= 1, 0 on |s| >= 2. Returns (chi, chi', chi'').
std::array<double, 3> chi(double s);
inline constexpr double chi_support = 2.0;

using GridPtr = std::shared_ptr<const HalfSpaceGrid>;

struct SurfaceState {
    GridPtr grid;
    double A = 1.0;
    Eigen::ArrayXd h;   // surface height (nh)
    Eigen::ArrayXd ht;  // time derivative of h used for the phi_t field (nh)
    Field eta;
    Field p1, p2, J;  // d1 phi, d2 phi, dz phi
    Field phit;       // dt phi
    // metric coefficients of the transformed Laplacian
    Field a1, a2, G, cL;
    // boundary data on z = 0
    std::array<Eigen::ArrayXd, 3> N, n;

    const HalfSpaceGrid& g() const { return *grid; }
    // tangential projector Id - n (x) n at boundary point ih
    Eigen::Matrix3d Pi(int ih) const;
};

// A <= 0 requests the automatic choice over powers of two.
SurfaceState build_extension(const GridPtr& grid, const Eigen::ArrayXd& h, double A = 1.0,
                             const Eigen::ArrayXd* ht = nullptr);
// Same surface, new phi_t (cheap: only the extension of dt h is recomputed).
void set_surface_velocity(SurfaceState& S, const Eigen::ArrayXd& ht);

// Twice the mean curvature: div(grad h / sqrt(1 + |grad h|^2)).
Eigen::ArrayXd mean_curvature(const HalfSpaceGrid& g, const Eigen::ArrayXd& h);

// Extension of a surface field by the cutoff, mode by mode.
Field extend(const HalfSpaceGrid& g, const Eigen::ArrayXd& s);

}  // namespace fsmhd
