#pragma once

#include "fsmhd/state.hpp"

namespace fsmhd {

inline constexpr double h_thresh = 0.3;

// d[i][j] = d_j f^i for components i = 0..2 and horizontal axes j = 0..1.
// Works for volume fields and for traces on z = 0 alike.
struct Tangential {
    std::array<std::array<Eigen::ArrayXd, 2>, 3> d;
};

Tangential tangential_derivatives(const Vec3& f, const HalfSpaceGrid& g);
Tangential tangential_trace(const Vec3& f, const HalfSpaceGrid& g);

// Metric data at the points of a Tangential: all fields or their traces on z = 0.
struct Metric {
    Eigen::ArrayXd p1, p2, J;
};
Metric volume_metric(const SurfaceState& S);
Metric boundary_metric(const SurfaceState& S);

// dz f from (w1, w2) and the tangential derivatives of a divergence-free f.
// Row 1: (p1p2/J) u1 + ((1+p2^2)/J) u2 = -w1 + d2f3 + p2 div_h f
// Row 2: ((1+p1^2)/J) u1 + (p1p2/J) u2 =  w2 + d1f3 + p1 div_h f
// u3 = p1 u1 + p2 u2 - J div_h f.
Vec3 normal_from_vorticity(const Eigen::ArrayXd& w1, const Eigen::ArrayXd& w2, const Tangential& T, const Metric& m);
// determinant of the system above: -(1 + p1^2 + p2^2)/J^2
Eigen::ArrayXd normal_system_det(const Metric& m);
// (w1, w2) from dz f (u3 taken from the divergence substitution), the inverse map
std::array<Eigen::ArrayXd, 2> vorticity_from_normal(const Eigen::ArrayXd& u1, const Eigen::ArrayXd& u2,
                                                    const Tangential& T, const Metric& m);

// (dz f1, dz f2) on z = 0 making Pi S^phi f n x n vanish.
std::array<Eigen::ArrayXd, 2> boundary_normals_from_compat(const Tangential& T, const SurfaceState& S);
// (w1, w2) on z = 0 for a field with zero tangential boundary stress.
std::array<Eigen::ArrayXd, 2> boundary_vorticity_trace(const Tangential& T, const SurfaceState& S);

struct BoundaryAlgebra {
    std::array<Eigen::ArrayXd, 4> Mmat;   // M00, M01, M10, M11
    std::array<Eigen::ArrayXd, 6> sigma;  // w1 - F1 = s1 T1 + s2 T2 + s3 T3, w2 - F2 = s4 T1 + s5 T2 + s6 T3
    std::array<Eigen::ArrayXd, 3> theta_v, theta_b;
    std::array<Eigen::ArrayXd, 2> Fv, Fb;
    std::array<Eigen::ArrayXd, 2> jump_v, jump_b;  // predicted w - F
};

BoundaryAlgebra discrepancy_algebra(const MhdState& st);

// Pi S^phi f n x n on z = 0
std::array<Eigen::ArrayXd, 3> strain_cross(const Vec3& f, const SurfaceState& S);

struct VorticityForcing {
    std::array<Field, 2> Fv, Fb;
};

// F0_v = w_v.grad v_h - w_b.grad b_h, F0_b = [curl, b.grad] v - [curl, v.grad] b,
// by direct evaluation of the commutators.
VorticityForcing vorticity_rhs(const MhdState& st);
// The same forcing as a quadratic polynomial in first derivatives, with dz
// eliminated through normal_from_vorticity. Cross-check only.
VorticityForcing vorticity_rhs_reduced(const MhdState& st);

// Pointwise form of the reduced forcing: inputs are the horizontal vorticities,
// the tangential derivatives of v and b and the metric at the same points.
VorticityForcing forcing_from_data(const std::array<Eigen::ArrayXd, 2>& wv, const std::array<Eigen::ArrayXd, 2>& wb,
                                   const Tangential& Tv, const Tangential& Tb, const Metric& m);

}  // namespace fsmhd
