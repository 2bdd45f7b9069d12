#pragma once

#include "fsmhd/phi_ops.hpp"

namespace fsmhd {

struct MhdState {
    SurfaceState S;
    Vec3 v, b;
    Field q;
    double t = 0.0;
    double eps = 0.0;
    double sigma = 0.0;
    double g = 1.0;

    const HalfSpaceGrid& grid() const { return S.g(); }
};

// Rest state (v = b = q = 0) over the surface h.
MhdState rest_state(const GridPtr& grid, const Eigen::ArrayXd& h, double A = 1.0);

// pointwise chain-rule curl, the form the boundary algebra inverts; agrees with curl_phi up to truncation
Vec3 vorticity(const Vec3& f, const SurfaceState& S);

// Pi S^phi f n restricted to z = 0 (three surface fields)
std::array<Eigen::ArrayXd, 3> strain_trace(const Vec3& f, const SurfaceState& S);

struct StrainTraces {
    std::array<Eigen::ArrayXd, 3> v, b;
    double v_sup = 0.0, b_sup = 0.0;
};
StrainTraces boundary_strain_trace(const MhdState& st);

// Which boundary rows the projection leaves untouched.
enum class ProjectionKind {
    Velocity,  // bottom row fixed
    Magnetic,  // top and bottom rows fixed (the field vanishes there)
};

struct ProjectionStats {
    int iterations = 0;
    double rel_residual = 0.0;
    double divergence = 0.0;  // L2 norm of div^phi of the output
};

inline constexpr double div_tol = 1e-8;

// Projection onto fields whose discrete div^phi vanishes on every grid row.
// First a masked grad^phi psi (psi = 0 on z = 0) is removed, then the remaining
// top-row divergence by the projection that is orthogonal in the J-weighted
// quadrature. Corrections are masked on the fixed rows, so boundary data there
// passes through unchanged.
Vec3 project_div_free(const Vec3& f, const SurfaceState& S, ProjectionKind kind = ProjectionKind::Velocity,
                      ProjectionStats* stats = nullptr);

// Transpose of div^phi with respect to the plain Euclidean inner product.
Vec3 div_phi_adjoint(const Field& lam, const SurfaceState& S);

double divergence_norm(const Vec3& f, const SurfaceState& S);

// min over z = 0 of g - d_z^phi q
double taylor_sign_margin(const MhdState& st);

}  // namespace fsmhd
