#pragma once

#include "fsmhd/pressure.hpp"

#include <functional>
#include <string>

namespace fsmhd {

enum class Scheme { Imex2, ExplicitRk3 };
enum class Regime { Viscous, Ideal };

struct StepConfig {
    double dt = 1e-3;
    Scheme scheme = Scheme::Imex2;
    double cfl_safety = 0.5;
    Regime regime = Regime::Viscous;
    int history_depth = 1;
    bool advection = true;        // false drops transport (pure diffusion tests)
    bool surface_motion = true;   // false freezes h
    bool project = true;
    double c0_min_factor = 1e-3;  // Taylor-sign abort below c0_min_factor * g
    EllipticOptions elliptic;
};

// Manufactured or external source terms, evaluated at stage times.
struct ForcingTerms {
    Vec3 fv, fb;                      // added to the v and b equations
    Eigen::ArrayXd fh;                // added to dt h
    std::array<Eigen::ArrayXd, 2> dzv_top;  // shift of the compatible dz v1, dz v2 on z = 0
    Eigen::ArrayXd q_top;             // added to the dynamic pressure data
};
using Forcing = std::function<void(double t, const MhdState& st, ForcingTerms& out)>;

struct StepStats {
    double cfl = 0.0;
    double taylor_margin = 0.0;
    double div_v = 0.0, div_b = 0.0;
    double energy = 0.0;
    int elliptic_iterations = 0;
};

// One IMEX step (explicit SSP-RK3 transport with an L-stable DIRK for the
// diffusion, same weights). With eps = 0 it reduces to step_ideal.
MhdState step_viscous(const MhdState& st, const StepConfig& cfg, const Forcing* forcing = nullptr,
                      StepStats* stats = nullptr);
// SSP-RK3 step of the ideal system.
MhdState step_ideal(const MhdState& st, const StepConfig& cfg, const Forcing* forcing = nullptr,
                    StepStats* stats = nullptr);

// v . N on z = 0
Eigen::ArrayXd kinematic_rate(const SurfaceState& S, const Vec3& v);
// Advance h through dt h = v3 - v_h . grad h with v frozen, using the SSP-RK3 stages.
Eigen::ArrayXd kinematic_update(const HalfSpaceGrid& g, const Eigen::ArrayXd& h, const Vec3& v, double dt);

// int (|v|^2 + |b|^2) J dy dz + g int h^2 dy + 2 sigma int (sqrt(1 + |grad h|^2) - 1) dy
double energy(const MhdState& st);
// dt * max((|v_h| + |b_h|)/dy + (|W_v| + |W_b|)/dz), W the contravariant vertical component
double cfl_number(const MhdState& st, double dt);

// q from one Dirichlet (sigma = 0) elliptic solve of the current state
void initialize_pressure(MhdState& st, const EllipticOptions& opt = {}, const Vec3* force = nullptr);

// Implicit diffusion solves (I - c Delta^phi) u = rhs used by the stages.
// Velocity: zero tangential stress (shifted by dzv_top) and div-free rows on z = 0, bottom row kept.
Vec3 solve_diffusion_v(const SurfaceState& S, const Vec3& rhs, double c, const std::array<Eigen::ArrayXd, 2>* dzv_top,
                       const EllipticOptions& opt, int* iterations = nullptr);
// Magnetic: zero on z = 0, bottom row kept.
Vec3 solve_diffusion_b(const SurfaceState& S, const Vec3& rhs, double c, const EllipticOptions& opt,
                       int* iterations = nullptr);

}  // namespace fsmhd
