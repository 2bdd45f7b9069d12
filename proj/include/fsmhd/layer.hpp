#pragma once

#include "fsmhd/state.hpp"

#include <complex>
#include <string>
#include <vector>

namespace fsmhd {

using cplx = std::complex<double>;

// ---- boundary-layer symbols and ODE profiles ----

// Metric data (a or b family) at one boundary point.
struct PointMetric {
    double a0 = 1.0;
    Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
    std::array<Eigen::Matrix3d, 3> da{Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero()};  // da[k](i,j) = d_k a_ij, k = 2 is z
};

struct LayerCoefficients {
    PointMetric ma, mb;
    double f7v = 0.0, f7b = 0.0;
    double gamma = 1.0;
};

// eps W'' + A1 sqrt(eps) W' + A0 W = A2 W_other for W+ (v family) and W- (b family)
struct Symbols {
    cplx Av0, Av1, Av2, Ab0, Ab1, Ab2;
};

Symbols layer_symbols(double eps, double xi1, double xi2, double tau, const LayerCoefficients& c);
// (-A1 + sqrt(A1^2 - 4 A0)) / 2 with the principal root; the profile decays like exp(rate z / sqrt(eps))
cplx decay_rate(cplx A1, cplx A0);

struct ProfileOptions {
    int picard_max = 20;
    double picard_tol = 1e-13;
    int n_colloc = 192;     // Chebyshev points of the collocation solve
    double depth = 36.0;    // domain length in units of the slowest decay length
    double quad_step = 0.02;  // spacing of the uniform grid of the integral form, in decay lengths
};

struct LayerProfile {
    double eps = 0.0;
    Symbols sym{};
    cplx Wp0, Wm0;
    Eigen::ArrayXd z;           // physical depths of the uniform grid, z[0] = 0 descending
    Eigen::ArrayXcd Wp, Wm;     // collocation values on z
    Eigen::ArrayXcd Wp_picard, Wm_picard;  // integral form with Picard coupling on z
    int picard_iterations = 0;
    double contraction = 0.0;   // observed ratio of successive Picard updates
    double discrepancy = 0.0;   // max |collocation - Picard| / max(|W(0)|)
    // Chebyshev data of the collocation solve (stretched variable s = z / sqrt(eps) in [-Z, 0])
    double Z = 0.0;
    Eigen::ArrayXd s_nodes;
    Eigen::ArrayXcd cp, cm;

    cplx plus_at(double z) const;
    cplx minus_at(double z) const;
};

LayerProfile layer_profile(const Symbols& sym, cplx Wp0, cplx Wm0, double eps, const ProfileOptions& opt = {});

struct ScanRow {
    double eps;
    double inner_plus, inner_minus, outer_plus, outer_minus;  // |W(z)| / |W(0)| at the probes
};
struct ScanTable {
    double delta_z = 0.0;
    std::vector<ScanRow> rows;  // in ladder order (eps decreasing)
    bool inner_increasing = false, outer_decreasing = false;  // strict, as eps decreases
};
// Probes at z = -eps^(1/2 + delta_z) (inner) and z = -eps^(1/2 - delta_z) (outer).
ScanTable scaling_scan(const std::vector<double>& eps_ladder, double delta_z, const LayerCoefficients& c, double xi1,
                       double xi2, double tau, cplx Wp0 = 1.0, cplx Wm0 = 1.0, const ProfileOptions& opt = {});

// ---- classifier ----

enum class LayerVerdict { StrongInitial, StrongBoundary, Weak };
std::string to_string(LayerVerdict v);

struct ClassifierThresholds {
    double initial_floor = 1e-10;  // discretization noise floor of the initial discrepancy
    double strain_floor = 1e-10;   // noise floor of the boundary strain
    double factor = 10.0;
};

// Both nonzero reports StrongBoundary (boundary mechanism takes precedence).
LayerVerdict classify_layer(double initial_discrepancy, double boundary_strain, const ClassifierThresholds& th,
                            std::string* reason = nullptr);

// sup over the grid rows of the cells meeting -sqrt(eps) <= z < 0
double band_sup(const HalfSpaceGrid& g, const Field& f, double eps);
double band_sup(const HalfSpaceGrid& g, const std::vector<Field>& fs, double eps);

// ---- Lagrangian maps and Elsasser layer variables ----

struct LagrangianMaps {
    std::array<Vec3, 2> Y;     // Y1 along u - b, Y2 along u + b: physical positions of the initial grid points
    std::array<Field, 2> jac;  // det grad Y
    Field a0, b0;              // |det grad Y|^(1/2)
    Mat3F a, b;                // |det grad Y|^(1/2) P^(-1), P = grad Y^T grad Y
    SurfaceState S0;           // initial mesh
    double t0 = 0.0, t = 0.0;
    int clamped = 0;           // trajectories pulled back onto the surface
};

// Heun integration of both maps through the states (chronological, uniform spacing).
LagrangianMaps advect_lagrangian(const std::vector<MhdState>& states);

// gamma = max(1, 2 max(|f7v| + |f7b|) / min(a0, b0))
double gamma_select(const Field& f7v, const Field& f7b, const Field& a0, const Field& b0);
// all four damping combinations positive at every point
bool damping_positive(double gamma, const Field& f7v, const Field& f7b, const Field& a0, const Field& b0);

struct ElsasserVariables {
    std::array<Field, 2> Wp, Wm;  // on the initial grid
};
// W+- = exp(-gamma t)(w_v +- w_b) evaluated at Y1 (for +) and Y2 (for -); w on the mesh S at time maps.t
ElsasserVariables elsasser_variables(const LagrangianMaps& maps, double gamma, const std::array<Field, 2>& wv,
                                     const std::array<Field, 2>& wb, const SurfaceState& S);
// inverse transform back to the grid of S: w_v = exp(gamma t)(W+ o Y1^-1 + W- o Y2^-1)/2, w_b alike with -
void elsasser_reconstruct(const LagrangianMaps& maps, double gamma, const ElsasserVariables& W, const SurfaceState& S,
                          std::array<Field, 2>& wv, std::array<Field, 2>& wb);

// ---- linearized vorticity forcing ----

// Data variables per point: w_v(2), w_b(2), tangential derivatives of v (6) and b (6), (p1, p2, J).
inline constexpr int forcing_vars = 19;

struct LinearizedForcing {
    // jac[r][k] = d F_r / d x_k at the midpoint of the two states, rows (F_v1, F_v2, F_b1, F_b2)
    std::array<std::array<Field, forcing_vars>, 4> jac;
    Field f7v, f7b;  // half traces of dF_v/dw_v and dF_v/dw_b
    // |dF_b/dw_v + dF_v/dw_b| + |dF_b/dw_b + dF_v/dw_v|, sup over points
    double symmetry_defect = 0.0;
};

LinearizedForcing linearize_forcing(const MhdState& st_eps, const MhdState& st_ideal);
// sup |F(eps) - F(0) - jac (x_eps - x_0)| over points and rows
double decomposition_residual(const LinearizedForcing& lin, const MhdState& st_eps, const MhdState& st_ideal);

}  // namespace fsmhd
