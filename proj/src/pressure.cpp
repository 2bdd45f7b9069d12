#include "fsmhd/pressure.hpp"

#include "fsmhd/errors.hpp"
#include "fsmhd/krylov.hpp"
#include "fsmhd/modal.hpp"
#include "fsmhd/ops.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace fsmhd {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::VectorXd level_means(const HalfSpaceGrid& g, const Field& f) {
    Eigen::Map<const RowMat> F(f.data(), g.Nz(), g.nh());
    return F.rowwise().mean();
}

Eigen::MatrixXd flat_block(const HalfSpaceGrid& g, double A, double k1, double k2, bool neumann) {
    const int n = g.Nz();
    Eigen::MatrixXd B = g.D2() / (A * A);
    B.diagonal().array() -= k1 * k1 + k2 * k2;
    B.row(0) = g.D1().row(0);
    if (neumann) {
        B.row(n - 1) = g.D1().row(n - 1) / A;
        // the mean mode is singular here; the bordered solve replaces it
        if (k1 == 0.0 && k2 == 0.0) B.row(0).setZero(), B(0, 0) = 1.0;
    } else {
        B.row(n - 1).setZero();
        B(n - 1, n - 1) = 1.0;
    }
    return B;
}

void check_finite(const Field& f, const char* what) {
    if (!f.allFinite()) fail(ErrorCode::NonSmoothInput, std::string(what) + " contains non-finite values");
}

// flux of q through z = 0: grad^phi q . N
Eigen::ArrayXd top_flux_of(const SurfaceState& S, const Field& q, const Field& qz) {
    const HalfSpaceGrid& g = S.g();
    Eigen::ArrayXd p1 = top(g, S.p1), p2 = top(g, S.p2), J = top(g, S.J);
    Eigen::ArrayXd qt = top(g, q);
    Eigen::ArrayXd out = (1.0 + p1.square() + p2.square()) / J * top(g, qz) - p1 * dh(g, qt, 0);
    if (g.d_h() == 2) out -= p2 * dh(g, qt, 1);
    return out;
}

void check_coefficients(const SurfaceState& S) {
    if (!(S.J.minCoeff() > 0.0)) fail(ErrorCode::DiffeomorphismViolation, "elliptic coefficient not positive definite");
}

}  // namespace

Eigen::Matrix3d coefficient_matrix(const SurfaceState& S, Eigen::Index i) {
    const double J = S.J[i], p1 = S.p1[i], p2 = S.p2[i];
    Eigen::Matrix3d E;
    E << J, 0.0, -p1, 0.0, J, -p2, -p1, -p2, (1.0 + p1 * p1 + p2 * p2) / J;
    return E;
}

double coefficient_min_eigenvalue(const SurfaceState& S) {
    double lo = INFINITY;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
    for (Eigen::Index i = 0; i < S.J.size(); ++i) {
        es.compute(coefficient_matrix(S, i), Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues()[0]);
    }
    return lo;
}

double energy_form(const SurfaceState& S, const Field& u, const Field& w) {
    const HalfSpaceGrid& g = S.g();
    Vec3 gu{dh(g, u, 0), dh(g, u, 1), dz(g, u)};
    Vec3 gw{dh(g, w, 0), dh(g, w, 1), dz(g, w)};
    Field dens = Field::Zero(g.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        Eigen::Vector3d a(gu[0][i], gu[1][i], gu[2][i]), b(gw[0][i], gw[1][i], gw[2][i]);
        dens[i] = b.dot(coefficient_matrix(S, i) * a);
    }
    return integrate(g, dens);
}

Field solve_dirichlet(const SurfaceState& S, const Field& rhs, const Eigen::ArrayXd& top_values,
                      const EllipticOptions& opt, EllipticStats* stats) {
    const HalfSpaceGrid& g = S.g();
    const Eigen::Index N = g.size();
    const int nh = g.nh();
    if (rhs.size() != N || top_values.size() != nh) fail(ErrorCode::ShapeMismatch, "solve_dirichlet: sizes");
    check_finite(rhs, "pressure source");
    check_finite(top_values, "pressure boundary data");
    check_coefficients(S);
    const double A = S.A;
    auto pre = cached_modal("dirichlet", S.grid, A, [&g, A](double k1, double k2) {
        return flat_block(g, A, k1, k2, false);
    });
    auto op = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Field q = x.array();
        Field r = lap_phi(q, S);
        r.head(nh) = dz(g, q).head(nh);
        r.tail(nh) = q.tail(nh);
        return r.matrix();
    };
    auto M = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return pre->solve(x.array()).matrix(); };
    Eigen::VectorXd b = rhs.matrix();
    b.head(nh).setZero();
    b.tail(nh) = top_values.matrix();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(N);
    KrylovResult kr = gmres(op, M, b, x, opt.tol, opt.max_iter, 50, 1e-300);
    if (!kr.converged)
        fail(ErrorCode::EllipticSolveFailure,
             "Dirichlet pressure solve: relative residual " + std::to_string(kr.rel_residual));
    if (stats) {
        stats->iterations = kr.iterations;
        stats->rel_residual = kr.rel_residual;
    }
    return x.array();
}

Field solve_neumann(const SurfaceState& S, const Field& rhs, const Eigen::ArrayXd& top_flux,
                    const EllipticOptions& opt, EllipticStats* stats, const Field* guess) {
    const HalfSpaceGrid& g = S.g();
    const Eigen::Index N = g.size();
    const int nh = g.nh(), Nz = g.Nz();
    if (rhs.size() != N || top_flux.size() != nh) fail(ErrorCode::ShapeMismatch, "solve_neumann: sizes");
    check_finite(rhs, "pressure source");
    check_finite(top_flux, "pressure boundary flux");
    check_coefficients(S);
    const double A = S.A;
    auto pre = cached_modal("neumann", S.grid, A, [&g, A](double k1, double k2) {
        return flat_block(g, A, k1, k2, true);
    });
    // bordered flat mean-mode system [B0 e_top; e_top^T 0]
    Eigen::MatrixXd B0 = Eigen::MatrixXd::Zero(Nz + 1, Nz + 1);
    {
        Eigen::MatrixXd b = g.D2() / (A * A);
        b.row(0) = g.D1().row(0);
        b.row(Nz - 1) = g.D1().row(Nz - 1) / A;
        B0.topLeftCorner(Nz, Nz) = b;
        B0(Nz - 1, Nz) = 1.0;
        B0(Nz, Nz - 1) = 1.0;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu0(B0);

    auto op = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Field q = x.head(N).array();
        const double lam = x[N];
        Field qz = dz(g, q);
        Field r = lap_phi(q, S);
        r.head(nh) = qz.head(nh);
        r.tail(nh) = top_flux_of(S, q, qz) + lam;
        Eigen::VectorXd out(N + 1);
        out.head(N) = r.matrix();
        out[N] = q.tail(nh).mean();
        return out;
    };
    auto M = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Field r = x.head(N).array();
        Field q = pre->solve(r);
        Eigen::VectorXd rm(Nz + 1);
        rm.head(Nz) = level_means(g, r);
        rm[Nz] = x[N];
        Eigen::VectorXd m = lu0.solve(rm);
        Eigen::VectorXd qm = level_means(g, q);
        q += broadcast_z(g, (m.head(Nz) - qm).array());
        Eigen::VectorXd out(N + 1);
        out.head(N) = q.matrix();
        out[N] = m[Nz];
        return out;
    };
    Eigen::VectorXd b(N + 1);
    {
        Field r = rhs;
        r.head(nh).setZero();
        r.tail(nh) = top_flux;
        b.head(N) = r.matrix();
        b[N] = 0.0;
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(N + 1);
    if (guess) {
        if (guess->size() != N) fail(ErrorCode::ShapeMismatch, "solve_neumann: guess size");
        x.head(N) = guess->matrix();
    }
    KrylovResult kr = gmres(op, M, b, x, opt.tol, opt.max_iter, 50, 1e-300);
    if (!kr.converged)
        fail(ErrorCode::EllipticSolveFailure,
             "Neumann pressure solve: relative residual " + std::to_string(kr.rel_residual));
    const double scale = top_flux.abs().maxCoeff() + g.L() * rhs.abs().maxCoeff();
    const double lam = scale > 0.0 ? std::abs(x[N]) / scale : std::abs(x[N]);
    if (stats) {
        stats->iterations = kr.iterations;
        stats->rel_residual = kr.rel_residual;
        stats->lambda = lam;
    }
    if (lam > opt.solvability_tol)
        fail(ErrorCode::SolvabilityViolation,
             "Neumann data incompatible with the source (flux shift " + std::to_string(lam) + ")");
    return x.head(N).array();
}

Vec3 momentum_transport(const MhdState& st, const Vec3* force) {
    Vec3 a = convective(st.v, st.v, st.S);
    Vec3 c = convective(st.b, st.b, st.S);
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        out[i] = c[i] - a[i];
        if (force) out[i] += (*force)[i];
    }
    return out;
}

Field pressure_source(const MhdState& st, const Vec3* force) {
    return div_phi(momentum_transport(st, force), st.S);
}

Eigen::ArrayXd dynamic_pressure_data(const MhdState& st) {
    const HalfSpaceGrid& g = st.grid();
    Eigen::ArrayXd out = st.g * st.S.h;
    if (st.sigma != 0.0) out -= st.sigma * mean_curvature(g, st.S.h);
    if (st.eps != 0.0) {
        Mat3F E = strain_phi(st.v, st.S);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out += 2.0 * st.eps * st.S.n[i] * top(g, E[i][j]) * st.S.n[j];
    }
    return out;
}

Field solve_pressure_dirichlet(const MhdState& st, const EllipticOptions& opt, EllipticStats* stats,
                               const Vec3* force) {
    return solve_dirichlet(st.S, pressure_source(st, force), dynamic_pressure_data(st), opt, stats);
}

Field solve_pressure_neumann(const MhdState& st, const Vec3& vt, const EllipticOptions& opt, EllipticStats* stats,
                             const Vec3* force) {
    const HalfSpaceGrid& g = st.grid();
    const SurfaceState& S = st.S;
    Vec3 m = momentum_transport(st, force);
    Eigen::ArrayXd flux = Eigen::ArrayXd::Zero(g.nh());
    for (int i = 0; i < 3; ++i) {
        Field acc = m[i] - dphi_t(vt[i], st.v[i], S);
        if (st.eps != 0.0) acc += st.eps * lap_phi(st.v[i], S);
        flux += top(g, acc) * S.N[i];
    }
    return solve_neumann(S, div_phi(m, S), flux, opt, stats);
}

}  // namespace fsmhd
