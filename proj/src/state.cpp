#include "fsmhd/state.hpp"

#include "fsmhd/errors.hpp"
#include "fsmhd/krylov.hpp"
#include "fsmhd/modal.hpp"
#include "fsmhd/ops.hpp"

#include <cmath>

namespace fsmhd {

MhdState rest_state(const GridPtr& grid, const Eigen::ArrayXd& h, double A) {
    MhdState st;
    st.S = build_extension(grid, h, A);
    st.v = zeros3(grid->size());
    st.b = zeros3(grid->size());
    st.q = Field::Zero(grid->size());
    return st;
}

Vec3 vorticity(const Vec3& f, const SurfaceState& S) {
    const HalfSpaceGrid& g = S.g();
    Vec3 fz{dz(g, f[0]), dz(g, f[1]), dz(g, f[2])};
    auto d1 = [&](int i) { return Field(dh(g, f[i], 0)); };
    auto d2 = [&](int i) { return g.d_h() == 2 ? Field(dh(g, f[i], 1)) : Field(Field::Zero(g.size())); };
    Vec3 w;
    w[0] = d2(2) - S.a2 * fz[2] - fz[1] / S.J;
    w[1] = fz[0] / S.J - d1(2) + S.a1 * fz[2];
    w[2] = d1(1) - S.a1 * fz[1] - d2(0) + S.a2 * fz[0];
    return w;
}

std::array<Eigen::ArrayXd, 3> strain_trace(const Vec3& f, const SurfaceState& S) {
    const HalfSpaceGrid& g = S.g();
    const int nh = g.nh();
    Mat3F E = strain_phi(f, S);
    std::array<Eigen::ArrayXd, 3> out;
    for (auto& o : out) o = Eigen::ArrayXd::Zero(nh);
    std::array<Eigen::ArrayXd, 3> Et[3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Et[i][j] = top(g, E[i][j]);
    for (int ih = 0; ih < nh; ++ih) {
        Eigen::Vector3d n(S.n[0][ih], S.n[1][ih], S.n[2][ih]);
        Eigen::Matrix3d M;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) M(i, j) = Et[i][j][ih];
        Eigen::Vector3d s = S.Pi(ih) * (M * n);
        for (int i = 0; i < 3; ++i) out[i][ih] = s[i];
    }
    return out;
}

StrainTraces boundary_strain_trace(const MhdState& st) {
    StrainTraces r;
    r.v = strain_trace(st.v, st.S);
    r.b = strain_trace(st.b, st.S);
    for (int i = 0; i < 3; ++i) {
        r.v_sup = std::max(r.v_sup, r.v[i].abs().maxCoeff());
        r.b_sup = std::max(r.b_sup, r.b[i].abs().maxCoeff());
    }
    return r;
}

double divergence_norm(const Vec3& f, const SurfaceState& S) { return l2(S.g(), div_phi(f, S)); }

namespace {

Field row_mask(const HalfSpaceGrid& g, ProjectionKind kind) {
    Field m = Field::Ones(g.size());
    m.head(g.nh()).setZero();
    if (kind == ProjectionKind::Magnetic) m.tail(g.nh()).setZero();
    return m;
}

Eigen::VectorXd mask_profile(const HalfSpaceGrid& g, ProjectionKind kind) {
    Eigen::VectorXd m = Eigen::VectorXd::Ones(g.Nz());
    m[0] = 0.0;
    if (kind == ProjectionKind::Magnetic) m[g.Nz() - 1] = 0.0;
    return m;
}

}  // namespace

Vec3 div_phi_adjoint(const Field& lam, const SurfaceState& S) {
    const HalfSpaceGrid& g = S.g();
    const Field mu = lam / S.J;
    const Field dmu = apply_z(g, g.D1().transpose(), mu);
    Vec3 out;
    out[0] = -S.J * dh(g, mu, 0) - S.p1 * dmu;
    out[1] = -S.p2 * dmu;
    if (g.d_h() == 2) out[1] -= S.J * dh(g, mu, 1);
    out[2] = dmu;
    return out;
}

namespace {

// masked grad^phi psi with psi = 0 on z = 0, fitted to the divergence on all rows but the top
Vec3 remove_gradient(const Vec3& f, const SurfaceState& S, ProjectionKind kind, int* iters) {
    const HalfSpaceGrid& g = S.g();
    const Eigen::Index N = g.size();
    const int nh = g.nh();
    const Field m = row_mask(g, kind);
    const Eigen::VectorXd mz = mask_profile(g, kind);
    const double A = S.A;
    auto pre = cached_modal(kind == ProjectionKind::Velocity ? "grad-v" : "grad-b", S.grid, A,
                            [&g, mz, A](double k1, double k2) {
                                const Eigen::MatrixXd& D = g.D1();
                                const int n = g.Nz();
                                Eigen::MatrixXd B = D * mz.asDiagonal() * D / (A * A);
                                B.diagonal() -= (k1 * k1 + k2 * k2) * mz;
                                B.row(n - 1).setZero();
                                B(n - 1, n - 1) = 1.0;
                                return B;
                            },
                            true);
    auto grad = [&](const Field& psi) {
        Vec3 c = grad_phi(psi, S);
        for (auto& ci : c) ci *= m;
        return c;
    };
    auto K = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Field psi = x.array();
        Field r = div_phi(grad(psi), S);
        r.tail(nh) = psi.tail(nh);
        return r.matrix();
    };
    auto M = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return pre->solve(x.array()).matrix(); };
    Field d = div_phi(f, S);
    d.tail(nh).setZero();
    Eigen::VectorXd rhs = d.matrix();
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(N);
    if (rhs.norm() == 0.0) return f;
    KrylovResult kr = gmres(K, M, rhs, psi, 1e-12, 200, 60, 1e-14 * std::sqrt(double(N)));
    if (iters) *iters = kr.iterations;
    Vec3 c = grad(psi.array());
    Vec3 out;
    for (int i = 0; i < 3; ++i) out[i] = f[i] - c[i];
    return out;
}

}  // namespace

Vec3 project_div_free(const Vec3& f_in, const SurfaceState& S, ProjectionKind kind, ProjectionStats* stats) {
    const HalfSpaceGrid& g = S.g();
    const Eigen::Index N = g.size();
    for (const auto& c : f_in)
        if (c.size() != N) fail(ErrorCode::ShapeMismatch, "project_div_free: field size");
    int it0 = 0;
    const Vec3 f = remove_gradient(f_in, S, kind, &it0);
    // the top-row residual left by the gradient step is removed by the orthogonal
    // projection: correction = mask * W^{-1} D^T lam, W the J-weighted quadrature
    const Field sw = row_mask(g, kind) / (S.J * broadcast_z(g, g.wz()));
    const Eigen::VectorXd mz = mask_profile(g, kind).cwiseQuotient(g.wz().matrix());
    const double A = S.A;
    auto pre = cached_modal(kind == ProjectionKind::Velocity ? "proj-v" : "proj-b", S.grid, A,
                            [&g, mz, A](double k1, double k2) {
                                const Eigen::MatrixXd& D = g.D1();
                                Eigen::MatrixXd B = D * mz.asDiagonal() * D.transpose() / (A * A * A);
                                // the Nyquist block keeps its k^2 term so that it stays invertible
                                B.diagonal() += (k1 * k1 + k2 * k2) * mz / A;
                                return B;
                            },
                            true);
    auto K = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Vec3 c = div_phi_adjoint(x.array(), S);
        for (auto& ci : c) ci *= sw;
        return div_phi(c, S).matrix();
    };
    auto M = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return pre->solve(x.array()).matrix(); };
    Eigen::VectorXd rhs = div_phi(f, S).matrix();
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(N);
    const double atol = 1e-14 * std::sqrt(double(N));
    KrylovResult kr = gmres(K, M, rhs, lam, 1e-13, 500, 60, atol);
    double rnorm = kr.rel_residual * rhs.norm();
    if (!kr.converged && kr.rel_residual > 1e-10 && rnorm > 1e-12 * std::sqrt(double(N)))
        fail(ErrorCode::EllipticSolveFailure, "projection solve stalled at relative residual " +
                                                  std::to_string(kr.rel_residual));
    Vec3 c = div_phi_adjoint(lam.array(), S);
    Vec3 out;
    for (int i = 0; i < 3; ++i) out[i] = f[i] - sw * c[i];
    if (stats) {
        stats->iterations = it0 + kr.iterations;
        stats->rel_residual = kr.rel_residual;
        stats->divergence = divergence_norm(out, S);
    }
    return out;
}

double taylor_sign_margin(const MhdState& st) {
    const HalfSpaceGrid& g = st.grid();
    Eigen::ArrayXd qz = top(g, dz(g, st.q)) / top(g, st.S.J);
    return (st.g - qz).minCoeff();
}

}  // namespace fsmhd
