#include "fsmhd/vort_algebra.hpp"

#include "fsmhd/errors.hpp"
#include "fsmhd/ops.hpp"

#include <cmath>

namespace fsmhd {

namespace {

using std::pow;

constexpr double det_floor = 1e-8;

void check_det(const Eigen::ArrayXd& det, const char* what) {
    if (!(det.abs().minCoeff() >= det_floor)) fail(ErrorCode::DegenerateSystem, std::string(what) + ": |det| below 1e-8");
}

Eigen::ArrayXd div_h(const Tangential& T) { return T.d[0][0] + T.d[1][1]; }

struct BoundaryCoeffs {
    Eigen::Matrix2d M;
    Eigen::Matrix<double, 2, 6> R;
};

BoundaryCoeffs boundary_coeffs(double p1, double p2, double J) {
#include "boundary_coeffs.inc"
    BoundaryCoeffs c;
    c.M << M00, M01, M10, M11;
    c.R << R00, R01, R02, R03, R04, R05, R10, R11, R12, R13, R14, R15;
    return c;
}

Eigen::Matrix<double, 6, 1> tangential_at(const Tangential& T, Eigen::Index i) {
    Eigen::Matrix<double, 6, 1> t;
    t << T.d[0][0][i], T.d[0][1][i], T.d[1][0][i], T.d[1][1][i], T.d[2][0][i], T.d[2][1][i];
    return t;
}

// d(w1, w2)/d(u1, u2) with u3 substituted
Eigen::Matrix2d omega_matrix(double p1, double p2, double J) {
    Eigen::Matrix2d O;
    O << -p1 * p2 / J, -(1 + p2 * p2) / J, (1 + p1 * p1) / J, p1 * p2 / J;
    return O;
}

// grad^phi f pointwise from tangential data and dz f; G[i][j] = d_j f^i
Mat3F gradient_from(const Tangential& T, const Vec3& u, const Metric& m) {
    Mat3F G;
    for (int i = 0; i < 3; ++i) {
        G[i][0] = T.d[i][0] - m.p1 / m.J * u[i];
        G[i][1] = T.d[i][1] - m.p2 / m.J * u[i];
        G[i][2] = u[i] / m.J;
    }
    return G;
}

int eps3(int i, int j, int k) {
    if (i == j || j == k || i == k) return 0;
    return ((j - i + 3) % 3 == 1) ? 1 : -1;
}

}  // namespace

Tangential tangential_derivatives(const Vec3& f, const HalfSpaceGrid& g) {
    Tangential T;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) T.d[i][j] = dh(g, f[i], j);
    return T;
}

Tangential tangential_trace(const Vec3& f, const HalfSpaceGrid& g) {
    Tangential T;
    for (int i = 0; i < 3; ++i) {
        Eigen::ArrayXd t = top(g, f[i]);
        for (int j = 0; j < 2; ++j) T.d[i][j] = dh(g, t, j);
    }
    return T;
}

Metric volume_metric(const SurfaceState& S) { return {S.p1, S.p2, S.J}; }

Metric boundary_metric(const SurfaceState& S) {
    const HalfSpaceGrid& g = S.g();
    return {top(g, S.p1), top(g, S.p2), top(g, S.J)};
}

Eigen::ArrayXd normal_system_det(const Metric& m) { return -(1.0 + m.p1.square() + m.p2.square()) / m.J.square(); }

Vec3 normal_from_vorticity(const Eigen::ArrayXd& w1, const Eigen::ArrayXd& w2, const Tangential& T, const Metric& m) {
    const Eigen::Index n = w1.size();
    if (w2.size() != n || m.J.size() != n || T.d[0][0].size() != n)
        fail(ErrorCode::ShapeMismatch, "normal_from_vorticity: sizes");
    const Eigen::ArrayXd a = m.p1 * m.p2 / m.J, b = (1.0 + m.p2.square()) / m.J, c = (1.0 + m.p1.square()) / m.J;
    const Eigen::ArrayXd det = a * a - b * c;
    check_det(det, "normal_from_vorticity");
    const Eigen::ArrayXd dv = div_h(T);
    const Eigen::ArrayXd r1 = -w1 + T.d[2][1] + m.p2 * dv;
    const Eigen::ArrayXd r2 = w2 + T.d[2][0] + m.p1 * dv;
    Vec3 u;
    u[0] = (a * r1 - b * r2) / det;
    u[1] = (a * r2 - c * r1) / det;
    u[2] = m.p1 * u[0] + m.p2 * u[1] - m.J * dv;
    return u;
}

std::array<Eigen::ArrayXd, 2> vorticity_from_normal(const Eigen::ArrayXd& u1, const Eigen::ArrayXd& u2,
                                                    const Tangential& T, const Metric& m) {
    const Eigen::ArrayXd dv = div_h(T);
    const Eigen::ArrayXd a = m.p1 * m.p2 / m.J, b = (1.0 + m.p2.square()) / m.J, c = (1.0 + m.p1.square()) / m.J;
    return {Eigen::ArrayXd(T.d[2][1] + m.p2 * dv - a * u1 - b * u2),
            Eigen::ArrayXd(c * u1 + a * u2 - T.d[2][0] - m.p1 * dv)};
}

std::array<Eigen::ArrayXd, 2> boundary_normals_from_compat(const Tangential& T, const SurfaceState& S) {
    const Metric m = boundary_metric(S);
    const Eigen::Index n = m.J.size();
    if (T.d[0][0].size() != n) fail(ErrorCode::ShapeMismatch, "boundary_normals_from_compat: sizes");
    std::array<Eigen::ArrayXd, 2> u{Eigen::ArrayXd(n), Eigen::ArrayXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        BoundaryCoeffs c = boundary_coeffs(m.p1[i], m.p2[i], m.J[i]);
        if (std::abs(c.M.determinant()) < det_floor)
            fail(ErrorCode::DegenerateSystem, "boundary strain matrix: |det| below 1e-8");
        Eigen::Vector2d x = c.M.partialPivLu().solve(c.R * tangential_at(T, i));
        u[0][i] = x[0];
        u[1][i] = x[1];
    }
    return u;
}

std::array<Eigen::ArrayXd, 2> boundary_vorticity_trace(const Tangential& T, const SurfaceState& S) {
    auto u = boundary_normals_from_compat(T, S);
    return vorticity_from_normal(u[0], u[1], T, boundary_metric(S));
}

std::array<Eigen::ArrayXd, 3> strain_cross(const Vec3& f, const SurfaceState& S) {
    auto s = strain_trace(f, S);
    const auto& n = S.n;
    return {Eigen::ArrayXd(s[1] * n[2] - s[2] * n[1]), Eigen::ArrayXd(s[2] * n[0] - s[0] * n[2]),
            Eigen::ArrayXd(s[0] * n[1] - s[1] * n[0])};
}

BoundaryAlgebra discrepancy_algebra(const MhdState& st) {
    const SurfaceState& S = st.S;
    const HalfSpaceGrid& g = S.g();
    const Metric m = boundary_metric(S);
    const int nh = g.nh();
    BoundaryAlgebra r;
    for (auto& a : r.Mmat) a.resize(nh);
    for (auto& a : r.sigma) a.resize(nh);
    for (int ih = 0; ih < nh; ++ih) {
        BoundaryCoeffs c = boundary_coeffs(m.p1[ih], m.p2[ih], m.J[ih]);
        if (std::abs(c.M.determinant()) < det_floor)
            fail(ErrorCode::DegenerateSystem, "boundary strain matrix: |det| below 1e-8");
        const double J = m.J[ih], n1 = S.n[0][ih], n2 = S.n[1][ih], n3 = S.n[2][ih];
        // (e1, e2) = (-J (T2 + n2/n3 T3), J (T1 + n1/n3 T3)) as a map of Theta
        Eigen::Matrix<double, 2, 3> E;
        E << 0.0, -J, -J * n2 / n3, J, 0.0, J * n1 / n3;
        Eigen::Matrix<double, 2, 3> s = omega_matrix(m.p1[ih], m.p2[ih], J) * c.M.inverse() * E;
        for (int k = 0; k < 3; ++k) {
            r.sigma[k][ih] = s(0, k);
            r.sigma[3 + k][ih] = s(1, k);
        }
        r.Mmat[0][ih] = c.M(0, 0);
        r.Mmat[1][ih] = c.M(0, 1);
        r.Mmat[2][ih] = c.M(1, 0);
        r.Mmat[3][ih] = c.M(1, 1);
    }
    r.theta_v = strain_cross(st.v, S);
    r.theta_b = strain_cross(st.b, S);
    r.Fv = boundary_vorticity_trace(tangential_trace(st.v, g), S);
    r.Fb = boundary_vorticity_trace(tangential_trace(st.b, g), S);
    auto jump = [&](const std::array<Eigen::ArrayXd, 3>& th) {
        std::array<Eigen::ArrayXd, 2> j;
        for (int row = 0; row < 2; ++row)
            j[row] = r.sigma[3 * row] * th[0] + r.sigma[3 * row + 1] * th[1] + r.sigma[3 * row + 2] * th[2];
        return j;
    };
    r.jump_v = jump(r.theta_v);
    r.jump_b = jump(r.theta_b);
    return r;
}

VorticityForcing vorticity_rhs(const MhdState& st) {
    const SurfaceState& S = st.S;
    Vec3 wv = vorticity(st.v, S), wb = vorticity(st.b, S);
    Vec3 sv = convective(wv, st.v, S), sb = convective(wb, st.b, S);
    // [curl, a.grad] f = curl(a.grad f) - a.grad curl f
    auto comm = [&](const Vec3& a, const Vec3& f, const Vec3& wf) {
        Vec3 x = vorticity(convective(a, f, S), S);
        Vec3 y = convective(a, wf, S);
        for (int i = 0; i < 3; ++i) x[i] -= y[i];
        return x;
    };
    Vec3 c1 = comm(st.b, st.v, wv), c2 = comm(st.v, st.b, wb);
    VorticityForcing r;
    for (int i = 0; i < 2; ++i) {
        r.Fv[i] = sv[i] - sb[i];
        r.Fb[i] = c1[i] - c2[i];
    }
    return r;
}

VorticityForcing vorticity_rhs_reduced(const MhdState& st) {
    const SurfaceState& S = st.S;
    const HalfSpaceGrid& g = S.g();
    Vec3 wv = vorticity(st.v, S), wb = vorticity(st.b, S);
    return forcing_from_data({wv[0], wv[1]}, {wb[0], wb[1]}, tangential_derivatives(st.v, g),
                             tangential_derivatives(st.b, g), volume_metric(S));
}

VorticityForcing forcing_from_data(const std::array<Eigen::ArrayXd, 2>& wv_in, const std::array<Eigen::ArrayXd, 2>& wb_in,
                                   const Tangential& Tv, const Tangential& Tb, const Metric& m) {
    Mat3F Gv = gradient_from(Tv, normal_from_vorticity(wv_in[0], wv_in[1], Tv, m), m);
    Mat3F Gb = gradient_from(Tb, normal_from_vorticity(wb_in[0], wb_in[1], Tb, m), m);
    auto curl_of = [](const Mat3F& G) {
        return Vec3{G[2][1] - G[1][2], G[0][2] - G[2][0], G[1][0] - G[0][1]};
    };
    Vec3 wv = curl_of(Gv), wb = curl_of(Gb);
    const Eigen::Index N = m.J.size();
    VorticityForcing r;
    for (int i = 0; i < 2; ++i) {
        Field fv = Field::Zero(N), fb = Field::Zero(N);
        for (int j = 0; j < 3; ++j) fv += wv[j] * Gv[i][j] - wb[j] * Gb[i][j];
        // eps_ijk (d_j b_l d_l v_k - d_j v_l d_l b_k)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                int e = eps3(i, j, k);
                if (!e) continue;
                for (int l = 0; l < 3; ++l) fb += e * (Gb[l][j] * Gv[k][l] - Gv[l][j] * Gb[k][l]);
            }
        r.Fv[i] = fv;
        r.Fb[i] = fb;
    }
    return r;
}

}  // namespace fsmhd
