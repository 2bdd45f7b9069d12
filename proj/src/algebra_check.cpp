#include "fsmhd/algebra_check.hpp"

#include "fsmhd/ops.hpp"
#include "fsmhd/phi_ops.hpp"
#include "fsmhd/vort_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace fsmhd {

namespace {

double sup(const Eigen::ArrayXd& a) { return a.size() ? a.abs().maxCoeff() : 0.0; }

Field sample(const HalfSpaceGrid& g, const std::function<double(double, double, double)>& f) {
    Field out(g.size());
    for (int iz = 0; iz < g.Nz(); ++iz)
        for (int ih = 0; ih < g.nh(); ++ih)
            out[Eigen::Index(iz) * g.nh() + ih] = f(g.y_of(ih, 0), g.d_h() == 2 ? g.y_of(ih, 1) : 0.0, g.z_nodes()[iz]);
    return out;
}

// a few low modes with random coefficients, decaying away from the surface
Vec3 random_field(const HalfSpaceGrid& g, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Vec3 f;
    for (auto& c : f) {
        double a[6];
        for (double& x : a) x = nd(rng);
        c = sample(g, [&](double y1, double y2, double z) {
            return a[0] * std::sin(y1 + a[1]) * std::exp(0.5 * z) + a[2] * std::cos(2 * y1 + y2 + a[3]) * z * std::exp(0.25 * z) +
                   a[4] * std::sin(y2 + z + a[5]) * std::exp(z);
        });
    }
    return f;
}

// |Pi S n x n| at one boundary point from the tangential data and dz f
double strain_cross_point(const Tangential& T, double u1, double u2, const Metric& m, int i) {
    const double p1 = m.p1[i], p2 = m.p2[i], J = m.J[i];
    const double u[3] = {u1, u2, p1 * u1 + p2 * u2 - J * (T.d[0][0][i] + T.d[1][1][i])};
    Eigen::Matrix3d G;
    for (int r = 0; r < 3; ++r) {
        G(r, 0) = T.d[r][0][i] - p1 / J * u[r];
        G(r, 1) = T.d[r][1][i] - p2 / J * u[r];
        G(r, 2) = u[r] / J;
    }
    const Eigen::Matrix3d E = 0.5 * (G + G.transpose());
    const Eigen::Vector3d n = Eigen::Vector3d(-p1, -p2, 1.0).normalized();
    return (E * n).cross(n).cwiseAbs().maxCoeff();
}

}  // namespace

AlgebraCheck check_algebra(const GridPtr& g, const Eigen::ArrayXd& h, const AlgebraCheckOptions& opt) {
    const SurfaceState S = build_extension(g, h, 1.0);
    const SurfaceState F = build_extension(g, Eigen::ArrayXd::Zero(g->nh()), 1.0);
    std::mt19937_64 rng(opt.seed);
    AlgebraCheck out;
    out.states = opt.states;
    out.grad_h_sup = sup(dh(*g, h, 0));
    if (g->d_h() == 2) out.grad_h_sup = std::max(out.grad_h_sup, sup(dh(*g, h, 1)));

    const Metric mv = volume_metric(S), mb = boundary_metric(S);
    for (int s = 0; s < opt.states; ++s) {
        const Vec3 f = random_field(*g, rng);
        const Vec3 w = vorticity(f, S);
        const Tangential T = tangential_derivatives(f, *g);
        const Vec3 u = normal_from_vorticity(w[0], w[1], T, mv);
        const auto w2 = vorticity_from_normal(u[0], u[1], T, mv);
        const double scale = std::max({sup(w[0]), sup(w[1]), 1e-300});
        out.roundtrip = std::max(out.roundtrip, std::max(sup(w2[0] - w[0]), sup(w2[1] - w[1])) / scale);

        const Tangential Tb = tangential_trace(f, *g);
        const auto ub = boundary_normals_from_compat(Tb, S);
        for (int i = 0; i < g->nh(); ++i)
            out.compat = std::max(out.compat, strain_cross_point(Tb, ub[0][i], ub[1][i], mb, i));
        const auto Ff = boundary_vorticity_trace(Tb, F);
        out.flat_trace = std::max(out.flat_trace, sup(Ff[0] - 2.0 * Tb.d[2][1]) + sup(Ff[1] + 2.0 * Tb.d[2][0]));
    }

    // the determinant read off the linear map dz f -> (-w1, w2) at every point
    {
        Tangential Z;
        for (auto& r : Z.d)
            for (auto& c : r) c = Eigen::ArrayXd::Zero(g->size());
        const Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(g->size()), one = Eigen::ArrayXd::Ones(g->size());
        const auto c1 = vorticity_from_normal(one, zero, Z, mv), c2 = vorticity_from_normal(zero, one, Z, mv);
        const Eigen::ArrayXd probed = -c1[0] * c2[1] + c2[0] * c1[1];
        const Eigen::ArrayXd closed = -(1.0 + S.p1.square() + S.p2.square()) / S.J.square();
        out.det = std::max(sup(probed - closed), sup(normal_system_det(mv) - closed));
    }

    for (int s = 0; s < opt.operator_fields; ++s) {
        const double a = 0.5 + 0.1 * s, k = 1 + s % 3;
        const Field q = sample(*g, [&](double y, double y2, double z) {
            return std::sin(k * y + a) * std::exp(a * z) + z * z * std::cos(y + y2);
        });
        const Vec3 cg = curl_phi(grad_phi(q, S), S);
        for (const auto& c : cg) out.curl_grad = std::max(out.curl_grad, sup(c));
        const Vec3 f{sample(*g, [&](double y, double, double z) { return std::cos(y + a) * std::exp(z); }),
                     sample(*g, [&](double y, double y2, double z) { return std::sin(k * y + y2) * std::exp(a * z); }),
                     sample(*g, [&](double y, double, double z) { return std::cos(2 * y) * z * z; })};
        out.div_curl = std::max(out.div_curl, sup(div_phi(curl_phi(f, S), S)));
    }

    const Field f = sample(*g, [](double y1, double y2, double z) { return std::sin(y1) * std::cos(2 * y2) * std::exp(z); });
    double red = std::max({sup(dphi(1, f, F) - dh(*g, f, 0)), sup(dphi(3, f, F) - dz(*g, f))});
    if (g->d_h() == 2) red = std::max(red, sup(dphi(2, f, F) - dh(*g, f, 1)));
    Field lap = dhh(*g, f, 0, 0) + dzz(*g, f);
    if (g->d_h() == 2) lap += dhh(*g, f, 1, 1);
    out.flat_reduction = std::max(red, sup(lap_phi(f, F) - lap));
    return out;
}

}  // namespace fsmhd
