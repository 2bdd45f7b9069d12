#include "fsmhd/surface.hpp"

#include "fsmhd/errors.hpp"
#include "fsmhd/ops.hpp"

#include <cmath>

namespace fsmhd {

std::array<double, 3> chi(double s) {
    double a = std::abs(s);
    if (a <= 1.0) return {1.0, 0.0, 0.0};
    if (a >= 2.0) return {0.0, 0.0, 0.0};
    double t = a - 1.0, u = 1.0 - t;
    // chi = 1 / (1 + r), r = exp(1/u - 1/t)
    double lr = 1.0 / u - 1.0 / t;
    if (lr > 700.0) return {0.0, 0.0, 0.0};
    if (lr < -700.0) return {1.0, 0.0, 0.0};
    double r = std::exp(lr);
    double q = 1.0 / (t * t) + 1.0 / (u * u);
    double dq = -2.0 / (t * t * t) + 2.0 / (u * u * u);
    double opr = 1.0 + r;
    double c0 = 1.0 / opr;
    double c1 = -r * q / (opr * opr);
    double c2 = -((r * q * q + r * dq) * opr - 2.0 * r * r * q * q) / (opr * opr * opr);
    double sg = s < 0 ? -1.0 : 1.0;
    return {c0, sg * c1, c2};
}

namespace {

enum class Hd { None, D1, D2, D11, D22 };

// inverse transform of chi^{(zorder)}(z|xi|) |xi|^zorder (i k)^... * shat on every level
Field modal(const HalfSpaceGrid& g, const CField& shat, int zorder, Hd hd) {
    const int nhc = g.nhc(), Nz = g.Nz();
    CField c(Eigen::Index(nhc) * Nz);
    const auto& z = g.z_nodes();
    for (int iz = 0; iz < Nz; ++iz) {
        for (int m = 0; m < nhc; ++m) {
            double kk = g.kabs()[m];
            double w = chi(z[iz] * kk)[zorder] * std::pow(kk, zorder);
            if (zorder > 0 && kk == 0.0) w = 0.0;
            std::complex<double> mult = w;
            switch (hd) {
                case Hd::None: break;
                case Hd::D1:
                    mult *= g.nyquist(m, 0) ? 0.0 : std::complex<double>(0, g.k(0)[m]);
                    break;
                case Hd::D2:
                    mult *= (g.d_h() < 2 || g.nyquist(m, 1)) ? 0.0 : std::complex<double>(0, g.k(1)[m]);
                    break;
                case Hd::D11: mult *= -g.k(0)[m] * g.k(0)[m]; break;
                case Hd::D22: mult *= g.d_h() < 2 ? 0.0 : -g.k(1)[m] * g.k(1)[m]; break;
            }
            c[Eigen::Index(iz) * nhc + m] = mult * shat[m];
        }
    }
    return g.ifft(c);
}

void fill_metric(SurfaceState& S, const CField& hhat) {
    const HalfSpaceGrid& g = S.g();
    Field dz_eta = modal(g, hhat, 1, Hd::None);
    Field dzz_eta = modal(g, hhat, 2, Hd::None);
    Field d1z = modal(g, hhat, 1, Hd::D1);
    Field d2z = modal(g, hhat, 1, Hd::D2);
    Field d11 = modal(g, hhat, 0, Hd::D11);
    Field d22 = modal(g, hhat, 0, Hd::D22);
    S.J = S.A + dz_eta;
    S.a1 = S.p1 / S.J;
    S.a2 = S.p2 / S.J;
    Field P = 1.0 + S.p1.square() + S.p2.square();
    S.G = P / S.J.square();
    Field dz_GJ = 2.0 * (S.p1 * d1z + S.p2 * d2z) / S.J - P * dzz_eta / S.J.square();
    S.cL = (dz_GJ - d11 - d22) / S.J;
}

}  // namespace

Field extend(const HalfSpaceGrid& g, const Eigen::ArrayXd& s) { return modal(g, g.fft(s), 0, Hd::None); }

SurfaceState build_extension(const GridPtr& grid, const Eigen::ArrayXd& h, double A, const Eigen::ArrayXd* ht) {
    const HalfSpaceGrid& g = *grid;
    if (h.size() != g.nh()) fail(ErrorCode::ShapeMismatch, "surface field has wrong size");
    if (!h.allFinite()) fail(ErrorCode::NonSmoothInput, "surface height contains non-finite values");
    SurfaceState S;
    S.grid = grid;
    S.h = h;
    S.ht = ht ? *ht : Eigen::ArrayXd::Zero(g.nh());
    CField hhat = g.fft(h);
    S.eta = modal(g, hhat, 0, Hd::None);
    S.p1 = modal(g, hhat, 0, Hd::D1);
    S.p2 = g.d_h() == 2 ? modal(g, hhat, 0, Hd::D2) : Field::Zero(g.size());
    Field dz_eta = modal(g, hhat, 1, Hd::None);
    const double mindz = dz_eta.minCoeff();
    if (A <= 0.0) {
        double a = 1.0;
        while (a + mindz < 0.5) {
            a *= 2.0;
            if (a > 64.0) fail(ErrorCode::DiffeomorphismViolation, "no stretch A <= 64 gives dz phi >= 1/2");
        }
        S.A = a;
    } else {
        S.A = A;
        if (A + mindz < 0.1) fail(ErrorCode::DiffeomorphismViolation, "dz phi drops below 0.1");
    }
    fill_metric(S, hhat);
    S.phit = ht ? extend(g, *ht) : Field::Zero(g.size());
    Eigen::ArrayXd t1 = top(g, S.p1), t2 = top(g, S.p2);
    Eigen::ArrayXd nn = (1.0 + t1.square() + t2.square()).sqrt();
    S.N = {-t1, -t2, Eigen::ArrayXd::Ones(g.nh())};
    S.n = {-t1 / nn, -t2 / nn, 1.0 / nn};
    return S;
}

void set_surface_velocity(SurfaceState& S, const Eigen::ArrayXd& ht) {
    S.ht = ht;
    S.phit = extend(S.g(), ht);
}

Eigen::Matrix3d SurfaceState::Pi(int ih) const {
    Eigen::Vector3d v(n[0][ih], n[1][ih], n[2][ih]);
    return Eigen::Matrix3d::Identity() - v * v.transpose();
}

Eigen::ArrayXd mean_curvature(const HalfSpaceGrid& g, const Eigen::ArrayXd& h) {
    Eigen::ArrayXd h1 = dh(g, h, 0), h2 = dh(g, h, 1);
    Eigen::ArrayXd w = (1.0 + h1.square() + h2.square()).sqrt();
    return dh(g, h1 / w, 0) + dh(g, h2 / w, 1);
}

}  // namespace fsmhd
