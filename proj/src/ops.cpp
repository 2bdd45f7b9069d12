#include "fsmhd/ops.hpp"

#include "fsmhd/errors.hpp"

namespace fsmhd {

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

Eigen::ArrayXd dh(const HalfSpaceGrid& g, const Eigen::ArrayXd& f, int axis) {
    if (axis >= g.d_h()) return Eigen::ArrayXd::Zero(f.size());
    CField c = g.fft(f);
    const int nhc = g.nhc();
    const int levels = int(c.size() / nhc);
    const auto& k = g.k(axis);
    for (int m = 0; m < nhc; ++m) {
        std::complex<double> mult = g.nyquist(m, axis) ? 0.0 : std::complex<double>(0.0, k[m]);
        for (int l = 0; l < levels; ++l) c[Eigen::Index(l) * nhc + m] *= mult;
    }
    return g.ifft(c);
}

Eigen::ArrayXd dhh(const HalfSpaceGrid& g, const Eigen::ArrayXd& f, int a1, int a2) {
    if (a1 >= g.d_h() || a2 >= g.d_h()) return Eigen::ArrayXd::Zero(f.size());
    CField c = g.fft(f);
    const int nhc = g.nhc();
    const int levels = int(c.size() / nhc);
    for (int m = 0; m < nhc; ++m) {
        double mult;
        if (a1 == a2) {
            mult = -g.k(a1)[m] * g.k(a1)[m];
        } else {
            mult = (g.nyquist(m, a1) || g.nyquist(m, a2)) ? 0.0 : -g.k(a1)[m] * g.k(a2)[m];
        }
        for (int l = 0; l < levels; ++l) c[Eigen::Index(l) * nhc + m] *= mult;
    }
    return g.ifft(c);
}

Field apply_z(const HalfSpaceGrid& g, const Eigen::MatrixXd& D, const Field& f) {
    if (f.size() != g.size()) fail(ErrorCode::ShapeMismatch, "vertical operator needs a volume field");
    Field out(f.size());
    Eigen::Map<const RowMat> F(f.data(), g.Nz(), g.nh());
    Eigen::Map<RowMat> O(out.data(), g.Nz(), g.nh());
    O.noalias() = D * F;
    return out;
}

Field dz(const HalfSpaceGrid& g, const Field& f) { return apply_z(g, g.D1(), f); }
Field dzz(const HalfSpaceGrid& g, const Field& f) { return apply_z(g, g.D2(), f); }

Eigen::ArrayXd level(const HalfSpaceGrid& g, const Field& f, int iz) {
    return f.segment(Eigen::Index(iz) * g.nh(), g.nh());
}

Eigen::ArrayXd top(const HalfSpaceGrid& g, const Field& f) { return level(g, f, g.Nz() - 1); }

void set_level(const HalfSpaceGrid& g, Field& f, int iz, const Eigen::ArrayXd& v) {
    f.segment(Eigen::Index(iz) * g.nh(), g.nh()) = v;
}

Field broadcast(const HalfSpaceGrid& g, const Eigen::ArrayXd& s) {
    Field out(g.size());
    for (int iz = 0; iz < g.Nz(); ++iz) set_level(g, out, iz, s);
    return out;
}

Field broadcast_z(const HalfSpaceGrid& g, const Eigen::ArrayXd& prof) {
    Field out(g.size());
    for (int iz = 0; iz < g.Nz(); ++iz) out.segment(Eigen::Index(iz) * g.nh(), g.nh()).setConstant(prof[iz]);
    return out;
}

double integrate(const HalfSpaceGrid& g, const Field& f) {
    double s = 0.0;
    for (int iz = 0; iz < g.Nz(); ++iz) s += g.wz()[iz] * f.segment(Eigen::Index(iz) * g.nh(), g.nh()).sum();
    return s * g.wh();
}

double integrate_surface(const HalfSpaceGrid& g, const Eigen::ArrayXd& s) { return s.sum() * g.wh(); }

double l2(const HalfSpaceGrid& g, const Field& f) { return std::sqrt(integrate(g, f.square())); }

double l2_surface(const HalfSpaceGrid& g, const Eigen::ArrayXd& s) {
    return std::sqrt(integrate_surface(g, s.square()));
}

double l2(const HalfSpaceGrid& g, const Vec3& f) {
    return std::sqrt(integrate(g, f[0].square() + f[1].square() + f[2].square()));
}

Eigen::ArrayXd dealias(const HalfSpaceGrid& g, const Eigen::ArrayXd& f) {
    CField c = g.fft(f);
    const int nhc = g.nhc();
    const int levels = int(c.size() / nhc);
    const double kc = g.Ny() / 3.0;
    for (int m = 0; m < nhc; ++m) {
        if (std::abs(g.k(0)[m]) > kc || std::abs(g.k(1)[m]) > kc)
            for (int l = 0; l < levels; ++l) c[Eigen::Index(l) * nhc + m] = 0.0;
    }
    return g.ifft(c);
}

}  // namespace fsmhd
