#include "fsmhd/phi_ops.hpp"

#include "fsmhd/errors.hpp"
#include "fsmhd/ops.hpp"

namespace fsmhd {

namespace {

Field dphi_with(int axis, const Field& f, const Field& fz, const SurfaceState& S) {
    const HalfSpaceGrid& g = S.g();
    switch (axis) {
        case 1: return dh(g, f, 0) - S.a1 * fz;
        case 2: return g.d_h() == 2 ? Field(dh(g, f, 1) - S.a2 * fz) : Field(-S.a2 * fz);
        case 3: return fz / S.J;
    }
    fail(ErrorCode::ShapeMismatch, "dphi axis must be 1, 2 or 3");
}

}  // namespace

Field dphi(int axis, const Field& f, const SurfaceState& S) {
    if (f.size() != S.g().size()) fail(ErrorCode::ShapeMismatch, "dphi needs a volume field");
    return dphi_with(axis, f, dz(S.g(), f), S);
}

Field dphi_t(const Field& ft, const Field& f, const SurfaceState& S) {
    return ft - S.phit / S.J * dz(S.g(), f);
}

Vec3 grad_phi(const Field& q, const SurfaceState& S) {
    Field qz = dz(S.g(), q);
    return {dphi_with(1, q, qz, S), dphi_with(2, q, qz, S), dphi_with(3, q, qz, S)};
}

Mat3F grad_matrix(const Vec3& f, const SurfaceState& S) {
    Mat3F G;
    for (int i = 0; i < 3; ++i) {
        Field fz = dz(S.g(), f[i]);
        for (int j = 0; j < 3; ++j) G[i][j] = dphi_with(j + 1, f[i], fz, S);
    }
    return G;
}

// conservative form: (d1(J f1) + d2(J f2) + dz(f3 - p1 f1 - p2 f2)) / J
Field div_phi(const Vec3& f, const SurfaceState& S) {
    const HalfSpaceGrid& g = S.g();
    Field w = f[2] - S.p1 * f[0] - S.p2 * f[1];
    Field out = dz(g, w) + dh(g, S.J * f[0], 0);
    if (g.d_h() == 2) out += dh(g, S.J * f[1], 1);
    return out / S.J;
}

// covariant form: c = (f1 + p1 f3, f2 + p2 f3, J f3), C = (d2 c3 - dz c2, dz c1 - d1 c3, d1 c2 - d2 c1),
// curl = (C1, C2, p1 C1 + p2 C2 + J C3) / J
Vec3 curl_phi(const Vec3& f, const SurfaceState& S) {
    const HalfSpaceGrid& g = S.g();
    const Field c1 = f[0] + S.p1 * f[2], c2 = f[1] + S.p2 * f[2], c3 = S.J * f[2];
    Field C1 = -dz(g, c2), C2 = dz(g, c1) - dh(g, c3, 0), C3 = dh(g, c2, 0);
    if (g.d_h() == 2) {
        C1 += dh(g, c3, 1);
        C3 -= dh(g, c1, 1);
    }
    return {C1 / S.J, C2 / S.J, (S.p1 * C1 + S.p2 * C2) / S.J + C3};
}

Mat3F strain_phi(const Vec3& f, const SurfaceState& S) {
    Mat3F G = grad_matrix(f, S);
    Mat3F E;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) E[i][j] = 0.5 * (G[i][j] + G[j][i]);
    return E;
}

Field lap_phi(const Field& f, const SurfaceState& S) {
    const HalfSpaceGrid& g = S.g();
    Field fz = dz(g, f);
    Field out = dhh(g, f, 0, 0) - 2.0 * S.a1 * dh(g, fz, 0) + S.G * dzz(g, f) + S.cL * fz;
    if (g.d_h() == 2) out += dhh(g, f, 1, 1) - 2.0 * S.a2 * dh(g, fz, 1);
    return out;
}

Vec3 convective(const Vec3& a, const Vec3& f, const SurfaceState& S) {
    const HalfSpaceGrid& g = S.g();
    // a . grad^phi = a1 d1 + a2 d2 + (a . N_phi / J) dz
    Field w = (a[2] - S.p1 * a[0] - S.p2 * a[1]) / S.J;
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        out[i] = a[0] * dh(g, f[i], 0) + w * dz(g, f[i]);
        if (g.d_h() == 2) out[i] += a[1] * dh(g, f[i], 1);
    }
    return out;
}

}  // namespace fsmhd
