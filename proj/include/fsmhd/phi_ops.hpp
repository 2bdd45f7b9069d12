#pragma once

#include "fsmhd/surface.hpp"

namespace fsmhd {

using Mat3F = std::array<std::array<Field, 3>, 3>;

// d_i^phi f for axis i in {1, 2, 3}; axis 3 is (1/dz phi) dz.
Field dphi(int axis, const Field& f, const SurfaceState& S);
// d_t^phi f = d_t f - (d_t phi / dz phi) dz f, given the computational-frame d_t f.
Field dphi_t(const Field& ft, const Field& f, const SurfaceState& S);

Vec3 grad_phi(const Field& q, const SurfaceState& S);
Field div_phi(const Vec3& f, const SurfaceState& S);
Vec3 curl_phi(const Vec3& f, const SurfaceState& S);
// G[i][j] = d_j^phi f^i
Mat3F grad_matrix(const Vec3& f, const SurfaceState& S);
Mat3F strain_phi(const Vec3& f, const SurfaceState& S);
// Transformed Laplacian in expanded second-order form:
// d11 + d22 - 2 a1 d1dz - 2 a2 d2dz + G dzz + cL dz.
Field lap_phi(const Field& f, const SurfaceState& S);
// (a . grad^phi) f for each component of f
Vec3 convective(const Vec3& a, const Vec3& f, const SurfaceState& S);

}  // namespace fsmhd
