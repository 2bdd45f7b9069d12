#pragma once

#include "fsmhd/grid.hpp"

namespace fsmhd {

// Horizontal spectral derivatives; f may be a volume field or a surface field.
Eigen::ArrayXd dh(const HalfSpaceGrid& g, const Eigen::ArrayXd& f, int axis);
Eigen::ArrayXd dhh(const HalfSpaceGrid& g, const Eigen::ArrayXd& f, int a1, int a2);
// Vertical derivatives with the compact scheme.
Field dz(const HalfSpaceGrid& g, const Field& f);
Field dzz(const HalfSpaceGrid& g, const Field& f);
// Apply an Nz x Nz matrix along z.
Field apply_z(const HalfSpaceGrid& g, const Eigen::MatrixXd& D, const Field& f);

Eigen::ArrayXd level(const HalfSpaceGrid& g, const Field& f, int iz);
Eigen::ArrayXd top(const HalfSpaceGrid& g, const Field& f);
void set_level(const HalfSpaceGrid& g, Field& f, int iz, const Eigen::ArrayXd& v);
// broadcast a surface field to every level
Field broadcast(const HalfSpaceGrid& g, const Eigen::ArrayXd& s);
// broadcast a vertical profile to every horizontal point
Field broadcast_z(const HalfSpaceGrid& g, const Eigen::ArrayXd& prof);

// Quadrature on the computational domain (optionally with a Jacobian weight).
double integrate(const HalfSpaceGrid& g, const Field& f);
double integrate_surface(const HalfSpaceGrid& g, const Eigen::ArrayXd& s);
double l2(const HalfSpaceGrid& g, const Field& f);
double l2_surface(const HalfSpaceGrid& g, const Eigen::ArrayXd& s);
double l2(const HalfSpaceGrid& g, const Vec3& f);

// zero all horizontal modes above 2/3 of the Nyquist wavenumber
Eigen::ArrayXd dealias(const HalfSpaceGrid& g, const Eigen::ArrayXd& f);

}  // namespace fsmhd
