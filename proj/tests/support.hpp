#pragma once

#include "fsmhd/grid.hpp"
#include "fsmhd/surface.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>

namespace fsmhd::testing {

inline constexpr double pi = std::numbers::pi;

inline GridPtr make_grid(int d_h, int Ny, int Nz, double L) { return std::make_shared<HalfSpaceGrid>(d_h, Ny, Nz, L); }

// f(y1, y2, z) sampled on the grid
inline Field sample(const HalfSpaceGrid& g, const std::function<double(double, double, double)>& f) {
    Field out(g.size());
    for (int iz = 0; iz < g.Nz(); ++iz)
        for (int ih = 0; ih < g.nh(); ++ih)
            out[Eigen::Index(iz) * g.nh() + ih] =
                f(g.y_of(ih, 0), g.d_h() == 2 ? g.y_of(ih, 1) : 0.0, g.z_nodes()[iz]);
    return out;
}

inline Eigen::ArrayXd sample_surface(const HalfSpaceGrid& g, const std::function<double(double, double)>& f) {
    Eigen::ArrayXd out(g.nh());
    for (int ih = 0; ih < g.nh(); ++ih) out[ih] = f(g.y_of(ih, 0), g.d_h() == 2 ? g.y_of(ih, 1) : 0.0);
    return out;
}

inline double max_abs(const Eigen::ArrayXd& a) { return a.size() ? a.abs().maxCoeff() : 0.0; }

// Single-mode surface h = a cos(k y1): phi(y1, z) = A z + a chi(k z) cos(k y1)
struct CosSurface {
    double a, k, A = 1.0;
    double phi(double y1, double z) const { return A * z + a * chi(k * z)[0] * std::cos(k * y1); }
    double phiz(double y1, double z) const { return A + a * k * chi(k * z)[1] * std::cos(k * y1); }
    // computational z with phi(y1, z) = x3
    double zeta(double y1, double x3) const {
        double z = x3 / A;
        for (int it = 0; it < 60; ++it) {
            double dzv = (phi(y1, z) - x3) / phiz(y1, z);
            z -= dzv;
            if (std::abs(dzv) < 1e-15) break;
        }
        return z;
    }
};

// fourth-order central difference
inline double fd4(const std::function<double(double)>& f, double x, double h) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

}  // namespace fsmhd::testing
