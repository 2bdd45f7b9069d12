#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <vector>

namespace fsmhd {

// Volume fields are stored level by level: index = iz * nh + ih, iz = 0 at z = -L.
using Field = Eigen::ArrayXd;
using CField = Eigen::ArrayXcd;
using Vec3 = std::array<Field, 3>;

Vec3 zeros3(Eigen::Index n);

// Periodic horizontal torus [0, 2pi)^d_h times the vertical interval [-L, 0].
class HalfSpaceGrid {
public:
    HalfSpaceGrid(int d_h, int Ny, int Nz, double L);

    int d_h() const { return d_h_; }
    int Ny() const { return Ny_; }
    int Nz() const { return Nz_; }
    double L() const { return L_; }
    int nh() const { return nh_; }
    int nhc() const { return nhc_; }
    Eigen::Index size() const { return Eigen::Index(Nz_) * nh_; }
    double dz() const { return L_ / (Nz_ - 1); }
    double dy() const;

    const Eigen::ArrayXd& z_nodes() const { return z_; }
    double y_node(int i) const;
    // horizontal coordinates of point ih along axis (0 or 1)
    double y_of(int ih, int axis) const;

    // wavenumbers per complex mode (r2c layout), |xi| and Nyquist flags
    const Eigen::ArrayXd& k(int axis) const { return axis == 0 ? k1_ : k2_; }
    const Eigen::ArrayXd& kabs() const { return kabs_; }
    bool nyquist(int mode, int axis) const;
    // multiplicity of a complex mode in Parseval sums (1 or 2)
    const Eigen::ArrayXd& mode_weight() const { return mw_; }

    const Eigen::MatrixXd& D1() const { return D1_; }
    const Eigen::MatrixXd& D2() const { return D2_; }
    const Eigen::ArrayXd& wz() const { return wz_; }
    double wh() const { return wh_; }

    // Batched transforms over `levels` contiguous horizontal slabs.
    CField fft(const Eigen::ArrayXd& f) const;
    Eigen::ArrayXd ifft(const CField& c) const;

    int levels_of(const Eigen::ArrayXd& f) const;

private:
    int d_h_, Ny_, Nz_;
    double L_;
    int nh_, nhc_;
    Eigen::ArrayXd z_;
    Eigen::ArrayXd k1_, k2_, kabs_, mw_;
    Eigen::MatrixXd D1_, D2_;
    Eigen::ArrayXd wz_;
    double wh_;
};

// Finite-difference weights for derivatives up to order m at x0 (Fornberg).
Eigen::MatrixXd fd_weights(double x0, const std::vector<double>& nodes, int m);

// Dense vertical derivative matrices on a uniform grid: 6th-order compact
// interior, explicit one-sided 6th-order closures near the ends.
Eigen::MatrixXd compact_d1(int n, double h);
Eigen::MatrixXd compact_d2(int n, double h);

}  // namespace fsmhd
