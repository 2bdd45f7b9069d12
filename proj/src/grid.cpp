#include "fsmhd/grid.hpp"

#include "fsmhd/errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace fsmhd {

std::string_view error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DiffeomorphismViolation: return "DiffeomorphismViolation";
        case ErrorCode::NonSmoothInput: return "NonSmoothInput";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::EllipticSolveFailure: return "EllipticSolveFailure";
        case ErrorCode::SolvabilityViolation: return "SolvabilityViolation";
        case ErrorCode::DegenerateSystem: return "DegenerateSystem";
        case ErrorCode::TaylorSignViolation: return "TaylorSignViolation";
        case ErrorCode::CflViolation: return "CflViolation";
        case ErrorCode::InsufficientHistory: return "InsufficientHistory";
        case ErrorCode::CharacteristicEscape: return "CharacteristicEscape";
        case ErrorCode::PicardDivergence: return "PicardDivergence";
        case ErrorCode::SweepInsufficient: return "SweepInsufficient";
        case ErrorCode::DegenerateFit: return "DegenerateFit";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

Vec3 zeros3(Eigen::Index n) { return {Field::Zero(n), Field::Zero(n), Field::Zero(n)}; }

namespace {

struct Plans {
    fftw_plan fwd;
    fftw_plan inv;
};

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex plan_mutex;
std::map<std::tuple<int, int, int>, Plans> plan_cache;

const Plans& plans_for(int d_h, int Ny, int levels) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto key = std::make_tuple(d_h, Ny, levels);
    auto it = plan_cache.find(key);
    if (it != plan_cache.end()) return it->second;
    int n[2] = {Ny, Ny};
    int nh = d_h == 1 ? Ny : Ny * Ny;
    int nhc = d_h == 1 ? Ny / 2 + 1 : Ny * (Ny / 2 + 1);
    std::vector<double> rbuf(std::size_t(nh) * levels);
    std::vector<fftw_complex> cbuf(std::size_t(nhc) * levels);
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p;
    p.fwd = fftw_plan_many_dft_r2c(d_h, n, levels, rbuf.data(), nullptr, 1, nh, cbuf.data(), nullptr, 1,
                                   nhc, flags);
    p.inv = fftw_plan_many_dft_c2r(d_h, n, levels, cbuf.data(), nullptr, 1, nhc, rbuf.data(), nullptr, 1,
                                   nh, flags);
    return plan_cache.emplace(key, p).first->second;
}

}  // namespace

Eigen::MatrixXd fd_weights(double x0, const std::vector<double>& x, int m) {
    const int n = int(x.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, m + 1);
    double c1 = 1.0, c4 = x[0] - x0;
    c(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0, c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c(i, k) = c1 * (k * c(i - 1, k - 1) - c5 * c(i - 1, k)) / c2;
                c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
            }
            for (int k = mn; k >= 1; --k) c(j, k) = (c4 * c(j, k) - k * c(j, k - 1)) / c3;
            c(j, 0) = c4 * c(j, 0) / c3;
        }
        c1 = c2;
    }
    return c;
}

namespace {

// Explicit one-sided rows: `width` points starting at the boundary, mirrored at the far end.
void explicit_rows(Eigen::MatrixXd& A, Eigen::MatrixXd& B, int rows, int width, int order, double h) {
    const int n = int(A.rows());
    std::vector<double> nodes(width);
    for (int j = 0; j < width; ++j) nodes[j] = j;
    for (int r = 0; r < rows; ++r) {
        Eigen::MatrixXd w = fd_weights(double(r), nodes, order);
        double scale = std::pow(h, order);
        A(r, r) = 1.0;
        A(n - 1 - r, n - 1 - r) = 1.0;
        double sgn = order % 2 == 1 ? -1.0 : 1.0;
        for (int j = 0; j < width; ++j) {
            B(r, j) = w(j, order) / scale;
            B(n - 1 - r, n - 1 - j) = sgn * w(j, order) / scale;
        }
    }
}

}  // namespace

Eigen::MatrixXd compact_d1(int n, double h) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n), B = Eigen::MatrixXd::Zero(n, n);
    const double alpha = 1.0 / 3.0, a = 14.0 / 9.0, b = 1.0 / 9.0;
    explicit_rows(A, B, 2, 7, 1, h);
    for (int i = 2; i < n - 2; ++i) {
        A(i, i - 1) = alpha;
        A(i, i) = 1.0;
        A(i, i + 1) = alpha;
        B(i, i + 1) += a / (2 * h);
        B(i, i - 1) -= a / (2 * h);
        B(i, i + 2) += b / (4 * h);
        B(i, i - 2) -= b / (4 * h);
    }
    return A.partialPivLu().solve(B);
}

Eigen::MatrixXd compact_d2(int n, double h) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n), B = Eigen::MatrixXd::Zero(n, n);
    const double alpha = 2.0 / 11.0, a = 12.0 / 11.0, b = 3.0 / 11.0;
    explicit_rows(A, B, 2, 8, 2, h);
    const double h2 = h * h;
    for (int i = 2; i < n - 2; ++i) {
        A(i, i - 1) = alpha;
        A(i, i) = 1.0;
        A(i, i + 1) = alpha;
        B(i, i + 1) += a / h2;
        B(i, i) -= 2 * a / h2;
        B(i, i - 1) += a / h2;
        B(i, i + 2) += b / (4 * h2);
        B(i, i) -= 2 * b / (4 * h2);
        B(i, i - 2) += b / (4 * h2);
    }
    return A.partialPivLu().solve(B);
}

HalfSpaceGrid::HalfSpaceGrid(int d_h, int Ny, int Nz, double L) : d_h_(d_h), Ny_(Ny), Nz_(Nz), L_(L) {
    if (d_h != 1 && d_h != 2) fail(ErrorCode::ConfigError, "d_h must be 1 or 2");
    if (Ny < 4 || (Ny & (Ny - 1)) != 0) fail(ErrorCode::ConfigError, "Ny must be a power of two >= 4");
    if (Nz < 12) fail(ErrorCode::ConfigError, "Nz must be at least 12");
    if (!(L > 0) || !std::isfinite(L)) fail(ErrorCode::ConfigError, "L must be positive");
    nh_ = d_h == 1 ? Ny : Ny * Ny;
    nhc_ = d_h == 1 ? Ny / 2 + 1 : Ny * (Ny / 2 + 1);
    z_.resize(Nz);
    for (int i = 0; i < Nz; ++i) z_[i] = -L + L * double(i) / (Nz - 1);
    z_[0] = -L;
    z_[Nz - 1] = 0.0;

    k1_.resize(nhc_);
    k2_.resize(nhc_);
    mw_.resize(nhc_);
    const int half = Ny / 2;
    auto freq = [&](int i) { return i <= half ? i : i - Ny; };
    for (int m = 0; m < nhc_; ++m) {
        int ilast = d_h == 1 ? m : m % (half + 1);
        int ifirst = d_h == 1 ? 0 : m / (half + 1);
        double last = ilast;
        if (d_h == 1) {
            k1_[m] = last;
            k2_[m] = 0.0;
        } else {
            k1_[m] = freq(ifirst);
            k2_[m] = last;
        }
        mw_[m] = (ilast == 0 || ilast == half) ? 1.0 : 2.0;
    }
    kabs_ = (k1_.square() + k2_.square()).sqrt();

    const double h = L / (Nz - 1);
    D1_ = compact_d1(Nz, h);
    D2_ = compact_d2(Nz, h);
    wz_ = Eigen::ArrayXd::Constant(Nz, h);
    wz_[0] = wz_[Nz - 1] = h / 2;
    wh_ = std::pow(2 * std::numbers::pi / Ny, d_h);
}

double HalfSpaceGrid::dy() const { return 2 * std::numbers::pi / Ny_; }

double HalfSpaceGrid::y_node(int i) const { return dy() * i; }

double HalfSpaceGrid::y_of(int ih, int axis) const {
    if (d_h_ == 1) return axis == 0 ? y_node(ih) : 0.0;
    return axis == 0 ? y_node(ih / Ny_) : y_node(ih % Ny_);
}

bool HalfSpaceGrid::nyquist(int mode, int axis) const {
    const int half = Ny_ / 2;
    if (d_h_ == 1) return axis == 0 && mode == half;
    if (axis == 1) return mode % (half + 1) == half;
    return mode / (half + 1) == half;
}

int HalfSpaceGrid::levels_of(const Eigen::ArrayXd& f) const {
    if (f.size() % nh_ != 0 || f.size() == 0) fail(ErrorCode::ShapeMismatch, "field size not a multiple of nh");
    return int(f.size() / nh_);
}

CField HalfSpaceGrid::fft(const Eigen::ArrayXd& f) const {
    const int levels = levels_of(f);
    const Plans& p = plans_for(d_h_, Ny_, levels);
    CField out(Eigen::Index(nhc_) * levels);
    Eigen::ArrayXd in = f;
    fftw_execute_dft_r2c(p.fwd, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

Eigen::ArrayXd HalfSpaceGrid::ifft(const CField& c) const {
    if (c.size() % nhc_ != 0 || c.size() == 0) fail(ErrorCode::ShapeMismatch, "spectral size mismatch");
    const int levels = int(c.size() / nhc_);
    const Plans& p = plans_for(d_h_, Ny_, levels);
    CField in = c;
    Eigen::ArrayXd out(Eigen::Index(nh_) * levels);
    fftw_execute_dft_c2r(p.inv, reinterpret_cast<fftw_complex*>(in.data()), out.data());
    out /= double(nh_);
    return out;
}

}  // namespace fsmhd
