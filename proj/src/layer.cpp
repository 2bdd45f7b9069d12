#include "fsmhd/layer.hpp"

#include "fsmhd/errors.hpp"
#include "fsmhd/ops.hpp"
#include "fsmhd/vort_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fsmhd {

namespace {

constexpr cplx I1{0.0, 1.0};

// ---- profile solvers ----

struct Family {
    cplx A0, A1, A2, W0;
    cplx lp, lm;  // decaying and growing roots of l^2 + A1 l + A0
};

Family make_family(cplx A0, cplx A1, cplx A2, cplx W0) {
    Family f{A0, A1, A2, W0, decay_rate(A1, A0), 0.0};
    f.lm = -A1 - f.lp;
    return f;
}

// Gauss-Legendre nodes and weights on [0, 1]
constexpr int n_gauss = 8;
constexpr std::array<double, n_gauss> gl_x = {0.019855071751231856, 0.10166676129318664, 0.2372337950418355,
                                               0.4082826787521751,  0.5917173212478249,  0.7627662049581645,
                                               0.8983332387068134,  0.9801449282487681};
constexpr std::array<double, n_gauss> gl_w = {0.05061426814518813, 0.11119051722668724, 0.15685332293894363,
                                               0.18134189168918100, 0.18134189168918100, 0.15685332293894363,
                                               0.11119051722668724, 0.05061426814518813};
constexpr int stencil = 6;

// Integral form on the uniform grid s_k = -k h:
// u = [exp(lp s) C - I+(s) - I-(s)] / (lp - lm) solves u'' + A1 u' + A0 u = f, u(0) = 0, decaying.
class GreenIntegrator {
public:
    GreenIntegrator(int M, double h) : M_(M), h_(h) {
        // per interval [s_{k+1}, s_k]: stencil start and Lagrange values at the Gauss points
        start_.resize(M);
        lag_.resize(M);
        for (int k = 0; k < M; ++k) {
            int st = std::clamp(k - stencil / 2 + 1, 0, M + 1 - stencil);
            start_[k] = st;
            for (int q = 0; q < n_gauss; ++q) {
                const double x = k + gl_x[q];  // position in grid units (depth)
                for (int j = 0; j < stencil; ++j) {
                    double l = 1.0;
                    for (int m = 0; m < stencil; ++m)
                        if (m != j) l *= (x - (st + m)) / double(j - m);
                    lag_[k][q][j] = l;
                }
            }
        }
    }

    Eigen::ArrayXcd apply(const Family& F, const Eigen::ArrayXcd& f) const {
        const int M = M_;
        const cplx lp = F.lp, lm = F.lm;
        auto seg = [&](int k, auto&& kernel) {
            cplx acc = 0.0;
            for (int q = 0; q < n_gauss; ++q) {
                cplx fq = 0.0;
                for (int j = 0; j < stencil; ++j) fq += lag_[k][q][j] * f[start_[k] + j];
                const double sig = -(k + gl_x[q]) * h_;
                acc += gl_w[q] * kernel(sig) * fq;
            }
            return acc * h_;
        };
        Eigen::ArrayXcd Ip(M + 1), Im(M + 1);
        Ip[0] = 0.0;
        for (int k = 0; k < M; ++k) {
            const double s1 = -(k + 1) * h_;
            Ip[k + 1] = std::exp(-lp * h_) * Ip[k] + seg(k, [&](double sg) { return std::exp(lp * (s1 - sg)); });
        }
        Im[M] = 0.0;
        cplx C = 0.0;
        for (int k = M - 1; k >= 0; --k) {
            const double s0 = -k * h_;
            Im[k] = std::exp(lm * h_) * Im[k + 1] + seg(k, [&](double sg) { return std::exp(lm * (s0 - sg)); });
            C += seg(k, [&](double sg) { return std::exp(-lm * sg); });
        }
        Eigen::ArrayXcd u(M + 1);
        for (int k = 0; k <= M; ++k) u[k] = (std::exp(-lp * (k * h_)) * C - Ip[k] - Im[k]) / (lp - lm);
        return u;
    }

private:
    int M_;
    double h_;
    std::vector<int> start_;
    std::vector<std::array<std::array<double, stencil>, n_gauss>> lag_;
};

// Chebyshev points x_j = cos(pi j / N) and the differentiation matrix
void chebyshev(int N, Eigen::ArrayXd& x, Eigen::MatrixXd& D) {
    x.resize(N + 1);
    for (int j = 0; j <= N; ++j) x[j] = std::cos(std::numbers::pi * j / N);
    D.setZero(N + 1, N + 1);
    auto c = [&](int j) { return (j == 0 || j == N ? 2.0 : 1.0) * ((j % 2) ? -1.0 : 1.0); };
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j)
            if (i != j) D(i, j) = c(i) / c(j) / (x[i] - x[j]);
    for (int i = 0; i <= N; ++i) D(i, i) = -D.row(i).sum();
}

cplx barycentric(const Eigen::ArrayXd& x, const Eigen::ArrayXcd& f, double xe) {
    const int N = int(x.size()) - 1;
    cplx num = 0.0;
    double den = 0.0;
    for (int j = 0; j <= N; ++j) {
        const double d = xe - x[j];
        if (d == 0.0) return f[j];
        const double w = (j == 0 || j == N ? 0.5 : 1.0) * ((j % 2) ? -1.0 : 1.0) / d;
        num += w * f[j];
        den += w;
    }
    return num / den;
}

// ---- point sampling on a curvilinear mesh ----

void lagrange_weights(double x, int st, int n, double* w) {
    for (int j = 0; j < n; ++j) {
        double l = 1.0;
        for (int m = 0; m < n; ++m)
            if (m != j) l *= (x - (st + m)) / double(j - m);
        w[j] = l;
    }
}

constexpr int interp_n = 6;

// Local Lagrange interpolation of fields at physical points of the mesh S.
class Sampler {
public:
    explicit Sampler(const SurfaceState& S) : S_(S), g_(S.g()) {
        phi_ = S.A * broadcast_z(g_, g_.z_nodes()) + S.eta;
    }

    struct Loc {
        std::array<int, interp_n> i1{}, i2{};
        std::array<double, interp_n> w1{}, w2{};
        int n2 = 1;
        int zs = 0;
        std::array<double, interp_n> wz{};
        double z = 0.0;
        double excess = 0.0;  // distance of the requested x3 outside the mesh
    };

    // locate (y1, y2, x3); points outside the mesh are clamped to it
    Loc locate(double y1, double y2, double x3) const {
        Loc c;
        horizontal(y1, c.i1, c.w1);
        if (g_.d_h() == 2) {
            horizontal(y2, c.i2, c.w2);
            c.n2 = interp_n;
        } else {
            c.i2[0] = 0;
            c.w2[0] = 1.0;
        }
        const int Nz = g_.Nz();
        const double phi_top = hsum(c, phi_, Nz - 1), phi_bot = hsum(c, phi_, 0);
        const double L = g_.L();
        if (x3 >= phi_top) {
            c.excess = x3 - phi_top;
            set_z(c, 0.0);
            return c;
        }
        if (x3 <= phi_bot) {
            c.excess = phi_bot - x3;
            set_z(c, -L);
            return c;
        }
        // Newton on phi(y, z) = x3, bracketed
        double lo = -L, hi = 0.0;
        double z = std::clamp(-L + (x3 - phi_bot) / (phi_top - phi_bot) * L, -L, 0.0);
        for (int it = 0; it < 60; ++it) {
            set_z(c, z);
            const double r = value(c, phi_) - x3;
            if (r > 0) hi = z;
            else lo = z;
            const double J = value(c, S_.J);
            double zn = z - r / J;
            if (!(zn > lo && zn < hi)) zn = 0.5 * (lo + hi);
            if (std::abs(zn - z) < 1e-14 * L) {
                z = zn;
                break;
            }
            z = zn;
        }
        set_z(c, z);
        return c;
    }

    double value(const Loc& c, const Field& f) const {
        double acc = 0.0;
        const int nh = g_.nh(), Ny = g_.Ny();
        for (int a = 0; a < interp_n; ++a) {
            const Eigen::Index base = Eigen::Index(c.zs + a) * nh;
            double row = 0.0;
            for (int p = 0; p < interp_n; ++p)
                for (int q = 0; q < c.n2; ++q) {
                    const int ih = g_.d_h() == 2 ? c.i1[p] * Ny + c.i2[q] : c.i1[p];
                    row += c.w1[p] * c.w2[q] * f[base + ih];
                }
            acc += c.wz[a] * row;
        }
        return acc;
    }

private:
    void horizontal(double y, std::array<int, interp_n>& idx, std::array<double, interp_n>& w) const {
        const int Ny = g_.Ny();
        const double u = y / g_.dy();
        const int base = int(std::floor(u)) - interp_n / 2 + 1;
        lagrange_weights(u, base, interp_n, w.data());
        for (int j = 0; j < interp_n; ++j) idx[j] = ((base + j) % Ny + Ny) % Ny;
    }

    void set_z(Loc& c, double z) const {
        const int Nz = g_.Nz();
        const double u = (z + g_.L()) / g_.dz();
        const int st = std::clamp(int(std::floor(u)) - interp_n / 2 + 1, 0, Nz - interp_n);
        c.zs = st;
        c.z = z;
        lagrange_weights(u, st, interp_n, c.wz.data());
    }

    double hsum(const Loc& c, const Field& f, int iz) const {
        const int nh = g_.nh(), Ny = g_.Ny();
        double acc = 0.0;
        for (int p = 0; p < interp_n; ++p)
            for (int q = 0; q < c.n2; ++q) {
                const int ih = g_.d_h() == 2 ? c.i1[p] * Ny + c.i2[q] : c.i1[p];
                acc += c.w1[p] * c.w2[q] * f[Eigen::Index(iz) * nh + ih];
            }
        return acc;
    }

    const SurfaceState& S_;
    const HalfSpaceGrid& g_;
    Field phi_;
};

Vec3 grid_positions(const SurfaceState& S) {
    const HalfSpaceGrid& g = S.g();
    const Eigen::Index N = g.size();
    Vec3 X = zeros3(N);
    for (int iz = 0; iz < g.Nz(); ++iz)
        for (int ih = 0; ih < g.nh(); ++ih) {
            const Eigen::Index k = Eigen::Index(iz) * g.nh() + ih;
            X[0][k] = g.y_of(ih, 0);
            X[1][k] = g.y_of(ih, 1);
            X[2][k] = S.A * g.z_nodes()[iz] + S.eta[k];
        }
    return X;
}

// velocity of map m (0: u - b, 1: u + b) at the points P of a state
struct Evaluation {
    Vec3 u;
    int clamped = 0;
    double excess = 0.0;
};

Evaluation characteristic_velocity(const MhdState& st, int m, const Vec3& P) {
    Sampler smp(st.S);
    const double sgn = m == 0 ? -1.0 : 1.0;
    const Eigen::Index N = P[0].size();
    Evaluation e;
    e.u = zeros3(N);
    const double tol = 1e-10 * st.grid().L();
    for (Eigen::Index k = 0; k < N; ++k) {
        auto c = smp.locate(P[0][k], P[1][k], P[2][k]);
        if (c.excess > tol) {
            ++e.clamped;
            e.excess = std::max(e.excess, c.excess);
        }
        for (int i = 0; i < 3; ++i) e.u[i][k] = smp.value(c, st.v[i]) + sgn * smp.value(c, st.b[i]);
    }
    return e;
}

// clamp positions onto the mesh of S; returns the count and largest excess
std::pair<int, double> clamp_to_mesh(const SurfaceState& S, Vec3& P) {
    Sampler smp(S);
    Field phi = S.A * broadcast_z(S.g(), S.g().z_nodes()) + S.eta;
    int n = 0;
    double worst = 0.0;
    const double tol = 1e-10 * S.g().L();
    for (Eigen::Index k = 0; k < P[0].size(); ++k) {
        auto c = smp.locate(P[0][k], P[1][k], P[2][k]);
        if (c.excess > tol) {
            ++n;
            worst = std::max(worst, c.excess);
            P[2][k] = smp.value(c, phi);
        }
    }
    return {n, worst};
}

Field sample_at(const SurfaceState& S, const Field& f, const Vec3& P) {
    Sampler smp(S);
    Field out(P[0].size());
    for (Eigen::Index k = 0; k < out.size(); ++k) out[k] = smp.value(smp.locate(P[0][k], P[1][k], P[2][k]), f);
    return out;
}

// ---- linearization data ----

using Data = std::array<Eigen::ArrayXd, forcing_vars>;

Data forcing_data(const MhdState& st) {
    const HalfSpaceGrid& g = st.grid();
    Vec3 wv = vorticity(st.v, st.S), wb = vorticity(st.b, st.S);
    Tangential Tv = tangential_derivatives(st.v, g), Tb = tangential_derivatives(st.b, g);
    Data x;
    x[0] = wv[0];
    x[1] = wv[1];
    x[2] = wb[0];
    x[3] = wb[1];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) {
            x[4 + 2 * i + j] = Tv.d[i][j];
            x[10 + 2 * i + j] = Tb.d[i][j];
        }
    x[16] = st.S.p1;
    x[17] = st.S.p2;
    x[18] = st.S.J;
    return x;
}

std::array<Eigen::ArrayXd, 4> forcing_of(const Data& x) {
    Tangential Tv, Tb;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) {
            Tv.d[i][j] = x[4 + 2 * i + j];
            Tb.d[i][j] = x[10 + 2 * i + j];
        }
    VorticityForcing F = forcing_from_data({x[0], x[1]}, {x[2], x[3]}, Tv, Tb, Metric{x[16], x[17], x[18]});
    return {F.Fv[0], F.Fv[1], F.Fb[0], F.Fb[1]};
}

}  // namespace

// ---- symbols and profiles ----

cplx decay_rate(cplx A1, cplx A0) {
    const cplx r = std::sqrt(A1 * A1 - 4.0 * A0);
    const cplx l = (-A1 + r) / 2.0;
    if (!(l.real() > 0.0) || !(r.real() > std::abs(A1.real())))
        fail(ErrorCode::DegenerateSystem, "layer symbols: no decaying root");
    return l;
}

Symbols layer_symbols(double eps, double xi1, double xi2, double tau, const LayerCoefficients& c) {
    const double xi[2] = {xi1, xi2};
    auto family = [&](const PointMetric& m, cplx& A0, cplx& A1) {
        const double a33 = m.a(2, 2);
        if (!(a33 > 0.0)) fail(ErrorCode::DegenerateSystem, "layer symbols: a33 must be positive");
        cplx s1 = m.da[2](2, 2) / a33;
        for (int j = 0; j < 2; ++j) s1 += m.da[j](j, 2) / a33 + 2.0 * I1 * (m.a(j, 2) / a33) * xi[j];
        A1 = std::sqrt(eps) * s1;
        cplx s0 = 0.0;
        for (int j = 0; j < 2; ++j) {
            s0 += I1 * eps * (m.da[2](j, 2) / a33) * xi[j];
            for (int i = 0; i < 2; ++i) {
                s0 += I1 * eps * (m.da[i](i, j) / a33) * xi[j];
                s0 -= eps * (m.a(i, j) / a33) * xi[i] * xi[j];
            }
        }
        A0 = s0 - I1 * tau * m.a0 / a33 - c.gamma * m.a0 / a33;
    };
    Symbols s;
    family(c.ma, s.Av0, s.Av1);
    family(c.mb, s.Ab0, s.Ab1);
    s.Av2 = (c.f7v - c.f7b) / c.ma.a(2, 2);
    s.Ab2 = (c.f7v + c.f7b) / c.mb.a(2, 2);
    return s;
}

cplx LayerProfile::plus_at(double zz) const {
    const double s = zz / std::sqrt(eps);
    if (s < -Z) return 0.0;
    return barycentric(s_nodes, cp, 2.0 * s / Z + 1.0);
}

cplx LayerProfile::minus_at(double zz) const {
    const double s = zz / std::sqrt(eps);
    if (s < -Z) return 0.0;
    return barycentric(s_nodes, cm, 2.0 * s / Z + 1.0);
}

LayerProfile layer_profile(const Symbols& sym, cplx Wp0, cplx Wm0, double eps, const ProfileOptions& opt) {
    if (!(eps > 0.0)) fail(ErrorCode::ConfigError, "layer_profile: eps must be positive");
    const Family fp = make_family(sym.Av0, sym.Av1, sym.Av2, Wp0);
    const Family fm = make_family(sym.Ab0, sym.Ab1, sym.Ab2, Wm0);
    LayerProfile P;
    P.eps = eps;
    P.sym = sym;
    P.Wp0 = Wp0;
    P.Wm0 = Wm0;
    const double slow = std::min(fp.lp.real(), fm.lp.real());
    const double fast = std::max({std::abs(fp.lp), std::abs(fp.lm), std::abs(fm.lp), std::abs(fm.lm)});
    P.Z = opt.depth / slow;

    // collocation on s in [-Z, 0]; node 0 is s = 0
    const int N = opt.n_colloc;
    Eigen::ArrayXd x;
    Eigen::MatrixXd Dx;
    chebyshev(N, x, Dx);
    P.s_nodes = x;
    const Eigen::MatrixXd D = (2.0 / P.Z) * Dx, D2 = D * D;
    const int n = N + 1;
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(2 * n);
    auto block = [&](int off, int other, const Family& F) {
        K.block(off, off, n, n) = (D2 + F.A1 * D).cast<cplx>() + F.A0 * Eigen::MatrixXcd::Identity(n, n);
        K.block(off, other, n, n) = -F.A2 * Eigen::MatrixXcd::Identity(n, n);
        for (int r : {0, N}) {
            K.row(off + r).setZero();
            K(off + r, off + r) = 1.0;
        }
        rhs[off] = F.W0;
    };
    block(0, n, fp);
    block(n, 0, fm);
    Eigen::VectorXcd sol = K.partialPivLu().solve(rhs);
    P.cp = sol.head(n).array();
    P.cm = sol.tail(n).array();

    // integral form with Picard coupling on a uniform grid
    const double h = opt.quad_step / fast;
    const int M = std::max(stencil, int(std::ceil(P.Z / h)));
    const double hs = P.Z / M;
    GreenIntegrator G(M, hs);
    Eigen::ArrayXd s(M + 1);
    for (int k = 0; k <= M; ++k) s[k] = -k * hs;
    P.z = std::sqrt(eps) * s;
    const Eigen::ArrayXcd ep = (fp.lp * s.cast<cplx>()).exp() * Wp0, em = (fm.lp * s.cast<cplx>()).exp() * Wm0;
    Eigen::ArrayXcd wp = ep, wm = em;
    const double scale = std::max({std::abs(Wp0), std::abs(Wm0), 1e-300});
    double prev = 0.0;
    bool converged = false;
    for (int it = 1; it <= opt.picard_max; ++it) {
        Eigen::ArrayXcd np = ep, nm = em;
        if (fp.A2 != 0.0) np += G.apply(fp, fp.A2 * wm);
        if (fm.A2 != 0.0) nm += G.apply(fm, fm.A2 * np);
        const double d = std::max((np - wp).abs().maxCoeff(), (nm - wm).abs().maxCoeff()) / scale;
        wp = np;
        wm = nm;
        P.picard_iterations = it;
        if (it > 1 && prev > 0.0) P.contraction = std::max(P.contraction, d / prev);
        if (d <= opt.picard_tol) {
            converged = true;
            break;
        }
        if (it > 2 && d >= prev) break;
        prev = d;
    }
    if (!converged)
        fail(ErrorCode::PicardDivergence, "coupling iteration does not contract (ratio " +
                                              std::to_string(P.contraction) + ")");
    P.Wp_picard = wp;
    P.Wm_picard = wm;

    P.Wp.resize(M + 1);
    P.Wm.resize(M + 1);
    for (int k = 0; k <= M; ++k) {
        P.Wp[k] = barycentric(x, P.cp, 2.0 * s[k] / P.Z + 1.0);
        P.Wm[k] = barycentric(x, P.cm, 2.0 * s[k] / P.Z + 1.0);
    }
    P.discrepancy = std::max((P.Wp - wp).abs().maxCoeff(), (P.Wm - wm).abs().maxCoeff()) / scale;
    return P;
}

ScanTable scaling_scan(const std::vector<double>& eps_ladder, double delta_z, const LayerCoefficients& c, double xi1,
                       double xi2, double tau, cplx Wp0, cplx Wm0, const ProfileOptions& opt) {
    if (!(delta_z > 0.0 && delta_z < 0.5)) fail(ErrorCode::ConfigError, "scaling_scan: delta_z must lie in (0, 1/2)");
    ScanTable T;
    T.delta_z = delta_z;
    for (double e : eps_ladder) {
        LayerProfile P = layer_profile(layer_symbols(e, xi1, xi2, tau, c), Wp0, Wm0, e, opt);
        const double zi = -std::pow(e, 0.5 + delta_z), zo = -std::pow(e, 0.5 - delta_z);
        auto ratio = [](cplx w, cplx w0) { return w0 == 0.0 ? 0.0 : std::abs(w) / std::abs(w0); };
        T.rows.push_back({e, ratio(P.plus_at(zi), Wp0), ratio(P.minus_at(zi), Wm0), ratio(P.plus_at(zo), Wp0),
                          ratio(P.minus_at(zo), Wm0)});
    }
    T.inner_increasing = T.outer_decreasing = T.rows.size() >= 2;
    for (size_t i = 1; i < T.rows.size(); ++i) {
        const ScanRow &a = T.rows[i - 1], &b = T.rows[i];
        if (!(b.inner_plus > a.inner_plus && b.inner_minus > a.inner_minus)) T.inner_increasing = false;
        if (!(b.outer_plus < a.outer_plus && b.outer_minus < a.outer_minus)) T.outer_decreasing = false;
    }
    return T;
}

// ---- classifier ----

std::string to_string(LayerVerdict v) {
    switch (v) {
        case LayerVerdict::StrongInitial: return "StrongInitial";
        case LayerVerdict::StrongBoundary: return "StrongBoundary";
        case LayerVerdict::Weak: return "Weak";
    }
    return "?";
}

LayerVerdict classify_layer(double initial_discrepancy, double boundary_strain, const ClassifierThresholds& th,
                            std::string* reason) {
    const bool init = initial_discrepancy > th.factor * th.initial_floor;
    const bool strain = boundary_strain > th.factor * th.strain_floor;
    LayerVerdict v = strain ? LayerVerdict::StrongBoundary : init ? LayerVerdict::StrongInitial : LayerVerdict::Weak;
    if (reason) {
        if (init && strain) *reason = "initial discrepancy and boundary strain both above threshold; boundary strain takes precedence";
        else if (strain) *reason = "boundary strain above threshold";
        else if (init) *reason = "initial discrepancy above threshold in the boundary band";
        else *reason = "both quantities below threshold";
    }
    return v;
}

double band_sup(const HalfSpaceGrid& g, const Field& f, double eps) {
    return band_sup(g, std::vector<Field>{f}, eps);
}

double band_sup(const HalfSpaceGrid& g, const std::vector<Field>& fs, double eps) {
    const double w = std::sqrt(eps);
    const auto& z = g.z_nodes();
    int lo = g.Nz() - 1;
    while (lo > 0 && z[lo] > -w) --lo;
    double m = 0.0;
    const Eigen::Index nh = g.nh();
    for (const Field& f : fs)
        m = std::max(m, f.segment(Eigen::Index(lo) * nh, (g.Nz() - lo) * nh).abs().maxCoeff());
    return m;
}

// ---- Lagrangian maps ----

LagrangianMaps advect_lagrangian(const std::vector<MhdState>& states) {
    if (states.empty()) fail(ErrorCode::InsufficientHistory, "advect_lagrangian: no states");
    const SurfaceState& S0 = states.front().S;
    const HalfSpaceGrid& g = S0.g();
    const double escape_tol = 0.05 * g.dz();
    LagrangianMaps out;
    out.S0 = S0;
    out.t0 = out.t = states.front().t;
    const Vec3 X0 = grid_positions(S0);
    out.Y = {X0, X0};
    for (size_t n = 0; n + 1 < states.size(); ++n) {
        const MhdState &a = states[n], &b = states[n + 1];
        if (b.grid().size() != g.size()) fail(ErrorCode::ShapeMismatch, "advect_lagrangian: grids differ");
        const double dt = b.t - a.t;
        for (int m = 0; m < 2; ++m) {
            Vec3& Y = out.Y[m];
            Evaluation k1 = characteristic_velocity(a, m, Y);
            Vec3 P;
            for (int i = 0; i < 3; ++i) P[i] = Y[i] + dt * k1.u[i];
            out.clamped += clamp_to_mesh(b.S, P).first;
            Evaluation k2 = characteristic_velocity(b, m, P);
            for (int i = 0; i < 3; ++i) Y[i] += 0.5 * dt * (k1.u[i] + k2.u[i]);
            auto [nc, worst] = clamp_to_mesh(b.S, Y);
            out.clamped += nc;
            if (worst > escape_tol)
                fail(ErrorCode::CharacteristicEscape,
                     "trajectory left the domain by " + std::to_string(worst) + " at t = " + std::to_string(b.t));
        }
        out.t = b.t;
    }

    // Jacobians by differentiating the displacement on the initial mesh
    for (int m = 0; m < 2; ++m) {
        Mat3F G;
        for (int c = 0; c < 3; ++c) {
            Vec3 dD = grad_phi(Field(out.Y[m][c] - X0[c]), S0);
            for (int j = 0; j < 3; ++j) G[c][j] = dD[j] + (c == j ? 1.0 : 0.0);
        }
        const Eigen::Index N = g.size();
        Field det(N), root(N);
        Mat3F met;
        for (auto& r : met)
            for (auto& e : r) e.resize(N);
        for (Eigen::Index k = 0; k < N; ++k) {
            Eigen::Matrix3d F;
            for (int c = 0; c < 3; ++c)
                for (int j = 0; j < 3; ++j) F(c, j) = G[c][j][k];
            det[k] = F.determinant();
            root[k] = std::sqrt(std::abs(det[k]));
            const Eigen::Matrix3d Pm = (F.transpose() * F).inverse() * root[k];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) met[i][j][k] = Pm(i, j);
        }
        out.jac[m] = det;
        (m == 0 ? out.a0 : out.b0) = root;
        (m == 0 ? out.a : out.b) = met;
    }
    return out;
}

double gamma_select(const Field& f7v, const Field& f7b, const Field& a0, const Field& b0) {
    const double lo = std::min(a0.minCoeff(), b0.minCoeff());
    if (!(lo > 0.0)) fail(ErrorCode::DegenerateSystem, "gamma_select: Jacobian roots must be positive");
    const double top = (f7v.abs() + f7b.abs()).maxCoeff();
    return std::max(1.0, 2.0 * top / lo);
}

bool damping_positive(double gamma, const Field& f7v, const Field& f7b, const Field& a0, const Field& b0) {
    for (const Field* r : {&a0, &b0})
        for (double s : {1.0, -1.0})
            if (!((gamma * *r - (f7v + s * f7b)) > 0.0).all()) return false;
    return true;
}

ElsasserVariables elsasser_variables(const LagrangianMaps& maps, double gamma, const std::array<Field, 2>& wv,
                                     const std::array<Field, 2>& wb, const SurfaceState& S) {
    const double damp = std::exp(-gamma * (maps.t - maps.t0));
    ElsasserVariables W;
    for (int i = 0; i < 2; ++i) {
        W.Wp[i] = damp * sample_at(S, Field(wv[i] + wb[i]), maps.Y[0]);
        W.Wm[i] = damp * sample_at(S, Field(wv[i] - wb[i]), maps.Y[1]);
    }
    return W;
}

void elsasser_reconstruct(const LagrangianMaps& maps, double gamma, const ElsasserVariables& W, const SurfaceState& S,
                          std::array<Field, 2>& wv, std::array<Field, 2>& wb) {
    const Vec3 X = grid_positions(S), X0 = grid_positions(maps.S0);
    const double grow = std::exp(gamma * (maps.t - maps.t0));
    const double tol = 1e-12 * S.g().L();
    std::array<Vec3, 2> x;
    for (int m = 0; m < 2; ++m) {
        Vec3 D;
        for (int c = 0; c < 3; ++c) D[c] = maps.Y[m][c] - X0[c];
        // x = X - D(x), fixed point on the displacement
        Vec3& p = x[m];
        p = X;
        for (int it = 0; it < 50; ++it) {
            double change = 0.0;
            Vec3 q;
            for (int c = 0; c < 3; ++c) {
                q[c] = X[c] - sample_at(maps.S0, D[c], p);
                change = std::max(change, (q[c] - p[c]).abs().maxCoeff());
            }
            p = q;
            clamp_to_mesh(maps.S0, p);
            if (change < tol) break;
        }
    }
    for (int i = 0; i < 2; ++i) {
        const Field P = sample_at(maps.S0, W.Wp[i], x[0]), M = sample_at(maps.S0, W.Wm[i], x[1]);
        wv[i] = 0.5 * grow * (P + M);
        wb[i] = 0.5 * grow * (P - M);
    }
}

// ---- linearized forcing ----

LinearizedForcing linearize_forcing(const MhdState& st_eps, const MhdState& st_ideal) {
    if (st_eps.grid().size() != st_ideal.grid().size())
        fail(ErrorCode::ShapeMismatch, "linearize_forcing: grids differ");
    const Data xe = forcing_data(st_eps), x0 = forcing_data(st_ideal);
    Data xm;
    for (int k = 0; k < forcing_vars; ++k) xm[k] = 0.5 * (xe[k] + x0[k]);
    LinearizedForcing out;
    for (int k = 0; k < forcing_vars; ++k) {
        const Eigen::ArrayXd step = 1e-5 * xm[k].abs().max(1.0);
        Data up = xm, dn = xm;
        up[k] += step;
        dn[k] -= step;
        auto Fu = forcing_of(up), Fd = forcing_of(dn);
        for (int r = 0; r < 4; ++r) out.jac[r][k] = (Fu[r] - Fd[r]) / (2.0 * step);
    }
    out.f7v = 0.5 * (out.jac[0][0] + out.jac[1][1]);
    out.f7b = 0.5 * (out.jac[0][2] + out.jac[1][3]);
    Eigen::ArrayXd defect = Eigen::ArrayXd::Zero(xm[0].size());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            defect += (out.jac[2 + i][j] + out.jac[i][2 + j]).abs() + (out.jac[2 + i][2 + j] + out.jac[i][j]).abs();
    out.symmetry_defect = defect.size() ? defect.maxCoeff() : 0.0;
    return out;
}

double decomposition_residual(const LinearizedForcing& lin, const MhdState& st_eps, const MhdState& st_ideal) {
    const Data xe = forcing_data(st_eps), x0 = forcing_data(st_ideal);
    auto Fe = forcing_of(xe), F0 = forcing_of(x0);
    double m = 0.0;
    for (int r = 0; r < 4; ++r) {
        Eigen::ArrayXd res = Fe[r] - F0[r];
        for (int k = 0; k < forcing_vars; ++k) res -= lin.jac[r][k] * (xe[k] - x0[k]);
        m = std::max(m, res.abs().maxCoeff());
    }
    return m;
}

}  // namespace fsmhd
