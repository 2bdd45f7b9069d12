#include "fsmhd/stepper.hpp"

#include "fsmhd/errors.hpp"
#include "fsmhd/krylov.hpp"
#include "fsmhd/modal.hpp"
#include "fsmhd/ops.hpp"
#include "fsmhd/vort_algebra.hpp"

#include <cmath>
#include <sstream>

namespace fsmhd {

namespace {

// explicit SSP-RK3 and an L-stable DIRK sharing its weights and order-2 conditions
constexpr double AE[3][3] = {{0, 0, 0}, {1, 0, 0}, {0.25, 0.25, 0}};
constexpr double AI[3][3] = {{0.25, 0, 0}, {0.5, 0.25, 0}, {13.0 / 64, 3.0 / 64, 0.25}};
constexpr double BW[3] = {1.0 / 6, 1.0 / 6, 2.0 / 3};
constexpr double CE[3] = {0.0, 1.0, 0.5};
constexpr double CI[3] = {0.25, 0.75, 0.5};

std::string key_of(const char* tag, double c) {
    std::ostringstream os;
    os.precision(17);
    os << tag << c;
    return os.str();
}

void axpy(Vec3& y, double a, const Vec3& x) {
    for (int i = 0; i < 3; ++i) y[i] += a * x[i];
}

ForcingTerms empty_terms(const HalfSpaceGrid& g) {
    ForcingTerms t;
    t.fv = zeros3(g.size());
    t.fb = zeros3(g.size());
    t.fh = Eigen::ArrayXd::Zero(g.nh());
    t.dzv_top = {Eigen::ArrayXd::Zero(g.nh()), Eigen::ArrayXd::Zero(g.nh())};
    t.q_top = Eigen::ArrayXd::Zero(g.nh());
    return t;
}

ForcingTerms eval_forcing(const Forcing* f, double t, const MhdState& st) {
    ForcingTerms out = empty_terms(st.grid());
    if (f && *f) (*f)(t, st, out);
    return out;
}

struct Rates {
    Vec3 ev, eb, iv, ib;
    Eigen::ArrayXd eh;
    Field q;
    int iterations = 0;
};

Field pressure_for(const MhdState& st, const StepConfig& cfg, const ForcingTerms& ft, int* iters) {
    const SurfaceState& S = st.S;
    Vec3 m = ft.fv;
    if (cfg.advection) {
        Vec3 a = convective(st.v, st.v, S), c = convective(st.b, st.b, S);
        for (int i = 0; i < 3; ++i) m[i] += c[i] - a[i];
    }
    EllipticStats es;
    Field q = solve_dirichlet(S, div_phi(m, S), dynamic_pressure_data(st) + ft.q_top, cfg.elliptic, &es);
    if (iters) *iters += es.iterations;
    return q;
}

// explicit and implicit right-hand sides at a stage; st.S must carry phi_t of the stage
Rates rates_at(MhdState& st, const StepConfig& cfg, const ForcingTerms& ft) {
    const HalfSpaceGrid& g = st.grid();
    const SurfaceState& S = st.S;
    const int nh = g.nh();
    Rates r;
    r.q = pressure_for(st, cfg, ft, &r.iterations);
    st.q = r.q;
    Vec3 gq = grad_phi(r.q, S);
    const Field w = S.phit / S.J;
    r.ev = ft.fv;
    r.eb = ft.fb;
    Vec3 av, bb, vb, bv;
    if (cfg.advection) {
        av = convective(st.v, st.v, S);
        bb = convective(st.b, st.b, S);
        vb = convective(st.v, st.b, S);
        bv = convective(st.b, st.v, S);
    }
    for (int i = 0; i < 3; ++i) {
        r.ev[i] += w * dz(g, st.v[i]) - gq[i];
        r.eb[i] += w * dz(g, st.b[i]);
        if (cfg.advection) {
            r.ev[i] += bb[i] - av[i];
            r.eb[i] += bv[i] - vb[i];
        }
        r.ev[i].head(nh).setZero();
        r.eb[i].head(nh).setZero();
        r.eb[i].tail(nh).setZero();
    }
    r.iv = zeros3(g.size());
    r.ib = zeros3(g.size());
    if (st.eps != 0.0) {
        for (int i = 0; i < 3; ++i) {
            r.iv[i] = st.eps * lap_phi(st.v[i], S);
            r.ib[i] = st.eps * lap_phi(st.b[i], S);
            r.iv[i].head(nh).setZero();
            r.ib[i].head(nh).setZero();
            r.ib[i].tail(nh).setZero();
        }
    }
    r.eh = cfg.surface_motion ? Eigen::ArrayXd(S.ht) : Eigen::ArrayXd(Eigen::ArrayXd::Zero(nh));
    return r;
}

void check_preconditions(const MhdState& st, const StepConfig& cfg, StepStats* stats) {
    if (!(cfg.dt > 0.0)) fail(ErrorCode::ConfigError, "dt must be positive");
    const double c = cfl_number(st, cfg.dt);
    if (stats) stats->cfl = c;
    if (c > cfg.cfl_safety)
        fail(ErrorCode::CflViolation, "advective CFL " + std::to_string(c) + " exceeds " + std::to_string(cfg.cfl_safety));
    if (st.sigma == 0.0) {
        const double m = taylor_sign_margin(st);
        if (stats) stats->taylor_margin = m;
        if (m < cfg.c0_min_factor * st.g)
            fail(ErrorCode::TaylorSignViolation, "Taylor sign margin " + std::to_string(m) + " below " +
                                                     std::to_string(cfg.c0_min_factor * st.g));
    } else if (stats) {
        stats->taylor_margin = taylor_sign_margin(st);
    }
}

MhdState advance(const MhdState& st0, const StepConfig& cfg, const Forcing* forcing, StepStats* stats, bool ideal) {
    const HalfSpaceGrid& g = st0.grid();
    const int nh = g.nh();
    const double dt = cfg.dt;
    const double eps = ideal ? 0.0 : st0.eps;
    check_preconditions(st0, cfg, stats);
    int iters = 0;

    Rates R[3];
    for (int i = 0; i < 3; ++i) {
        MhdState s = st0;
        s.eps = eps;
        s.t = st0.t + CE[i] * dt;
        Eigen::ArrayXd h = st0.S.h;
        Vec3 v = st0.v, b = st0.b;
        for (int j = 0; j < i; ++j) {
            h += dt * AE[i][j] * R[j].eh;
            axpy(v, dt * AE[i][j], R[j].ev);
            axpy(b, dt * AE[i][j], R[j].eb);
            if (eps != 0.0) {
                axpy(v, dt * AI[i][j], R[j].iv);
                axpy(b, dt * AI[i][j], R[j].ib);
            }
        }
        if (cfg.surface_motion && i > 0) s.S = build_extension(st0.S.grid, h, st0.S.A);
        if (eps != 0.0) {
            const double c = dt * AI[i][i] * eps;
            MhdState pre = s;
            pre.v = v;
            pre.b = b;
            pre.t = st0.t + CI[i] * dt;
            ForcingTerms fi = eval_forcing(forcing, pre.t, pre);
            int it = 0;
            v = solve_diffusion_v(s.S, v, c, &fi.dzv_top, cfg.elliptic, &it);
            iters += it;
            b = solve_diffusion_b(s.S, b, c, cfg.elliptic, &it);
            iters += it;
        }
        for (auto& c : b) c.tail(nh).setZero();
        s.v = v;
        s.b = b;
        ForcingTerms fe = eval_forcing(forcing, s.t, s);
        Eigen::ArrayXd ht = kinematic_rate(s.S, v);
        if (cfg.surface_motion) ht += fe.fh;
        set_surface_velocity(s.S, ht);
        R[i] = rates_at(s, cfg, fe);
        iters += R[i].iterations;
    }

    MhdState out = st0;
    out.t = st0.t + dt;
    Eigen::ArrayXd h = st0.S.h;
    for (int i = 0; i < 3; ++i) {
        h += dt * BW[i] * R[i].eh;
        axpy(out.v, dt * BW[i], R[i].ev);
        axpy(out.b, dt * BW[i], R[i].eb);
        if (eps != 0.0) {
            axpy(out.v, dt * BW[i], R[i].iv);
            axpy(out.b, dt * BW[i], R[i].ib);
        }
    }
    if (cfg.surface_motion) out.S = build_extension(st0.S.grid, h, st0.S.A);
    for (auto& c : out.b) c.tail(nh).setZero();
    ForcingTerms fe = eval_forcing(forcing, out.t, out);
    if (eps != 0.0) {
        // the weighted combination leaves the stress rows unsatisfied; restore them on z = 0
        int it = 0;
        out.v = solve_diffusion_v(out.S, out.v, 0.0, &fe.dzv_top, cfg.elliptic, &it);
        iters += it;
    }
    if (cfg.project) {
        ProjectionStats ps;
        out.v = project_div_free(out.v, out.S, ProjectionKind::Velocity, &ps);
        iters += ps.iterations;
        out.b = project_div_free(out.b, out.S, ProjectionKind::Magnetic, &ps);
        iters += ps.iterations;
    }
    Eigen::ArrayXd ht = kinematic_rate(out.S, out.v);
    if (cfg.surface_motion) ht += fe.fh;
    else ht.setZero();
    set_surface_velocity(out.S, ht);
    out.eps = eps;
    out.q = pressure_for(out, cfg, fe, &iters);
    out.eps = st0.eps;
    if (stats) {
        stats->div_v = divergence_norm(out.v, out.S);
        stats->div_b = divergence_norm(out.b, out.S);
        stats->energy = energy(out);
        stats->elliptic_iterations = iters;
    }
    return out;
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd diffusion_block(const HalfSpaceGrid& g, double A, double c, double k1, double k2, bool neumann_top) {
    const int n = g.Nz();
    Eigen::MatrixXd B = -c * g.D2() / (A * A);
    B.diagonal().array() += 1.0 + c * (k1 * k1 + k2 * k2);
    B.row(0).setZero();
    B(0, 0) = 1.0;
    if (neumann_top) {
        B.row(n - 1) = g.D1().row(n - 1);
    } else {
        B.row(n - 1).setZero();
        B(n - 1, n - 1) = 1.0;
    }
    return B;
}

}  // namespace

Vec3 solve_diffusion_v(const SurfaceState& S, const Vec3& rhs, double c, const std::array<Eigen::ArrayXd, 2>* dzv_top,
                       const EllipticOptions& opt, int* iterations) {
    const HalfSpaceGrid& g = S.g();
    const Eigen::Index N = g.size();
    const int nh = g.nh();
    const double A = S.A;
    auto pre = cached_modal(key_of("diff-v", c), S.grid, A, [&g, A, c](double k1, double k2) {
        return diffusion_block(g, A, c, k1, k2, true);
    });
    const Eigen::ArrayXd p1 = top(g, S.p1), p2 = top(g, S.p2), J = top(g, S.J);
    auto unpack = [&](const Eigen::VectorXd& x) {
        Vec3 u;
        for (int i = 0; i < 3; ++i) u[i] = x.segment(i * N, N).array();
        return u;
    };
    auto op = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Vec3 u = unpack(x);
        Tangential T = tangential_trace(u, g);
        auto uc = boundary_normals_from_compat(T, S);
        Eigen::VectorXd out(3 * N);
        std::array<Eigen::ArrayXd, 3> uz;
        for (int i = 0; i < 3; ++i) {
            Field fz = dz(g, u[i]);
            uz[i] = fz.tail(nh);
            Field r = u[i] - c * lap_phi(u[i], S);
            r.head(nh) = u[i].head(nh);
            out.segment(i * N, N) = r.matrix();
        }
        out.segment(N - nh, nh) = (uz[0] - uc[0]).matrix();
        out.segment(2 * N - nh, nh) = (uz[1] - uc[1]).matrix();
        out.segment(3 * N - nh, nh) = (uz[2] - (p1 * uz[0] + p2 * uz[1] - J * (T.d[0][0] + T.d[1][1]))).matrix();
        return out;
    };
    auto M = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::VectorXd out(3 * N);
        for (int i = 0; i < 3; ++i) out.segment(i * N, N) = pre->solve(x.segment(i * N, N).array()).matrix();
        return out;
    };
    Eigen::VectorXd b(3 * N), x(3 * N);
    for (int i = 0; i < 3; ++i) {
        b.segment(i * N, N) = rhs[i].matrix();
        x.segment(i * N, N) = rhs[i].matrix();
        b.segment((i + 1) * N - nh, nh).setZero();
    }
    if (dzv_top) {
        b.segment(N - nh, nh) = (*dzv_top)[0].matrix();
        b.segment(2 * N - nh, nh) = (*dzv_top)[1].matrix();
    }
    KrylovResult kr = gmres(op, M, b, x, std::min(opt.tol, 1e-12), opt.max_iter, 60, 1e-300);
    if (!kr.converged)
        fail(ErrorCode::EllipticSolveFailure, "velocity diffusion solve: relative residual " + std::to_string(kr.rel_residual));
    if (iterations) *iterations = kr.iterations;
    return unpack(x);
}

Vec3 solve_diffusion_b(const SurfaceState& S, const Vec3& rhs, double c, const EllipticOptions& opt, int* iterations) {
    const HalfSpaceGrid& g = S.g();
    const int nh = g.nh();
    const double A = S.A;
    auto pre = cached_modal(key_of("diff-b", c), S.grid, A, [&g, A, c](double k1, double k2) {
        return diffusion_block(g, A, c, k1, k2, false);
    });
    Vec3 out;
    int total = 0;
    for (int i = 0; i < 3; ++i) {
        auto op = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            Field u = x.array();
            Field r = u - c * lap_phi(u, S);
            r.head(nh) = u.head(nh);
            r.tail(nh) = u.tail(nh);
            return r.matrix();
        };
        auto M = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return pre->solve(x.array()).matrix(); };
        Eigen::VectorXd b = rhs[i].matrix();
        b.tail(nh).setZero();
        Eigen::VectorXd x = b;
        KrylovResult kr = gmres(op, M, b, x, std::min(opt.tol, 1e-12), opt.max_iter, 50, 1e-300);
        if (!kr.converged)
            fail(ErrorCode::EllipticSolveFailure, "magnetic diffusion solve: relative residual " + std::to_string(kr.rel_residual));
        total += kr.iterations;
        out[i] = x.array();
    }
    if (iterations) *iterations = total;
    return out;
}

Eigen::ArrayXd kinematic_rate(const SurfaceState& S, const Vec3& v) {
    const HalfSpaceGrid& g = S.g();
    Eigen::ArrayXd r = Eigen::ArrayXd::Zero(g.nh());
    for (int i = 0; i < 3; ++i) r += top(g, v[i]) * S.N[i];
    return r;
}

Eigen::ArrayXd kinematic_update(const HalfSpaceGrid& g, const Eigen::ArrayXd& h, const Vec3& v, double dt) {
    const Eigen::ArrayXd v1 = top(g, v[0]), v2 = top(g, v[1]), v3 = top(g, v[2]);
    auto rate = [&](const Eigen::ArrayXd& hh) -> Eigen::ArrayXd {
        Eigen::ArrayXd r = v3 - v1 * dh(g, hh, 0);
        if (g.d_h() == 2) r -= v2 * dh(g, hh, 1);
        return r;
    };
    Eigen::ArrayXd k[3];
    for (int i = 0; i < 3; ++i) {
        Eigen::ArrayXd s = h;
        for (int j = 0; j < i; ++j) s += dt * AE[i][j] * k[j];
        k[i] = rate(s);
    }
    return h + dt * (BW[0] * k[0] + BW[1] * k[1] + BW[2] * k[2]);
}

double energy(const MhdState& st) {
    const HalfSpaceGrid& g = st.grid();
    Field dens = Field::Zero(g.size());
    for (int i = 0; i < 3; ++i) dens += st.v[i].square() + st.b[i].square();
    double e = integrate(g, dens * st.S.J) + st.g * integrate_surface(g, st.S.h.square());
    if (st.sigma != 0.0) {
        Eigen::ArrayXd h1 = dh(g, st.S.h, 0), h2 = dh(g, st.S.h, 1);
        e += 2.0 * st.sigma * integrate_surface(g, (1.0 + h1.square() + h2.square()).sqrt() - 1.0);
    }
    return e;
}

double cfl_number(const MhdState& st, double dt) {
    const HalfSpaceGrid& g = st.grid();
    const SurfaceState& S = st.S;
    Field h = st.v[0].abs() + st.b[0].abs();
    if (g.d_h() == 2) h += st.v[1].abs() + st.b[1].abs();
    Field wv = ((st.v[2] - S.p1 * st.v[0] - S.p2 * st.v[1] - S.phit) / S.J).abs();
    Field wb = ((st.b[2] - S.p1 * st.b[0] - S.p2 * st.b[1]) / S.J).abs();
    Field c = h / g.dy() + (wv + wb) / g.dz();
    return dt * c.maxCoeff();
}

void initialize_pressure(MhdState& st, const EllipticOptions& opt, const Vec3* force) {
    set_surface_velocity(st.S, kinematic_rate(st.S, st.v));
    st.q = solve_pressure_dirichlet(st, opt, nullptr, force);
}

MhdState step_viscous(const MhdState& st, const StepConfig& cfg, const Forcing* forcing, StepStats* stats) {
    return advance(st, cfg, forcing, stats, cfg.regime == Regime::Ideal || cfg.scheme == Scheme::ExplicitRk3);
}

MhdState step_ideal(const MhdState& st, const StepConfig& cfg, const Forcing* forcing, StepStats* stats) {
    return advance(st, cfg, forcing, stats, true);
}

}  // namespace fsmhd
