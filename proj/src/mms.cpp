#include "fsmhd/mms.hpp"

#include "fsmhd/errors.hpp"
#include "fsmhd/ops.hpp"
#include "fsmhd/vort_algebra.hpp"
#include "jet.hpp"

#include <cmath>

namespace fsmhd {

using detail::Jet;

namespace {

struct Point {
    Jet v[3], b[3], q, h, hy;
};

// all quantities as jets in (t, y, x3)
Point point_at(const Mms& m, double t_, double y_, double x3_) {
    const double L = m.L, U = m.U;
    const Jet t = Jet::var(t_, 0), y = Jet::var(y_, 1), x3 = Jet::var(x3_, 2);
    const Jet s = pow((1.0 / L) * (x3 + L), 4), s3 = (4.0 / L) * pow((1.0 / L) * (x3 + L), 3);
    const Jet amp = m.a0 * (1.0 + 0.5 * sin(t));
    Point p;
    p.h = amp * cos(y);
    p.hy = -amp * sin(y);
    // psi = U s sin(y + t)
    p.v[0] = U * s3 * sin(y + t);
    p.v[1] = 0.5 * U * s * cos(2.0 * y - t);
    p.v[2] = -U * s * cos(y + t);
    // Phi = (x3 - h)^2 G, G = U s cos(y - t)
    const Jet w = x3 - p.h;
    const Jet G = U * s * cos(y - t), G3 = U * s3 * cos(y - t), Gy = -U * s * sin(y - t);
    p.b[0] = 2.0 * w * G + w * w * G3;
    p.b[1] = 0.5 * U * w * s * cos(y + 2.0 * t);
    p.b[2] = 2.0 * w * p.hy * G - w * w * Gy;
    p.q = U * pow((1.0 / L) * (x3 + L), 2) * sin(y - t) + 0.3 * U * pow((1.0 / L) * (x3 + L), 2);
    return p;
}

double ddt(const Jet& f) { return f.d[0]; }
// physical derivative along axis 0 (y1), 1 (y2, absent) or 2 (x3)
double dx(const Jet& f, int j) { return j == 0 ? f.d[1] : j == 2 ? f.d[2] : 0.0; }

template <class F>
void each_point(const SurfaceState& S, F&& fn) {
    const HalfSpaceGrid& g = S.g();
    for (int iz = 0; iz < g.Nz(); ++iz)
        for (int ih = 0; ih < g.nh(); ++ih) {
            const Eigen::Index k = Eigen::Index(iz) * g.nh() + ih;
            fn(k, g.y_of(ih, 0), S.A * g.z_nodes()[iz] + S.eta[k]);
        }
}

}  // namespace

Eigen::ArrayXd Mms::h_exact(const HalfSpaceGrid& g, double t) const {
    Eigen::ArrayXd out(g.nh());
    for (int ih = 0; ih < g.nh(); ++ih) out[ih] = point_at(*this, t, g.y_of(ih, 0), 0.0).h.v;
    return out;
}

void Mms::sample(const SurfaceState& S, double t, Vec3& v, Vec3& b, Field& q) const {
    const Eigen::Index N = S.g().size();
    v = zeros3(N);
    b = zeros3(N);
    q = Field::Zero(N);
    each_point(S, [&](Eigen::Index k, double y, double x3) {
        Point p = point_at(*this, t, y, x3);
        for (int i = 0; i < 3; ++i) {
            v[i][k] = p.v[i].v;
            b[i][k] = p.b[i].v;
        }
        q[k] = p.q.v;
    });
}

MhdState Mms::initial(const GridPtr& g) const {
    MhdState st = rest_state(g, h_exact(*g, 0.0));
    st.eps = eps;
    st.g = grav;
    sample(st.S, 0.0, st.v, st.b, st.q);
    for (auto& c : st.b) c.tail(g->nh()).setZero();
    st.v = project_div_free(st.v, st.S, ProjectionKind::Velocity);
    st.b = project_div_free(st.b, st.S, ProjectionKind::Magnetic);
    initialize_pressure(st);
    return st;
}

Forcing Mms::forcing() const {
    const Mms m = *this;
    return [m](double t, const MhdState& st, ForcingTerms& out) {
        const SurfaceState& S = st.S;
        const HalfSpaceGrid& g = S.g();
        const double e = st.eps;
        each_point(S, [&](Eigen::Index k, double y, double x3) {
            Point p = point_at(m, t, y, x3);
            for (int i = 0; i < 3; ++i) {
                double fv = ddt(p.v[i]) + dx(p.q, i) - e * p.v[i].lap();
                double fb = ddt(p.b[i]) - e * p.b[i].lap();
                for (int j = 0; j < 3; ++j) {
                    fv += p.v[j].v * dx(p.v[i], j) - p.b[j].v * dx(p.b[i], j);
                    fb += p.v[j].v * dx(p.b[i], j) - p.b[j].v * dx(p.v[i], j);
                }
                out.fv[i][k] = fv;
                out.fb[i][k] = fb;
            }
        });
        Tangential T;
        for (auto& r : T.d)
            for (auto& c : r) c.resize(g.nh());
        Eigen::ArrayXd Jt = top(g, S.J);
        for (int ih = 0; ih < g.nh(); ++ih) {
            const double y = g.y_of(ih, 0);
            const double hs = point_at(m, t, y, 0.0).h.v;
            Point p = point_at(m, t, y, hs);
            const double hy = p.hy.v;
            out.fh[ih] = ddt(p.h) - (p.v[2].v - p.v[0].v * hy);
            // tangential derivatives of the trace along the exact surface
            for (int i = 0; i < 3; ++i) {
                T.d[i][0][ih] = dx(p.v[i], 0) + hy * dx(p.v[i], 2);
                T.d[i][1][ih] = 0.0;
            }
            // 2 eps n.S(v)n with n = (-hy, 0, 1)/|N|
            const double nn = 1.0 + hy * hy;
            const double nv[3] = {-hy, 0.0, 1.0};
            double sn = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) sn += nv[i] * 0.5 * (dx(p.v[i], j) + dx(p.v[j], i)) * nv[j];
            out.q_top[ih] = p.q.v - m.grav * hs - 2.0 * e * sn / nn;
        }
        auto uc = boundary_normals_from_compat(T, S);
        for (int ih = 0; ih < g.nh(); ++ih) {
            const double y = g.y_of(ih, 0);
            Point p = point_at(m, t, y, point_at(m, t, y, 0.0).h.v);
            out.dzv_top[0][ih] = Jt[ih] * dx(p.v[0], 2) - uc[0][ih];
            out.dzv_top[1][ih] = Jt[ih] * dx(p.v[1], 2) - uc[1][ih];
        }
    };
}

Mms::Errors Mms::errors(const MhdState& st) const {
    Vec3 v, b;
    Field q;
    sample(st.S, st.t, v, b, q);
    Errors e;
    for (int i = 0; i < 3; ++i) {
        e.v = std::max(e.v, (st.v[i] - v[i]).abs().maxCoeff());
        e.b = std::max(e.b, (st.b[i] - b[i]).abs().maxCoeff());
    }
    e.h = (st.S.h - h_exact(st.grid(), st.t)).abs().maxCoeff();
    return e;
}

MmsStudy mms_temporal_study(const Mms& m, const GridPtr& g, double dt0, double T, int levels, const StepConfig& base) {
    if (levels < 2 || !(dt0 > 0) || !(T > 0)) fail(ErrorCode::ConfigError, "MMS study needs two levels and positive dt, T");
    const Forcing f = m.forcing();
    MmsStudy out;
    double dt = dt0;
    for (int l = 0; l < levels; ++l, dt *= 0.5) {
        MhdState st = m.initial(g);
        StepConfig cfg = base;
        cfg.dt = dt;
        cfg.regime = Regime::Viscous;
        const int n = int(std::lround(T / dt));
        for (int k = 0; k < n; ++k) st = step_viscous(st, cfg, &f);
        out.dt.push_back(dt);
        out.errors.push_back(m.errors(st));
    }
    out.min_order = INFINITY;
    for (int l = 0; l + 1 < levels; ++l) {
        out.order_v.push_back(std::log2(out.errors[l].v / out.errors[l + 1].v));
        out.order_b.push_back(std::log2(out.errors[l].b / out.errors[l + 1].b));
        out.min_order = std::min({out.min_order, out.order_v.back(), out.order_b.back()});
    }
    return out;
}

}  // namespace fsmhd
