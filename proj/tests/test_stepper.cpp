#include <doctest.h>

#include "fsmhd/errors.hpp"
#include "fsmhd/ops.hpp"
#include "fsmhd/stepper.hpp"
#include "mms.hpp"
#include "support.hpp"

using namespace fsmhd;
using namespace fsmhd::testing;

namespace {

double max_abs3(const Vec3& f) { return std::max({max_abs(f[0]), max_abs(f[1]), max_abs(f[2])}); }

// small smooth divergence-free state over h = a cos y vanishing towards the bottom
MhdState wavy_state(const GridPtr& g, double a, double amp) {
    MhdState st = rest_state(g, sample_surface(*g, [&](double y, double) { return a * std::cos(y); }));
    const double L = g->L();
    Vec3 v = zeros3(g->size()), b = zeros3(g->size());
    v[0] = sample(*g, [&](double y, double, double z) { return amp * std::sin(y) * std::pow(z + L, 3) / (L * L * L); });
    v[1] = sample(*g, [&](double y, double, double z) { return amp * std::cos(y) * std::pow(z + L, 2) / (L * L); });
    v[2] = sample(*g, [&](double y, double, double z) { return amp * std::cos(2 * y) * std::pow(z + L, 2) / (L * L); });
    b[0] = sample(*g, [&](double y, double, double z) { return amp * std::cos(y) * z * std::pow(z + L, 2) / (L * L * L); });
    b[2] = sample(*g, [&](double y, double, double z) { return amp * std::sin(y) * z * std::pow(z + L, 2) / (L * L * L); });
    st.v = project_div_free(v, st.S, ProjectionKind::Velocity);
    st.b = project_div_free(b, st.S, ProjectionKind::Magnetic);
    initialize_pressure(st);
    return st;
}

}  // namespace

TEST_CASE("rest state is a fixed point") {
    auto g = make_grid(1, 16, 33, 3.0);
    MhdState st = rest_state(g, Eigen::ArrayXd::Zero(g->nh()));
    st.eps = 0.01;
    StepConfig cfg;
    cfg.dt = 0.01;
    for (int n = 0; n < 3; ++n) st = step_viscous(st, cfg);
    CHECK(max_abs3(st.v) == 0.0);
    CHECK(max_abs3(st.b) == 0.0);
    CHECK(max_abs(st.S.h) == 0.0);
    CHECK(max_abs(st.q) == 0.0);
    CHECK(st.t == doctest::Approx(0.03));
}

TEST_CASE("pure diffusion of a Laplacian eigenmode") {
    // v2 = cos(y) sin(kappa (z + L)): zero stress on z = 0, zero at the bottom
    const double L = 2.0, eps = 0.05, kappa = pi / (2 * L), T = 0.5;
    auto g = make_grid(1, 16, 65, L);
    MhdState st = rest_state(g, Eigen::ArrayXd::Zero(g->nh()));
    st.eps = eps;
    st.v[1] = sample(*g, [&](double y, double, double z) { return std::cos(y) * std::sin(kappa * (z + L)); });
    const Field v0 = st.v[1];
    StepConfig cfg;
    cfg.dt = 0.005;
    cfg.advection = false;
    cfg.surface_motion = false;
    const int n = int(std::lround(T / cfg.dt));
    for (int i = 0; i < n; ++i) st = step_viscous(st, cfg);
    const double decay = std::exp(-eps * (1 + kappa * kappa) * T);
    const double amp = st.v[1].matrix().dot(v0.matrix()) / v0.matrix().squaredNorm();
    CHECK(std::abs(amp / decay - 1.0) < 0.01);
    CHECK(max_abs(st.v[1] - decay * v0) < 1e-3);
    CHECK(max_abs(st.v[0]) < 1e-10);
    CHECK(max_abs(st.v[2]) < 1e-10);
}

TEST_CASE("kinematic update") {
    auto g = make_grid(1, 32, 17, 2.0);
    SUBCASE("uniform vertical velocity lifts the surface") {
        Vec3 v = zeros3(g->size());
        v[2].setConstant(0.3);
        Eigen::ArrayXd h = kinematic_update(*g, Eigen::ArrayXd::Zero(g->nh()), v, 0.1);
        CHECK(max_abs(h - 0.03) < 1e-15);
    }
    SUBCASE("uniform horizontal velocity translates the surface") {
        Vec3 v = zeros3(g->size());
        v[0].setConstant(0.5);
        Eigen::ArrayXd h = sample_surface(*g, [](double y, double) { return 0.1 * std::cos(y); });
        double dt = 0.05;
        Eigen::ArrayXd e = sample_surface(*g, [&](double y, double) { return 0.1 * std::cos(y - 0.5 * dt); });
        Eigen::ArrayXd out = h;
        for (int i = 0; i < 20; ++i) out = kinematic_update(*g, out, v, dt);
        Eigen::ArrayXd ex = sample_surface(*g, [&](double y, double) { return 0.1 * std::cos(y - 0.5 * dt * 20); });
        CHECK(max_abs(kinematic_update(*g, h, v, dt) - e) < 1e-8);
        CHECK(max_abs(out - ex) < 1e-6);
    }
    SUBCASE("rate matches v . N") {
        MhdState st = wavy_state(g, 0.2, 0.1);
        Eigen::ArrayXd r = kinematic_rate(st.S, st.v);
        Eigen::ArrayXd hy = dh(*g, st.S.h, 0);
        CHECK(max_abs(r - (top(*g, st.v[2]) - top(*g, st.v[0]) * hy)) < 1e-13);
    }
}

TEST_CASE("zero viscosity step equals the ideal step") {
    auto g = make_grid(1, 16, 33, 3.0);
    MhdState st = wavy_state(g, 0.1, 0.05);
    StepConfig cfg;
    cfg.dt = 0.01;
    MhdState a = step_viscous(st, cfg), b = step_ideal(st, cfg);
    CHECK(max_abs3(a.v) > 0.0);
    for (int i = 0; i < 3; ++i) {
        CHECK(max_abs(a.v[i] - b.v[i]) == 0.0);
        CHECK(max_abs(a.b[i] - b.b[i]) == 0.0);
    }
    CHECK(max_abs(a.S.h - b.S.h) == 0.0);
}

TEST_CASE("steps keep both fields solenoidal and b zero on the surface") {
    auto g = make_grid(1, 16, 33, 3.0);
    MhdState st = wavy_state(g, 0.1, 0.1);
    st.eps = 0.02;
    StepConfig cfg;
    cfg.dt = 0.01;
    StepStats ss;
    for (int n = 0; n < 5; ++n) {
        st = step_viscous(st, cfg, nullptr, &ss);
        CHECK(ss.div_v <= 1e-8);
        CHECK(ss.div_b <= 1e-8);
        CHECK(divergence_norm(st.v, st.S) <= 1e-8);
        for (int i = 0; i < 3; ++i) CHECK(max_abs(top(*g, st.b[i])) == 0.0);
    }
    CHECK(ss.cfl > 0.0);
    CHECK(ss.elliptic_iterations > 0);
}

TEST_CASE("ideal energy is nearly conserved") {
    auto g = make_grid(1, 32, 49, 3.0);
    MhdState st = wavy_state(g, 0.05, 0.05);
    const double e0 = energy(st);
    StepConfig cfg;
    cfg.dt = 0.01;
    for (int n = 0; n < 20; ++n) st = step_ideal(st, cfg);
    CHECK(std::abs(energy(st) - e0) < 1e-3 * e0);
}

TEST_CASE("viscous energy decays") {
    auto g = make_grid(1, 16, 33, 3.0);
    MhdState st = wavy_state(g, 0.0, 0.1);
    st.eps = 0.05;
    StepConfig cfg;
    cfg.dt = 0.02;
    double e = energy(st);
    for (int n = 0; n < 5; ++n) {
        st = step_viscous(st, cfg);
        double en = energy(st);
        CHECK(en < e);
        e = en;
    }
}

TEST_CASE("guards: Taylor sign, CFL and dt") {
    auto g = make_grid(1, 16, 33, 3.0);
    MhdState st = wavy_state(g, 0.05, 0.05);
    StepConfig cfg;
    cfg.dt = 0.01;
    SUBCASE("Taylor sign") {
        st.q = sample(*g, [](double, double, double z) { return 2.0 * z; });
        try {
            step_ideal(st, cfg);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TaylorSignViolation);
        }
    }
    SUBCASE("CFL") {
        cfg.dt = 10.0;
        try {
            step_ideal(st, cfg);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::CflViolation);
        }
    }
    SUBCASE("dt") {
        cfg.dt = 0.0;
        CHECK_THROWS_AS(step_ideal(st, cfg), Error);
    }
    SUBCASE("surface tension skips the Taylor check") {
        st.sigma = 0.1;
        st.q = sample(*g, [](double, double, double z) { return 2.0 * z; });
        CHECK_NOTHROW(step_ideal(st, cfg));
    }
}

TEST_CASE("manufactured solution: temporal order") {
    Mms m;
    auto g = make_grid(1, 16, 129, m.L);
    const Forcing f = m.forcing();
    std::vector<double> ev, eb;
    for (double dt : {0.025, 0.0125, 0.00625}) {
        MhdState st = m.initial(g);
        StepConfig cfg;
        cfg.dt = dt;
        for (int n = 0; n < int(std::lround(0.1 / dt)); ++n) st = step_viscous(st, cfg, &f);
        auto e = m.errors(st);
        ev.push_back(e.v);
        eb.push_back(e.b);
    }
    for (int k = 0; k < 2; ++k) {
        CHECK(std::log2(ev[k] / ev[k + 1]) >= 1.8);
        CHECK(std::log2(eb[k] / eb[k + 1]) >= 1.8);
    }
}

TEST_CASE("manufactured solution: vertical spatial order") {
    Mms m;
    std::vector<double> lz, lv, lb;
    for (int Nz : {33, 65, 129}) {
        auto g = make_grid(1, 16, Nz, m.L);
        const Forcing f = m.forcing();
        MhdState st = m.initial(g);
        StepConfig cfg;
        cfg.dt = 2.5e-4;
        for (int n = 0; n < 40; ++n) st = step_viscous(st, cfg, &f);
        Vec3 v, b;
        Field q;
        m.sample(st.S, st.t, v, b, q);
        for (int i = 0; i < 3; ++i) {
            v[i] -= st.v[i];
            b[i] -= st.b[i];
        }
        lz.push_back(std::log(g->dz()));
        lv.push_back(std::log(l2(*g, v)));
        lb.push_back(std::log(l2(*g, b)));
    }
    auto slope = [&](const std::vector<double>& y) {
        const double mx = (lz[0] + lz[1] + lz[2]) / 3, my = (y[0] + y[1] + y[2]) / 3;
        double sxy = 0, sxx = 0;
        for (int k = 0; k < 3; ++k) {
            sxy += (lz[k] - mx) * (y[k] - my);
            sxx += (lz[k] - mx) * (lz[k] - mx);
        }
        return sxy / sxx;
    };
    CHECK(slope(lv) >= 5.0);
    CHECK(slope(lb) >= 5.0);
}

TEST_CASE("Alfven pulses travel along a sheared background field") {
    // v = f e2, b = B0(z) e1 + g e2 is an exact solution with z+- = f +- g moving at -+B0(z)
    const double L = 3.0;
    auto g = make_grid(1, 64, 49, L);
    MhdState st = rest_state(g, Eigen::ArrayXd::Zero(g->nh()));
    auto B0 = [&](double z) { return 0.5 * std::pow(std::sin(pi * z / L), 2); };
    auto env = [&](double z) { return std::pow(std::sin(pi * z / L), 2); };
    auto pulse = [](double y) { return std::exp(-4.0 * (1 - std::cos(y - pi))); };
    auto zp0 = [&](double y, double z) { return 0.1 * env(z) * pulse(y); };
    auto zm0 = [&](double y, double z) { return 0.05 * env(z) * pulse(y + 1.0); };
    st.b[0] = sample(*g, [&](double, double, double z) { return B0(z); });
    st.v[1] = sample(*g, [&](double y, double, double z) { return 0.5 * (zp0(y, z) + zm0(y, z)); });
    st.b[1] = sample(*g, [&](double y, double, double z) { return 0.5 * (zp0(y, z) - zm0(y, z)); });
    StepConfig cfg;
    cfg.dt = 0.01;
    cfg.surface_motion = false;
    const double T = 1.0;
    for (int n = 0; n < 100; ++n) st = step_ideal(st, cfg);
    Field zp = st.v[1] + st.b[1], zm = st.v[1] - st.b[1];
    Field ezp = sample(*g, [&](double y, double, double z) { return zp0(y + B0(z) * T, z); });
    Field ezm = sample(*g, [&](double y, double, double z) { return zm0(y - B0(z) * T, z); });
    CHECK(l2(*g, Field(zp - ezp)) <= 0.02 * l2(*g, ezp));
    CHECK(l2(*g, Field(zm - ezm)) <= 0.02 * l2(*g, ezm));
    CHECK(max_abs(st.v[0]) < 1e-10);
    CHECK(max_abs(st.S.h) == 0.0);
}

TEST_CASE("ideal energy drift scales with dt squared") {
    auto g = make_grid(1, 16, 49, 3.0);
    MhdState st0 = wavy_state(g, 0.05, 0.1);
    const double e0 = energy(st0);
    std::vector<double> drift;
    for (double dt : {0.02, 0.01}) {
        MhdState st = st0;
        StepConfig cfg;
        cfg.dt = dt;
        const int n = int(std::lround(0.4 / dt));
        for (int i = 0; i < n; ++i) st = step_ideal(st, cfg);
        drift.push_back(std::abs(energy(st) - e0) / n);
        CHECK(drift.back() <= 5 * dt * dt);
    }
    CHECK(drift[1] < drift[0]);
}
