#include <doctest.h>

#include "fsmhd/errors.hpp"
#include "fsmhd/ops.hpp"
#include "fsmhd/pressure.hpp"
#include "support.hpp"

using namespace fsmhd;
using namespace fsmhd::testing;

namespace {

SurfaceState cos_surface(const GridPtr& g, double a) {
    return build_extension(g, sample_surface(*g, [&](double y, double) { return a * std::cos(y); }), 1.0);
}

}  // namespace

TEST_CASE("rest state gives zero pressure") {
    auto g = make_grid(1, 32, 48, 3.0);
    MhdState st = rest_state(g, Eigen::ArrayXd::Zero(g->nh()));
    CHECK(max_abs(solve_pressure_dirichlet(st)) == 0.0);
    CHECK(max_abs(solve_pressure_neumann(st, zeros3(g->size()))) == 0.0);
}

TEST_CASE("coefficient matrix is symmetric positive definite and the form is symmetric") {
    auto g = make_grid(1, 32, 48, 3.0);
    SurfaceState S = cos_surface(g, 0.2);
    CHECK(coefficient_min_eigenvalue(S) > 0.0);
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    for (int s = 0; s < 3; ++s) {
        double a = nd(rng), b = nd(rng);
        Field u = sample(*g, [&](double y, double, double z) { return std::sin(y + a) * std::exp(z * b * b) + z * z; });
        Field w = sample(*g, [&](double y, double, double z) { return std::cos(2 * y + b) * std::sin(z + a); });
        double uw = energy_form(S, u, w), wu = energy_form(S, w, u);
        CHECK(std::abs(uw - wu) <= 1e-12 * std::max(1.0, std::abs(uw)));
    }
}

TEST_CASE("Dirichlet solve converges at scheme order") {
    const double L = 2.0;
    auto qs = [&](double y, double, double z) { return std::sin(y) * std::cos(2 * (z + L)); };
    std::vector<double> errs;
    for (int Nz : {25, 49, 97}) {
        auto g = make_grid(1, 16, Nz, L);
        SurfaceState S = cos_surface(g, 0.0);
        Field exact = sample(*g, qs);
        Field rhs = -5.0 * exact;
        Field q = solve_dirichlet(S, rhs, top(*g, exact));
        errs.push_back(max_abs(q - exact));
    }
    double r1 = std::log2(errs[0] / errs[1]), r2 = std::log2(errs[1] / errs[2]);
    CHECK(r1 > 5.0);
    CHECK(r2 > 5.0);
    CHECK(errs[2] < 1e-9);
}

TEST_CASE("Dirichlet solve on a curved surface against a mapped manufactured solution") {
    const double L = 4.0;
    CosSurface cs{0.1, 1.0};
    // Q(y, x3) = cos(y)(x3 + L)^2, so d_z Q = 0 at the bottom where eta vanishes
    auto Q = [&](double y, double x3) { return std::cos(y) * (x3 + L) * (x3 + L); };
    auto lapQ = [&](double y, double x3) { return -std::cos(y) * (x3 + L) * (x3 + L) + 2 * std::cos(y); };
    std::vector<double> errs;
    for (int Nz : {65, 129, 257}) {
        auto g = make_grid(1, 64, Nz, L);
        SurfaceState S = cos_surface(g, 0.1);
        Field exact = sample(*g, [&](double y, double, double z) { return Q(y, cs.phi(y, z)); });
        Field rhs = sample(*g, [&](double y, double, double z) { return lapQ(y, cs.phi(y, z)); });
        EllipticStats st;
        Field q = solve_dirichlet(S, rhs, top(*g, exact), {}, &st);
        errs.push_back(max_abs(q - exact));
        CHECK(st.iterations < 60);
    }
    CHECK(std::log2(errs[0] / errs[1]) > 5.0);
    CHECK(std::log2(errs[1] / errs[2]) > 5.0);
    CHECK(errs[2] < 1e-7);
}

TEST_CASE("flat Dirichlet solve agrees with a direct per-mode solve") {
    auto g = make_grid(1, 32, 48, 3.0);
    SurfaceState S = cos_surface(g, 0.0);
    Field rhs = sample(*g, [](double y, double, double z) { return std::sin(3 * y) * std::exp(z) + z * std::cos(y) + 0.5; });
    Eigen::ArrayXd top_values = sample_surface(*g, [](double y, double) { return std::cos(2 * y) + 0.1; });
    Field q = solve_dirichlet(S, rhs, top_values, {1e-12, 500});
    // direct: per complex mode, dense collocation with the same boundary rows
    Field r = rhs;
    r.head(g->nh()).setZero();
    r.tail(g->nh()) = top_values;
    CField c = g->fft(r);
    const int Nz = g->Nz(), nhc = g->nhc();
    for (int m = 0; m < nhc; ++m) {
        Eigen::MatrixXd B = g->D2();
        B.diagonal().array() -= g->k(0)[m] * g->k(0)[m];
        B.row(0) = g->D1().row(0);
        B.row(Nz - 1).setZero();
        B(Nz - 1, Nz - 1) = 1.0;
        Eigen::MatrixXcd Bc = B.cast<std::complex<double>>();
        Eigen::VectorXcd x(Nz);
        for (int l = 0; l < Nz; ++l) x[l] = c[Eigen::Index(l) * nhc + m];
        Eigen::VectorXcd y = Bc.partialPivLu().solve(x);
        for (int l = 0; l < Nz; ++l) c[Eigen::Index(l) * nhc + m] = y[l];
    }
    Field direct = g->ifft(c);
    CHECK(max_abs(q - direct) < 1e-10);
}

TEST_CASE("pressure of a steady cellular flow") {
    // v = (sin y1 cos y2, -cos y1 sin y2, 0): v.grad v = -grad p0, p0 = (cos 2y1 + cos 2y2)/4
    const double L = 3.0;
    auto g = make_grid(2, 16, 64, L);
    MhdState st = rest_state(g, Eigen::ArrayXd::Zero(g->nh()));
    st.v[0] = sample(*g, [](double y1, double y2, double) { return std::sin(y1) * std::cos(y2); });
    st.v[1] = sample(*g, [](double y1, double y2, double) { return -std::cos(y1) * std::sin(y2); });
    Field q = solve_pressure_dirichlet(st);
    Field exact = sample(*g, [&](double y1, double y2, double z) {
        return 0.25 * (std::cos(2 * y1) + std::cos(2 * y2)) * (1 - std::cosh(2 * (z + L)) / std::cosh(2 * L));
    });
    CHECK(max_abs(q - exact) < 1e-6);
}

TEST_CASE("Neumann solve: manufactured solution, gauge and guess invariance") {
    const double L = 2.0;
    std::vector<double> errs;
    for (int Nz : {25, 49, 97}) {
        auto g = make_grid(1, 16, Nz, L);
        SurfaceState S = cos_surface(g, 0.0);
        // q* = cos y cos(2(z+L)) + (z+L)^2 - L^2, zero mean on z = 0
        Field exact = sample(*g, [&](double y, double, double z) {
            return std::cos(y) * std::cos(2 * (z + L)) + (z + L) * (z + L) - L * L;
        });
        Field rhs = sample(*g, [&](double y, double, double z) { return -5 * std::cos(y) * std::cos(2 * (z + L)) + 2.0; });
        Eigen::ArrayXd flux = sample_surface(*g, [&](double y, double) { return -2 * std::cos(y) * std::sin(2 * L) + 2 * L; });
        EllipticStats st;
        Field q = solve_neumann(S, rhs, flux, {}, &st);
        errs.push_back(max_abs(q - exact));
        CHECK(std::abs(top(*g, q).mean()) < 1e-12);
        if (Nz == 49) {
            Field guess = Field::Constant(g->size(), 7.0);
            Field q2 = solve_neumann(S, rhs, flux, {}, nullptr, &guess);
            CHECK(max_abs(q2 - q) < 1e-9);
        }
    }
    CHECK(std::log2(errs[0] / errs[1]) > 5.0);
    CHECK(std::log2(errs[1] / errs[2]) > 5.0);
}

TEST_CASE("Neumann solve flags incompatible data") {
    auto g = make_grid(1, 16, 33, 2.0);
    SurfaceState S = cos_surface(g, 0.0);
    Field rhs = Field::Constant(g->size(), 1.0);
    Eigen::ArrayXd flux = Eigen::ArrayXd::Zero(g->nh());
    try {
        solve_neumann(S, rhs, flux);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SolvabilityViolation);
    }
}

TEST_CASE("Neumann and Dirichlet regimes agree for a surface-tension rest state") {
    auto g = make_grid(1, 64, 97, 4.0);
    MhdState st = rest_state(g, sample_surface(*g, [](double y, double) { return 1e-3 * std::cos(y); }));
    st.sigma = 0.5;
    st.g = 1.0;
    Field qd = solve_pressure_dirichlet(st);
    Eigen::ArrayXd data = dynamic_pressure_data(st);
    CHECK(max_abs(top(*g, qd) - data) < 1e-12);
    // first instant of motion: dt v = -grad^phi q
    Vec3 vt = grad_phi(qd, st.S);
    for (auto& c : vt) c = -c;
    Field qn = solve_pressure_neumann(st, vt);
    Eigen::ArrayXd expect = data - data.mean();
    CHECK(max_abs(top(*g, qn) - expect) < 1e-8);
    // linear dynamic data: (g + sigma) a cos y up to O(a^3)
    Eigen::ArrayXd lin = sample_surface(*g, [](double y, double) { return 1.5e-3 * std::cos(y); });
    CHECK(max_abs(top(*g, qn) - lin) < 1e-8);
}
