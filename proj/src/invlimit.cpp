#include "fsmhd/invlimit.hpp"

#include "fsmhd/errors.hpp"
#include "fsmhd/ops.hpp"
#include "fsmhd/vort_algebra.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace fsmhd {

// ---- initial data ----

DataFamily parse_data_family(const std::string& s) {
    if (s == "compatible-strain-zero") return DataFamily::CompatibleStrainZero;
    if (s == "strain-nonzero") return DataFamily::StrainNonzero;
    if (s == "initial-layer") return DataFamily::InitialLayer;
    fail(ErrorCode::ConfigError, "unknown data family '" + s + "'");
}

std::string to_string(DataFamily f) {
    switch (f) {
        case DataFamily::CompatibleStrainZero: return "compatible-strain-zero";
        case DataFamily::StrainNonzero: return "strain-nonzero";
        case DataFamily::InitialLayer: return "initial-layer";
    }
    return "?";
}

MhdState initial_data(const GridPtr& gp, DataFamily family, double eps, const DataParams& p, double grav,
                      double sigma) {
    const HalfSpaceGrid& g = *gp;
    MhdState st = rest_state(gp, Eigen::ArrayXd::Zero(g.nh()));
    st.eps = eps;
    st.g = grav;
    st.sigma = sigma;
    std::mt19937_64 rng(p.seed);
    const double theta = p.seed == 0 ? 0.0 : std::uniform_real_distribution<double>(0.0, 2 * std::numbers::pi)(rng);
    const double L = g.L();
    const auto& z = g.z_nodes();
    const int nh = g.nh();

    // envelope vanishing to fourth order at z = -L
    Eigen::ArrayXd E = ((z + L) / L).pow(4), E1 = 4.0 / L * ((z + L) / L).pow(3);
    Eigen::ArrayXd tv(nh), tb(nh);
    for (int ih = 0; ih < nh; ++ih) {
        const double y = g.y_of(ih, 0);
        tv[ih] = p.U * std::cos(y + theta);
        tb[ih] = p.B * std::cos(2 * y + theta);
    }

    // v2 = tv(y) E(z) + c(y) z E(z), with c making dz v2 on z = 0 the compatible value
    Vec3 trace = zeros3(nh);
    trace[1] = tv;
    Tangential T = tangential_derivatives(trace, g);
    auto dzc = boundary_normals_from_compat(T, st.S);
    Eigen::ArrayXd c = dzc[1] - tv * E1[g.Nz() - 1];
    // b2 = tb(y) 16 (z/L)^2 E(z): zero with zero normal derivative on z = 0
    for (int iz = 0; iz < g.Nz(); ++iz)
        for (int ih = 0; ih < nh; ++ih) {
            const Eigen::Index k = Eigen::Index(iz) * nh + ih;
            const double zz = z[iz];
            st.v[1][k] = tv[ih] * E[iz] + c[ih] * zz * E[iz];
            st.b[1][k] = tb[ih] * 16.0 * (zz / L) * (zz / L) * E[iz];
            if (family == DataFamily::StrainNonzero) {
                // additive tangential shear violating the strain condition
                st.v[1][k] += tv[ih] * zz * E[iz];
                st.b[1][k] += tb[ih] * zz * E[iz];
            }
            if (family == DataFamily::InitialLayer && eps > 0.0) {
                // band of width sqrt(eps) with zero shear on z = 0 and an O(1) vorticity jump
                const double s = zz / std::sqrt(eps);
                st.v[1][k] += p.layer_amp * std::cos(g.y_of(ih, 0) + theta) * std::sqrt(eps) * (1.0 - s) * std::exp(s);
            }
        }
    initialize_pressure(st);
    return st;
}

// ---- difference norms ----

Quantity parse_quantity(const std::string& s) {
    static const std::map<std::string, Quantity> m{{"v", Quantity::V},           {"b", Quantity::B},
                                                   {"h", Quantity::H},           {"omega_v", Quantity::OmegaV},
                                                   {"omega_b", Quantity::OmegaB}, {"strain_v", Quantity::StrainV},
                                                   {"strain_b", Quantity::StrainB}, {"normal_v", Quantity::NormalV},
                                                   {"grad_q", Quantity::GradQ}};
    auto it = m.find(s);
    if (it == m.end()) fail(ErrorCode::ConfigError, "unknown quantity '" + s + "'");
    return it->second;
}

std::string to_string(Quantity q) {
    switch (q) {
        case Quantity::V: return "v";
        case Quantity::B: return "b";
        case Quantity::H: return "h";
        case Quantity::OmegaV: return "omega_v";
        case Quantity::OmegaB: return "omega_b";
        case Quantity::StrainV: return "strain_v";
        case Quantity::StrainB: return "strain_b";
        case Quantity::NormalV: return "normal_v";
        case Quantity::GradQ: return "grad_q";
    }
    return "?";
}

std::string NormRequest::name() const {
    return to_string(quantity) + ":" + to_string(spec.family) + ":" + std::to_string(spec.m) + ":" +
           std::to_string(spec.s);
}

NormRequest parse_norm(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.size() != 4) fail(ErrorCode::ConfigError, "norm '" + s + "' must read quantity:family:m:s");
    NormRequest r;
    r.quantity = parse_quantity(parts[0]);
    r.spec.family = parse_norm_family(parts[1]);
    try {
        r.spec.m = std::stoi(parts[2]);
        r.spec.s = std::stoi(parts[3]);
    } catch (const std::exception&) {
        fail(ErrorCode::ConfigError, "norm '" + s + "': orders must be integers");
    }
    if (r.spec.m < 0 || r.spec.s < 0) fail(ErrorCode::ConfigError, "norm '" + s + "': negative order");
    return r;
}

namespace {

using Components = std::vector<Field>;

// d_j^{phi_eps} f_eps - d_j^phi f, split through eta_hat
Vec3 gradient_difference(const Field& fe, const SurfaceState& Se, const Field& f, const SurfaceState& S) {
    const Field fh = fe - f, eh = Se.eta - S.eta;
    const Field dzf = dphi(3, f, S);
    Vec3 out;
    for (int j = 0; j < 3; ++j) out[j] = dphi(j + 1, fh, Se) - dzf * dphi(j + 1, eh, Se);
    return out;
}

// G[i][j] = d_j difference of component i
Mat3F vector_gradient_difference(const Vec3& fe, const SurfaceState& Se, const Vec3& f, const SurfaceState& S) {
    Mat3F G;
    for (int i = 0; i < 3; ++i) G[i] = gradient_difference(fe[i], Se, f[i], S);
    return G;
}

Field normal_dz(const Vec3& v, const SurfaceState& S) {
    const HalfSpaceGrid& g = S.g();
    return (dz(g, v[2]) - S.p1 * dz(g, v[0]) - S.p2 * dz(g, v[1])) / S.J;
}

Components quantity_difference(Quantity q, const MhdState& e, const MhdState& r) {
    switch (q) {
        case Quantity::V: return {e.v[0] - r.v[0], e.v[1] - r.v[1], e.v[2] - r.v[2]};
        case Quantity::B: return {e.b[0] - r.b[0], e.b[1] - r.b[1], e.b[2] - r.b[2]};
        case Quantity::H: return {e.S.h - r.S.h};
        case Quantity::OmegaV:
        case Quantity::OmegaB: {
            const bool isv = q == Quantity::OmegaV;
            Mat3F G = vector_gradient_difference(isv ? e.v : e.b, e.S, isv ? r.v : r.b, r.S);
            return {G[2][1] - G[1][2], G[0][2] - G[2][0], G[1][0] - G[0][1]};
        }
        case Quantity::StrainV:
        case Quantity::StrainB: {
            const bool isv = q == Quantity::StrainV;
            Mat3F G = vector_gradient_difference(isv ? e.v : e.b, e.S, isv ? r.v : r.b, r.S);
            Components out;
            for (int i = 0; i < 3; ++i)
                for (int j = i; j < 3; ++j) out.push_back(0.5 * (G[i][j] + G[j][i]));
            return out;
        }
        case Quantity::NormalV: return {normal_dz(e.v, e.S) - normal_dz(r.v, r.S)};
        case Quantity::GradQ: {
            Vec3 G = gradient_difference(e.q, e.S, r.q, r.S);
            return {G[0], G[1], G[2]};
        }
    }
    return {};
}

}  // namespace

std::map<std::string, double> difference_norms(const MhdState& st_eps, const MhdState& st_ref,
                                               const std::vector<NormRequest>& norms, const History* hist_eps,
                                               const History* hist_ref) {
    if (st_eps.grid().size() != st_ref.grid().size() || st_eps.grid().Nz() != st_ref.grid().Nz())
        fail(ErrorCode::ShapeMismatch, "difference_norms: grids differ");
    const HalfSpaceGrid& g = st_eps.grid();
    std::map<std::string, double> out;
    for (const NormRequest& n : norms) {
        const int m = n.spec.m;
        std::vector<Components> levels;  // levels[k] = difference at the k-th newest level
        levels.push_back(quantity_difference(n.quantity, st_eps, st_ref));
        if (m > 0) {
            if (!hist_eps || !hist_ref || hist_eps->size() < m + 1 || hist_ref->size() < m + 1)
                fail(ErrorCode::InsufficientHistory,
                     "norm " + n.name() + " needs " + std::to_string(m + 1) + " stored levels");
            for (int k = 1; k <= m; ++k)
                levels.push_back(quantity_difference(n.quantity, hist_eps->at(k), hist_ref->at(k)));
        }
        const double dt = m > 0 ? hist_eps->spacing() : 1.0;
        ConormalSpec spec = n.spec;
        if (n.quantity == Quantity::H) spec.family = NormFamily::Boundary;
        const bool sup = spec.family == NormFamily::Y || spec.family == NormFamily::Y_tan;
        double acc = 0.0;
        for (size_t c = 0; c < levels[0].size(); ++c) {
            // backward differences dt^l for l <= m
            std::vector<Field> hist;
            for (int l = 0; l <= m; ++l) {
                Field d = levels[0][c];
                double coef = 1.0;
                for (int k = 1; k <= l; ++k) {
                    coef *= -double(l - k + 1) / k;
                    d += coef * levels[k][c];
                }
                hist.push_back(d / std::pow(dt, l));
            }
            const double v = conormal_norm(g, hist, spec);
            acc = sup ? std::max(acc, v) : acc + v * v;
        }
        out[n.name()] = sup ? acc : std::sqrt(acc);
    }
    return out;
}

// ---- rate fits ----

FitResult fit_rate(const std::vector<double>& eps, const std::vector<double>& err) {
    if (eps.size() != err.size()) fail(ErrorCode::ShapeMismatch, "fit_rate: sizes differ");
    std::vector<double> x, y;
    FitResult r;
    for (size_t i = 0; i < eps.size(); ++i) {
        if (err[i] > 0.0 && std::isfinite(err[i]) && eps[i] > 0.0) {
            x.push_back(std::log(eps[i]));
            y.push_back(std::log(err[i]));
        } else {
            ++r.excluded;
        }
    }
    r.used = int(x.size());
    if (r.used < 2) fail(ErrorCode::DegenerateFit, "fewer than two positive errors");
    Eigen::MatrixXd A(r.used, 2);
    Eigen::VectorXd b(r.used);
    for (int i = 0; i < r.used; ++i) {
        A(i, 0) = x[i];
        A(i, 1) = 1.0;
        b[i] = y[i];
    }
    Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
    r.slope = c[0];
    r.intercept = c[1];
    r.residual = std::sqrt((A * c - b).squaredNorm() / r.used);
    return r;
}

// ---- classifier inputs ----

double initial_vorticity_discrepancy(const MhdState& st_eps, const MhdState& st_ref, double eps) {
    const HalfSpaceGrid& g = st_eps.grid();
    auto wv = quantity_difference(Quantity::OmegaV, st_eps, st_ref);
    auto wb = quantity_difference(Quantity::OmegaB, st_eps, st_ref);
    return band_sup(g, std::vector<Field>{wv[0], wv[1], wb[0], wb[1]}, eps);
}

double boundary_strain_sup(const std::vector<MhdState>& states) {
    double m = 0.0;
    for (const MhdState& s : states) {
        StrainTraces t = boundary_strain_trace(s);
        m = std::max({m, t.v_sup, t.b_sup});
    }
    return m;
}

ClassifierThresholds measured_floors(const GridPtr& g, const DataParams& p) {
    // the strain-zero data and a few ideal steps: what is left is discretization noise
    MhdState st = initial_data(g, DataFamily::CompatibleStrainZero, 0.0, p);
    StepConfig cfg;
    cfg.dt = 0.25 * g->dy();
    cfg.regime = Regime::Ideal;
    std::vector<MhdState> states{st};
    for (int n = 0; n < 3; ++n) states.push_back(st = step_ideal(st, cfg));
    ClassifierThresholds th;
    const double scale = std::max({p.U, p.B, 1e-300}) / g->dz();
    th.strain_floor = std::max(boundary_strain_sup(states), 1e-12 * scale);
    th.initial_floor = 1e-12 * scale;
    return th;
}

// ---- sweeps ----

namespace {

struct RunResult {
    bool ok = true;
    std::string reason;
    int steps = 0;
    MhdState initial;
    std::vector<MhdState> checkpoints;
    std::vector<History> histories;
};

RunResult run_member(const GridPtr& g, const SweepPlan& plan, const SweepBase& base, double eps, bool ideal,
                     int depth, const std::vector<int>& marks) {
    RunResult r;
    MhdState st = initial_data(g, plan.family == DataFamily::InitialLayer && ideal ? DataFamily::CompatibleStrainZero
                                                                                  : plan.family,
                               ideal ? 0.0 : eps, base.data, base.g, base.sigma);
    r.initial = st;
    StepConfig cfg = base.step;
    cfg.regime = ideal ? Regime::Ideal : Regime::Viscous;
    History hist(std::max(depth, 1));
    hist.push(st);
    size_t next = 0;
    try {
        for (int n = 1; n <= marks.back(); ++n) {
            st = ideal ? step_ideal(st, cfg) : step_viscous(st, cfg);
            hist.push(st);
            r.steps = n;
            if (next < marks.size() && n == marks[next]) {
                r.checkpoints.push_back(st);
                r.histories.push_back(hist);
                ++next;
            }
        }
    } catch (const Error& e) {
        r.ok = false;
        r.reason = e.what();
    }
    return r;
}

template <class F>
void parallel_for(int n, int workers, F&& fn) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i; (i = next++) < n;) fn(i);
        });
    for (auto& t : pool) t.join();
}

bool group_one(Quantity q) {
    return q == Quantity::V || q == Quantity::B || q == Quantity::H || q == Quantity::NormalV;
}

}  // namespace

RateReport run_sweep(const SweepPlan& plan, const SweepBase& base) {
    const auto& ladder = plan.eps_ladder;
    if (ladder.size() < 4) fail(ErrorCode::ConfigError, "eps ladder needs at least 4 entries");
    for (size_t i = 0; i < ladder.size(); ++i) {
        if (!(ladder[i] > 0.0) || !std::isfinite(ladder[i])) fail(ErrorCode::ConfigError, "eps must be positive");
        if (i > 0 && !(ladder[i] < ladder[i - 1])) fail(ErrorCode::ConfigError, "eps ladder must be strictly decreasing");
    }
    if (plan.norms.empty()) fail(ErrorCode::ConfigError, "sweep needs at least one norm");

    RateReport rep;
    rep.family = plan.family;
    rep.eps = ladder;
    rep.synthetic = plan.synthetic;
    rep.reference = plan.reference == ReferenceKind::Ideal ? "ideal" : "overkill-viscous";
    std::vector<std::vector<double>> errs(plan.norms.size(), std::vector<double>(ladder.size(), 0.0));

    if (plan.synthetic) {
        for (size_t i = 0; i < ladder.size(); ++i) {
            double e = 0.0;
            for (auto [c, p] : plan.synthetic_terms) e += c * std::pow(ladder[i], p);
            for (auto& row : errs) row[i] = e;
            rep.members.push_back({ladder[i], true, "", 0});
        }
        rep.data_rate = std::numeric_limits<double>::infinity();
    } else {
        if (!(plan.T > 0.0) || !(base.step.dt > 0.0)) fail(ErrorCode::ConfigError, "T and dt must be positive");
        if (plan.checkpoints < 0) fail(ErrorCode::ConfigError, "checkpoints must be non-negative");
        const GridPtr g = std::make_shared<HalfSpaceGrid>(base.d_h, base.Ny, base.Nz, base.L);
        const int nsteps = std::max(1, int(std::lround(plan.T / base.step.dt)));
        std::vector<int> marks;
        const int nc = plan.checkpoints + 1;
        for (int k = 1; k <= nc; ++k) {
            const int m = int(std::lround(double(k) * nsteps / nc));
            if (m > 0 && (marks.empty() || m > marks.back())) marks.push_back(m);
        }
        for (int m : marks) rep.checkpoint_times.push_back(m * base.step.dt);
        int depth = 1;
        for (const auto& n : plan.norms) depth = std::max(depth, n.spec.m);

        // job 0 is the reference
        const bool ideal_ref = plan.reference == ReferenceKind::Ideal;
        const double eps_ref = ideal_ref ? 0.0 : ladder.back() / 100.0;
        std::vector<RunResult> runs(ladder.size() + 1);
        parallel_for(int(runs.size()), base.workers, [&](int j) {
            runs[j] = j == 0 ? run_member(g, plan, base, eps_ref, ideal_ref, depth, marks)
                             : run_member(g, plan, base, ladder[j - 1], false, depth, marks);
        });
        const RunResult& ref = runs[0];
        if (!ref.ok) fail(ErrorCode::SweepInsufficient, "reference run aborted: " + ref.reason);

        int alive = 0;
        std::vector<double> v0, w0;
        for (size_t i = 0; i < ladder.size(); ++i) {
            const RunResult& r = runs[i + 1];
            rep.members.push_back({ladder[i], r.ok, r.reason, r.steps});
            auto init = difference_norms(r.initial, ref.initial,
                                         {{Quantity::V, {0, 0, NormFamily::X}}, {Quantity::OmegaV, {0, 0, NormFamily::X}}});
            v0.push_back(init.begin()->second);
            w0.push_back(std::next(init.begin())->second);
            if (!r.ok) {
                for (auto& row : errs) row[i] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            ++alive;
            for (size_t c = 0; c < r.checkpoints.size(); ++c) {
                auto d = difference_norms(r.checkpoints[c], ref.checkpoints[c], plan.norms, &r.histories[c],
                                          &ref.histories[c]);
                for (size_t k = 0; k < plan.norms.size(); ++k) errs[k][i] = std::max(errs[k][i], d[plan.norms[k].name()]);
            }
        }
        if (alive < 4)
            fail(ErrorCode::SweepInsufficient, std::to_string(alive) + " of " + std::to_string(ladder.size()) +
                                                   " members survived; a fit needs 4");

        // data rate: slowest of the initial velocity and vorticity differences
        rep.data_rate = std::numeric_limits<double>::infinity();
        for (const auto* d : {&v0, &w0}) {
            try {
                rep.data_rate = std::min(rep.data_rate, fit_rate(ladder, *d).slope);
            } catch (const Error&) {
            }
        }

        // classifier: the smallest eps member against the reference
        const RunResult& last = runs.back();
        rep.initial_discrepancy = initial_vorticity_discrepancy(last.initial, ref.initial, ladder.back());
        rep.boundary_strain = boundary_strain_sup(ref.checkpoints);
        ClassifierThresholds th = base.thresholds;
        if (th.strain_floor <= 0.0 || th.initial_floor <= 0.0) {
            ClassifierThresholds m = measured_floors(g, base.data);
            if (th.strain_floor <= 0.0) th.strain_floor = m.strain_floor;
            if (th.initial_floor <= 0.0) th.initial_floor = m.initial_floor;
        }
        rep.verdict = classify_layer(rep.initial_discrepancy, rep.boundary_strain, th, &rep.verdict_reason);
    }

    const bool strain = plan.family == DataFamily::StrainNonzero;
    for (size_t k = 0; k < plan.norms.size(); ++k) {
        NormReport nr;
        nr.name = plan.norms[k].name();
        nr.errors = errs[k];
        const bool g1 = group_one(plan.norms[k].quantity);
        const double theory = g1 ? (strain ? 0.25 : 0.5) : (strain ? 0.125 : 0.25);
        nr.predicted = std::min(theory, g1 ? rep.data_rate : 0.5 * rep.data_rate);
        try {
            nr.fit = fit_rate(ladder, errs[k]);
            if (nr.fit->excluded > 0) nr.fit_note = std::to_string(nr.fit->excluded) + " points excluded";
            const double d = nr.fit->slope - nr.predicted;
            nr.band = std::abs(d) <= 0.1 ? "consistent" : d > 0 ? "faster" : "slower";
        } catch (const Error& e) {
            nr.fit_note = e.what();
            nr.band = "degenerate";
        }
        rep.norms.push_back(nr);
    }
    return rep;
}

}  // namespace fsmhd
