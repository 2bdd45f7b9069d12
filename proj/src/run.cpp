#include "fsmhd/run.hpp"

#include "fsmhd/algebra_check.hpp"
#include "fsmhd/errors.hpp"
#include "fsmhd/history.hpp"
#include "fsmhd/io.hpp"
#include "fsmhd/mms.hpp"
#include "fsmhd/ops.hpp"
#include "fsmhd/vort_algebra.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <ostream>

namespace fsmhd {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Field sample(const HalfSpaceGrid& g, const std::function<double(double, double, double)>& f) {
    Field out(g.size());
    for (int iz = 0; iz < g.Nz(); ++iz)
        for (int ih = 0; ih < g.nh(); ++ih)
            out[Eigen::Index(iz) * g.nh() + ih] = f(g.y_of(ih, 0), g.d_h() == 2 ? g.y_of(ih, 1) : 0.0, g.z_nodes()[iz]);
    return out;
}

Eigen::ArrayXd surface_profile(const HalfSpaceGrid& g, double amp) {
    Eigen::ArrayXd h(g.nh());
    for (int ih = 0; ih < g.nh(); ++ih) {
        const double y1 = g.y_of(ih, 0), y2 = g.d_h() == 2 ? g.y_of(ih, 1) : 0.0;
        h[ih] = amp * (std::cos(y1) + 0.3 * std::sin(2 * y1) + (g.d_h() == 2 ? 0.5 * std::cos(y1) * std::sin(y2) : 0.0));
    }
    return h;
}

json header(const RunConfig& cfg, const char* command) {
    json c = cfg.to_json();
    c.erase("output");  // artifact location and worker count do not change results
    c.erase("workers");
    return {{"schema_version", config_schema_version},
            {"version", fsmhd_version},
            {"command", command},
            {"seed", cfg.data.seed},
            {"config", c}};
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ':' || c == '/') c = '_';
    return s;
}

double sup3(const Vec3& f) {
    double m = 0.0;
    for (const auto& c : f) m = std::max(m, c.size() ? c.abs().maxCoeff() : 0.0);
    return m;
}

json abort_json(const Error& e, int step, double t) {
    return {{"reason", std::string(error_name(e.code()))}, {"message", e.what()}, {"step", step}, {"t", t}};
}

json energies(const MhdState& st) {
    const HalfSpaceGrid& g = st.grid();
    const Field kv = (st.v[0].square() + st.v[1].square() + st.v[2].square()) * st.S.J;
    const Field kb = (st.b[0].square() + st.b[1].square() + st.b[2].square()) * st.S.J;
    const double Ev = integrate(g, kv), Eb = integrate(g, kb), Eh = st.g * integrate_surface(g, st.S.h.square());
    return {{"kinetic", Ev}, {"magnetic", Eb}, {"potential", Eh}, {"total", energy(st)}};
}

json layer_traces(const MhdState& st) {
    const StrainTraces tr = boundary_strain_trace(st);
    json j{{"strain_v_sup", tr.v_sup}, {"strain_b_sup", tr.b_sup}};
    try {
        const BoundaryAlgebra ba = discrepancy_algebra(st);
        double jv = 0.0, jb = 0.0;
        for (int i = 0; i < 2; ++i) {
            jv = std::max(jv, ba.jump_v[i].size() ? ba.jump_v[i].abs().maxCoeff() : 0.0);
            jb = std::max(jb, ba.jump_b[i].size() ? ba.jump_b[i].abs().maxCoeff() : 0.0);
        }
        j["vorticity_jump_v_sup"] = jv;
        j["vorticity_jump_b_sup"] = jb;
    } catch (const Error& e) {
        j["vorticity_jump_error"] = std::string(error_name(e.code()));
    }
    return j;
}

Mms mms_of(const RunConfig& cfg) {
    if (!(cfg.physics.eps > 0)) fail(ErrorCode::ConfigError, "the mms family needs physics.eps > 0");
    if (cfg.grid.d_h != 1) fail(ErrorCode::ConfigError, "the mms family needs grid.d_h = 1");
    Mms m;
    m.L = cfg.grid.L;
    m.eps = cfg.physics.eps;
    m.grav = cfg.physics.g;
    return m;
}

}  // namespace

MhdState simulation_initial(const RunConfig& cfg, const GridPtr& g) {
    const std::string& fam = cfg.data.family;
    if (fam == "mms") return mms_of(cfg).initial(g);
    MhdState st;
    if (fam == "rest" || fam == "swirl") {
        const Eigen::ArrayXd h = fam == "swirl" ? surface_profile(*g, cfg.data.h_amp) : Eigen::ArrayXd::Zero(g->nh());
        st = rest_state(g, h, cfg.physics.A);
        st.eps = cfg.physics.eps;
        st.sigma = cfg.physics.sigma;
        st.g = cfg.physics.g;
        if (fam == "swirl") {
            // smooth in-plane swirl vanishing towards the bottom; b also vanishes on the surface
            const double L = g->L(), U = cfg.data.U, B = cfg.data.B;
            Vec3 v = zeros3(g->size()), b = zeros3(g->size());
            v[0] = sample(*g, [&](double y, double, double z) { return U * std::sin(y) * std::pow(z + L, 3) / (L * L * L); });
            v[1] = sample(*g, [&](double y, double, double z) { return U * std::cos(y) * std::pow(z + L, 2) / (L * L); });
            v[2] = sample(*g, [&](double y, double, double z) { return U * std::cos(2 * y) * std::pow(z + L, 2) / (L * L); });
            b[0] = sample(*g, [&](double y, double, double z) { return B * std::cos(y) * z * std::pow(z + L, 2) / (L * L * L); });
            b[2] = sample(*g, [&](double y, double, double z) { return B * std::sin(y) * z * std::pow(z + L, 2) / (L * L * L); });
            st.v = project_div_free(v, st.S, ProjectionKind::Velocity);
            st.b = project_div_free(b, st.S, ProjectionKind::Magnetic);
            initialize_pressure(st);
        }
        return st;
    }
    DataParams p;
    p.U = cfg.data.U;
    p.B = cfg.data.B;
    p.layer_amp = cfg.data.layer_amp;
    p.seed = cfg.data.seed;
    return initial_data(g, parse_data_family(fam), cfg.physics.eps, p, cfg.physics.g, cfg.physics.sigma);
}

CommandResult cmd_simulate(const RunConfig& cfg) {
    const fs::path dir(cfg.output.directory);
    fs::create_directories(dir);
    const GridPtr g = make_grid(cfg.grid);
    const StepConfig sc = step_config(cfg, cfg.physics.eps);
    const bool is_mms = cfg.data.family == "mms";
    Forcing forcing;
    if (is_mms) forcing = mms_of(cfg).forcing();
    const Forcing* fp = is_mms ? &forcing : nullptr;

    MhdState st = simulation_initial(cfg, g);
    const json initial_energies = energies(st);
    StepLog log((dir / "steps.csv").string(), cfg.data.seed);
    StepStats s0;
    s0.cfl = cfl_number(st, sc.dt);
    s0.taylor_margin = st.sigma > 0 ? std::numeric_limits<double>::quiet_NaN() : taylor_sign_margin(st);
    s0.div_v = divergence_norm(st.v, st.S);
    s0.div_b = divergence_norm(st.b, st.S);
    s0.energy = energy(st);
    log.row(0, st.t, sc.dt, s0);

    History hist(cfg.stepper.history_depth);
    hist.push(st);
    const int n = cfg.stepper.T > 0 ? std::max(1, int(std::lround(cfg.stepper.T / sc.dt))) : 0;
    double prev_energy = s0.energy, max_drift = 0.0;
    double min_margin = s0.taylor_margin, max_div = std::max(s0.div_v, s0.div_b);
    int done = 0;
    json abort = nullptr;
    try {
        for (int k = 1; k <= n; ++k) {
            StepStats ss;
            st = sc.regime == Regime::Ideal ? step_ideal(st, sc, fp, &ss) : step_viscous(st, sc, fp, &ss);
            hist.push(st);
            done = k;
            max_drift = std::max(max_drift, std::abs(ss.energy - prev_energy));
            prev_energy = ss.energy;
            if (st.sigma == 0.0) min_margin = std::min(min_margin, ss.taylor_margin);
            max_div = std::max({max_div, ss.div_v, ss.div_b});
            if (k % cfg.output.log_every == 0 || k == n) log.row(k, st.t, sc.dt, ss);
            if (cfg.output.checkpoint_every > 0 && k % cfg.output.checkpoint_every == 0) {
                char name[32];
                std::snprintf(name, sizeof name, "step_%06d", k);
                write_checkpoint((dir / "checkpoints" / name).string(), st, cfg.data.seed, k);
            }
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        abort = abort_json(e, done + 1, st.t);
    }
    log.flush();
    write_checkpoint((dir / "checkpoints" / "final").string(), st, cfg.data.seed, done);

    json s = header(cfg, "simulate");
    s["status"] = abort.is_null() ? "ok" : "aborted";
    s["abort"] = abort;
    s["steps"] = done;
    s["t_final"] = st.t;
    s["energies"] = {{"initial", initial_energies}, {"final", energies(st)}, {"max_drift_per_step", max_drift}};
    const Field bt0 = top(*g, st.b[0]), bt1 = top(*g, st.b[1]), bt2 = top(*g, st.b[2]);
    s["final_norms"] = {{"v_l2", l2(*g, st.v)},
                        {"b_l2", l2(*g, st.b)},
                        {"v_max", sup3(st.v)},
                        {"b_max", sup3(st.b)},
                        {"h_max", st.S.h.abs().maxCoeff()},
                        {"div_v", divergence_norm(st.v, st.S)},
                        {"div_b", divergence_norm(st.b, st.S)},
                        {"b_top_max", std::max({bt0.abs().maxCoeff(), bt1.abs().maxCoeff(), bt2.abs().maxCoeff()})},
                        {"max_divergence_over_run", max_div}};
    s["taylor_margin"] = {{"min", num(min_margin)},
                          {"final", num(st.sigma > 0 ? NAN : taylor_sign_margin(st))},
                          {"active", st.sigma == 0.0}};
    s["layer_traces"] = layer_traces(st);
    if (is_mms && abort.is_null()) {
        const MmsStudy ms = mms_temporal_study(mms_of(cfg), g, sc.dt, cfg.stepper.T, cfg.stepper.mms_levels, sc);
        json errs = json::array();
        for (const auto& e : ms.errors) errs.push_back({{"v", e.v}, {"b", e.b}, {"h", e.h}});
        s["observed_order"] = {{"dt", ms.dt},
                               {"errors", errs},
                               {"order_v", ms.order_v},
                               {"order_b", ms.order_b},
                               {"min_order", ms.min_order},
                               {"target", 1.8},
                               {"meets_target", ms.min_order >= 1.8}};
    }
    write_json((dir / "summary.json").string(), s);
    return {abort.is_null() ? exit_ok : exit_abort, s};
}

CommandResult cmd_sweep(const RunConfig& cfg) {
    const fs::path dir(cfg.output.directory);
    const SweepPlan plan = sweep_plan(cfg);
    const SweepBase base = sweep_base(cfg);
    json s = header(cfg, "sweep");
    RateReport r;
    try {
        r = run_sweep(plan, base);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        s["status"] = "aborted";
        s["abort"] = abort_json(e, 0, 0.0);
        fs::create_directories(dir);
        write_json((dir / "report.json").string(), s);
        return {exit_abort, s};
    }
    fs::create_directories(dir);
    s["status"] = "ok";
    s["report"] = to_json(r);
    write_json((dir / "report.json").string(), s);
    write_text((dir / "rates.csv").string(), rate_csv(r, cfg.data.seed));
    // log-log plot data per norm
    for (const auto& nr : r.norms) {
        std::string txt = "# seed=" + std::to_string(cfg.data.seed) + " norm=" + nr.name + "\n# log10(eps) log10(err)\n";
        for (std::size_t i = 0; i < r.eps.size(); ++i)
            if (i < nr.errors.size() && nr.errors[i] > 0)
                txt += format_double(std::log10(r.eps[i])) + " " + format_double(std::log10(nr.errors[i])) + "\n";
        write_text((dir / ("plot_" + sanitize(nr.name) + ".dat")).string(), txt);
    }
    // each member owns a subdirectory
    for (std::size_t i = 0; i < r.members.size(); ++i) {
        const auto& m = r.members[i];
        json mj{{"seed", cfg.data.seed}, {"eps", m.eps}, {"ok", m.ok}, {"abort_reason", m.abort_reason}, {"steps", m.steps}};
        for (const auto& nr : r.norms) mj["errors"][nr.name] = num(i < nr.errors.size() ? nr.errors[i] : NAN);
        char name[32];
        std::snprintf(name, sizeof name, "member_%02zu", i);
        write_json((dir / "members" / name / "member.json").string(), mj);
    }
    return {exit_ok, s};
}

CommandResult cmd_layer(const RunConfig& cfg) {
    const fs::path dir(cfg.output.directory);
    fs::create_directories(dir);
    const LayerBlock& lb = cfg.analysis.layer;
    std::vector<double> eps = cfg.physics.ladder;
    if (eps.empty()) {
        if (!(cfg.physics.eps > 0)) fail(ErrorCode::ConfigError, "layer needs physics.eps > 0 or a ladder");
        eps.push_back(cfg.physics.eps);
    }
    if (lb.xi.empty() || cfg.analysis.tau.empty()) fail(ErrorCode::ConfigError, "layer needs xi and tau lists");
    LayerCoefficients c;
    c.ma.a0 = lb.a0;
    c.mb.a0 = lb.b0;
    c.f7v = lb.f7v;
    c.f7b = lb.f7b;
    c.gamma = lb.gamma;

    json s = header(cfg, "layer");
    json cases = json::array(), scans = json::array();
    std::string csv = "# seed=" + std::to_string(cfg.data.seed) + "\nxi,tau,eps,z,plus_re,plus_im,minus_re,minus_im\n";
    bool failed = false;
    for (double xi : lb.xi)
        for (double tau : cfg.analysis.tau) {
            for (double e : eps) {
                json cj{{"xi", xi}, {"tau", tau}, {"eps", e}};
                try {
                    const Symbols sym = layer_symbols(e, xi, 0.0, tau, c);
                    const cplx rp = decay_rate(sym.Av1, sym.Av0), rm = decay_rate(sym.Ab1, sym.Ab0);
                    const LayerProfile prof = layer_profile(sym, lb.Wp0, lb.Wm0, e);
                    cj["symbols"] = {{"Av0", cplx_json(sym.Av0)}, {"Av1", cplx_json(sym.Av1)}, {"Av2", cplx_json(sym.Av2)},
                                     {"Ab0", cplx_json(sym.Ab0)}, {"Ab1", cplx_json(sym.Ab1)}, {"Ab2", cplx_json(sym.Ab2)}};
                    cj["decay_rate_plus"] = cplx_json(rp);
                    cj["decay_rate_minus"] = cplx_json(rm);
                    cj["picard_iterations"] = prof.picard_iterations;
                    cj["contraction"] = prof.contraction;
                    cj["discrepancy"] = prof.discrepancy;
                    const double se = std::sqrt(e);
                    // decoupled symbols have the closed form W0 exp(rate z / sqrt(eps))
                    if (sym.Av2 == 0.0 && sym.Ab2 == 0.0) {
                        double dev = 0.0;
                        for (Eigen::Index k = 0; k < prof.z.size(); ++k) {
                            dev = std::max(dev, std::abs(prof.Wp[k] - lb.Wp0 * std::exp(rp * prof.z[k] / se)) / std::abs(lb.Wp0));
                            dev = std::max(dev, std::abs(prof.Wm[k] - lb.Wm0 * std::exp(rm * prof.z[k] / se)) / std::abs(lb.Wm0));
                        }
                        cj["closed_form_deviation"] = dev;
                        cj["ratio_at_width"] = {{"computed", std::abs(prof.plus_at(-se) / prof.plus_at(0.0))},
                                                {"closed_form", std::exp(-rp.real())}};
                    } else {
                        cj["closed_form_deviation"] = nullptr;
                    }
                    const double depth = 6.0 * se / std::min(rp.real(), rm.real());
                    json zs = json::array(), ap = json::array(), am = json::array();
                    for (int k = 0; k < lb.samples; ++k) {
                        const double z = -depth * k / (lb.samples - 1);
                        const cplx wp = prof.plus_at(z), wm = prof.minus_at(z);
                        zs.push_back(z);
                        ap.push_back(std::abs(wp));
                        am.push_back(std::abs(wm));
                        csv += format_double(xi) + "," + format_double(tau) + "," + format_double(e) + "," + format_double(z) +
                               "," + format_double(wp.real()) + "," + format_double(wp.imag()) + "," +
                               format_double(wm.real()) + "," + format_double(wm.imag()) + "\n";
                    }
                    cj["profile"] = {{"z", zs}, {"plus_abs", ap}, {"minus_abs", am}};
                } catch (const Error& err) {
                    if (err.code() == ErrorCode::ConfigError) throw;
                    cj["error"] = std::string(error_name(err.code()));
                    cj["message"] = err.what();
                    failed = true;
                }
                cases.push_back(cj);
            }
            if (eps.size() >= 2) {
                json sj{{"xi", xi}, {"tau", tau}};
                try {
                    sj["table"] = to_json(scaling_scan(eps, cfg.analysis.delta_z, c, xi, 0.0, tau, lb.Wp0, lb.Wm0));
                } catch (const Error& err) {
                    if (err.code() == ErrorCode::ConfigError) throw;
                    sj["error"] = std::string(error_name(err.code()));
                    failed = true;
                }
                scans.push_back(sj);
            }
        }
    s["status"] = failed ? "aborted" : "ok";
    s["cases"] = cases;
    s["scans"] = scans;
    write_json((dir / "layer_report.json").string(), s);
    write_text((dir / "profiles.csv").string(), csv);
    return {failed ? exit_abort : exit_ok, s};
}

CommandResult cmd_check_algebra(const RunConfig& cfg) {
    const fs::path dir(cfg.output.directory);
    fs::create_directories(dir);
    const GridPtr g = make_grid(cfg.grid);
    AlgebraCheckOptions opt;
    opt.states = cfg.analysis.states;
    opt.seed = cfg.data.seed;
    const AlgebraCheck r = check_algebra(g, surface_profile(*g, cfg.data.h_amp), opt);
    const AlgebraTolerances tol;
    json s = header(cfg, "check-algebra");
    s["grad_h_sup"] = r.grad_h_sup;
    s["within_slope_bound"] = r.grad_h_sup <= h_thresh;
    s["states"] = r.states;
    s["checks"] = {
        {"roundtrip_relative", {{"value", r.roundtrip}, {"tolerance", tol.roundtrip}, {"pass", r.roundtrip <= tol.roundtrip}}},
        {"determinant", {{"value", r.det}, {"tolerance", tol.det}, {"pass", r.det <= tol.det}}},
        {"compatibility", {{"value", r.compat}, {"tolerance", tol.compat}, {"pass", r.compat <= tol.compat}}},
        {"flat_trace", {{"value", r.flat_trace}, {"tolerance", tol.flat_trace}, {"pass", r.flat_trace <= tol.flat_trace}}},
        {"curl_grad", {{"value", r.curl_grad}, {"tolerance", tol.identity}, {"pass", r.curl_grad <= tol.identity}}},
        {"div_curl", {{"value", r.div_curl}, {"tolerance", tol.identity}, {"pass", r.div_curl <= tol.identity}}},
        {"flat_reduction",
         {{"value", r.flat_reduction}, {"tolerance", tol.flat_reduction}, {"pass", r.flat_reduction <= tol.flat_reduction}}}};
    s["status"] = r.ok(tol) ? "pass" : "fail";
    write_json((dir / "algebra_check.json").string(), s);
    return {r.ok(tol) ? exit_ok : exit_check, s};
}

int run_verb(const std::string& verb, const std::string& config_path, std::ostream& err) {
    try {
        RunConfig cfg = load_config(config_path);
        apply_env_overrides(cfg);
        CommandResult r;
        if (verb == "simulate")
            r = cmd_simulate(cfg);
        else if (verb == "sweep")
            r = cmd_sweep(cfg);
        else if (verb == "layer")
            r = cmd_layer(cfg);
        else if (verb == "check-algebra")
            r = cmd_check_algebra(cfg);
        else
            fail(ErrorCode::ConfigError, "unknown verb " + verb);
        if (r.exit_code == exit_abort && r.summary.contains("abort") && !r.summary["abort"].is_null())
            err << "aborted: " << r.summary["abort"]["message"].get<std::string>() << "\n";
        return r.exit_code;
    } catch (const Error& e) {
        err << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError ? exit_config : exit_abort;
    } catch (const fs::filesystem_error& e) {
        err << "ConfigError: " << e.what() << "\n";
        return exit_config;
    }
}

}  // namespace fsmhd
