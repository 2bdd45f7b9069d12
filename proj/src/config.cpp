#include "fsmhd/config.hpp"

#include "fsmhd/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

namespace fsmhd {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::ConfigError, what); }

// strict block reader: unknown keys and type mismatches are errors
class Block {
public:
    Block(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) bad(name_ + " must be an object");
    }
    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            bad(name_ + "." + key + " has the wrong type");
        }
        check_finite(key, out);
    }
    bool has(const char* key) const { return j_.contains(key); }
    void allow(const char* key) { seen_.insert(key); }
    const json& raw(const char* key) {
        seen_.insert(key);
        return j_.at(key);
    }
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) bad("unknown key " + name_ + "." + it.key());
    }

private:
    template <class T>
    void check_finite(const char* key, const T& v) const {
        if constexpr (std::is_floating_point_v<T>) {
            if (!std::isfinite(v)) bad(name_ + "." + key + " is not finite");
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            for (double x : v)
                if (!std::isfinite(x)) bad(name_ + "." + key + " has a non-finite entry");
        }
    }

    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

const json& sub(const json& j, const char* key) {
    static const json empty = json::object();
    return j.contains(key) ? j.at(key) : empty;
}

void require(bool ok, const std::string& what) {
    if (!ok) bad(what);
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    if (!j.is_object()) bad("config must be a JSON object");
    RunConfig c;
    Block top(j, "config");
    top.get("schema_version", c.schema_version);
    require(j.contains("schema_version"), "schema_version is required");
    require(c.schema_version == config_schema_version,
            "unsupported schema_version " + std::to_string(c.schema_version));
    top.get("workers", c.workers);
    for (const char* k : {"grid", "physics", "data", "stepper", "analysis", "output"}) top.allow(k);
    top.finish();

    Block g(sub(j, "grid"), "grid");
    g.get("d_h", c.grid.d_h);
    g.get("Ny", c.grid.Ny);
    g.get("Nz", c.grid.Nz);
    g.get("L", c.grid.L);
    g.finish();

    Block p(sub(j, "physics"), "physics");
    p.get("eps", c.physics.eps);
    p.get("ladder", c.physics.ladder);
    p.get("sigma", c.physics.sigma);
    p.get("g", c.physics.g);
    if (p.has("A")) {
        const json& a = p.raw("A");
        if (a.is_string()) {
            require(a.get<std::string>() == "auto", "physics.A must be a number or \"auto\"");
            c.physics.A = 0.0;
        } else {
            p.get("A", c.physics.A);
            require(c.physics.A >= 1.0, "physics.A must be >= 1");
        }
    }
    p.finish();

    Block d(sub(j, "data"), "data");
    d.get("family", c.data.family);
    d.get("U", c.data.U);
    d.get("B", c.data.B);
    d.get("layer_amp", c.data.layer_amp);
    d.get("h_amp", c.data.h_amp);
    d.get("seed", c.data.seed);
    d.finish();

    Block s(sub(j, "stepper"), "stepper");
    s.get("dt", c.stepper.dt);
    s.get("scheme", c.stepper.scheme);
    s.get("regime", c.stepper.regime);
    s.get("T", c.stepper.T);
    s.get("history_depth", c.stepper.history_depth);
    s.get("cfl_safety", c.stepper.cfl_safety);
    s.get("c0_min_factor", c.stepper.c0_min_factor);
    s.get("mms_levels", c.stepper.mms_levels);
    s.finish();

    Block a(sub(j, "analysis"), "analysis");
    a.get("norms", c.analysis.norms);
    a.get("delta_z", c.analysis.delta_z);
    a.get("tau", c.analysis.tau);
    a.get("reference", c.analysis.reference);
    a.get("checkpoints", c.analysis.checkpoints);
    a.get("states", c.analysis.states);
    if (a.has("synthetic")) {
        const json& t = a.raw("synthetic");
        require(t.is_array(), "analysis.synthetic must be a list of [c, p] pairs");
        for (const auto& e : t) {
            require(e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number(),
                    "analysis.synthetic entries must be [c, p]");
            c.analysis.synthetic.emplace_back(e[0].get<double>(), e[1].get<double>());
        }
    }
    if (a.has("thresholds")) {
        Block t(a.raw("thresholds"), "analysis.thresholds");
        t.get("initial_floor", c.analysis.thresholds.initial_floor);
        t.get("strain_floor", c.analysis.thresholds.strain_floor);
        t.get("factor", c.analysis.thresholds.factor);
        t.finish();
    }
    if (a.has("layer")) {
        Block l(a.raw("layer"), "analysis.layer");
        LayerBlock& lb = c.analysis.layer;
        l.get("xi", lb.xi);
        l.get("a0", lb.a0);
        l.get("b0", lb.b0);
        l.get("f7v", lb.f7v);
        l.get("f7b", lb.f7b);
        l.get("gamma", lb.gamma);
        l.get("Wp0", lb.Wp0);
        l.get("Wm0", lb.Wm0);
        l.get("samples", lb.samples);
        l.finish();
    }
    a.finish();

    Block o(sub(j, "output"), "output");
    o.get("directory", c.output.directory);
    o.get("checkpoint_every", c.output.checkpoint_every);
    o.get("log_every", c.output.log_every);
    o.finish();

    // invariants
    require(c.grid.d_h == 1 || c.grid.d_h == 2, "grid.d_h must be 1 or 2");
    require(c.grid.Ny >= 4 && (c.grid.Ny & (c.grid.Ny - 1)) == 0, "grid.Ny must be a power of two >= 4");
    require(c.grid.Nz >= 8, "grid.Nz must be >= 8");
    require(c.grid.L > 0, "grid.L must be positive");
    require(c.physics.eps >= 0, "physics.eps must be >= 0");
    for (std::size_t i = 0; i < c.physics.ladder.size(); ++i) {
        require(c.physics.ladder[i] > 0, "physics.ladder entries must be positive");
        if (i) require(c.physics.ladder[i] < c.physics.ladder[i - 1], "physics.ladder must be strictly decreasing");
    }
    require(c.physics.sigma >= 0, "physics.sigma must be >= 0");
    require(c.physics.g > 0, "physics.g must be positive");
    require(c.stepper.dt > 0, "stepper.dt must be positive");
    require(c.stepper.T >= 0, "stepper.T must be >= 0");
    require(c.stepper.scheme == "imex2" || c.stepper.scheme == "rk3", "stepper.scheme must be imex2 or rk3");
    require(c.stepper.regime == "auto" || c.stepper.regime == "viscous" || c.stepper.regime == "ideal",
            "stepper.regime must be auto, viscous or ideal");
    require(c.stepper.history_depth >= 1, "stepper.history_depth must be >= 1");
    require(c.stepper.cfl_safety > 0, "stepper.cfl_safety must be positive");
    require(c.stepper.mms_levels >= 2, "stepper.mms_levels must be >= 2");
    require(c.analysis.delta_z > 0 && c.analysis.delta_z < 0.5, "analysis.delta_z must lie in (0, 1/2)");
    require(c.analysis.reference == "ideal" || c.analysis.reference == "overkill",
            "analysis.reference must be ideal or overkill");
    require(c.analysis.checkpoints >= 0, "analysis.checkpoints must be >= 0");
    require(c.analysis.states >= 1, "analysis.states must be >= 1");
    require(c.analysis.layer.samples >= 2, "analysis.layer.samples must be >= 2");
    require(c.output.checkpoint_every >= 0 && c.output.log_every >= 1, "output cadences must be non-negative");
    require(c.workers >= 1, "workers must be >= 1");
    try {
        for (const auto& n : c.analysis.norms) parse_norm(n);
    } catch (const Error& e) {
        bad(std::string("analysis.norms: ") + e.what());
    }
    static const std::set<std::string> families{"rest", "swirl", "mms", "compatible-strain-zero", "strain-nonzero",
                                                "initial-layer"};
    require(families.count(c.data.family) > 0, "unknown data.family " + c.data.family);
    return c;
}

json RunConfig::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["workers"] = workers;
    j["grid"] = {{"d_h", grid.d_h}, {"Ny", grid.Ny}, {"Nz", grid.Nz}, {"L", grid.L}};
    j["physics"] = {{"eps", physics.eps}, {"ladder", physics.ladder}, {"sigma", physics.sigma}, {"g", physics.g}};
    if (physics.A <= 0)
        j["physics"]["A"] = "auto";
    else
        j["physics"]["A"] = physics.A;
    j["data"] = {{"family", data.family}, {"U", data.U},         {"B", data.B},
                 {"layer_amp", data.layer_amp}, {"h_amp", data.h_amp}, {"seed", data.seed}};
    j["stepper"] = {{"dt", stepper.dt},
                    {"scheme", stepper.scheme},
                    {"regime", stepper.regime},
                    {"T", stepper.T},
                    {"history_depth", stepper.history_depth},
                    {"cfl_safety", stepper.cfl_safety},
                    {"c0_min_factor", stepper.c0_min_factor},
                    {"mms_levels", stepper.mms_levels}};
    const LayerBlock& l = analysis.layer;
    json syn = json::array();
    for (const auto& [cc, pp] : analysis.synthetic) syn.push_back({cc, pp});
    j["analysis"] = {{"norms", analysis.norms},
                     {"delta_z", analysis.delta_z},
                     {"tau", analysis.tau},
                     {"reference", analysis.reference},
                     {"checkpoints", analysis.checkpoints},
                     {"states", analysis.states},
                     {"synthetic", syn},
                     {"thresholds",
                      {{"initial_floor", analysis.thresholds.initial_floor},
                       {"strain_floor", analysis.thresholds.strain_floor},
                       {"factor", analysis.thresholds.factor}}},
                     {"layer",
                      {{"xi", l.xi},
                       {"a0", l.a0},
                       {"b0", l.b0},
                       {"f7v", l.f7v},
                       {"f7b", l.f7b},
                       {"gamma", l.gamma},
                       {"Wp0", l.Wp0},
                       {"Wm0", l.Wm0},
                       {"samples", l.samples}}}};
    j["output"] = {{"directory", output.directory},
                   {"checkpoint_every", output.checkpoint_every},
                   {"log_every", output.log_every}};
    return j;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        bad("config " + path + " is not valid JSON: " + e.what());
    }
    return RunConfig::from_json(j);
}

void apply_env_overrides(RunConfig& cfg) {
    if (const char* d = std::getenv("FSMHD_OUTPUT_DIR"); d && *d) cfg.output.directory = d;
    if (const char* w = std::getenv("FSMHD_WORKERS"); w && *w) {
        char* end = nullptr;
        const long n = std::strtol(w, &end, 10);
        if (*end != '\0' || n < 1) bad("FSMHD_WORKERS must be a positive integer");
        cfg.workers = int(n);
    }
}

GridPtr make_grid(const GridBlock& b) { return std::make_shared<HalfSpaceGrid>(b.d_h, b.Ny, b.Nz, b.L); }

StepConfig step_config(const RunConfig& cfg, double eps) {
    StepConfig s;
    s.dt = cfg.stepper.dt;
    s.scheme = cfg.stepper.scheme == "rk3" ? Scheme::ExplicitRk3 : Scheme::Imex2;
    s.cfl_safety = cfg.stepper.cfl_safety;
    s.history_depth = cfg.stepper.history_depth;
    s.c0_min_factor = cfg.stepper.c0_min_factor;
    if (cfg.stepper.regime == "auto")
        s.regime = eps > 0 ? Regime::Viscous : Regime::Ideal;
    else
        s.regime = cfg.stepper.regime == "ideal" ? Regime::Ideal : Regime::Viscous;
    return s;
}

SweepPlan sweep_plan(const RunConfig& cfg) {
    SweepPlan p;
    p.eps_ladder = cfg.physics.ladder;
    p.T = cfg.stepper.T;
    if (!cfg.analysis.synthetic.empty()) {
        p.synthetic = true;
        p.synthetic_terms = cfg.analysis.synthetic;
    } else {
        try {
            p.family = parse_data_family(cfg.data.family);
        } catch (const Error&) {
            bad("sweeps need a sweep data family, got " + cfg.data.family);
        }
    }
    for (const auto& n : cfg.analysis.norms) p.norms.push_back(parse_norm(n));
    p.reference = cfg.analysis.reference == "overkill" ? ReferenceKind::OverkillViscous : ReferenceKind::Ideal;
    p.checkpoints = cfg.analysis.checkpoints;
    return p;
}

SweepBase sweep_base(const RunConfig& cfg) {
    SweepBase b;
    b.d_h = cfg.grid.d_h;
    b.Ny = cfg.grid.Ny;
    b.Nz = cfg.grid.Nz;
    b.L = cfg.grid.L;
    b.g = cfg.physics.g;
    b.sigma = cfg.physics.sigma;
    b.step = step_config(cfg, 1.0);
    b.data.U = cfg.data.U;
    b.data.B = cfg.data.B;
    b.data.layer_amp = cfg.data.layer_amp;
    b.data.seed = cfg.data.seed;
    b.thresholds = cfg.analysis.thresholds;
    b.workers = cfg.workers;
    return b;
}

}  // namespace fsmhd
