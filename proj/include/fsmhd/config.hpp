#pragma once

#include "fsmhd/invlimit.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fsmhd {

inline constexpr int config_schema_version = 1;
inline constexpr const char* fsmhd_version = "0.1.0";

struct GridBlock {
    int d_h = 1, Ny = 32, Nz = 65;
    double L = 3.0;
};

struct PhysicsBlock {
    double eps = 0.0;             // single runs
    std::vector<double> ladder;   // sweeps and layer scans, strictly decreasing
    double sigma = 0.0, g = 1.0;
    double A = 1.0;               // <= 0 means auto
};

struct DataBlock {
    // rest, swirl, mms or one of the sweep families
    std::string family = "rest";
    double U = 0.05, B = 0.03, layer_amp = 0.5;
    double h_amp = 0.0;           // surface amplitude for swirl and check-algebra
    std::uint64_t seed = 0;
};

struct StepperBlock {
    double dt = 1e-3;
    std::string scheme = "imex2";  // imex2 or rk3
    std::string regime = "auto";   // auto (ideal iff eps = 0), viscous or ideal
    double T = 0.1;
    int history_depth = 1;
    double cfl_safety = 0.5;
    double c0_min_factor = 1e-3;
    int mms_levels = 3;            // dt halvings of the MMS study
};

struct LayerBlock {
    std::vector<double> xi{1.0};   // horizontal wavenumbers (xi1; xi2 = 0)
    double a0 = 1.0, b0 = 1.0;     // scalings of the identity metrics
    double f7v = 0.0, f7b = 0.0, gamma = 1.0;
    double Wp0 = 1.0, Wm0 = 1.0;
    int samples = 41;              // profile samples written per case
};

struct AnalysisBlock {
    std::vector<std::string> norms{"v:X_tan:0:0"};
    double delta_z = 0.1;
    std::vector<double> tau{0.0};
    ClassifierThresholds thresholds;
    std::string reference = "ideal";  // ideal or overkill
    int checkpoints = 5;
    std::vector<std::pair<double, double>> synthetic;  // (c, p) terms; non-empty selects synthetic mode
    LayerBlock layer;
    int states = 50;                  // check-algebra
};

struct OutputBlock {
    std::string directory = "fsmhd_out";
    int checkpoint_every = 0;  // steps between checkpoints; 0 writes only the final state
    int log_every = 1;
};

struct RunConfig {
    int schema_version = config_schema_version;
    GridBlock grid;
    PhysicsBlock physics;
    DataBlock data;
    StepperBlock stepper;
    AnalysisBlock analysis;
    OutputBlock output;
    int workers = 1;

    // unknown keys, wrong types, non-finite numbers and broken invariants throw ConfigError
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

RunConfig load_config(const std::string& path);
// FSMHD_OUTPUT_DIR and FSMHD_WORKERS
void apply_env_overrides(RunConfig& cfg);

GridPtr make_grid(const GridBlock& b);
StepConfig step_config(const RunConfig& cfg, double eps);
SweepPlan sweep_plan(const RunConfig& cfg);
SweepBase sweep_base(const RunConfig& cfg);

}  // namespace fsmhd
