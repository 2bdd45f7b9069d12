#pragma once

#include "fsmhd/history.hpp"
#include "fsmhd/layer.hpp"
#include "fsmhd/norms.hpp"
#include "fsmhd/stepper.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fsmhd {

// ---- initial data ----

enum class DataFamily { CompatibleStrainZero, StrainNonzero, InitialLayer };
DataFamily parse_data_family(const std::string& s);
std::string to_string(DataFamily f);

struct DataParams {
    double U = 0.05;          // velocity amplitude
    double B = 0.03;          // magnetic amplitude
    double layer_amp = 0.5;   // vorticity jump of the initial-layer band
    std::uint64_t seed = 0;   // picks the horizontal phase
};

// Flat initial surface; profiles decay towards z = -L. The ideal member of the
// initial-layer family is the strain-zero data; the viscous member adds a band
// perturbation of width sqrt(eps) that keeps the strain condition.
MhdState initial_data(const GridPtr& g, DataFamily family, double eps, const DataParams& p, double grav = 1.0,
                      double sigma = 0.0);

// ---- difference norms ----

enum class Quantity { V, B, H, OmegaV, OmegaB, StrainV, StrainB, NormalV, GradQ };
Quantity parse_quantity(const std::string& s);
std::string to_string(Quantity q);

struct NormRequest {
    Quantity quantity = Quantity::V;
    ConormalSpec spec;
    std::string name() const;  // e.g. "v:X_tan:0:0"
};
NormRequest parse_norm(const std::string& s);

// Differences of the eps state and the reference, with phi-derivative differences
// split as d^{phi_eps} f_hat - (d_z^phi f) d^{phi_eps} eta_hat. Time derivatives of
// order up to spec.m come from the histories (newest level = the states passed).
std::map<std::string, double> difference_norms(const MhdState& st_eps, const MhdState& st_ref,
                                               const std::vector<NormRequest>& norms,
                                               const History* hist_eps = nullptr, const History* hist_ref = nullptr);

// ---- rate fits ----

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS deviation of log err from the fit
    int used = 0;
    int excluded = 0;       // non-positive errors left out
};
FitResult fit_rate(const std::vector<double>& eps, const std::vector<double>& err);

// ---- sweeps ----

enum class ReferenceKind { Ideal, OverkillViscous };

struct SweepPlan {
    std::vector<double> eps_ladder;
    double T = 0.2;
    DataFamily family = DataFamily::StrainNonzero;
    std::vector<NormRequest> norms;
    ReferenceKind reference = ReferenceKind::Ideal;
    int checkpoints = 5;  // intermediate checkpoints besides T
    // synthetic mode: err(eps) = sum c_k eps^p_k, the solver is bypassed
    bool synthetic = false;
    std::vector<std::pair<double, double>> synthetic_terms;  // (c, p)
};

struct SweepBase {
    int d_h = 1, Ny = 32, Nz = 65;
    double L = 3.0;
    double g = 1.0, sigma = 0.0;
    StepConfig step;
    DataParams data;
    ClassifierThresholds thresholds;
    int workers = 1;
};

struct NormReport {
    std::string name;
    std::vector<double> errors;   // per ladder entry (NaN for failed members)
    std::optional<FitResult> fit; // empty when degenerate
    std::string fit_note;
    double predicted = 0.0;       // theorem exponent, capped by the data rate
    std::string band;             // "consistent", "faster", "slower" or "degenerate"
};

struct MemberStatus {
    double eps = 0.0;
    bool ok = true;
    std::string abort_reason;
    int steps = 0;
};

struct RateReport {
    DataFamily family = DataFamily::StrainNonzero;
    std::string reference;
    std::vector<double> eps;
    std::vector<double> checkpoint_times;
    std::vector<MemberStatus> members;
    std::vector<NormReport> norms;
    double data_rate = 0.0;  // fitted rate of the initial vorticity difference (infinite when zero)
    LayerVerdict verdict = LayerVerdict::Weak;
    std::string verdict_reason;
    double initial_discrepancy = 0.0, boundary_strain = 0.0;
    bool synthetic = false;
};

RateReport run_sweep(const SweepPlan& plan, const SweepBase& base);

// Classifier inputs from data alone: band sup of the initial horizontal vorticity
// difference at eps, and sup of the reference strain traces over the given states.
double initial_vorticity_discrepancy(const MhdState& st_eps, const MhdState& st_ref, double eps);
double boundary_strain_sup(const std::vector<MhdState>& reference_states);
// Noise floors at the grid of g: strain of the strain-zero data and the vorticity
// discrepancy between two identical members.
ClassifierThresholds measured_floors(const GridPtr& g, const DataParams& p);

}  // namespace fsmhd
