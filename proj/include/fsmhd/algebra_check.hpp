#pragma once

#include "fsmhd/surface.hpp"

#include <cstdint>

namespace fsmhd {

struct AlgebraCheckOptions {
    int states = 50;          // random smooth states for the round trip and compatibility checks
    int operator_fields = 10; // fields for the curl grad and div curl identities
    std::uint64_t seed = 0;
};

struct AlgebraTolerances {
    double roundtrip = 1e-9;   // relative
    double det = 1e-12;        // pointwise
    double compat = 1e-10;
    double flat_trace = 1e-12;
    double identity = 1e-8;
    double flat_reduction = 1e-12;
};

// Worst deviations found by the property suite on one surface.
struct AlgebraCheck {
    int states = 0;
    double grad_h_sup = 0.0;
    double roundtrip = 0.0;       // max |w -> dz f -> w - w| / max |w|
    double det = 0.0;             // closed-form determinant vs the probed linear map and normal_system_det
    double compat = 0.0;          // sup |Pi S n x n| with the compatible boundary normals
    double flat_trace = 0.0;      // |F1 - 2 d2 f3| + |F2 + 2 d1 f3| on the flat surface
    double curl_grad = 0.0, div_curl = 0.0;
    double flat_reduction = 0.0;  // phi operators on the flat surface vs plain derivatives
    bool roundtrip_ok(const AlgebraTolerances& t = {}) const { return roundtrip <= t.roundtrip && det <= t.det; }
    bool compat_ok(const AlgebraTolerances& t = {}) const { return compat <= t.compat && flat_trace <= t.flat_trace; }
    bool identities_ok(const AlgebraTolerances& t = {}) const {
        return curl_grad <= t.identity && div_curl <= t.identity && flat_reduction <= t.flat_reduction;
    }
    bool ok(const AlgebraTolerances& t = {}) const { return roundtrip_ok(t) && compat_ok(t) && identities_ok(t); }
};

AlgebraCheck check_algebra(const GridPtr& g, const Eigen::ArrayXd& h, const AlgebraCheckOptions& opt = {});

}  // namespace fsmhd
