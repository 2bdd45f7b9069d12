#pragma once

#include "fsmhd/grid.hpp"

#include <string>
#include <vector>

namespace fsmhd {

enum class NormFamily { X, X_tan, Y, Y_tan, Boundary };

NormFamily parse_norm_family(const std::string& s);
std::string to_string(NormFamily f);

// X^{m,s}-type norms: sum over l <= m, |alpha| <= m + s - l of |dt^l Z^alpha f|,
// Z = (d1, d2, z/(1-z) dz). X families sum squares of L2 norms (the square root is
// returned), Y families sum L-infinity norms. Tangential families drop Z3; the
// boundary family uses horizontal derivatives of the trace on z = 0.
struct ConormalSpec {
    int m = 0;
    int s = 0;
    NormFamily family = NormFamily::X;
};

// z/(1-z) dz f
Field Z3(const HalfSpaceGrid& g, const Field& f);

// history[l] = dt^l f; needs at least m + 1 entries. Entries may be volume fields
// or, for the boundary family, surface fields.
double conormal_norm(const HalfSpaceGrid& g, const std::vector<Field>& history, const ConormalSpec& spec);
double conormal_norm(const HalfSpaceGrid& g, const std::vector<Vec3>& history, const ConormalSpec& spec);
inline double conormal_norm(const HalfSpaceGrid& g, const Field& f, const ConormalSpec& spec) {
    return conormal_norm(g, std::vector<Field>{f}, spec);
}

// |q / (1 - z)|_L2 / |dz q|_L2 (Hardy quotient, bounded by 2 when q vanishes on z = 0)
double hardy_ratio(const HalfSpaceGrid& g, const Field& q);

}  // namespace fsmhd
