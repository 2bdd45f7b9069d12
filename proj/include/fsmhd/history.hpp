#pragma once

#include "fsmhd/state.hpp"

#include <array>
#include <deque>
#include <functional>

namespace fsmhd {

// Most recent states of a run at uniform time spacing, newest first.
class History {
public:
    explicit History(int depth = 1);

    void push(const MhdState& st);
    void clear() { states_.clear(); }
    int depth() const { return depth_; }
    int size() const { return int(states_.size()); }
    const MhdState& at(int k) const { return states_.at(k); }
    // spacing of the stored levels (0 when fewer than two)
    double spacing() const;

    // backward-difference dt^l of the field extracted by get; needs l + 1 levels
    Field dt_l(int l, const std::function<Field(const MhdState&)>& get) const;
    // [f, dt f, ..., dt^m f] for each component of v or b
    std::vector<Vec3> derivatives_v(int m) const;
    std::vector<Vec3> derivatives_b(int m) const;

private:
    int depth_;
    std::deque<MhdState> states_;
};

// Z^alpha = d1^a1 d2^a2 Z3^a3 with Z3 = z/(1-z) dz
Field apply_Z(const HalfSpaceGrid& g, const Field& f, const std::array<int, 3>& alpha);

struct GoodUnknowns {
    Vec3 V, B;
    Field Q;
};

// V = dt^l Z^a v - dz^phi v * dt^l Z^a eta (B, Q alike), with dz^phi evaluated on S.
// Diagnostic only.
GoodUnknowns alinhac_diagnostics(const History& h, const SurfaceState& S, int l, const std::array<int, 3>& alpha);

}  // namespace fsmhd
