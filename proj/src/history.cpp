#include "fsmhd/history.hpp"

#include "fsmhd/errors.hpp"
#include "fsmhd/norms.hpp"
#include "fsmhd/ops.hpp"

#include <cmath>

namespace fsmhd {

History::History(int depth) : depth_(depth) {
    if (depth < 1) fail(ErrorCode::ConfigError, "history depth must be at least 1");
}

void History::push(const MhdState& st) {
    states_.push_front(st);
    while (int(states_.size()) > depth_ + 1) states_.pop_back();
}

double History::spacing() const { return states_.size() < 2 ? 0.0 : states_[0].t - states_[1].t; }

Field History::dt_l(int l, const std::function<Field(const MhdState&)>& get) const {
    if (l < 0 || size() < l + 1)
        fail(ErrorCode::InsufficientHistory,
             "dt^" + std::to_string(l) + " needs " + std::to_string(l + 1) + " levels, have " + std::to_string(size()));
    Field out = get(states_[0]);
    if (l == 0) return out;
    const double dt = spacing();
    // sum_k (-1)^k C(l, k) f_{n-k} / dt^l
    double c = 1.0;
    for (int k = 1; k <= l; ++k) {
        c *= -double(l - k + 1) / k;
        out += c * get(states_[k]);
    }
    return out / std::pow(dt, l);
}

namespace {

std::vector<Vec3> derivs(const History& h, int m, Vec3 MhdState::*member) {
    std::vector<Vec3> out;
    for (int l = 0; l <= m; ++l) {
        Vec3 d;
        for (int i = 0; i < 3; ++i) d[i] = h.dt_l(l, [&](const MhdState& s) { return (s.*member)[i]; });
        out.push_back(d);
    }
    return out;
}

}  // namespace

std::vector<Vec3> History::derivatives_v(int m) const { return derivs(*this, m, &MhdState::v); }
std::vector<Vec3> History::derivatives_b(int m) const { return derivs(*this, m, &MhdState::b); }

Field apply_Z(const HalfSpaceGrid& g, const Field& f, const std::array<int, 3>& alpha) {
    Field out = f;
    for (int k = 0; k < alpha[0]; ++k) out = dh(g, out, 0);
    for (int k = 0; k < alpha[1]; ++k) out = dh(g, out, 1);
    for (int k = 0; k < alpha[2]; ++k) out = Z3(g, out);
    return out;
}

GoodUnknowns alinhac_diagnostics(const History& h, const SurfaceState& S, int l, const std::array<int, 3>& alpha) {
    const HalfSpaceGrid& g = S.g();
    auto zt = [&](const std::function<Field(const MhdState&)>& get) {
        return h.dt_l(l, [&](const MhdState& s) { return apply_Z(g, get(s), alpha); });
    };
    const Field eta = zt([](const MhdState& s) { return s.S.eta; });
    const MhdState& cur = h.at(0);
    GoodUnknowns r;
    for (int i = 0; i < 3; ++i) {
        r.V[i] = zt([i](const MhdState& s) { return s.v[i]; }) - dz(g, cur.v[i]) / S.J * eta;
        r.B[i] = zt([i](const MhdState& s) { return s.b[i]; }) - dz(g, cur.b[i]) / S.J * eta;
    }
    r.Q = zt([](const MhdState& s) { return s.q; }) - dz(g, cur.q) / S.J * eta;
    return r;
}

}  // namespace fsmhd
