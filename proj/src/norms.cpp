#include "fsmhd/norms.hpp"

#include "fsmhd/errors.hpp"
#include "fsmhd/ops.hpp"

#include <cmath>

namespace fsmhd {

namespace {

bool is_y(NormFamily f) { return f == NormFamily::Y || f == NormFamily::Y_tan; }
bool tangential_only(NormFamily f) { return f != NormFamily::X && f != NormFamily::Y; }

// accumulate |Z^alpha f| over |alpha| <= k
void accumulate(const HalfSpaceGrid& g, const Eigen::ArrayXd& f, int k, const ConormalSpec& spec, bool surface,
                double& acc) {
    const bool y = is_y(spec.family);
    const int n3max = (tangential_only(spec.family) || surface) ? 0 : k;
    const int n2max = g.d_h() == 2 ? k : 0;
    auto add = [&](const Eigen::ArrayXd& x) {
        if (y) {
            acc += x.size() ? x.abs().maxCoeff() : 0.0;
        } else {
            acc += surface ? integrate_surface(g, x.square()) : integrate(g, x.square());
        }
    };
    Eigen::ArrayXd z3 = f;
    for (int a3 = 0; a3 <= n3max; ++a3) {
        if (a3 > 0) z3 = Z3(g, z3);
        Eigen::ArrayXd z2 = z3;
        for (int a2 = 0; a2 + a3 <= k && a2 <= n2max; ++a2) {
            if (a2 > 0) z2 = dh(g, z2, 1);
            Eigen::ArrayXd z1 = z2;
            for (int a1 = 0; a1 + a2 + a3 <= k; ++a1) {
                if (a1 > 0) z1 = dh(g, z1, 0);
                add(z1);
            }
        }
    }
}

}  // namespace

NormFamily parse_norm_family(const std::string& s) {
    if (s == "X") return NormFamily::X;
    if (s == "X_tan") return NormFamily::X_tan;
    if (s == "Y") return NormFamily::Y;
    if (s == "Y_tan") return NormFamily::Y_tan;
    if (s == "boundary") return NormFamily::Boundary;
    fail(ErrorCode::ConfigError, "unknown norm family '" + s + "'");
}

std::string to_string(NormFamily f) {
    switch (f) {
        case NormFamily::X: return "X";
        case NormFamily::X_tan: return "X_tan";
        case NormFamily::Y: return "Y";
        case NormFamily::Y_tan: return "Y_tan";
        case NormFamily::Boundary: return "boundary";
    }
    return "?";
}

Field Z3(const HalfSpaceGrid& g, const Field& f) {
    Eigen::ArrayXd w = g.z_nodes() / (1.0 - g.z_nodes());
    return broadcast_z(g, w) * dz(g, f);
}

double conormal_norm(const HalfSpaceGrid& g, const std::vector<Field>& history, const ConormalSpec& spec) {
    if (spec.m < 0 || spec.s < 0) fail(ErrorCode::ConfigError, "conormal_norm: negative order");
    if (int(history.size()) < spec.m + 1)
        fail(ErrorCode::InsufficientHistory, "conormal_norm: need " + std::to_string(spec.m + 1) +
                                                 " time levels, have " + std::to_string(history.size()));
    double acc = 0.0;
    for (int l = 0; l <= spec.m; ++l) {
        Eigen::ArrayXd f = history[l];
        bool surface = f.size() == g.nh() && g.Nz() > 1;
        if (!surface && f.size() != g.size()) fail(ErrorCode::ShapeMismatch, "conormal_norm: field size");
        if (spec.family == NormFamily::Boundary && !surface) {
            f = top(g, f);
            surface = true;
        }
        accumulate(g, f, spec.m + spec.s - l, spec, surface, acc);
    }
    return is_y(spec.family) ? acc : std::sqrt(acc);
}

double conormal_norm(const HalfSpaceGrid& g, const std::vector<Vec3>& history, const ConormalSpec& spec) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
        std::vector<Field> h;
        h.reserve(history.size());
        for (const auto& v : history) h.push_back(v[i]);
        double c = conormal_norm(g, h, spec);
        acc += is_y(spec.family) ? c : c * c;
    }
    return is_y(spec.family) ? acc : std::sqrt(acc);
}

double hardy_ratio(const HalfSpaceGrid& g, const Field& q) {
    Eigen::ArrayXd w = 1.0 / (1.0 - g.z_nodes());
    double num = integrate(g, (broadcast_z(g, w) * q).square());
    double den = integrate(g, dz(g, q).square());
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace fsmhd
