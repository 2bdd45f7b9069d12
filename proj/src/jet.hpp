#pragma once

#include <array>
#include <cmath>

namespace fsmhd::detail {

// Second-order forward jet in three variables (t, y, x3): value, gradient, Hessian.
struct Jet {
    double v = 0.0;
    std::array<double, 3> d{};
    std::array<std::array<double, 3>, 3> H{};

    Jet() = default;
    Jet(double c) : v(c) {}
    static Jet var(double x, int i) {
        Jet j(x);
        j.d[i] = 1.0;
        return j;
    }
    double lap() const { return H[1][1] + H[2][2]; }
};

inline Jet chain(const Jet& u, double f, double f1, double f2) {
    Jet r(f);
    for (int i = 0; i < 3; ++i) {
        r.d[i] = f1 * u.d[i];
        for (int j = 0; j < 3; ++j) r.H[i][j] = f1 * u.H[i][j] + f2 * u.d[i] * u.d[j];
    }
    return r;
}

inline Jet operator+(const Jet& a, const Jet& b) {
    Jet r(a.v + b.v);
    for (int i = 0; i < 3; ++i) {
        r.d[i] = a.d[i] + b.d[i];
        for (int j = 0; j < 3; ++j) r.H[i][j] = a.H[i][j] + b.H[i][j];
    }
    return r;
}
inline Jet operator*(double c, const Jet& a) { return chain(a, c * a.v, c, 0.0); }
inline Jet operator-(const Jet& a) { return (-1.0) * a; }
inline Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }
inline Jet operator*(const Jet& a, const Jet& b) {
    Jet r(a.v * b.v);
    for (int i = 0; i < 3; ++i) {
        r.d[i] = a.d[i] * b.v + a.v * b.d[i];
        for (int j = 0; j < 3; ++j)
            r.H[i][j] = a.H[i][j] * b.v + a.v * b.H[i][j] + a.d[i] * b.d[j] + b.d[i] * a.d[j];
    }
    return r;
}
inline Jet sin(const Jet& a) { return chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet cos(const Jet& a) { return chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet exp(const Jet& a) {
    const double e = std::exp(a.v);
    return chain(a, e, e, e);
}
inline Jet pow(const Jet& a, int n) { return chain(a, std::pow(a.v, n), n * std::pow(a.v, n - 1), n * (n - 1) * std::pow(a.v, n - 2)); }

}  // namespace fsmhd::detail
