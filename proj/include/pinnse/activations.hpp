#pragma once

#include <cmath>

#include "pinnse/common.hpp"

namespace pinnse {

/// Value and first three derivatives of a scalar activation. Third
/// derivatives are required by the reverse sweep when second-order input
/// tangents are active.
struct ActJet {
    double f0 = 0, f1 = 0, f2 = 0, f3 = 0;
};

namespace detail {

inline ActJet sigmoid_jet(double x, int order) {
    ActJet s;
    s.f0 = 1.0 / (1.0 + std::exp(-x));
    if (order >= 1) s.f1 = s.f0 * (1.0 - s.f0);
    if (order >= 2) s.f2 = s.f1 * (1.0 - 2.0 * s.f0);
    if (order >= 3) s.f3 = s.f2 * (1.0 - 2.0 * s.f0) - 2.0 * s.f1 * s.f1;
    return s;
}

inline ActJet swish_jet(double x, int order) {
    ActJet s = sigmoid_jet(x, order);
    ActJet w;
    w.f0 = x * s.f0;
    if (order >= 1) w.f1 = s.f0 + x * s.f1;
    if (order >= 2) w.f2 = 2.0 * s.f1 + x * s.f2;
    if (order >= 3) w.f3 = 3.0 * s.f2 + x * s.f3;
    return w;
}

inline ActJet gelu_jet(double x, int order) {
    constexpr double kInvSqrt2 = 0.70710678118654752440;
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    const double Phi = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double phi = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    ActJet g;
    g.f0 = x * Phi;
    if (order >= 1) g.f1 = Phi + x * phi;
    if (order >= 2) g.f2 = (2.0 - x * x) * phi;
    if (order >= 3) g.f3 = (x * x * x - 4.0 * x) * phi;
    return g;
}

// sin(c x) * swish(x)
inline ActJet sin_swish_jet(double x, double c, int order) {
    ActJet w = swish_jet(x, order);
    const double S = std::sin(c * x);
    const double C = std::cos(c * x);
    ActJet h;
    h.f0 = S * w.f0;
    if (order >= 1) h.f1 = c * C * w.f0 + S * w.f1;
    if (order >= 2) h.f2 = -c * c * S * w.f0 + 2.0 * c * C * w.f1 + S * w.f2;
    if (order >= 3)
        h.f3 = -c * c * c * C * w.f0 - 3.0 * c * c * S * w.f1 + 3.0 * c * C * w.f2 + S * w.f3;
    return h;
}

// gelu(x) * (1 + sin(c x))
inline ActJet gelu_sin_jet(double x, double c, int order) {
    ActJet g = gelu_jet(x, order);
    const double S = std::sin(c * x);
    const double C = std::cos(c * x);
    const double u = 1.0 + S;
    ActJet f;
    f.f0 = g.f0 * u;
    if (order >= 1) f.f1 = g.f1 * u + g.f0 * c * C;
    if (order >= 2) f.f2 = g.f2 * u + 2.0 * g.f1 * c * C - g.f0 * c * c * S;
    if (order >= 3)
        f.f3 = g.f3 * u + 3.0 * g.f2 * c * C - 3.0 * g.f1 * c * c * S - g.f0 * c * c * c * C;
    return f;
}

}  // namespace detail

/// Activation value with derivatives up to `order` (0..3). `c` is the
/// sinusoid constant of the combined activations; the source formulas use
/// the literal 3.14 rather than pi.
inline ActJet activation_jet(ActivationKind kind, double x, double c, int order) {
    switch (kind) {
        case ActivationKind::gelu: return detail::gelu_jet(x, order);
        case ActivationKind::swish: return detail::swish_jet(x, order);
        case ActivationKind::sin_swish: return detail::sin_swish_jet(x, c, order);
        case ActivationKind::gelu_sin: return detail::gelu_sin_jet(x, c, order);
    }
    return {};
}

inline double activation_value(ActivationKind kind, double x, double c = 3.14) {
    return activation_jet(kind, x, c, 0).f0;
}

}  // namespace pinnse
