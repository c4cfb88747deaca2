#pragma once

#include <cstdint>

namespace hornets {

// Which nonlinearity the network uses. PolyClip carries the polynomial
// parameter k (exponent 2k+1); ReLU is the ablation variant.
struct ActivationKind {
    enum class Kind { PolyClip, ReLU };
    Kind kind = Kind::PolyClip;
    int k = 1;

    static ActivationKind poly_clip(int k) { return {Kind::PolyClip, k}; }
    static ActivationKind relu() { return {Kind::ReLU, 0}; }

    bool is_poly() const { return kind == Kind::PolyClip; }
};

// clip(x^(2k+1), -1, 1). Saturates at +-1, identity-like inside (-1,1) for k=0.
double poly_clip(double x, int k);

// Exact derivative: (2k+1)*x^(2k) strictly inside the clip region, 0 outside
// and 0 at |x| = 1 (subgradient choice matching the flat region).
double poly_clip_grad(double x, int k);

double relu(double x);
double relu_grad(double x);

double activate(double x, const ActivationKind& act);
double activate_grad(double x, const ActivationKind& act);

// round(clip(x, -1, 1)) with round-half-away-from-zero: the {-1, 0, 1}
// reading of a trained weight.
int discretize(double x);

}  // namespace hornets
