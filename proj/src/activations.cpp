#include "hornets/activations.hpp"

#include <cmath>

namespace hornets {

namespace {
// x^n by repeated multiplication; n is small (<= 33) and this stays
// bit-reproducible across libm implementations.
double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}
}  // namespace

double poly_clip(double x, int k) {
    if (x <= -1.0) return -1.0;
    if (x >= 1.0) return 1.0;
    return ipow(x, 2 * k + 1);
}

double poly_clip_grad(double x, int k) {
    if (x <= -1.0 || x >= 1.0) return 0.0;
    return static_cast<double>(2 * k + 1) * ipow(x, 2 * k);
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }

double activate(double x, const ActivationKind& act) {
    return act.is_poly() ? poly_clip(x, act.k) : relu(x);
}

double activate_grad(double x, const ActivationKind& act) {
    return act.is_poly() ? poly_clip_grad(x, act.k) : relu_grad(x);
}

int discretize(double x) {
    double c = x;
    if (c < -1.0) c = -1.0;
    if (c > 1.0) c = 1.0;
    // std::round rounds halfway cases away from zero, which is the
    // documented tie rule here.
    return static_cast<int>(std::round(c));
}

}  // namespace hornets
