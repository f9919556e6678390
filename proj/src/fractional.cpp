#include "cfd/fractional.hpp"

#include <algorithm>
#include <cmath>

namespace cfd {

namespace {
constexpr double kExponentLimit = 700.0;
}

double ml_scalar(const FractionalOrder& order, double lambda, double t) {
    const double exponent = lambda * order.transform(t);
    if (std::abs(exponent) > kExponentLimit)
        throw OverflowError("ml_scalar: exponent magnitude exceeds 700");
    return std::exp(exponent);
}

double conformable_derivative(const FractionalOrder& order, const ScalarSignal& f,
                              double t, double step) {
    if (!(step > 0.0)) throw PreconditionError("conformable_derivative: step must be > 0");

    auto weighted = [&](double at) {
        const double fprime = (f(at + step) - f(at - step)) / (2.0 * step);
        return std::pow(std::abs(at), 1.0 - order.value()) * fprime;
    };

    if (t == 0.0) {
        // Limit clause: approximate lim_{t->0} by sampling both sides.
        return 0.5 * (weighted(step) + weighted(-step));
    }
    return weighted(t);
}

double conformable_integral(const FractionalOrder& order, const ScalarSignal& f,
                            double t0, double t, const QuadratureConfig& cfg) {
    if (!f.contains(t0, t))
        throw DomainError("conformable_integral: [t0, t] not inside signal domain");

    // In u = sign(s)|s|^alpha/alpha the integrand becomes f(s(u)), smooth up
    // to the smoothness of f. Split at 0 so each piece stays one-signed.
    auto piece = [&](double a, double b) {
        const double ua = order.transform(a);
        const double ub = order.transform(b);
        auto g = [&](double u) { return f(order.inverse_transform(u)); };
        return quad::integrate(g, ua, ub, cfg);
    };

    if ((t0 < 0.0 && t > 0.0) || (t0 > 0.0 && t < 0.0))
        return piece(t0, 0.0) + piece(0.0, t);
    return piece(t0, t);
}

GronwallBound gronwall_bound(const FractionalOrder& order, const ScalarSignal& a,
                             const ScalarSignal& f, double t0, double t,
                             const QuadratureConfig& cfg) {
    if (!(t >= t0)) throw PreconditionError("gronwall_bound: requires t >= t0");

    // Sample check of the sign hypotheses on the evaluation grid.
    double sup_f = 0.0;
    const int samples = 64;
    for (int i = 0; i <= samples; ++i) {
        const double s = t0 + (t - t0) * static_cast<double>(i) / samples;
        const double fv = f(s);
        const double av = a(s);
        if (fv < 0.0) throw PreconditionError("gronwall_bound: f has a negative sample");
        if (av < 0.0) throw PreconditionError("gronwall_bound: a has a negative sample");
        sup_f = std::max(sup_f, fv);
    }

    const double integral = conformable_integral(order, f, t0, t, cfg);
    GronwallBound out;
    out.sharp = a(t) * std::exp(integral);
    out.coarse = a(t) * ml_scalar(order, sup_f, std::abs(t)) *
                 ml_scalar(order, sup_f, std::abs(t0));
    return out;
}

}  // namespace cfd
