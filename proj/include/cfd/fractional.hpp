#pragma once

#include <cmath>
#include <functional>

#include "cfd/errors.hpp"
#include "cfd/quadrature.hpp"

namespace cfd {

/// Fractional order alpha in (0, 1]. Also owns the monotone time transform
/// u(t) = sign(t) |t|^alpha / alpha that turns conformable integrals into
/// plain integrals and conformable ODEs into classical ones.
class FractionalOrder {
  public:
    explicit FractionalOrder(double alpha) : alpha_(alpha) {
        if (!(alpha > 0.0) || !(alpha <= 1.0))
            throw PreconditionError("FractionalOrder: alpha must lie in (0, 1]");
    }

    double value() const { return alpha_; }

    /// u(t) = sign(t) |t|^alpha / alpha.
    double transform(double t) const {
        if (t == 0.0) return 0.0;
        const double sign = t > 0.0 ? 1.0 : -1.0;
        return sign * std::pow(std::abs(t), alpha_) / alpha_;
    }

    /// Inverse of transform: t(u) = sign(u) (alpha |u|)^(1/alpha).
    double inverse_transform(double u) const {
        if (u == 0.0) return 0.0;
        const double sign = u > 0.0 ? 1.0 : -1.0;
        return sign * std::pow(alpha_ * std::abs(u), 1.0 / alpha_);
    }

  private:
    double alpha_;
};

/// A real-valued function of time restricted to a closed interval.
class ScalarSignal {
  public:
    ScalarSignal(std::function<double(double)> eval, double t_lo, double t_hi)
        : eval_(std::move(eval)), lo_(t_lo), hi_(t_hi) {
        if (!(t_lo <= t_hi)) throw PreconditionError("ScalarSignal: empty domain");
    }

    double operator()(double t) const {
        if (t < lo_ || t > hi_)
            throw DomainError("ScalarSignal: evaluation outside domain");
        return eval_(t);
    }

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    bool contains(double a, double b) const {
        return std::min(a, b) >= lo_ && std::max(a, b) <= hi_;
    }

  private:
    std::function<double(double)> eval_;
    double lo_, hi_;
};

/// Mittag-Leffler-type function E_alpha(lambda, t) = exp(lambda u(t)).
/// Throws OverflowError when the exponent magnitude exceeds 700.
double ml_scalar(const FractionalOrder& order, double lambda, double t);

/// Finite-difference evaluation of the conformable derivative
/// |t|^(1-alpha) f'(t); at t = 0 the limit is approximated by averaging the
/// values at +step and -step.
double conformable_derivative(const FractionalOrder& order, const ScalarSignal& f,
                              double t, double step);

/// Conformable integral of f from t0 to t: the weighted integral
/// of |s|^(alpha-1) f(s). The weight singularity at s = 0 is removed exactly
/// by substituting u = sign(s)|s|^alpha/alpha; intervals crossing 0 are split.
double conformable_integral(const FractionalOrder& order, const ScalarSignal& f,
                            double t0, double t, const QuadratureConfig& cfg);

struct GronwallBound {
    double sharp;   ///< a(t) exp(I^alpha_{t0} f (t))
    double coarse;  ///< a(t) E_alpha(sup f, |t|) E_alpha(sup f, |t0|)
};

/// Gronwall-type bound for u <= a + I^alpha_{t0}(f u): requires a nondecreasing
/// nonnegative and f continuous nonnegative on [t0, t].
GronwallBound gronwall_bound(const FractionalOrder& order, const ScalarSignal& a,
                             const ScalarSignal& f, double t0, double t,
                             const QuadratureConfig& cfg);

}  // namespace cfd
