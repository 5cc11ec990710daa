#pragma once

#include <cmath>
#include <functional>
#include <sstream>

#include "coexist/errors.hpp"

namespace coexist {

namespace detail {

struct SimpsonState {
    const std::function<double(double)>& fn;
    int evaluations = 0;
    int max_evaluations = 2'000'000;
    bool exhausted = false;
};

// Adaptive Simpson with Richardson extrapolation; `whole` is Simpson on [a, b].
inline double simpson_recurse(SimpsonState& s, double a, double b, double fa, double fm, double fb, double whole,
                              double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = s.fn(lm);
    const double frm = s.fn(rm);
    s.evaluations += 2;
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol || (m - a) <= 1e-15 * std::max(1.0, std::abs(m))) {
        return left + right + delta / 15.0;
    }
    if (depth <= 0 || s.evaluations > s.max_evaluations) {
        s.exhausted = true;
        return left + right + delta / 15.0;
    }
    return simpson_recurse(s, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_recurse(s, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

/// Adaptive Simpson integral of `fn` over [a, b] to an absolute tolerance.
/// Throws QuadratureFailure when the tolerance cannot be met.
inline double integrate(const std::function<double(double)>& fn, double a, double b, double abs_tol = 1e-10) {
    if (a == b) return 0.0;
    if (a > b) return -integrate(fn, b, a, abs_tol);
    detail::SimpsonState state{fn};
    const double fa = fn(a);
    const double fb = fn(b);
    const double fm = fn(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double value = detail::simpson_recurse(state, a, b, fa, fm, fb, whole, abs_tol, 50);
    if (!std::isfinite(value) || state.exhausted) {
        std::ostringstream msg;
        msg << "adaptive Simpson on [" << a << ", " << b << "] could not reach tolerance " << abs_tol;
        fail(ErrorKind::QuadratureFailure, msg.str());
    }
    return value;
}

} // namespace coexist
