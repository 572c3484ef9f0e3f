#pragma once

#include <cmath>
#include <vector>

// Numerical-integration oracles for Gaussian divergences, independent of the
// library's closed-form expressions.
namespace oracles {

template <class F>
double simpson(F f, double a, double b, int intervals = 16384) {
    if (intervals % 2) ++intervals;
    const double h = (b - a) / intervals;
    double s = f(a) + f(b);
    for (int i = 1; i < intervals; ++i) s += f(a + h * i) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double gauss_logpdf(double x, double mu, double var) {
    const double d = x - mu;
    return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * d * d / var;
}

// KL(N(mu, var) || N(0, 1)) by integrating q log(q/p).
inline double gauss_kl_quadrature(double mu, double var) {
    const double sigma = std::sqrt(var);
    const double lo = std::min(mu - 16.0 * sigma, -16.0);
    const double hi = std::max(mu + 16.0 * sigma, 16.0);
    return simpson(
        [&](double x) {
            const double lq = gauss_logpdf(x, mu, var);
            return std::exp(lq) * (lq - gauss_logpdf(x, 0.0, 1.0));
        },
        lo, hi);
}

// Negative log density evaluated the direct way (pdf first, then -log).
inline double gauss_nll_direct(double z, double mu, double var) {
    const double d = z - mu;
    const double pdf = std::exp(-d * d / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
    return -std::log(pdf);
}

// KL(q || N(0,1)) for a 1-D uniform mixture of Gaussians.
inline double mixture_prior_kl_quadrature(const std::vector<double>& mus,
                                          const std::vector<double>& vars) {
    double lo = -16.0, hi = 16.0;
    for (std::size_t i = 0; i < mus.size(); ++i) {
        lo = std::min(lo, mus[i] - 16.0 * std::sqrt(vars[i]));
        hi = std::max(hi, mus[i] + 16.0 * std::sqrt(vars[i]));
    }
    const double w = 1.0 / static_cast<double>(mus.size());
    auto q = [&](double x) {
        double s = 0.0;
        for (std::size_t i = 0; i < mus.size(); ++i) s += w * std::exp(gauss_logpdf(x, mus[i], vars[i]));
        return s;
    };
    return simpson(
        [&](double x) {
            const double qx = q(x);
            if (qx <= 0.0) return 0.0;
            return qx * (std::log(qx) - gauss_logpdf(x, 0.0, 1.0));
        },
        lo, hi, 65536);
}

}  // namespace oracles
