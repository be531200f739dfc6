#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kcm::stats {

struct Interval {
    double lo = 0;
    double hi = 0;
};

// Wilson score interval for k successes out of n at normal quantile z.
Interval wilson(std::size_t k, std::size_t n, double z = 1.959963984540054);

// Binomial standard error sqrt(p(1-p)/n).
double binomial_se(double p, std::size_t n);

struct LineFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
    double rss = 0;            // residual sum of squares
    double relative_residual = 0;  // ||residual||_2 / ||y||_2
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Linear-interpolated quantile, q in [0,1]; the input is copied and sorted.
double quantile(std::vector<double> v, double q);

struct Moments {
    double mean = 0;
    double stderr_ = 0;
};
Moments moments(std::span<const double> v);

}  // namespace kcm::stats
