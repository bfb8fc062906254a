#pragma once

#include <vector>

namespace arena {

double normal_cdf(double x);

// Inverse standard normal CDF (Acklam's rational approximation, |rel err| < 1.2e-9).
double normal_quantile(double p);

// Median of a copy of the input; averages the two middle order statistics.
double median(std::vector<double> xs);

// Kolmogorov-Smirnov distance between the sample and the standard normal.
double ks_distance_to_normal(std::vector<double> xs);

}  // namespace arena
