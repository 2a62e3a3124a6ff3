#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ellv/csv.hpp"
#include "ellv/errors.hpp"
#include "ellv/random_interactions.hpp"

namespace ellv {

/// Extreme-value normalizing constants
///   alpha*_n = sqrt(2 log n),
///   beta*_n  = alpha*_n - log(4 pi log n) / (2 alpha*_n).
struct EvtScalings {
    double alpha_star = 0.0;
    double beta_star = 0.0;
    double n = 0.0;  ///< the (possibly real-valued) n used
};

/// Accepts real-valued n >= 2 so closed-form checks (e.g. n = e^2) stay exact.
inline EvtScalings critical_scalings(double n) {
    if (!(n >= 2.0)) throw ParameterError("critical_scalings: n must be >= 2");
    EvtScalings s;
    s.n = n;
    s.alpha_star = std::sqrt(2.0 * std::log(n));
    s.beta_star =
        s.alpha_star - std::log(4.0 * M_PI * std::log(n)) / (2.0 * s.alpha_star);
    return s;
}

inline EvtScalings critical_scalings(int n) {
    return critical_scalings(static_cast<double>(n));
}

/// Gumbel CDF G(x) = exp(-exp(-x)).
inline double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

/// Normalized row sums Z_k = (1/sqrt(n)) sum_i A_ki. For the elliptic
/// ensemble these are standard normal with pairwise covariance rho/n.
inline Vector row_sums(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("row_sums: matrix must be square");
    return a.rowwise().sum() / std::sqrt(static_cast<double>(a.rows()));
}

/// Gumbel-normalized maximum statistic alpha*_n (max_k z_k - beta*_n).
inline double max_statistic(const Vector& z, const EvtScalings& s) {
    return s.alpha_star * (z.maxCoeff() - s.beta_star);
}

/// Gumbel-normalized minimum statistic alpha*_n (min_k z_k + beta*_n);
/// its negation is asymptotically Gumbel as well.
inline double min_statistic(const Vector& z, const EvtScalings& s) {
    return s.alpha_star * (z.minCoeff() + s.beta_star);
}

/// One-sample Kolmogorov-Smirnov distance between the empirical CDF of
/// `samples` and `cdf`, evaluated at the sample points.
inline double ks_distance(std::vector<double> samples,
                          const std::function<double(double)>& cdf) {
    if (samples.empty()) throw ParameterError("ks_distance: samples must be nonempty");
    std::sort(samples.begin(), samples.end());
    const double m = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / m - f);
        d = std::max(d, f - static_cast<double>(i) / m);
    }
    return d;
}

/// Two-sample KS distance between empirical CDFs.
inline double ks_distance_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw ParameterError("ks_distance_two_sample: samples must be nonempty");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na -
                                 static_cast<double>(j) / nb));
    }
    return d;
}

/// EVT sample dump: trial,statistic_max,statistic_min.
inline void write_evt_samples_csv(const std::string& path,
                                  const std::vector<double>& stat_max,
                                  const std::vector<double>& stat_min,
                                  const std::string& meta = "") {
    if (stat_max.size() != stat_min.size())
        throw ShapeError("write_evt_samples_csv: column lengths differ");
    CsvWriter csv;
    if (!meta.empty()) csv.comment(meta);
    csv.header({"trial", "statistic_max", "statistic_min"});
    for (std::size_t t = 0; t < stat_max.size(); ++t)
        csv.row().col(t).col(stat_max[t]).col(stat_min[t]);
    csv.write_file(path);
}

} // namespace ellv
