// Summary statistics and small statistical utilities shared by the tests
// and the experiment runner. All reductions are plain sequential loops so
// results do not depend on evaluation order chosen elsewhere.

#ifndef FRAGWAVE_STATS_HPP
#define FRAGWAVE_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fragwave {

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    double std_dev = 0.0;
    double std_error = 0.0;
    double median = 0.0;
    double trimmed_mean = 0.0; // central 90% (5% trimmed each side)
    double min = 0.0;
    double max = 0.0;
};

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median_of: empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline Summary summarize(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("summarize: empty sample");
    Summary s;
    s.n = xs.size();
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / s.n;
    double m2 = 0.0;
    for (double x : xs) m2 += (x - s.mean) * (x - s.mean);
    s.std_dev = s.n > 1 ? std::sqrt(m2 / (s.n - 1)) : 0.0;
    s.std_error = s.std_dev / std::sqrt(static_cast<double>(s.n));
    std::vector<double> sorted(xs);
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    s.median = s.n % 2 ? sorted[s.n / 2] : 0.5 * (sorted[s.n / 2 - 1] + sorted[s.n / 2]);
    const std::size_t cut = static_cast<std::size_t>(0.05 * s.n);
    double tsum = 0.0;
    for (std::size_t i = cut; i < s.n - cut; ++i) tsum += sorted[i];
    s.trimmed_mean = tsum / (s.n - 2 * cut);
    return s;
}

// least-squares slope of y against x
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("ls_slope: need >= 2 paired points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("ls_slope: degenerate x values");
    return sxy / sxx;
}

// Kolmogorov-Smirnov distance between a weighted empirical distribution
// (points, weights) and a plain sample. Weights need not be normalized.
inline double ks_weighted_vs_sample(std::vector<std::pair<double, double>> weighted,
                                    std::vector<double> sample) {
    if (weighted.empty() || sample.empty())
        throw std::invalid_argument("ks_weighted_vs_sample: empty input");
    std::sort(weighted.begin(), weighted.end());
    std::sort(sample.begin(), sample.end());
    double wtot = 0.0;
    for (auto& [d, w] : weighted) wtot += w;
    const double n2 = static_cast<double>(sample.size());
    double cum1 = 0.0, cum2 = 0.0, dmax = 0.0;
    std::size_t i = 0, j = 0;
    while (i < weighted.size() || j < sample.size()) {
        double t;
        if (j >= sample.size() || (i < weighted.size() && weighted[i].first <= sample[j]))
            t = weighted[i].first;
        else
            t = sample[j];
        while (i < weighted.size() && weighted[i].first <= t) cum1 += weighted[i++].second;
        while (j < sample.size() && sample[j] <= t) {
            cum2 += 1.0;
            ++j;
        }
        dmax = std::max(dmax, std::abs(cum1 / wtot - cum2 / n2));
    }
    return dmax;
}

// one-sample KS distance against a CDF
template <typename Cdf>
double ks_vs_cdf(std::vector<double> sample, Cdf&& cdf) {
    if (sample.empty()) throw std::invalid_argument("ks_vs_cdf: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double c = cdf(sample[i]);
        dmax = std::max(dmax, std::abs((i + 1) / n - c));
        dmax = std::max(dmax, std::abs(i / n - c));
    }
    return dmax;
}

} // namespace fragwave

#endif
