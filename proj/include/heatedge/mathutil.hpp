// Small numeric helpers shared across the library: deterministic quadrature,
// normal/Kolmogorov distribution functions, Halton points, least squares,
// content hashing and a replicate-level parallel loop.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace heatedge {

// Adaptive Simpson quadrature on [a, b] with absolute tolerance `tol`.
inline double adaptive_simpson(const std::function<double(double)>& f,
                               double a, double b, double tol, int max_depth = 40) {
    struct Impl {
        const std::function<double(double)>& f;
        double run(double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) const {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            const double flm = f(lm), frm = f(rm);
            const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            const double delta = left + right - whole;
            if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
                return left + right + delta / 15.0;
            return run(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
                   run(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
        }
    };
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return Impl{f}.run(a, b, fa, fm, fb, whole, tol, max_depth);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Two-sided Kolmogorov-Smirnov statistic of a sample against N(0,1).
inline double ks_statistic_normal(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("ks_statistic_normal: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double cdf = normal_cdf(sample[i]);
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
    }
    return d;
}

// Asymptotic survival function of the Kolmogorov distribution,
// Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_q(double x) {
    if (x <= 0.0) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1) ? term : -term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

// p-value of a KS statistic d for sample size n (asymptotic with the
// standard finite-sample adjustment).
inline double ks_p_value(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

// Halton low-discrepancy sequence in d dimensions (index starts at 1).
inline void halton_point(std::int64_t index, std::span<double> out) {
    static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
    if (out.size() > std::size(primes))
        throw std::invalid_argument("halton_point: dimension too large");
    for (std::size_t a = 0; a < out.size(); ++a) {
        const int base = primes[a];
        double f = 1.0, x = 0.0;
        for (std::int64_t i = index; i > 0; i /= base) {
            f /= base;
            x += f * static_cast<double>(i % base);
        }
        out[a] = x;
    }
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::vector<double> residuals;
};

// Ordinary least squares y = a + b x.
inline LineFit ols_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("ols_line: need >= 2 matched points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    fit.residuals.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        fit.residuals[i] = y[i] - fit.intercept - fit.slope * x[i];
        rss += fit.residuals[i] * fit.residuals[i];
    }
    if (x.size() > 2)
        fit.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
    return fit;
}

inline double sample_mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// FNV-1a 64-bit; used for manifest content tags.
inline std::uint64_t fnv1a64(std::span<const char> data, std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (char c : data) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string fnv1a64_hex(std::span<const char> data) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(data);
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xf];
    return s;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
// claimed atomically; fn must write only to per-index state.
inline void parallel_for_index(std::int64_t count, int threads,
                               const std::function<void(std::int64_t)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(threads, count)));
    if (threads == 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace heatedge
