#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace vj::stats {

inline double mean(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean of empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Nearest-rank quantile: the ceil(p*n)-th order statistic (1-based), so the
/// result is always a member of the sample.
inline double order_statistic(std::span<const double> v, double p) {
    if (v.empty()) throw std::invalid_argument("quantile of empty sample");
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    const auto n = static_cast<double>(s.size());
    auto rank = static_cast<long>(std::ceil(p * n - 1e-12));
    rank = std::clamp(rank, 1L, static_cast<long>(s.size()));
    return s[static_cast<std::size_t>(rank - 1)];
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson needs equal-length series");
    const double ma = mean(a), mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    return sab / std::sqrt(saa * sbb);
}

/// Independent, reproducible stream for job `index` of a run seeded with `seed`.
/// Used so that parallel and serial execution draw identical numbers.
inline std::mt19937_64 split_stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x9e3779b9u};
    return std::mt19937_64(seq);
}

}  // namespace vj::stats
