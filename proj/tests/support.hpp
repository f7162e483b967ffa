#pragma once

// Test-only substrates and independent reference implementations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "charc/measures.hpp"
#include "charc/substrate.hpp"

namespace charc::testing {

/// x_i(t) = u(t - i - offset) for i < depth; zero before the start.
class DelayLineSubstrate final : public Substrate {
public:
    explicit DelayLineSubstrate(std::size_t depth, std::size_t offset = 1) : depth_(depth), offset_(offset) {}
    std::size_t n_observables() const override { return depth_; }
    std::size_t gene_count() const override { return 0; }
    StateMatrix run(const Genotype&, std::span<const double> input, std::size_t washout) const override
    {
        StateMatrix m(input.size() - washout, depth_);
        for (std::size_t t = washout; t < input.size(); ++t)
            for (std::size_t i = 0; i < depth_; ++i) {
                const std::size_t lag = i + offset_;
                m(t - washout, i) = t >= lag ? input[t - lag] : 0.0;
            }
        return m;
    }

private:
    std::size_t depth_;
    std::size_t offset_;
};

/// Observes the input unchanged on one variable.
class IdentitySubstrate final : public Substrate {
public:
    std::size_t n_observables() const override { return 1; }
    std::size_t gene_count() const override { return 0; }
    StateMatrix run(const Genotype&, std::span<const double> input, std::size_t washout) const override
    {
        StateMatrix m(input.size() - washout, 1);
        for (std::size_t t = washout; t < input.size(); ++t) m(t - washout, 0) = input[t];
        return m;
    }
};

/// Always in the zero state.
class ZeroSubstrate final : public Substrate {
public:
    explicit ZeroSubstrate(std::size_t n) : n_(n) {}
    std::size_t n_observables() const override { return n_; }
    std::size_t gene_count() const override { return 0; }
    StateMatrix run(const Genotype&, std::span<const double> input, std::size_t washout) const override
    {
        return StateMatrix(input.size() - washout, n_);
    }

private:
    std::size_t n_;
};

/// Exact rank of an integer-valued matrix by fraction-free Gaussian elimination.
inline std::size_t exact_rank(std::vector<std::vector<long long>> rows)
{
    using boost::multiprecision::cpp_int;
    std::vector<std::vector<cpp_int>> a;
    for (const auto& r : rows) a.emplace_back(r.begin(), r.end());
    const std::size_t m = a.size(), n = m ? a[0].size() : 0;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < n && rank < m; ++col) {
        std::size_t piv = rank;
        while (piv < m && a[piv][col] == 0) ++piv;
        if (piv == m) continue;
        std::swap(a[piv], a[rank]);
        for (std::size_t r = rank + 1; r < m; ++r) {
            if (a[r][col] == 0) continue;
            const cpp_int f = a[r][col], p = a[rank][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] = a[r][c] * p - a[rank][c] * f;
        }
        ++rank;
    }
    return rank;
}

/// Rank by partial-pivot elimination in floating point, zeroing pivots below tol * max |entry|.
inline std::size_t elimination_rank(std::vector<std::vector<double>> a, double tol)
{
    const std::size_t m = a.size(), n = m ? a[0].size() : 0;
    double scale = 0.0;
    for (const auto& r : a)
        for (double v : r) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < n && rank < m; ++col) {
        std::size_t piv = rank;
        for (std::size_t r = rank; r < m; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) <= tol * scale) continue;
        std::swap(a[piv], a[rank]);
        for (std::size_t r = rank + 1; r < m; ++r) {
            const double f = a[r][col] / a[rank][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[rank][c];
        }
        ++rank;
    }
    return rank;
}

/// Solves (X^T X + lambda I) w = X^T y by Gaussian elimination, X bias-augmented.
inline std::vector<double> normal_equations(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                                            double lambda)
{
    const std::size_t p = x[0].size() + 1;
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t r = 0; r < x.size(); ++r) {
        std::vector<double> row = x[r];
        row.push_back(1.0);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) a[i][j] += row[i] * row[j];
            a[i][p] += row[i] * y[r];
        }
    }
    for (std::size_t i = 0; i < p; ++i) a[i][i] += lambda;
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
        }
    }
    std::vector<double> w(p);
    for (std::size_t i = 0; i < p; ++i) w[i] = a[i][p] / a[i][i];
    return w;
}

/// Sorts every distance and averages the k smallest.
inline double brute_sparseness(const BehaviourPoint& x, const std::vector<BehaviourPoint>& others, std::size_t k)
{
    std::vector<double> d;
    for (const auto& o : others)
        d.push_back(std::sqrt((x.kr - o.kr) * (x.kr - o.kr) + (x.gr - o.gr) * (x.gr - o.gr) + (x.mc - o.mc) * (x.mc - o.mc)));
    std::sort(d.begin(), d.end());
    k = std::min(k, d.size());
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += d[i];
    return s / static_cast<double>(k);
}

/// Distinct integer cell triples in a map.
inline std::size_t hashed_voxels(const std::vector<BehaviourPoint>& pts, double edge, double lo_kr, double lo_gr,
                                 double lo_mc, long max_kr, long max_gr, long max_mc)
{
    std::map<std::tuple<long, long, long>, int> cells;
    for (const auto& p : pts) {
        const long a = std::min(static_cast<long>(std::floor((p.kr - lo_kr) / edge)), max_kr);
        const long b = std::min(static_cast<long>(std::floor((p.gr - lo_gr) / edge)), max_gr);
        const long c = std::min(static_cast<long>(std::floor((p.mc - lo_mc) / edge)), max_mc);
        ++cells[{a, b, c}];
    }
    return cells.size();
}

/// Pearson correlation of rank vectors computed by counting.
inline double rank_then_pearson(const std::vector<double>& a, const std::vector<double>& b)
{
    auto ranks = [](const std::vector<double>& v) {
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double less = 0, equal = 0;
            for (double w : v) {
                if (w < v[i]) ++less;
                if (w == v[i]) ++equal;
            }
            r[i] = less + (equal + 1.0) / 2.0;
        }
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace charc::testing
