#pragma once

// Shared helpers for the test binaries: a random signed-model corpus, simple
// statistical comparisons and oracles that do not go through the library.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "negrate/exact.hpp"
#include "negrate/rate_model.hpp"
#include "negrate/rng.hpp"

namespace testing {

using negrate::RateModel;
using negrate::RateTriplet;
using negrate::State;

struct CorpusModel {
    RateModel model;
    Eigen::MatrixXd a;  // assembled here, independently of to_dense
};

inline std::vector<std::string> index_labels(std::size_t n) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
    return labels;
}

// Each off-diagonal pair: 40% negative U(0,2), 40% positive U(0,2), 20% zero.
// V ~ U[-1, 1] unless `potential` is false.
inline CorpusModel random_model(negrate::Rng& rng, std::size_t n, bool potential = true) {
    std::vector<RateTriplet> rates;
    std::vector<double> v(n, 0.0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double kind = rng.uniform();
            if (kind >= 0.8) continue;
            const double mag = 2.0 * rng.uniform();
            const double r = kind < 0.4 ? -mag : mag;
            rates.push_back({static_cast<State>(i), static_cast<State>(j), r});
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += r;
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= r;
        }
        if (potential) v[i] = 2.0 * rng.uniform() - 1.0;
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += v[i];
    }
    auto model = RateModel::finite(negrate::StateSpace::finite(index_labels(n)), std::move(rates), v);
    return {std::move(model), std::move(a)};
}

// Models with n cycling through 2..6.
inline std::vector<CorpusModel> random_corpus(std::uint64_t seed, std::size_t count, bool potential = true) {
    negrate::Rng rng = negrate::Rng::for_replica(seed, 0);
    std::vector<CorpusModel> corpus;
    for (std::size_t k = 0; k < count; ++k) corpus.push_back(random_model(rng, 2 + k % 5, potential));
    return corpus;
}

inline std::vector<double> random_vector(negrate::Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
    return v;
}

// The reference is an oracle value known to kDefaultExpmTolerance (relative to
// the observable scale), so zero-variance cells compare at that accuracy.
inline bool within_stderr(double value, double std_error, double reference, double k = 3.0) {
    return std::abs(value - reference) <=
           k * std_error + negrate::kDefaultExpmTolerance * std::max(1.0, std::abs(reference));
}

inline bool jointly_within(double a, double se_a, double b, double se_b, double k = 3.0) {
    return std::abs(a - b) <= k * std::sqrt(se_a * se_a + se_b * se_b);
}

// Plain Taylor series of e^{tA} in long double, summed until the terms vanish.
// Only suitable for small ||tA||; used to cross-check the library oracle.
inline Eigen::MatrixXd taylor_expm(const Eigen::MatrixXd& a, double t) {
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const MatL ta = (a * t).cast<long double>();
    MatL term = MatL::Identity(a.rows(), a.cols());
    MatL sum = term;
    for (int k = 1; k < 400; ++k) {
        term = term * ta / static_cast<long double>(k);
        sum += term;
        if (term.cwiseAbs().maxCoeff() < 1e-30L) break;
    }
    return sum.cast<double>();
}

// Even and odd parts of e^{tQ} by the same series: cosh(tQ), sinh(tQ).
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> parity_split_series(const Eigen::MatrixXd& q, double t) {
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const MatL tq = (q * t).cast<long double>();
    MatL term = MatL::Identity(q.rows(), q.cols());
    MatL even = term;
    MatL odd = MatL::Zero(q.rows(), q.cols());
    for (int k = 1; k < 400; ++k) {
        term = term * tq / static_cast<long double>(k);
        (k % 2 == 0 ? even : odd) += term;
        if (term.cwiseAbs().maxCoeff() < 1e-30L) break;
    }
    return {even.cast<double>(), odd.cast<double>()};
}

// Double Laplacian symbol: A cos(theta x) = s(theta) cos(theta x).
inline double double_laplacian_symbol(double theta) {
    return 0.5 * (std::cos(2.0 * theta) - 1.0) - 2.0 * (std::cos(theta) - 1.0);
}

}  // namespace testing
