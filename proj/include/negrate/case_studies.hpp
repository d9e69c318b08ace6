#pragma once

#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "json.hpp"
#include "negrate/exact.hpp"
#include "negrate/walker.hpp"

namespace negrate {

// ---------------------------------------------------------------------------
// Double Laplacian on Z:
//   r(x, x +- 2) = 1/4,  r(x, x +- 1) = -1,  V = 0,  M = 5/2.
// R+ = 1/2 and R- = 2 everywhere, so the walker weight is exactly e^{4t} and
// Z_t = +1 iff X_t - X_0 is even.

inline constexpr double kDoubleLaplacianBoundM = 2.5;

RateModel double_laplacian_model();

/// Discrete Laplacian (1/2) f(x+1) - f(x) + (1/2) f(x-1).
double discrete_laplacian(const Observable& f, State x);

struct DoubleLaplacianReport {
    Estimate estimate;             // e^{4t} mean(Z_t f(X_t))
    double mean_sign = 0.0;        // mean of Z_t
    double mean_sign_se = 0.0;
    double p_even = 0.0;           // fraction with X_t - X_0 even
    double p_even_se = 0.0;
    std::uint64_t parity_violations = 0;  // Z_t disagreeing with displacement parity
    std::uint64_t weight_violations = 0;  // log weight != 4t
};

DoubleLaplacianReport estimate_double_laplacian(const Observable& f, State x, double t,
                                                const RunOptions& opts);

/// f = g 1{even}: the walker estimate next to the closed case form
///   x even:  (e^{4t} + 1)/2 E_x[g(X_t) | X_t even]
///   x odd:  -(e^{4t} - 1)/2 E_x[g(X_t) | X_t even]
/// evaluated with the empirical conditional mean from the same replicas.
struct EvenPartReport {
    Estimate estimate;
    double case_formula = 0.0;
    double case_formula_se = 0.0;
    double conditional_mean_g = 0.0;  // E_x[g(X_t) | X_t even], empirical
    std::uint64_t even_samples = 0;
};

EvenPartReport double_laplacian_even_part(const Observable& g, State x, double t,
                                          const RunOptions& opts);

/// Smallest K such that a walker started at x leaves [-K, K] before t with
/// probability below `eps` (Poisson tail of the jump count, jumps of size <= 2).
std::int64_t double_laplacian_window_half_width(State x, double t, double eps = 1e-8);

/// Double Laplacian restricted to [-K, K]; jumps that would leave the window
/// are suppressed so every row still sums to zero. Index i is the state i - K.
DenseOperator double_laplacian_window(std::int64_t half_width);

/// S_t f(x) from the truncated window oracle with the half width above.
double double_laplacian_window_oracle(const Observable& f, State x, double t,
                                      double eps = 1e-8, double tol = kDefaultExpmTolerance);

// ---------------------------------------------------------------------------
// All rates negative: r(x,y) = -q(x,y) for a Markov kernel q with constant row
// sum lambda1, and constant potential lambda2.

class HomogeneousNegativeModel {
public:
    /// `kernel` holds q >= 0 on a finite space. Throws ModelError when q has a
    /// negative entry or its row sums are not constant.
    HomogeneousNegativeModel(StateSpace space, std::vector<RateTriplet> kernel, double lambda2);

    const RateModel& model() const noexcept { return model_; }
    const RateModel& kernel() const noexcept { return kernel_; }
    double lambda1() const noexcept { return lambda1_; }
    double lambda2() const noexcept { return lambda2_; }

private:
    RateModel kernel_;
    RateModel model_;
    double lambda1_ = 0.0;
    double lambda2_ = 0.0;
};

/// Symmetric kernel on the n-cycle: q(i, i +- 1) = lambda1 / 2.
HomogeneousNegativeModel cycle_kernel_model(std::size_t n = 3, double lambda1 = 1.0,
                                            double lambda2 = 0.0);

/// Kernel from a finite model document: rates give q, the (constant) potential
/// gives lambda2.
HomogeneousNegativeModel load_homogeneous_negative(const nlohmann::json& doc);

/// Stationary distribution of the kernel chain (generator q - lambda1 I).
Eigen::VectorXd stationary_distribution(const HomogeneousNegativeModel& model);

struct ParityConditionals {
    double mean_even = 0.0;  // E[f(X_t) | N_t even]
    double se_even = 0.0;
    double p_even = 0.0;
    double p_even_se = 0.0;
    double mean_odd = 0.0;  // NaN when the odd class is empty at t = 0
    double se_odd = 0.0;
    double p_odd = 0.0;
    std::uint64_t n_even = 0;
    std::uint64_t n_odd = 0;
    double growth = 1.0;          // e^{(2 lambda1 + lambda2) t}
    double recombined = 0.0;      // growth (mean_even p_even - mean_odd p_odd)
    Estimate single;              // estimate_single from the same replicas
    std::uint64_t sign_violations = 0;  // trajectories with jumps_minus != jumps
};

/// Regroups one walker sample by jump-count parity. Throws InsufficientSamples
/// when a parity class is empty at t > 0.
ParityConditionals parity_conditionals(const HomogeneousNegativeModel& model, const Observable& f,
                                       State x, double t, const RunOptions& opts);

struct BiasTerms {
    double b_even = 0.0;
    double se_even = 0.0;
    double b_odd = 0.0;
    double se_odd = 0.0;
    ParityConditionals parity;
};

/// b_e = E[f | N_t even] - mu(f), b_o = E[f | N_t odd] - mu(f).
BiasTerms empirical_bias_terms(const HomogeneousNegativeModel& model, const Observable& f, State x,
                               double t, std::span<const double> mu, const RunOptions& opts);

}  // namespace negrate
