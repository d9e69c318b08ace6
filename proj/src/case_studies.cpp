#include "negrate/case_studies.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "negrate/replicas.hpp"

namespace negrate {

namespace {

constexpr double kRowSumTolerance = 1e-12;

bool is_even(std::int64_t k) { return (k & 1) == 0; }

Estimate make_estimate(const SampleSummary& s, double scale, const RunOptions& opts, double t,
                       const char* method, std::chrono::steady_clock::time_point started) {
    Estimate e;
    e.value = scale * s.mean;
    e.std_error = scale * s.std_error;
    e.replicas = opts.replicas;
    e.seed = opts.seed;
    e.method = method;
    e.t = t;
    e.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return e;
}

}  // namespace

RateModel double_laplacian_model() {
    NeighborRule rule = [](State x, std::vector<Transition>& out) {
        out.push_back({x - 2, 0.25});
        out.push_back({x - 1, -1.0});
        out.push_back({x + 1, -1.0});
        out.push_back({x + 2, 0.25});
    };
    return RateModel::countable(StateSpace::countable("double-laplacian"), std::move(rule),
                                [](State) { return 0.0; }, kDoubleLaplacianBoundM, 0.0);
}

double discrete_laplacian(const Observable& f, State x) {
    return 0.5 * f(x + 1) - f(x) + 0.5 * f(x - 1);
}

DoubleLaplacianReport estimate_double_laplacian(const Observable& f, State x, double t,
                                                const RunOptions& opts) {
    if (opts.replicas < 2) throw ConfigError("estimate_double_laplacian needs at least 2 replicas");
    const auto started = std::chrono::steady_clock::now();
    const RateModel model = double_laplacian_model();
    const SplitRates split(model);
    const auto samples = sample_walkers(split, x, t, opts);
    const double log_growth = 4.0 * t;

    DoubleLaplacianReport r;
    std::vector<double> zf(samples.size());
    std::vector<double> z(samples.size());
    std::uint64_t even = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const bool displacement_even = is_even(s.position - x);
        if ((s.sign == Sign::particle) != displacement_even) ++r.parity_violations;
        if (s.log_weight != log_growth) ++r.weight_violations;
        even += displacement_even ? 1 : 0;
        z[i] = to_double(s.sign);
        zf[i] = z[i] * f(s.position);
    }
    const auto zs = summarize(z);
    r.mean_sign = zs.mean;
    r.mean_sign_se = zs.std_error;
    const double n = static_cast<double>(samples.size());
    r.p_even = static_cast<double>(even) / n;
    r.p_even_se = std::sqrt(r.p_even * (1.0 - r.p_even) / n);
    r.estimate = make_estimate(summarize(zf), std::exp(log_growth), opts, t, "double-laplacian", started);
    return r;
}

EvenPartReport double_laplacian_even_part(const Observable& g, State x, double t,
                                          const RunOptions& opts) {
    if (opts.replicas < 2) throw ConfigError("double_laplacian_even_part needs at least 2 replicas");
    const auto started = std::chrono::steady_clock::now();
    const RateModel model = double_laplacian_model();
    const SplitRates split(model);
    const auto samples = sample_walkers(split, x, t, opts);

    std::vector<double> zf(samples.size());
    std::vector<double> g_even;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const bool target_even = is_even(s.position);
        const double gv = g(s.position);
        zf[i] = target_even ? to_double(s.sign) * gv : 0.0;
        if (target_even) g_even.push_back(gv);
    }
    if (g_even.empty()) throw InsufficientSamples("no replica ended on an even site");
    const double growth = std::exp(4.0 * t);
    EvenPartReport r;
    r.estimate = make_estimate(summarize(zf), growth, opts, t, "double-laplacian", started);
    const auto c = summarize(g_even);
    r.conditional_mean_g = c.mean;
    r.even_samples = c.count;
    const double factor = is_even(x) ? 0.5 * (growth + 1.0) : -0.5 * (growth - 1.0);
    r.case_formula = factor * c.mean;
    r.case_formula_se = std::abs(factor) * c.std_error;
    return r;
}

std::int64_t double_laplacian_window_half_width(State x, double t, double eps) {
    if (!(t >= 0.0) || !(eps > 0.0 && eps < 1.0)) throw ConfigError("window needs t >= 0 and eps in (0,1)");
    const double mu = kDoubleLaplacianBoundM * t;
    // Smallest m with P(Poisson(mu) >= m) < eps; the tail is summed directly.
    std::int64_t m = 1;
    for (;; ++m) {
        if (mu == 0.0) break;
        double tail = 0.0;
        double log_pmf = static_cast<double>(m) * std::log(mu) - mu - std::lgamma(static_cast<double>(m) + 1.0);
        for (std::int64_t k = m; k < m + 400; ++k) {
            const double p = std::exp(log_pmf);
            tail += p;
            if (p < tail * 1e-17) break;
            log_pmf += std::log(mu) - std::log(static_cast<double>(k + 1));
        }
        if (tail < eps) break;
    }
    // Fewer than m jumps of size <= 2 keep the walker within 2(m-1) of x.
    return std::max<std::int64_t>(2, std::abs(x) + 2 * (m - 1));
}

DenseOperator double_laplacian_window(std::int64_t half_width) {
    if (half_width < 1) throw ConfigError("window half width must be >= 1");
    const std::int64_t n = 2 * half_width + 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const std::pair<std::int64_t, double> stencil[] = {{-2, 0.25}, {-1, -1.0}, {1, -1.0}, {2, 0.25}};
    for (std::int64_t i = 0; i < n; ++i) {
        double off = 0.0;
        for (const auto& [d, r] : stencil) {
            const std::int64_t j = i + d;
            if (j < 0 || j >= n) continue;
            a(i, j) = r;
            off += r;
        }
        a(i, i) = -off;
    }
    return DenseOperator(std::move(a));
}

double double_laplacian_window_oracle(const Observable& f, State x, double t, double eps, double tol) {
    const std::int64_t k = double_laplacian_window_half_width(x, t, eps);
    const DenseOperator op = double_laplacian_window(k);
    Eigen::VectorXd fv(2 * k + 1);
    for (std::int64_t i = 0; i < fv.size(); ++i) fv(i) = f(i - k);
    return expm_apply(op, fv, t, tol)(x + k);
}

// ---------------------------------------------------------------------------

HomogeneousNegativeModel::HomogeneousNegativeModel(StateSpace space, std::vector<RateTriplet> kernel,
                                                   double lambda2)
    : kernel_(RateModel::finite(space, kernel, {})),
      model_(RateModel::finite(StateSpace::finite({"_"}), {}, {})),
      lambda2_(lambda2) {
    const std::size_t n = space.size();
    std::vector<double> row(n, 0.0);
    for (const auto& q : kernel_.triplets()) {
        if (q.rate < 0.0) throw ModelError("kernel q must be nonnegative");
        row[static_cast<std::size_t>(q.from)] += q.rate;
    }
    lambda1_ = row[0];
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(row[i] - lambda1_) > kRowSumTolerance * std::max(1.0, lambda1_)) {
            throw ModelError("kernel row sums are not constant (state '" + space.labels()[i] + "')");
        }
    }
    if (!std::isfinite(lambda2)) throw ModelError("lambda2 must be finite");
    std::vector<RateTriplet> negated(kernel_.triplets().begin(), kernel_.triplets().end());
    for (auto& q : negated) q.rate = -q.rate;
    model_ = RateModel::finite(std::move(space), std::move(negated), std::vector<double>(n, lambda2));
}

HomogeneousNegativeModel cycle_kernel_model(std::size_t n, double lambda1, double lambda2) {
    if (n < 2) throw ConfigError("cycle kernel needs at least 2 states");
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
    std::vector<RateTriplet> q;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = static_cast<State>(i);
        if (n == 2) {
            q.push_back({x, static_cast<State>(1 - i), lambda1});
            continue;
        }
        q.push_back({x, static_cast<State>((i + 1) % n), 0.5 * lambda1});
        q.push_back({x, static_cast<State>((i + n - 1) % n), 0.5 * lambda1});
    }
    return HomogeneousNegativeModel(StateSpace::finite(std::move(labels)), std::move(q), lambda2);
}

HomogeneousNegativeModel load_homogeneous_negative(const nlohmann::json& doc) {
    const RateModel kernel = load_rate_model(doc);
    const auto pot = kernel.potentials();
    for (double v : pot) {
        if (v != pot[0]) throw ModelError("homogeneous-negative kernel needs a constant potential");
    }
    return HomogeneousNegativeModel(kernel.space(),
                                    std::vector<RateTriplet>(kernel.triplets().begin(), kernel.triplets().end()),
                                    pot[0]);
}

Eigen::VectorXd stationary_distribution(const HomogeneousNegativeModel& model) {
    const Eigen::MatrixXd q = to_dense(model.kernel()).matrix();
    const Eigen::Index n = q.rows();
    Eigen::MatrixXd system = q.transpose();
    system.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible()) throw ModelError("kernel chain has no unique stationary distribution");
    return lu.solve(rhs);
}

ParityConditionals parity_conditionals(const HomogeneousNegativeModel& model, const Observable& f,
                                       State x, double t, const RunOptions& opts) {
    if (opts.replicas < 2) throw ConfigError("parity_conditionals needs at least 2 replicas");
    const auto started = std::chrono::steady_clock::now();
    const SplitRates split(model.model());
    const auto samples = sample_walkers(split, x, t, opts);

    ParityConditionals r;
    std::vector<double> values(samples.size());
    std::vector<double> even;
    std::vector<double> odd;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const double fx = f(s.position);
        if (s.jumps_minus != s.jumps) ++r.sign_violations;
        values[i] = s.value(fx);
        (s.jumps % 2 == 0 ? even : odd).push_back(fx);
    }
    if (even.empty() || (odd.empty() && t > 0.0)) {
        throw InsufficientSamples("a jump-parity class has no samples; increase replicas");
    }
    r.single = make_estimate(summarize(values), 1.0, opts, t, "single", started);
    const double n = static_cast<double>(samples.size());
    const auto se = summarize(even);
    r.n_even = se.count;
    r.mean_even = se.mean;
    r.se_even = se.std_error;
    r.p_even = static_cast<double>(r.n_even) / n;
    r.p_even_se = std::sqrt(r.p_even * (1.0 - r.p_even) / n);
    r.n_odd = odd.size();
    r.p_odd = static_cast<double>(r.n_odd) / n;
    r.growth = std::exp((2.0 * model.lambda1() + model.lambda2()) * t);
    if (odd.empty()) {
        r.mean_odd = std::numeric_limits<double>::quiet_NaN();
        r.recombined = r.growth * r.mean_even * r.p_even;
    } else {
        const auto so = summarize(odd);
        r.mean_odd = so.mean;
        r.se_odd = so.std_error;
        r.recombined = r.growth * (r.mean_even * r.p_even - r.mean_odd * r.p_odd);
    }
    return r;
}

BiasTerms empirical_bias_terms(const HomogeneousNegativeModel& model, const Observable& f, State x,
                               double t, std::span<const double> mu, const RunOptions& opts) {
    const std::size_t n = model.model().space().size();
    if (mu.size() != n) throw ConfigError("stationary distribution has the wrong length");
    double mu_f = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu_f += mu[i] * f(static_cast<State>(i));
    BiasTerms b;
    b.parity = parity_conditionals(model, f, x, t, opts);
    b.b_even = b.parity.mean_even - mu_f;
    b.se_even = b.parity.se_even;
    b.b_odd = b.parity.mean_odd - mu_f;
    b.se_odd = b.parity.se_odd;
    return b;
}

}  // namespace negrate
