#include "negrate/exact.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace negrate {

namespace {

constexpr double kUnitRoundoff = std::numeric_limits<double>::epsilon() / 2.0;
// Scaled argument norm after halving; keeps the Taylor series short.
constexpr double kScaledNorm = 0.5;
constexpr int kMaxTaylorDegree = 40;

double inf_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

DenseOperator::DenseOperator(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw ModelError("dense operator must be square");
    if (!m_.allFinite()) throw ModelError("dense operator has non-finite entries");
}

DenseOperator to_dense(const RateModel& model) {
    if (!model.is_finite()) {
        throw ModelError("to_dense requires a finite model; '" + model.space().name() +
                         "' is countable");
    }
    const auto n = static_cast<Eigen::Index>(model.space().size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& t : model.triplets()) a(t.from, t.to) += t.rate;
    const auto pot = model.potentials();
    for (Eigen::Index i = 0; i < n; ++i) {
        double off = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) off += a(i, j);
        }
        a(i, i) = pot[static_cast<std::size_t>(i)] - off;
    }
    return DenseOperator(std::move(a));
}

Eigen::MatrixXd expm(const DenseOperator& op, double t, double tol, double* error_bound) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("expm requires finite t >= 0");
    if (!(tol > 0.0)) throw ConfigError("expm requires tol > 0");
    const auto n = static_cast<Eigen::Index>(op.dimension());
    const double dn = static_cast<double>(n);
    if (t == 0.0 || n == 0) {
        if (error_bound) *error_bound = 0.0;
        return Eigen::MatrixXd::Identity(n, n);
    }

    const Eigen::MatrixXd b = t * op.matrix();
    const double nu = inf_norm(b);
    if (nu == 0.0) {
        if (error_bound) *error_bound = 0.0;
        return Eigen::MatrixXd::Identity(n, n);
    }
    int squarings = 0;
    if (nu > kScaledNorm) squarings = static_cast<int>(std::ceil(std::log2(nu / kScaledNorm)));
    const Eigen::MatrixXd c = std::ldexp(1.0, -squarings) * b;
    const double theta = inf_norm(c);

    // Taylor polynomial with remainder
    //   ||sum_{k > m} C^k / k!|| <= theta^{m+1}/(m+1)! * 1/(1 - theta/(m+2)).
    Eigen::MatrixXd x = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    double term_bound = 1.0;  // theta^k / k!
    double rounding = 0.0;
    int degree = 0;
    double remainder = std::numeric_limits<double>::infinity();
    while (degree < kMaxTaylorDegree) {
        ++degree;
        term = (term * c) / static_cast<double>(degree);
        x += term;
        rounding += (dn + 2.0) * static_cast<double>(degree) * kUnitRoundoff * inf_norm(term);
        term_bound *= theta / static_cast<double>(degree);
        remainder = term_bound * theta / static_cast<double>(degree + 1) /
                    (1.0 - theta / static_cast<double>(degree + 2));
        if (remainder <= kUnitRoundoff) break;
    }
    double delta = remainder + rounding + 2.0 * kUnitRoundoff * inf_norm(x);

    for (int j = 0; j < squarings; ++j) {
        const double xn = inf_norm(x);
        x = x * x;
        // (X + D)^2 - X^2 = XD + DX + D^2, plus the rounding of the product.
        delta = (2.0 * xn + delta) * delta + (dn + 1.0) * kUnitRoundoff * xn * xn;
        if (!x.allFinite()) throw OracleError("matrix exponential overflowed");
    }
    if (error_bound) *error_bound = delta;
    const double total = delta + (dn + 1.0) * kUnitRoundoff * inf_norm(x);
    if (total > tol) {
        std::ostringstream os;
        os << "expm tolerance " << tol << " unreachable in double precision for ||tA|| = " << nu
           << " (error bound " << total << ")";
        throw OracleError(os.str());
    }
    return x;
}

Eigen::VectorXd expm_apply(const DenseOperator& op, const Eigen::VectorXd& f, double t, double tol) {
    if (static_cast<std::size_t>(f.size()) != op.dimension()) {
        throw ConfigError("vector length does not match operator dimension");
    }
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("expm_apply requires finite t >= 0");
    if (!(tol > 0.0)) throw ConfigError("expm_apply requires tol > 0");
    if (t == 0.0) return f;
    return expm(op, t, tol) * f;
}

double generator_relation_residual(const DenseOperator& lx, const DenseOperator& ly,
                                   const Eigen::MatrixXd& h) {
    if (static_cast<std::size_t>(h.rows()) != lx.dimension() ||
        static_cast<std::size_t>(h.cols()) != ly.dimension()) {
        std::ostringstream os;
        os << "duality matrix is " << h.rows() << "x" << h.cols() << " but L_X is "
           << lx.dimension() << "x" << lx.dimension() << " and L_Y is " << ly.dimension() << "x"
           << ly.dimension();
        throw ConfigError(os.str());
    }
    if (h.size() == 0) return 0.0;
    const Eigen::MatrixXd left = lx.matrix() * h;
    const Eigen::MatrixXd right = h * ly.matrix().transpose();
    return (left - right).cwiseAbs().maxCoeff();
}

}  // namespace negrate
