#pragma once

#include <Eigen/Dense>

#include "negrate/rate_model.hpp"

namespace negrate {

inline constexpr double kDefaultExpmTolerance = 1e-10;

/// Square real matrix indexed by a finite state list.
class DenseOperator {
public:
    DenseOperator() = default;
    explicit DenseOperator(Eigen::MatrixXd m);

    const Eigen::MatrixXd& matrix() const noexcept { return m_; }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(m_.rows()); }

private:
    Eigen::MatrixXd m_;
};

/// Off-diagonal entries r(x_i, x_j); diagonal V(x_i) - sum_{j != i} r(x_i, x_j).
DenseOperator to_dense(const RateModel& model);

/// Matrix exponential e^{tA} by scaling and squaring of a truncated Taylor
/// series. The truncation remainder is bounded analytically and carried,
/// together with a rounding estimate, through every squaring; if the final
/// bound on ||e^{tA} - result||_inf exceeds `tol` an OracleError is thrown.
/// `error_bound` receives the final bound when non-null.
Eigen::MatrixXd expm(const DenseOperator& op, double t, double tol = kDefaultExpmTolerance,
                     double* error_bound = nullptr);

/// v with ||v - e^{tA} f||_inf <= tol ||f||_inf. t = 0 returns f unchanged.
Eigen::VectorXd expm_apply(const DenseOperator& op, const Eigen::VectorXd& f, double t,
                           double tol = kDefaultExpmTolerance);

/// max_{x,y} |(L_X H)(x,y) - (H L_Y^T)(x,y)|, i.e. the defect in
/// [L_X H(.; y)](x) = [L_Y H(x; .)](y). H is |E| x |F|.
double generator_relation_residual(const DenseOperator& lx, const DenseOperator& ly,
                                   const Eigen::MatrixXd& h);

}  // namespace negrate
