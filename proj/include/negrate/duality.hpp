#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "json.hpp"
#include "negrate/branching.hpp"
#include "negrate/exact.hpp"

namespace negrate {

/// Residual tolerance for [L_X H(.;y)](x) = [L_Y H(x;.)](y).
inline constexpr double kDualityResidualTolerance = 1e-9;

/// The generator relation fails, so the lifted duality has no grounds.
class DualityPreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// X: Markov generator on a finite E. Y: zero-row-sum model on F, possibly with
/// negative rates. H: |E| x |F| duality matrix with a declared bound.
struct DualityInstance {
    DenseOperator lx;
    RateModel ly;
    Eigen::MatrixXd h;
    double h_bound = 0.0;

    /// Validates the invariants; throws ModelError on violation.
    static DualityInstance make(DenseOperator lx, RateModel ly, Eigen::MatrixXd h,
                                std::optional<double> h_bound = std::nullopt);
};

/// {"L_X": [[...]], "L_Y": <model document>, "H": [[...]], "H_bound": number?}
DualityInstance load_duality_instance(const nlohmann::json& doc);
DualityInstance load_duality_instance_file(const std::string& path);

/// (eta+, eta-) -> sum_y (eta+(y) - eta-(y)) H(x; y).
class DualityLift {
public:
    DualityLift(const Eigen::MatrixXd& h, std::size_t x);
    double operator()(const PairConfiguration& cfg) const;

private:
    Eigen::VectorXd row_;
};

DualityLift lift_duality_function(const Eigen::MatrixXd& h, std::size_t x);

struct DualityReport {
    double residual = 0.0;
    double lhs = 0.0;    // E_x H-lift(X_t; cfg0), exact
    Estimate rhs;        // E_cfg0 H-lift(x; eta_t), branching simulation
    double difference = 0.0;
    bool passed = false;  // |lhs - rhs| <= 3 stderr
};

/// Compares both sides of the lifted duality identity at (x, cfg0). Throws
/// DualityPreconditionError when the generator relation residual exceeds
/// kDualityResidualTolerance.
DualityReport verify_lifted_duality(const DualityInstance& inst, std::size_t x,
                                    const PairConfiguration& cfg0, double t,
                                    const BranchingOptions& opts);

}  // namespace negrate
