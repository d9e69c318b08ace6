#include "negrate/duality.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace negrate {

namespace {

constexpr double kRowSumTolerance = 1e-9;

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw ModelError(std::string(what) + " must be a non-empty matrix");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ModelError(std::string(what) + " rows must all have " + std::to_string(cols) + " entries");
        }
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}

}  // namespace

DualityInstance DualityInstance::make(DenseOperator lx, RateModel ly, Eigen::MatrixXd h,
                                      std::optional<double> h_bound) {
    const auto& a = lx.matrix();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            sum += a(i, j);
            if (i != j && a(i, j) < 0.0) {
                throw ModelError("L_X must have nonnegative off-diagonal rates (row " + std::to_string(i) + ")");
            }
        }
        if (std::abs(sum) > kRowSumTolerance * std::max(1.0, a.row(i).cwiseAbs().sum())) {
            throw ModelError("L_X row " + std::to_string(i) + " does not sum to zero");
        }
    }
    if (!ly.is_finite()) throw ModelError("L_Y must be a finite model");
    if (!ly.potential_free()) throw ModelError("L_Y must have zero row sums (no potential)");
    if (static_cast<std::size_t>(h.rows()) != lx.dimension() ||
        static_cast<std::size_t>(h.cols()) != ly.space().size()) {
        throw ModelError("H must be |E| x |F|");
    }
    if (!h.allFinite()) throw ModelError("H has non-finite entries");
    const double hmax = h.size() == 0 ? 0.0 : h.cwiseAbs().maxCoeff();
    if (h_bound && hmax > *h_bound) throw ModelError("H exceeds its declared bound");
    DualityInstance inst{std::move(lx), std::move(ly), std::move(h), h_bound.value_or(hmax)};
    return inst;
}

DualityInstance load_duality_instance(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("L_X") || !doc.contains("L_Y") || !doc.contains("H")) {
        throw ModelError("duality document needs \"L_X\", \"L_Y\" and \"H\"");
    }
    std::optional<double> bound;
    if (doc.contains("H_bound")) bound = doc["H_bound"].get<double>();
    return DualityInstance::make(DenseOperator(matrix_from_json(doc["L_X"], "L_X")),
                                 load_rate_model(doc["L_Y"]), matrix_from_json(doc["H"], "H"), bound);
}

DualityInstance load_duality_instance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed JSON in '" + path + "': " + e.what());
    }
    return load_duality_instance(doc);
}

DualityLift::DualityLift(const Eigen::MatrixXd& h, std::size_t x) {
    if (static_cast<Eigen::Index>(x) >= h.rows()) throw ConfigError("state x outside the rows of H");
    row_ = h.row(static_cast<Eigen::Index>(x)).transpose();
}

double DualityLift::operator()(const PairConfiguration& cfg) const {
    double acc = 0.0;
    for (const auto& [y, n] : cfg.plus_counts()) acc += static_cast<double>(n) * row_(y);
    for (const auto& [y, n] : cfg.minus_counts()) acc -= static_cast<double>(n) * row_(y);
    return acc;
}

DualityLift lift_duality_function(const Eigen::MatrixXd& h, std::size_t x) { return DualityLift(h, x); }

DualityReport verify_lifted_duality(const DualityInstance& inst, std::size_t x,
                                    const PairConfiguration& cfg0, double t,
                                    const BranchingOptions& opts) {
    DualityReport report;
    report.residual = generator_relation_residual(inst.lx, to_dense(inst.ly), inst.h);
    if (report.residual > kDualityResidualTolerance) {
        std::ostringstream os;
        os << "generator relation residual " << report.residual << " exceeds "
           << kDualityResidualTolerance << "; lifted duality does not apply";
        throw DualityPreconditionError(os.str());
    }
    if (x >= inst.lx.dimension()) throw ConfigError("state x outside E");

    // Left side: E_x H-lift(X_t; cfg0) = [e^{t L_X} h_cfg0](x), h_cfg0(x') = H-lift(x'; cfg0).
    Eigen::VectorXd lifted(static_cast<Eigen::Index>(inst.lx.dimension()));
    for (Eigen::Index xp = 0; xp < lifted.size(); ++xp) {
        lifted(xp) = DualityLift(inst.h, static_cast<std::size_t>(xp))(cfg0);
    }
    report.lhs = expm_apply(inst.lx, lifted, t)(static_cast<Eigen::Index>(x));

    // Right side: branching system of L_Y observed through y -> H(x; y).
    std::vector<double> hx(static_cast<std::size_t>(inst.h.cols()));
    for (Eigen::Index y = 0; y < inst.h.cols(); ++y) {
        hx[static_cast<std::size_t>(y)] = inst.h(static_cast<Eigen::Index>(x), y);
    }
    report.rhs = estimate_branching(inst.ly, Observable::dense(std::move(hx)), cfg0, t, opts).estimate;
    report.rhs.method = "duality";
    report.difference = report.rhs.value - report.lhs;
    const double scale = std::max(1.0, std::abs(report.lhs));
    report.passed = report.rhs.trusted() &&
                    (std::abs(report.difference) <= 3.0 * report.rhs.std_error ||
                     std::abs(report.difference) <= 1e-12 * scale);
    return report;
}

}  // namespace negrate
