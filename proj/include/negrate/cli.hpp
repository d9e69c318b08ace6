#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "negrate/branching.hpp"
#include "negrate/case_studies.hpp"
#include "negrate/rate_model.hpp"

namespace negrate::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 1,
    kModelInvariantFailure = 2,
    kCrosscheckFailure = 3,
    kCapAborts = 4,
};

enum class Method { exact, single, branching };
enum class Format { json, csv };

Method parse_method(const std::string& s);
Format parse_format(const std::string& s);
/// "0", "1.5", "inf".
AnnihilationRate parse_lambda(const std::string& s);
std::string method_name(Method m);

/// A model source is a finite-model JSON path or a built-in identifier:
/// "double-laplacian" or "homogeneous-negative:<kernel>" where <kernel> is
/// "cycle<n>" or a path to a kernel document.
RateModel load_model_source(const std::string& source);
HomogeneousNegativeModel load_homogeneous_source(const std::string& kernel);

/// Observable specs: "constant" / "constant:<c>", "indicator:<state>",
/// "coordinate" (numeric label, else index; finite only), "even" (indicator of
/// even integer labels), "[v0, v1, ...]" or "dense:v0,v1,...".
Observable parse_observable(const std::string& spec, const RateModel& model);

struct RunConfig {
    std::string model;
    Method method = Method::exact;
    std::string observable = "constant";
    std::vector<std::string> starts;  // labels; empty = every state of a finite model
    double t = 0.0;
    RunOptions run{10000, 1, 0};
    std::string lambda = "0";
    std::uint64_t cap = kDefaultPopulationCap;
    double tol = kDefaultExpmTolerance;
};

struct ResultRecord {
    std::string state;
    Estimate estimate;
};

/// Validates the config, dispatches to the estimator, one record per start.
std::vector<ResultRecord> run(const RunConfig& config);

nlohmann::json to_json(const ResultRecord& r);
/// CSV and JSON carry the same round-trip encodings of every double.
std::string format_records(std::span<const ResultRecord> records, Format format);
std::string format_double(double v);

/// Invariant checks on a model document path or a built-in identifier.
ValidationReport validate(const std::string& source);

struct CrosscheckRow {
    std::string state;
    double t = 0.0;
    double exact = 0.0;
    Estimate single;
    Estimate branching_0;
    Estimate branching_1;
    Estimate branching_inf;
    bool passed = false;
};

struct CrosscheckTable {
    std::vector<CrosscheckRow> rows;
    std::uint64_t aborted = 0;
    bool passed() const;
};

/// Exact vs single vs branching at lambda in {0, 1, inf} for every state and t.
/// A method passes a cell when it is within 3 stderr of the oracle (or equal to
/// within rounding when its stderr is 0).
CrosscheckTable crosscheck(const std::string& source, std::span<const double> t_grid,
                           const std::string& observable, const RunOptions& run, std::uint64_t cap);

std::string format_crosscheck(const CrosscheckTable& table, Format format);

/// Entry point of the command-line tool; returns the process exit code.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace negrate::cli
