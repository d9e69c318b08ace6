#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "negrate/configuration.hpp"
#include "negrate/core.hpp"

namespace negrate {

struct Transition {
    State target;
    double rate;  // signed rate r(x, target), 1/time
};

struct RateTriplet {
    State from;
    State to;
    double rate;
};

/// Enumerates the finitely many (target, signed rate) pairs leaving a state.
using NeighborRule = std::function<void(State, std::vector<Transition>&)>;
using PotentialRule = std::function<double(State)>;

/// Either an ordered list of labels (finite) or a named countable lattice whose
/// states are the integers.
class StateSpace {
public:
    enum class Kind { finite, countable };

    static StateSpace finite(std::vector<std::string> labels);
    static StateSpace countable(std::string name);

    Kind kind() const noexcept { return kind_; }
    bool is_finite() const noexcept { return kind_ == Kind::finite; }
    const std::string& name() const noexcept { return name_; }

    /// Number of states; finite spaces only.
    std::size_t size() const;
    bool contains(State x) const noexcept;
    std::string label(State x) const;
    std::optional<State> find(std::string_view label) const;
    const std::vector<std::string>& labels() const noexcept { return labels_; }

private:
    Kind kind_ = Kind::finite;
    std::string name_;
    std::vector<std::string> labels_;
    std::unordered_map<std::string, State> index_;
};

/// A = L + V: signed off-diagonal rates r(x,y) plus a diagonal potential V(x).
/// Immutable after construction.
class RateModel {
public:
    /// Finite model from sparse triplets. Throws ModelError on a nonzero self
    /// rate, a duplicate pair, a non-finite value, or a row exceeding `declared_M`.
    static RateModel finite(StateSpace space, std::vector<RateTriplet> rates,
                            std::vector<double> potential,
                            std::optional<double> declared_M = std::nullopt);

    /// Countable model. Rows returned by `rule` are checked lazily against
    /// `bound_M` and `bound_V`.
    static RateModel countable(StateSpace space, NeighborRule rule, PotentialRule potential,
                               double bound_M, double bound_V);

    const StateSpace& space() const noexcept { return space_; }
    bool is_finite() const noexcept { return space_.is_finite(); }

    /// Writes the row of x into `out` (cleared first). Throws ModelError when a
    /// countable row has a self target or exceeds the declared bound.
    void row(State x, std::vector<Transition>& out) const;
    double potential(State x) const;

    double bound_M() const noexcept { return bound_M_; }
    double bound_V() const noexcept { return bound_V_; }
    bool potential_free() const noexcept { return bound_V_ == 0.0; }

    /// Finite models only.
    std::span<const RateTriplet> triplets() const;
    std::span<const double> potentials() const;
    double rate(State x, State y) const;

private:
    RateModel() = default;
    void require_state(State x) const;

    StateSpace space_;
    std::vector<RateTriplet> triplets_;          // sorted by (from, to)
    std::vector<std::size_t> row_offsets_;       // CSR into triplets_
    std::vector<double> potential_;
    NeighborRule rule_;
    PotentialRule potential_rule_;
    double bound_M_ = 0.0;
    double bound_V_ = 0.0;
};

/// Non-owning view of one split row.
struct SplitRowView {
    std::span<const State> targets;
    std::span<const double> plus;   // r+(x, targets[i])
    std::span<const double> minus;  // r-(x, targets[i])
    double row_plus = 0.0;          // R+(x)
    double row_minus = 0.0;         // R-(x)
};

/// Owning storage for rows computed on demand (countable spaces).
struct SplitRow {
    std::vector<State> targets;
    std::vector<double> plus;
    std::vector<double> minus;
    double row_plus = 0.0;
    double row_minus = 0.0;

    SplitRowView view() const noexcept { return {targets, plus, minus, row_plus, row_minus}; }
};

/// r+ = max(r, 0), r- = max(-r, 0) with row aggregates. Finite models are
/// split once; countable rows are split on request.
class SplitRates {
public:
    explicit SplitRates(const RateModel& model);

    /// View of the split row of x. `scratch` backs the view for countable models.
    SplitRowView row(State x, SplitRow& scratch) const;

    double plus(State x, State y) const;
    double minus(State x, State y) const;
    double row_plus(State x) const;
    double row_minus(State x) const;

    const RateModel& model() const noexcept { return model_; }

private:
    RateModel model_;
    std::vector<std::size_t> offsets_;
    std::vector<State> targets_;
    std::vector<double> plus_;
    std::vector<double> minus_;
    std::vector<double> row_plus_;
    std::vector<double> row_minus_;
};

SplitRates split_rates(const RateModel& model);

/// Bounded real function on states: a dense vector (finite) or a rule with a
/// declared sup-norm bound.
class Observable {
public:
    static Observable dense(std::vector<double> values);
    static Observable rule(std::function<double(State)> fn, double bound);
    static Observable constant(double c);

    /// Throws ModelError if a rule value exceeds the declared bound or a dense
    /// index is out of range.
    double operator()(State x) const;
    double bound() const noexcept { return bound_; }
    std::optional<std::span<const double>> values() const;

private:
    std::vector<double> values_;
    std::function<double(State)> fn_;
    double bound_ = 0.0;
    bool dense_ = false;
};

/// Sum_y r(x,y)[f(y) - f(x)] + V(x) f(x).
double apply_generator(const RateModel& model, const Observable& f, State x);

/// (x, s) -> s f(x).
class SignedLift {
public:
    explicit SignedLift(Observable f) : f_(std::move(f)) {}
    double operator()(State x, Sign s) const { return to_double(s) * f_(x); }

private:
    Observable f_;
};

/// (eta+, eta-) -> Sum_x (eta+(x) - eta-(x)) f(x).
class PopulationLift {
public:
    explicit PopulationLift(Observable f) : f_(std::move(f)) {}
    double operator()(const PairConfiguration& cfg) const;

private:
    Observable f_;
};

SignedLift lift_observable_signed(Observable f);
PopulationLift lift_observable_population(Observable f);

// ---------------------------------------------------------------------------
// Model documents: {"states": [...], "rates": [[x, y, value], ...],
//                   "potential": {x: value}, "bound_M": number}

RateModel load_rate_model(const nlohmann::json& doc);
RateModel load_rate_model_file(const std::string& path);
nlohmann::json to_json(const RateModel& model);

struct ValidationCheck {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool passed() const;
};

/// Runs every invariant check on a model document without stopping at the first
/// failure.
ValidationReport validate_model_document(const nlohmann::json& doc);

}  // namespace negrate
