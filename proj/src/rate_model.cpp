#include "negrate/rate_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace negrate {

namespace {

// Relative slack when comparing a scanned row norm against a declared bound.
constexpr double kBoundSlack = 1e-12;

bool within_bound(double value, double bound) {
    return value <= bound + kBoundSlack * std::max(1.0, std::abs(bound));
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// StateSpace

StateSpace StateSpace::finite(std::vector<std::string> labels) {
    if (labels.empty()) throw ModelError("finite state space needs at least one state");
    StateSpace s;
    s.kind_ = Kind::finite;
    s.name_ = "finite";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = s.index_.emplace(labels[i], static_cast<State>(i));
        if (!inserted) throw ModelError("duplicate state label '" + labels[i] + "'");
    }
    s.labels_ = std::move(labels);
    return s;
}

StateSpace StateSpace::countable(std::string name) {
    StateSpace s;
    s.kind_ = Kind::countable;
    s.name_ = std::move(name);
    return s;
}

std::size_t StateSpace::size() const {
    if (!is_finite()) throw ModelError("countable space '" + name_ + "' has no finite size");
    return labels_.size();
}

bool StateSpace::contains(State x) const noexcept {
    if (!is_finite()) return true;
    return x >= 0 && static_cast<std::size_t>(x) < labels_.size();
}

std::string StateSpace::label(State x) const {
    if (!is_finite()) return std::to_string(x);
    if (!contains(x)) throw ModelError("state index " + std::to_string(x) + " out of range");
    return labels_[static_cast<std::size_t>(x)];
}

std::optional<State> StateSpace::find(std::string_view label) const {
    if (is_finite()) {
        auto it = index_.find(std::string(label));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    State x = 0;
    std::istringstream is{std::string(label)};
    if (!(is >> x) || !is.eof()) return std::nullopt;
    return x;
}

// ---------------------------------------------------------------------------
// RateModel

RateModel RateModel::finite(StateSpace space, std::vector<RateTriplet> rates,
                            std::vector<double> potential, std::optional<double> declared_M) {
    if (!space.is_finite()) throw ModelError("RateModel::finite requires a finite state space");
    const std::size_t n = space.size();
    if (potential.empty()) potential.assign(n, 0.0);
    if (potential.size() != n) {
        throw ModelError("potential has " + std::to_string(potential.size()) +
                         " entries for " + std::to_string(n) + " states");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(potential[i])) {
            throw ModelError("non-finite potential at state '" + space.labels()[i] + "'");
        }
    }
    for (const auto& t : rates) {
        if (!space.contains(t.from) || !space.contains(t.to)) {
            throw ModelError("rate references a state outside the space");
        }
        if (!std::isfinite(t.rate)) {
            throw ModelError("non-finite rate from state '" + space.label(t.from) + "'");
        }
        if (t.from == t.to && t.rate != 0.0) {
            throw ModelError("nonzero self rate r(x,x) at state '" + space.label(t.from) + "'");
        }
    }
    // Zero entries (including explicit r(x,x) = 0) carry no information.
    std::erase_if(rates, [](const RateTriplet& t) { return t.rate == 0.0; });
    std::sort(rates.begin(), rates.end(), [](const RateTriplet& a, const RateTriplet& b) {
        return std::pair(a.from, a.to) < std::pair(b.from, b.to);
    });
    for (std::size_t i = 1; i < rates.size(); ++i) {
        if (rates[i].from == rates[i - 1].from && rates[i].to == rates[i - 1].to) {
            throw ModelError("duplicate rate entry for pair ('" + space.label(rates[i].from) +
                             "', '" + space.label(rates[i].to) + "')");
        }
    }

    RateModel m;
    m.row_offsets_.assign(n + 1, 0);
    for (const auto& t : rates) ++m.row_offsets_[static_cast<std::size_t>(t.from) + 1];
    for (std::size_t i = 0; i < n; ++i) m.row_offsets_[i + 1] += m.row_offsets_[i];

    double scanned_M = 0.0;
    State worst = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double abs_sum = 0.0;
        for (std::size_t k = m.row_offsets_[i]; k < m.row_offsets_[i + 1]; ++k) {
            abs_sum += std::abs(rates[k].rate);
        }
        if (abs_sum > scanned_M) {
            scanned_M = abs_sum;
            worst = static_cast<State>(i);
        }
    }
    if (declared_M) {
        if (!within_bound(scanned_M, *declared_M)) {
            throw ModelError("row of state '" + space.label(worst) + "' has sum |r| = " +
                             fmt_double(scanned_M) + " exceeding declared bound M = " +
                             fmt_double(*declared_M));
        }
        m.bound_M_ = *declared_M;
    } else {
        m.bound_M_ = scanned_M;
    }
    double vmax = 0.0;
    for (double v : potential) vmax = std::max(vmax, std::abs(v));
    m.bound_V_ = vmax;
    m.space_ = std::move(space);
    m.triplets_ = std::move(rates);
    m.potential_ = std::move(potential);
    return m;
}

RateModel RateModel::countable(StateSpace space, NeighborRule rule, PotentialRule potential,
                               double bound_M, double bound_V) {
    if (space.is_finite()) throw ModelError("RateModel::countable requires a countable space");
    if (!rule || !potential) throw ModelError("countable model needs neighbor and potential rules");
    if (!(bound_M >= 0.0) || !(bound_V >= 0.0) || !std::isfinite(bound_M) ||
        !std::isfinite(bound_V)) {
        throw ModelError("countable model bounds must be finite and nonnegative");
    }
    RateModel m;
    m.space_ = std::move(space);
    m.rule_ = std::move(rule);
    m.potential_rule_ = std::move(potential);
    m.bound_M_ = bound_M;
    m.bound_V_ = bound_V;
    return m;
}

void RateModel::require_state(State x) const {
    if (!space_.contains(x)) throw ModelError("state " + std::to_string(x) + " not in space");
}

void RateModel::row(State x, std::vector<Transition>& out) const {
    out.clear();
    if (is_finite()) {
        require_state(x);
        const auto i = static_cast<std::size_t>(x);
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            out.push_back({triplets_[k].to, triplets_[k].rate});
        }
        return;
    }
    rule_(x, out);
    double abs_sum = 0.0;
    for (const auto& tr : out) {
        if (tr.target == x) {
            throw ModelError("neighbor rule of '" + space_.name() + "' returns self target at " +
                             std::to_string(x));
        }
        if (!std::isfinite(tr.rate)) {
            throw ModelError("non-finite rate at state " + std::to_string(x));
        }
        abs_sum += std::abs(tr.rate);
    }
    if (!within_bound(abs_sum, bound_M_)) {
        throw ModelError("row of state " + std::to_string(x) + " has sum |r| = " +
                         fmt_double(abs_sum) + " exceeding declared bound M = " +
                         fmt_double(bound_M_));
    }
}

double RateModel::potential(State x) const {
    if (is_finite()) {
        require_state(x);
        return potential_[static_cast<std::size_t>(x)];
    }
    const double v = potential_rule_(x);
    if (!std::isfinite(v) || !within_bound(std::abs(v), bound_V_)) {
        throw ModelError("potential at state " + std::to_string(x) + " exceeds declared bound");
    }
    return v;
}

std::span<const RateTriplet> RateModel::triplets() const {
    if (!is_finite()) throw ModelError("triplets() requires a finite model");
    return triplets_;
}

std::span<const double> RateModel::potentials() const {
    if (!is_finite()) throw ModelError("potentials() requires a finite model");
    return potential_;
}

double RateModel::rate(State x, State y) const {
    if (!is_finite()) {
        std::vector<Transition> r;
        row(x, r);
        double total = 0.0;
        for (const auto& tr : r) {
            if (tr.target == y) total += tr.rate;
        }
        return total;
    }
    require_state(x);
    require_state(y);
    const auto i = static_cast<std::size_t>(x);
    auto first = triplets_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    auto last = triplets_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    auto it = std::lower_bound(first, last, y,
                               [](const RateTriplet& t, State target) { return t.to < target; });
    return (it != last && it->to == y) ? it->rate : 0.0;
}

// ---------------------------------------------------------------------------
// SplitRates

namespace {

void split_into(const std::vector<Transition>& row, SplitRow& out) {
    out.targets.clear();
    out.plus.clear();
    out.minus.clear();
    out.row_plus = 0.0;
    out.row_minus = 0.0;
    for (const auto& tr : row) {
        // Countable rules may list a target twice; merge so r+ r- = 0 holds.
        auto it = std::find(out.targets.begin(), out.targets.end(), tr.target);
        if (it != out.targets.end()) {
            const auto k = static_cast<std::size_t>(it - out.targets.begin());
            const double r = out.plus[k] - out.minus[k] + tr.rate;
            out.plus[k] = std::max(r, 0.0);
            out.minus[k] = std::max(-r, 0.0);
            continue;
        }
        out.targets.push_back(tr.target);
        out.plus.push_back(std::max(tr.rate, 0.0));
        out.minus.push_back(std::max(-tr.rate, 0.0));
    }
    for (std::size_t k = 0; k < out.targets.size(); ++k) {
        out.row_plus += out.plus[k];
        out.row_minus += out.minus[k];
    }
}

}  // namespace

SplitRates::SplitRates(const RateModel& model) : model_(model) {
    if (!model_.is_finite()) return;
    const std::size_t n = model_.space().size();
    offsets_.assign(n + 1, 0);
    row_plus_.assign(n, 0.0);
    row_minus_.assign(n, 0.0);
    for (const auto& t : model_.triplets()) {
        targets_.push_back(t.to);
        plus_.push_back(std::max(t.rate, 0.0));
        minus_.push_back(std::max(-t.rate, 0.0));
        ++offsets_[static_cast<std::size_t>(t.from) + 1];
    }
    for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
            row_plus_[i] += plus_[k];
            row_minus_[i] += minus_[k];
        }
    }
}

SplitRowView SplitRates::row(State x, SplitRow& scratch) const {
    if (model_.is_finite()) {
        if (!model_.space().contains(x)) throw ModelError("state " + std::to_string(x) + " not in space");
        const auto i = static_cast<std::size_t>(x);
        const std::size_t b = offsets_[i];
        const std::size_t len = offsets_[i + 1] - b;
        return {std::span<const State>(targets_).subspan(b, len),
                std::span<const double>(plus_).subspan(b, len),
                std::span<const double>(minus_).subspan(b, len), row_plus_[i], row_minus_[i]};
    }
    thread_local std::vector<Transition> raw;
    model_.row(x, raw);
    split_into(raw, scratch);
    return scratch.view();
}

double SplitRates::plus(State x, State y) const { return std::max(model_.rate(x, y), 0.0); }
double SplitRates::minus(State x, State y) const { return std::max(-model_.rate(x, y), 0.0); }

double SplitRates::row_plus(State x) const {
    SplitRow scratch;
    return row(x, scratch).row_plus;
}

double SplitRates::row_minus(State x) const {
    SplitRow scratch;
    return row(x, scratch).row_minus;
}

SplitRates split_rates(const RateModel& model) { return SplitRates(model); }

// ---------------------------------------------------------------------------
// Observable

Observable Observable::dense(std::vector<double> values) {
    Observable f;
    f.dense_ = true;
    for (double v : values) {
        if (!std::isfinite(v)) throw ModelError("observable values must be finite");
        f.bound_ = std::max(f.bound_, std::abs(v));
    }
    f.values_ = std::move(values);
    return f;
}

Observable Observable::rule(std::function<double(State)> fn, double bound) {
    if (!fn) throw ModelError("observable rule is empty");
    if (!(bound >= 0.0) || !std::isfinite(bound)) {
        throw ModelError("observable bound must be finite and nonnegative");
    }
    Observable f;
    f.fn_ = std::move(fn);
    f.bound_ = bound;
    return f;
}

Observable Observable::constant(double c) {
    return rule([c](State) { return c; }, std::abs(c));
}

double Observable::operator()(State x) const {
    if (dense_) {
        if (x < 0 || static_cast<std::size_t>(x) >= values_.size()) {
            throw ModelError("observable has no value at state " + std::to_string(x));
        }
        return values_[static_cast<std::size_t>(x)];
    }
    const double v = fn_(x);
    if (!within_bound(std::abs(v), bound_)) {
        throw ModelError("observable value " + fmt_double(v) + " at state " + std::to_string(x) +
                         " exceeds declared bound " + fmt_double(bound_));
    }
    return v;
}

std::optional<std::span<const double>> Observable::values() const {
    if (!dense_) return std::nullopt;
    return std::span<const double>(values_);
}

double apply_generator(const RateModel& model, const Observable& f, State x) {
    std::vector<Transition> row;
    model.row(x, row);
    const double fx = f(x);
    double acc = 0.0;
    for (const auto& tr : row) acc += tr.rate * (f(tr.target) - fx);
    return acc + model.potential(x) * fx;
}

double PopulationLift::operator()(const PairConfiguration& cfg) const {
    double acc = 0.0;
    for (const auto& [x, n] : cfg.plus_counts()) acc += static_cast<double>(n) * f_(x);
    for (const auto& [x, n] : cfg.minus_counts()) acc -= static_cast<double>(n) * f_(x);
    return acc;
}

SignedLift lift_observable_signed(Observable f) { return SignedLift(std::move(f)); }
PopulationLift lift_observable_population(Observable f) { return PopulationLift(std::move(f)); }

// ---------------------------------------------------------------------------
// JSON documents

namespace {

std::string label_of(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer() || v.is_number_unsigned() || v.is_number_float()) return v.dump();
    throw ModelError("state labels must be strings or numbers, got " + v.dump());
}

struct ParsedDocument {
    std::vector<std::string> labels;
    std::vector<RateTriplet> rates;
    std::vector<double> potential;
    std::optional<double> bound_M;
};

// Structural parse; semantic checks are left to RateModel::finite / validate.
ParsedDocument parse_document(const nlohmann::json& doc, std::vector<ValidationCheck>* issues) {
    auto fail = [&](const std::string& name, const std::string& detail) {
        if (!issues) throw ModelError(detail);
        issues->push_back({name, false, detail});
    };
    ParsedDocument p;
    if (!doc.is_object()) throw ModelError("model document must be a JSON object");
    if (!doc.contains("states") || !doc["states"].is_array()) {
        throw ModelError("model document needs a \"states\" array");
    }
    for (const auto& s : doc["states"]) p.labels.push_back(label_of(s));

    std::unordered_map<std::string, State> index;
    for (std::size_t i = 0; i < p.labels.size(); ++i) index.emplace(p.labels[i], static_cast<State>(i));

    if (doc.contains("rates")) {
        if (!doc["rates"].is_array()) throw ModelError("\"rates\" must be an array of [x, y, value]");
        for (const auto& e : doc["rates"]) {
            if (!e.is_array() || e.size() != 3 || !e[2].is_number()) {
                throw ModelError("rate entry must be [x, y, value], got " + e.dump());
            }
            const auto from = label_of(e[0]);
            const auto to = label_of(e[1]);
            auto fi = index.find(from);
            auto ti = index.find(to);
            if (fi == index.end() || ti == index.end()) {
                fail("state references",
                     "rate entry " + e.dump() + " references unknown state '" +
                         (fi == index.end() ? from : to) + "'");
                continue;
            }
            p.rates.push_back({fi->second, ti->second, e[2].get<double>()});
        }
    }
    p.potential.assign(p.labels.size(), 0.0);
    if (doc.contains("potential")) {
        const auto& pot = doc["potential"];
        if (!pot.is_object()) throw ModelError("\"potential\" must be an object {state: value}");
        for (const auto& [key, value] : pot.items()) {
            auto it = index.find(key);
            if (it == index.end()) {
                fail("state references", "potential references unknown state '" + key + "'");
                continue;
            }
            if (!value.is_number()) throw ModelError("potential of '" + key + "' must be a number");
            p.potential[static_cast<std::size_t>(it->second)] = value.get<double>();
        }
    }
    if (doc.contains("bound_M")) {
        if (!doc["bound_M"].is_number()) throw ModelError("\"bound_M\" must be a number");
        p.bound_M = doc["bound_M"].get<double>();
    }
    return p;
}

}  // namespace

RateModel load_rate_model(const nlohmann::json& doc) {
    auto p = parse_document(doc, nullptr);
    return RateModel::finite(StateSpace::finite(std::move(p.labels)), std::move(p.rates),
                             std::move(p.potential), p.bound_M);
}

namespace {

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed JSON in '" + path + "': " + e.what());
    }
}

}  // namespace

RateModel load_rate_model_file(const std::string& path) { return load_rate_model(read_json_file(path)); }

nlohmann::json to_json(const RateModel& model) {
    if (!model.is_finite()) throw ModelError("only finite models serialize to JSON");
    const auto& labels = model.space().labels();
    nlohmann::json doc;
    doc["states"] = labels;
    doc["rates"] = nlohmann::json::array();
    for (const auto& t : model.triplets()) {
        doc["rates"].push_back({labels[static_cast<std::size_t>(t.from)],
                                labels[static_cast<std::size_t>(t.to)], t.rate});
    }
    doc["potential"] = nlohmann::json::object();
    const auto pot = model.potentials();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (pot[i] != 0.0) doc["potential"][labels[i]] = pot[i];
    }
    doc["bound_M"] = model.bound_M();
    return doc;
}

bool ValidationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

ValidationReport validate_model_document(const nlohmann::json& doc) {
    ValidationReport report;
    std::vector<ValidationCheck> issues;
    ParsedDocument p;
    try {
        p = parse_document(doc, &issues);
    } catch (const ModelError& e) {
        report.checks.push_back({"document structure", false, e.what()});
        return report;
    }
    report.checks.push_back({"document structure", true, std::to_string(p.labels.size()) + " states"});
    if (issues.empty()) {
        report.checks.push_back({"state references", true, "all rate and potential keys resolve"});
    } else {
        for (auto& i : issues) report.checks.push_back(std::move(i));
    }

    {
        ValidationCheck c{"unique states", true, ""};
        std::set<std::string> seen;
        if (p.labels.empty()) {
            c.passed = false;
            c.detail = "no states";
        }
        for (const auto& l : p.labels) {
            if (!seen.insert(l).second) {
                c.passed = false;
                c.detail = "duplicate state '" + l + "'";
                break;
            }
        }
        report.checks.push_back(c);
        if (!c.passed) return report;
    }

    auto label = [&](State x) { return p.labels[static_cast<std::size_t>(x)]; };

    {
        ValidationCheck c{"finite values", true, ""};
        for (const auto& t : p.rates) {
            if (!std::isfinite(t.rate)) {
                c.passed = false;
                c.detail = "non-finite rate from state '" + label(t.from) + "'";
            }
        }
        for (std::size_t i = 0; i < p.potential.size(); ++i) {
            if (!std::isfinite(p.potential[i])) {
                c.passed = false;
                c.detail = "non-finite potential at state '" + p.labels[i] + "'";
            }
        }
        report.checks.push_back(c);
    }
    {
        ValidationCheck c{"zero self rates", true, "r(x,x) = 0 for every state"};
        for (const auto& t : p.rates) {
            if (t.from == t.to && t.rate != 0.0) {
                c.passed = false;
                c.detail = "r(x,x) = " + fmt_double(t.rate) + " at state '" + label(t.from) + "'";
                break;
            }
        }
        report.checks.push_back(c);
    }
    {
        ValidationCheck c{"unique pairs", true, "no pair listed twice"};
        std::set<std::pair<State, State>> seen;
        for (const auto& t : p.rates) {
            if (!seen.insert({t.from, t.to}).second) {
                c.passed = false;
                c.detail = "pair ('" + label(t.from) + "', '" + label(t.to) + "') listed twice";
                break;
            }
        }
        report.checks.push_back(c);
    }
    {
        std::vector<double> abs_row(p.labels.size(), 0.0);
        std::vector<double> signed_row(p.labels.size(), 0.0);
        for (const auto& t : p.rates) {
            if (t.from == t.to) continue;
            abs_row[static_cast<std::size_t>(t.from)] += std::abs(t.rate);
            signed_row[static_cast<std::size_t>(t.from)] += t.rate;
        }
        const auto worst = std::max_element(abs_row.begin(), abs_row.end());
        const double scanned = *worst;
        ValidationCheck c{"bound M", true, ""};
        if (p.bound_M) {
            for (std::size_t i = 0; i < abs_row.size(); ++i) {
                if (!within_bound(abs_row[i], *p.bound_M)) {
                    c.passed = false;
                    c.detail = "row of state '" + p.labels[i] + "' has sum |r| = " +
                               fmt_double(abs_row[i]) + " > declared M = " + fmt_double(*p.bound_M);
                    break;
                }
            }
            if (c.passed) {
                c.detail = "sup_x sum_y |r(x,y)| = " + fmt_double(scanned) +
                           " <= declared M = " + fmt_double(*p.bound_M);
            }
        } else {
            c.detail = "no declared M; scanned sup_x sum_y |r(x,y)| = " + fmt_double(scanned);
        }
        report.checks.push_back(c);

        // A's row sums equal V(x): report whether the matrix is mass preserving.
        double vmax = 0.0;
        for (double v : p.potential) vmax = std::max(vmax, std::abs(v));
        std::size_t negatives = 0;
        for (const auto& t : p.rates) negatives += t.rate < 0.0 ? 1 : 0;
        report.checks.push_back(
            {"row sums", true,
             vmax == 0.0 ? "all rows of A sum to 0 (no potential)"
                         : "rows of A sum to V(x); sup|V| = " + fmt_double(vmax)});
        report.checks.push_back({"negative rates", true, std::to_string(negatives) + " of " +
                                                            std::to_string(p.rates.size()) +
                                                            " entries negative"});
    }
    {
        ValidationCheck c{"split disjointness", true, "r+ r- = 0 and r+ - r- = r entrywise"};
        for (const auto& t : p.rates) {
            const double rp = std::max(t.rate, 0.0);
            const double rm = std::max(-t.rate, 0.0);
            if (rp * rm != 0.0 || rp - rm != t.rate) {
                c.passed = false;
                c.detail = "split of pair ('" + label(t.from) + "', '" + label(t.to) + "') inconsistent";
                break;
            }
        }
        report.checks.push_back(c);
    }
    return report;
}

}  // namespace negrate
