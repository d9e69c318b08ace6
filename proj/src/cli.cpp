#include "negrate/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "negrate/duality.hpp"
#include "negrate/exact.hpp"
#include "negrate/walker.hpp"

namespace negrate::cli {

namespace {

constexpr const char* kDoubleLaplacianId = "double-laplacian";
constexpr const char* kHomogeneousPrefix = "homogeneous-negative:";

bool agrees(double value, double std_error, double reference) {
    const double diff = std::abs(value - reference);
    return diff <= 3.0 * std_error || diff <= 1e-12 * std::max(1.0, std::abs(reference));
}

bool starts_with(const std::string& s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

std::optional<double> parse_number(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return v;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed JSON in '" + path + "': " + e.what());
    }
}

State resolve_state(const RateModel& model, const std::string& label) {
    auto x = model.space().find(label);
    if (!x) throw ConfigError("unknown state '" + label + "'");
    return *x;
}

std::vector<State> resolve_starts(const RateModel& model, const std::vector<std::string>& starts) {
    std::vector<State> xs;
    if (starts.empty()) {
        if (!model.is_finite()) throw ConfigError("countable models need an explicit --start");
        for (std::size_t i = 0; i < model.space().size(); ++i) xs.push_back(static_cast<State>(i));
        return xs;
    }
    for (const auto& s : starts) xs.push_back(resolve_state(model, s));
    return xs;
}

Eigen::VectorXd dense_vector(const Observable& f, const RateModel& model) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(model.space().size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f(i);
    return v;
}

// Column table shared by the case-study and duality outputs.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::json>> rows;
};

std::string cell_text(const nlohmann::json& v) {
    if (v.is_number_float()) return format_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "";
    return v.dump();
}

std::string format_table(const Table& t, Format format) {
    std::ostringstream os;
    if (format == Format::csv) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
        os << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << cell_text(row[c]);
            os << '\n';
        }
        return os.str();
    }
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json obj = nlohmann::json::object();
        for (std::size_t c = 0; c < row.size(); ++c) obj[t.columns[c]] = row[c];
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

nlohmann::json num(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

}  // namespace

Method parse_method(const std::string& s) {
    if (s == "exact") return Method::exact;
    if (s == "single") return Method::single;
    if (s == "branching") return Method::branching;
    throw ConfigError("unknown method '" + s + "' (expected exact, single or branching)");
}

Format parse_format(const std::string& s) {
    if (s == "json") return Format::json;
    if (s == "csv") return Format::csv;
    throw ConfigError("unknown format '" + s + "' (expected json or csv)");
}

AnnihilationRate parse_lambda(const std::string& s) {
    if (s == "inf" || s == "infinity" || s == "Inf") return AnnihilationRate::infinite();
    auto v = parse_number(s);
    if (!v || !(*v >= 0.0)) throw ConfigError("lambda must be a number >= 0 or 'inf', got '" + s + "'");
    return AnnihilationRate(*v);
}

std::string method_name(Method m) {
    switch (m) {
        case Method::exact: return "exact";
        case Method::single: return "single";
        case Method::branching: return "branching";
    }
    return "?";
}

HomogeneousNegativeModel load_homogeneous_source(const std::string& kernel) {
    if (starts_with(kernel, "cycle")) {
        const auto n = parse_number(std::string_view(kernel).substr(5));
        if (!n || *n < 2 || *n != std::floor(*n)) throw ConfigError("cycle kernel needs a size, e.g. cycle3");
        return cycle_kernel_model(static_cast<std::size_t>(*n));
    }
    return load_homogeneous_negative(read_json(kernel));
}

RateModel load_model_source(const std::string& source) {
    if (source.empty()) throw ConfigError("--model is required");
    if (source == kDoubleLaplacianId) return double_laplacian_model();
    if (starts_with(source, kHomogeneousPrefix)) {
        return load_homogeneous_source(source.substr(std::string_view(kHomogeneousPrefix).size())).model();
    }
    return load_rate_model(read_json(source));
}

Observable parse_observable(const std::string& spec, const RateModel& model) {
    auto numeric_label = [&](State x) -> std::optional<double> {
        if (!model.is_finite()) return static_cast<double>(x);
        return parse_number(model.space().label(x));
    };
    if (spec == "constant") return Observable::constant(1.0);
    if (starts_with(spec, "constant:")) {
        auto c = parse_number(std::string_view(spec).substr(9));
        if (!c) throw ConfigError("bad constant in observable '" + spec + "'");
        return Observable::constant(*c);
    }
    if (starts_with(spec, "indicator:")) {
        const State target = resolve_state(model, spec.substr(10));
        return Observable::rule([target](State x) { return x == target ? 1.0 : 0.0; }, 1.0);
    }
    if (spec == "even") {
        return Observable::rule(
            [numeric_label](State x) {
                auto v = numeric_label(x);
                if (!v || *v != std::floor(*v)) throw ConfigError("'even' needs integer state labels");
                return std::fmod(*v, 2.0) == 0.0 ? 1.0 : 0.0;
            },
            1.0);
    }
    if (spec == "coordinate") {
        if (!model.is_finite()) throw ConfigError("'coordinate' is unbounded on a countable space");
        std::vector<double> values;
        for (std::size_t i = 0; i < model.space().size(); ++i) {
            values.push_back(numeric_label(static_cast<State>(i)).value_or(static_cast<double>(i)));
        }
        return Observable::dense(std::move(values));
    }
    std::vector<double> values;
    if (starts_with(spec, "[")) {
        try {
            values = nlohmann::json::parse(spec).get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad dense observable '" + spec + "': " + e.what());
        }
    } else if (starts_with(spec, "dense:")) {
        std::stringstream ss(spec.substr(6));
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto v = parse_number(item);
            if (!v) throw ConfigError("bad dense observable entry '" + item + "'");
            values.push_back(*v);
        }
    } else {
        throw ConfigError("unknown observable '" + spec + "'");
    }
    if (!model.is_finite() || values.size() != model.space().size()) {
        throw ConfigError("dense observable needs one value per state of a finite model");
    }
    return Observable::dense(std::move(values));
}

std::vector<ResultRecord> run(const RunConfig& config) {
    if (!(config.t >= 0.0) || !std::isfinite(config.t)) throw ConfigError("--t must be finite and >= 0");
    if (config.method != Method::exact && config.run.replicas < 2) {
        throw ConfigError("stochastic methods need --replicas >= 2");
    }
    const RateModel model = load_model_source(config.model);
    const Observable f = parse_observable(config.observable, model);
    const auto starts = resolve_starts(model, config.starts);
    std::vector<ResultRecord> out;

    if (config.method == Method::exact) {
        const auto started = std::chrono::steady_clock::now();
        std::vector<double> values;
        if (model.is_finite()) {
            const auto v = expm_apply(to_dense(model), dense_vector(f, model), config.t, config.tol);
            for (State x : starts) values.push_back(v(x));
        } else if (config.model == kDoubleLaplacianId) {
            for (State x : starts) values.push_back(double_laplacian_window_oracle(f, x, config.t, 1e-8, config.tol));
        } else {
            throw ConfigError("no exact oracle for countable model '" + config.model + "'");
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        for (std::size_t i = 0; i < starts.size(); ++i) {
            Estimate e;
            e.value = values[i];
            e.method = "exact";
            e.t = config.t;
            e.seed = config.run.seed;
            e.elapsed = elapsed;
            out.push_back({model.space().label(starts[i]), e});
        }
        return out;
    }

    for (State x : starts) {
        Estimate e;
        if (config.method == Method::single) {
            e = estimate_single(model, f, x, config.t, config.run);
        } else {
            BranchingOptions bo;
            bo.lambda = parse_lambda(config.lambda);
            bo.cap = config.cap;
            bo.run = config.run;
            e = estimate_branching(model, f, x, config.t, bo).estimate;
        }
        out.push_back({model.space().label(x), e});
    }
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

nlohmann::json to_json(const ResultRecord& r) {
    const auto& e = r.estimate;
    return {{"state", r.state},
            {"method", e.method},
            {"t", e.t},
            {"value", num(e.value)},
            {"std_error", e.std_error},
            {"replicas", e.replicas},
            {"aborted_replicas", e.aborted_replicas},
            {"seed", e.seed},
            {"elapsed", e.elapsed}};
}

std::string format_records(std::span<const ResultRecord> records, Format format) {
    if (format == Format::json) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : records) arr.push_back(to_json(r));
        return arr.dump(2) + "\n";
    }
    std::ostringstream os;
    os << "state,method,t,value,std_error,replicas,aborted_replicas,seed,elapsed\n";
    for (const auto& r : records) {
        const auto& e = r.estimate;
        os << r.state << ',' << e.method << ',' << format_double(e.t) << ',' << format_double(e.value)
           << ',' << format_double(e.std_error) << ',' << e.replicas << ',' << e.aborted_replicas << ','
           << e.seed << ',' << format_double(e.elapsed) << '\n';
    }
    return os.str();
}

ValidationReport validate(const std::string& source) {
    if (source == kDoubleLaplacianId || starts_with(source, kHomogeneousPrefix)) {
        ValidationReport report;
        RateModel model = double_laplacian_model();
        try {
            model = load_model_source(source);
        } catch (const ModelError& e) {
            report.checks.push_back({"model construction", false, e.what()});
            return report;
        }
        if (model.is_finite()) return validate_model_document(to_json(model));
        // Countable: enumerate a window of rows against the declared bounds.
        constexpr State kWindow = 200;
        ValidationCheck rows{"bound M (enumerated |x| <= 200)", true, ""};
        ValidationCheck split{"split disjointness", true, "r+ r- = 0 and r+ - r- = r entrywise"};
        const SplitRates sr(model);
        std::vector<Transition> row;
        SplitRow scratch;
        for (State x = -kWindow; x <= kWindow && rows.passed; ++x) {
            try {
                model.row(x, row);
                model.potential(x);
                const auto v = sr.row(x, scratch);
                for (std::size_t k = 0; k < v.targets.size(); ++k) {
                    if (v.plus[k] * v.minus[k] != 0.0) split.passed = false;
                }
            } catch (const ModelError& e) {
                rows.passed = false;
                rows.detail = e.what();
            }
        }
        if (rows.passed) rows.detail = "every enumerated row within M = " + format_double(model.bound_M());
        report.checks.push_back({"zero self rates", rows.passed, "neighbor rule never targets x itself"});
        report.checks.push_back(rows);
        report.checks.push_back(split);
        return report;
    }
    return validate_model_document(read_json(source));
}

bool CrosscheckTable::passed() const {
    return aborted == 0 && std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.passed; });
}

CrosscheckTable crosscheck(const std::string& source, std::span<const double> t_grid,
                           const std::string& observable, const RunOptions& run, std::uint64_t cap) {
    const RateModel model = load_model_source(source);
    if (!model.is_finite()) throw ConfigError("crosscheck needs a finite model");
    if (run.replicas < 2) throw ConfigError("crosscheck needs --replicas >= 2");
    const Observable f = parse_observable(observable, model);
    const DenseOperator a = to_dense(model);
    const Eigen::VectorXd fv = dense_vector(f, model);
    CrosscheckTable table;
    for (double t : t_grid) {
        if (!(t >= 0.0)) throw ConfigError("t grid values must be >= 0");
        const Eigen::VectorXd exact = expm_apply(a, fv, t);
        for (std::size_t i = 0; i < model.space().size(); ++i) {
            const auto x = static_cast<State>(i);
            CrosscheckRow row;
            row.state = model.space().label(x);
            row.t = t;
            row.exact = exact(x);
            row.single = estimate_single(model, f, x, t, run);
            BranchingOptions bo;
            bo.cap = cap;
            bo.run = run;
            bo.lambda = AnnihilationRate(0.0);
            row.branching_0 = estimate_branching(model, f, x, t, bo).estimate;
            bo.lambda = AnnihilationRate(1.0);
            row.branching_1 = estimate_branching(model, f, x, t, bo).estimate;
            bo.lambda = AnnihilationRate::infinite();
            row.branching_inf = estimate_branching(model, f, x, t, bo).estimate;
            row.passed = true;
            for (const Estimate* e : {&row.single, &row.branching_0, &row.branching_1, &row.branching_inf}) {
                table.aborted += e->aborted_replicas;
                if (!e->trusted() || !agrees(e->value, e->std_error, row.exact)) row.passed = false;
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

std::string format_crosscheck(const CrosscheckTable& table, Format format) {
    Table t;
    t.columns = {"state", "t", "exact", "single", "single_se", "branching_0", "branching_0_se",
                 "branching_1", "branching_1_se", "branching_inf", "branching_inf_se",
                 "aborted_replicas", "pass"};
    for (const auto& r : table.rows) {
        const auto aborted = r.single.aborted_replicas + r.branching_0.aborted_replicas +
                             r.branching_1.aborted_replicas + r.branching_inf.aborted_replicas;
        t.rows.push_back({r.state, r.t, r.exact, num(r.single.value), r.single.std_error,
                          num(r.branching_0.value), r.branching_0.std_error, num(r.branching_1.value),
                          r.branching_1.std_error, num(r.branching_inf.value), r.branching_inf.std_error,
                          aborted, r.passed ? "pass" : "FAIL"});
    }
    return format_table(t, format);
}

// ---------------------------------------------------------------------------
// Command line

namespace {

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> grid;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto v = parse_number(item);
        if (!v || !(*v >= 0.0)) throw ConfigError("bad t grid entry '" + item + "'");
        grid.push_back(*v);
    }
    if (grid.empty()) throw ConfigError("empty t grid");
    return grid;
}

struct CommonFlags {
    std::string model;
    std::string method = "exact";
    std::string observable = "constant";
    std::vector<std::string> starts;
    double t = 0.0;
    std::string t_grid;
    std::uint64_t replicas = 10000;
    std::uint64_t seed = 1;
    std::string lambda = "0";
    std::uint64_t cap = kDefaultPopulationCap;
    unsigned workers = 0;
    std::string output;
    std::string format = "json";
    double tol = kDefaultExpmTolerance;
};

void add_run_flags(CLI::App* cmd, CommonFlags& f, bool with_method) {
    cmd->add_option("--model", f.model, "model JSON path or built-in id")->required();
    if (with_method) cmd->add_option("--method", f.method, "exact | single | branching");
    cmd->add_option("--observable", f.observable, "observable spec");
    cmd->add_option("--start", f.starts, "start state label (repeatable; default all)");
    cmd->add_option("--t", f.t, "time horizon");
    cmd->add_option("--replicas", f.replicas, "Monte Carlo replicas");
    cmd->add_option("--seed", f.seed, "base seed");
    cmd->add_option("--lambda", f.lambda, "annihilation rate (number or inf)");
    cmd->add_option("--cap", f.cap, "population cap per branching replica");
    cmd->add_option("--workers", f.workers, "worker threads (0 = all cores)");
    cmd->add_option("--output", f.output, "write results to this file");
    cmd->add_option("--format", f.format, "json | csv");
    cmd->add_option("--tol", f.tol, "oracle tolerance");
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(path);
    if (!file) throw ConfigError("cannot write '" + path + "'");
    file << text;
}

int run_command(const CommonFlags& f, Method method, std::ostream& out) {
    RunConfig cfg;
    cfg.model = f.model;
    cfg.method = method;
    cfg.observable = f.observable;
    cfg.starts = f.starts;
    cfg.t = f.t;
    cfg.run = {f.replicas, f.seed, f.workers};
    cfg.lambda = f.lambda;
    cfg.cap = f.cap;
    cfg.tol = f.tol;
    parse_lambda(cfg.lambda);
    const Format format = parse_format(f.format);
    const auto records = run(cfg);
    emit(format_records(records, format), f.output, out);
    for (const auto& r : records) {
        if (!r.estimate.trusted()) return kCapAborts;
    }
    return kSuccess;
}

int validate_command(const CommonFlags& f, std::ostream& out) {
    const auto report = validate(f.model);
    Table t;
    t.columns = {"check", "passed", "detail"};
    for (const auto& c : report.checks) t.rows.push_back({c.name, c.passed, c.detail});
    emit(format_table(t, parse_format(f.format)), f.output, out);
    return report.passed() ? kSuccess : kModelInvariantFailure;
}

int crosscheck_command(const CommonFlags& f, std::ostream& out) {
    const auto grid = parse_grid(f.t_grid.empty() ? "0,0.25,0.5" : f.t_grid);
    const auto table = crosscheck(f.model, grid, f.observable, {f.replicas, f.seed, f.workers}, f.cap);
    emit(format_crosscheck(table, parse_format(f.format)), f.output, out);
    if (table.aborted > 0) return kCapAborts;
    return table.passed() ? kSuccess : kCrosscheckFailure;
}

int duality_command(const CommonFlags& f, const std::string& instance_path, std::size_t x,
                    const std::vector<std::string>& plus, const std::vector<std::string>& minus,
                    std::ostream& out) {
    const auto inst = load_duality_instance_file(instance_path);
    PairConfiguration cfg0;
    for (const auto& y : plus) cfg0.add_plus(resolve_state(inst.ly, y));
    for (const auto& y : minus) cfg0.add_minus(resolve_state(inst.ly, y));
    if (cfg0.empty() && plus.empty() && minus.empty()) throw ConfigError("give --plus and/or --minus");
    BranchingOptions bo;
    bo.lambda = parse_lambda(f.lambda);
    bo.cap = f.cap;
    bo.run = {f.replicas, f.seed, f.workers};
    const auto report = verify_lifted_duality(inst, x, cfg0, f.t, bo);
    Table t;
    t.columns = {"x", "t", "lambda", "residual", "lhs_exact", "rhs", "rhs_se", "difference",
                 "aborted_replicas", "pass"};
    t.rows.push_back({static_cast<std::uint64_t>(x), f.t, f.lambda, report.residual, report.lhs,
                      num(report.rhs.value), report.rhs.std_error, num(report.difference),
                      report.rhs.aborted_replicas, report.passed ? "pass" : "FAIL"});
    emit(format_table(t, parse_format(f.format)), f.output, out);
    if (!report.rhs.trusted()) return kCapAborts;
    return report.passed ? kSuccess : kCrosscheckFailure;
}

int case_study_command(const CommonFlags& f, const std::string& which, std::ostream& out) {
    const auto grid = f.t_grid.empty() ? std::vector<double>{f.t} : parse_grid(f.t_grid);
    const RunOptions run{f.replicas, f.seed, f.workers};
    Table table;
    if (which == kDoubleLaplacianId) {
        const RateModel model = double_laplacian_model();
        const Observable g = parse_observable(f.observable, model);
        const std::string start = f.starts.empty() ? "0" : f.starts.front();
        const State x = resolve_state(model, start);
        const Observable g_even = Observable::rule(
            [g](State y) { return (y & 1) == 0 ? g(y) : 0.0; }, g.bound());
        table.columns = {"t", "estimate", "estimate_se", "window_oracle", "mean_sign", "mean_sign_se",
                         "exp_minus_4t", "p_even", "p_even_se", "p_even_closed_form",
                         "parity_violations", "weight_violations", "even_part_estimate",
                         "even_part_se", "even_part_case_formula", "even_part_case_formula_se",
                         "even_part_oracle"};
        for (double t : grid) {
            const auto r = estimate_double_laplacian(g, x, t, run);
            const auto ev = double_laplacian_even_part(g, x, t, run);
            table.rows.push_back({t, r.estimate.value, r.estimate.std_error,
                                  double_laplacian_window_oracle(g, x, t), r.mean_sign, r.mean_sign_se,
                                  std::exp(-4.0 * t), r.p_even, r.p_even_se,
                                  0.5 * (1.0 + std::exp(-4.0 * t)), r.parity_violations,
                                  r.weight_violations, ev.estimate.value, ev.estimate.std_error,
                                  ev.case_formula, ev.case_formula_se,
                                  double_laplacian_window_oracle(g_even, x, t)});
        }
    } else if (starts_with(which, kHomogeneousPrefix)) {
        const auto hn = load_homogeneous_source(which.substr(std::string_view(kHomogeneousPrefix).size()));
        const RateModel& model = hn.model();
        const Observable g = parse_observable(f.observable, model);
        const State x = f.starts.empty() ? 0 : resolve_state(model, f.starts.front());
        const Eigen::VectorXd mu = stationary_distribution(hn);
        const std::vector<double> mu_v(mu.data(), mu.data() + mu.size());
        const DenseOperator a = to_dense(model);
        const Eigen::VectorXd gv = dense_vector(g, model);
        table.columns = {"t", "mean_even", "se_even", "p_even", "p_even_se", "p_even_closed_form",
                         "mean_odd", "se_odd", "p_odd", "recombined", "single", "single_se", "exact",
                         "b_even", "b_odd"};
        for (double t : grid) {
            const auto b = empirical_bias_terms(hn, g, x, t, mu_v, run);
            const auto& p = b.parity;
            table.rows.push_back({t, p.mean_even, p.se_even, p.p_even, p.p_even_se,
                                  0.5 * (1.0 + std::exp(-2.0 * hn.lambda1() * t)), num(p.mean_odd),
                                  p.se_odd, p.p_odd, p.recombined, p.single.value, p.single.std_error,
                                  expm_apply(a, gv, t, f.tol)(x), b.b_even, num(b.b_odd)});
        }
    } else {
        throw ConfigError("unknown case study '" + which + "'");
    }
    emit(format_table(table, parse_format(f.format)), f.output, out);
    return kSuccess;
}

}  // namespace

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Monte Carlo evaluation of e^{tA} for generators with negative rates", "negrate"};
    app.require_subcommand(1);
    CommonFlags f;

    auto* validate_cmd = app.add_subcommand("validate", "check model invariants");
    validate_cmd->add_option("--model", f.model, "model JSON path or built-in id")->required();
    validate_cmd->add_option("--format", f.format, "json | csv");
    validate_cmd->add_option("--output", f.output, "write report to this file");

    auto* exact_cmd = app.add_subcommand("exact", "exact S_t f via the matrix exponential");
    add_run_flags(exact_cmd, f, false);

    auto* estimate_cmd = app.add_subcommand("estimate", "estimate S_t f");
    add_run_flags(estimate_cmd, f, true);

    auto* cross_cmd = app.add_subcommand("crosscheck", "exact vs single vs branching");
    add_run_flags(cross_cmd, f, false);
    cross_cmd->add_option("--t-grid", f.t_grid, "comma separated times (default 0,0.25,0.5)");

    std::string instance;
    std::size_t dual_x = 0;
    std::vector<std::string> plus;
    std::vector<std::string> minus;
    auto* dual_cmd = app.add_subcommand("duality", "verify the lifted duality identity");
    dual_cmd->add_option("--instance", instance, "duality instance JSON")->required();
    dual_cmd->add_option("--x", dual_x, "state index of the X process");
    dual_cmd->add_option("--plus", plus, "particle sites of the dual start (repeatable)");
    dual_cmd->add_option("--minus", minus, "antiparticle sites of the dual start (repeatable)");
    dual_cmd->add_option("--t", f.t, "time horizon");
    dual_cmd->add_option("--replicas", f.replicas, "Monte Carlo replicas");
    dual_cmd->add_option("--seed", f.seed, "base seed");
    dual_cmd->add_option("--lambda", f.lambda, "annihilation rate (number or inf)");
    dual_cmd->add_option("--cap", f.cap, "population cap per replica");
    dual_cmd->add_option("--workers", f.workers, "worker threads");
    dual_cmd->add_option("--output", f.output, "write report to this file");
    dual_cmd->add_option("--format", f.format, "json | csv");

    std::string which;
    auto* case_cmd = app.add_subcommand("case-study", "worked examples");
    case_cmd->add_option("which", which, "double-laplacian | homogeneous-negative:<kernel>")->required();
    case_cmd->add_option("--observable", f.observable, "observable spec");
    case_cmd->add_option("--start", f.starts, "start state");
    case_cmd->add_option("--t", f.t, "time horizon");
    case_cmd->add_option("--t-grid", f.t_grid, "comma separated times");
    case_cmd->add_option("--replicas", f.replicas, "Monte Carlo replicas");
    case_cmd->add_option("--seed", f.seed, "base seed");
    case_cmd->add_option("--workers", f.workers, "worker threads");
    case_cmd->add_option("--output", f.output, "write table to this file");
    case_cmd->add_option("--format", f.format, "json | csv");
    case_cmd->add_option("--tol", f.tol, "oracle tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    try {
        if (*validate_cmd) return validate_command(f, out);
        if (*exact_cmd) return run_command(f, Method::exact, out);
        if (*estimate_cmd) return run_command(f, parse_method(f.method), out);
        if (*cross_cmd) return crosscheck_command(f, out);
        if (*dual_cmd) return duality_command(f, instance, dual_x, plus, minus, out);
        if (*case_cmd) return case_study_command(f, which, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const OracleError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const DualityPreconditionError& e) {
        err << "model invariant failure: " << e.what() << '\n';
        return kModelInvariantFailure;
    } catch (const ModelError& e) {
        err << "model invariant failure: " << e.what() << '\n';
        return kModelInvariantFailure;
    } catch (const InsufficientSamples& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    return kUsageError;
}

}  // namespace negrate::cli
