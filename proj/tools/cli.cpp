#include "resmeth/cli.hpp"
#include "resmeth/csv.hpp"
#include "resmeth/errors.hpp"
#include "resmeth/rates.hpp"
#include "resmeth/solvers.hpp"
#include "resmeth/stability.hpp"
#include "resmeth/transport.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <random>

namespace resmeth::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

class JsonObject {
public:
    JsonObject& number(const std::string& key, double v)
    {
        return raw(key, std::isfinite(v) ? csv::format_number(v) : "null");
    }
    JsonObject& integer(const std::string& key, long long v) { return raw(key, std::to_string(v)); }
    JsonObject& boolean(const std::string& key, bool v) { return raw(key, v ? "true" : "false"); }
    JsonObject& null(const std::string& key) { return raw(key, "null"); }
    JsonObject& string(const std::string& key, const std::string& v) { return raw(key, quote(v)); }
    JsonObject& array(const std::string& key, const Vector& v)
    {
        std::string s = "[";
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (i > 0)
                s += ", ";
            s += std::isfinite(v[i]) ? csv::format_number(v[i]) : "null";
        }
        return raw(key, s + "]");
    }

    void write(std::ostream& out) const
    {
        out << "{\n";
        for (std::size_t i = 0; i < fields_.size(); ++i)
            out << "  " << quote(fields_[i].first) << ": " << fields_[i].second
                << (i + 1 < fields_.size() ? ",\n" : "\n");
        out << "}\n";
    }

private:
    static std::string quote(const std::string& s)
    {
        std::string q = "\"";
        for (char c : s) {
            if (c == '"' || c == '\\')
                q += '\\';
            q += c;
        }
        return q + "\"";
    }
    JsonObject& raw(const std::string& key, std::string value)
    {
        fields_.emplace_back(key, std::move(value));
        return *this;
    }

    std::vector<std::pair<std::string, std::string>> fields_;
};

// Writes through `fn` to the named file, or to `fallback` when the path is empty.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& fn)
{
    if (path.empty()) {
        fn(fallback);
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw InvalidInput("cannot write " + path);
    fn(file);
    if (!file)
        throw InvalidInput("failed writing " + path);
}

double parse_double(const std::string& key, const std::string& text)
{
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size())
        throw InvalidInput(key + ": not a number: '" + text + "'");
    return v;
}

long long parse_integer(const std::string& key, const std::string& text)
{
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw InvalidInput(key + ": not an integer: '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    if (text == "true" || text == "1")
        return true;
    if (text == "false" || text == "0")
        return false;
    throw InvalidInput(key + ": expected true or false, got '" + text + "'");
}

int checked_int(const std::string& key, long long v)
{
    if (v < 0 || v > 1'000'000'000)
        throw InvalidInput(key + " out of range");
    return static_cast<int>(v);
}

Vector unit_direction(Eigen::Index size, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i)
        v[i] = normal(rng);
    return v.normalized();
}

// ---- solve ----------------------------------------------------------------

struct SolveArgs {
    std::string config;
    std::string out;
    bool radius_is_squared = false;
};

void cmd_solve(const SolveArgs& args, std::ostream& out)
{
    std::ifstream in(args.config);
    if (!in)
        throw InvalidInput("cannot open config " + args.config);
    const auto cfg = parse_config(in);

    std::optional<std::string> op_path, data_path;
    std::optional<double> beta, p;
    std::string out_path = args.out;
    bool squared = args.radius_is_squared;
    SolverOptions opts;
    for (const auto& [key, value] : cfg) {
        if (key == "operator")
            op_path = value;
        else if (key == "data")
            data_path = value;
        else if (key == "beta")
            beta = parse_double(key, value);
        else if (key == "p")
            p = parse_double(key, value);
        else if (key == "out") {
            if (out_path.empty())
                out_path = value;
        } else if (key == "radius_is_squared")
            squared = squared || parse_bool(key, value);
        else if (key == "max_outer_bisections")
            opts.max_outer_bisections = checked_int(key, parse_integer(key, value));
        else if (key == "max_inner_iterations")
            opts.max_inner_iterations = checked_int(key, parse_integer(key, value));
        else if (key == "inner_tolerance")
            opts.inner_tolerance = parse_double(key, value);
        else if (key == "discrepancy_match_tolerance")
            opts.discrepancy_match_tolerance = parse_double(key, value);
        else if (key == "restarts")
            opts.restarts = checked_int(key, parse_integer(key, value));
        else if (key == "seed")
            opts.rng_seed = static_cast<std::uint64_t>(checked_int(key, parse_integer(key, value)));
        else
            throw InvalidInput("unknown config key '" + key + "'");
    }
    if (!op_path || !data_path || !beta || !p)
        throw InvalidInput("config needs operator, data, beta and p");
    if (!(*beta >= 0.0))
        throw InvalidInput("beta must be >= 0");
    Problem problem{csv::read_matrix(*op_path), csv::read_vector(*data_path), squared ? std::sqrt(*beta) : *beta, *p};
    problem.validate();
    opts.validate();
    const SolveReport r = residual_method_solve(problem, opts);

    JsonObject json;
    json.array("x", r.x).number("objective", r.objective).number("discrepancy", r.discrepancy);
    if (r.alpha)
        json.number("alpha", *r.alpha);
    else
        json.null("alpha");
    json.string("status", std::string(to_string(r.status)))
        .integer("iterations", r.iterations)
        .integer("restarts_used", r.restarts_used);
    emit(out_path, out, [&](std::ostream& o) { json.write(o); });
}

// ---- rates ----------------------------------------------------------------

struct RatesArgs {
    double p = 1.0;
    long long sparsity = 5;
    long long m = 64;
    long long n = 128;
    double beta_min = 1e-4;
    double beta_max = 1e-1;
    int num_beta = 9;
    int seeds = 10;
    std::uint64_t seed = 0;
    int restarts = 16;
    std::string out;
    std::string summary;
};

void cmd_rates(const RatesArgs& a, std::ostream& out)
{
    if (a.num_beta < 3)
        throw InvalidInput("num-beta must be at least 3 for a slope fit");
    if (a.seeds < 1)
        throw InvalidInput("seeds must be >= 1");
    rates::RateInstanceSpec spec;
    spec.m = a.m;
    spec.n = a.n;
    spec.p = a.p;
    spec.sparsity = a.sparsity;
    spec.rng_seed = a.seed;
    spec.validate();
    rates::RateExperimentOptions opts;
    opts.beta_grid = rates::geometric_grid(a.beta_min, a.beta_max, a.num_beta);
    opts.seeds_per_beta = a.seeds;
    opts.base_seed = a.seed;
    opts.solver.rng_seed = a.seed;
    opts.solver.restarts = a.restarts;
    opts.solver.validate();

    const rates::RateInstance instance = rates::build_rate_instance(spec);
    const rates::RateTable table = rates::run_rate_experiment(instance, opts);
    const rates::SlopeFit fit = rates::fit_loglog_slope(table, rates::RateColumn::ErrL2);
    std::optional<double> expected;
    try {
        expected = rates::expected_rate(a.p, a.sparsity > 0, rates::RateNorm::L2);
    } catch (const InvalidInput&) {
        // No tabulated exponent: the summary carries nulls.
    }

    emit(a.out, out, [&](std::ostream& o) { rates::write_rate_table(o, table); });
    std::string summary = a.summary;
    if (summary.empty())
        summary = std::filesystem::path(a.out).replace_extension(".summary.json").string();
    JsonObject json;
    json.number("slope", fit.slope);
    if (expected)
        json.number("expected", *expected);
    else
        json.null("expected");
    json.number("r_squared", fit.r_squared);
    if (expected)
        json.boolean("pass", std::abs(fit.slope - *expected) <= 0.15);
    else
        json.null("pass");
    json.string("norm", "l2")
        .number("p", a.p)
        .integer("sparsity", a.sparsity)
        .integer("instance_seed", static_cast<long long>(instance.seed_used))
        .integer("points", static_cast<long long>(fit.points))
        .integer("dropped_rows", static_cast<long long>(fit.dropped))
        .integer("infeasible_cells", static_cast<long long>(table.diagnostics.size()));
    emit(summary, out, [&](std::ostream& o) { json.write(o); });
}

// ---- stability ------------------------------------------------------------

struct StabilityArgs {
    std::string op_path;
    std::string data_path;
    double beta = 1.0;
    double p = 2.0;
    double amplitude = 0.1;
    int max_k = 64;
    std::uint64_t seed = 0;
    double eps_min = 1e-6;
    double eps_max = 0.5;
    int num_eps = 12;
    double y = 1.0;
    std::vector<double> deltas{0.1, 0.01, 0.001};
    double resolution = 1e-3;
    std::string out;
    std::string summary;
};

Problem load_problem(const StabilityArgs& a)
{
    if (a.op_path.empty() || a.data_path.empty())
        throw InvalidInput("--operator and --data are required");
    Problem problem{csv::read_matrix(a.op_path), csv::read_vector(a.data_path), a.beta, a.p};
    problem.validate();
    return problem;
}

void cmd_stability_data(const StabilityArgs& a, std::ostream& out)
{
    const Problem problem = load_problem(a);
    const Vector dir = a.amplitude * unit_direction(problem.rows(), a.seed);
    const auto schedule = stability::data_schedule(problem, dir, stability::default_schedule(a.max_k));
    const auto report = stability::run_data_stability(problem, schedule);
    emit(a.out, out, [&](std::ostream& o) { stability::write_report(o, report); });
}

void cmd_stability_operator(const StabilityArgs& a, std::ostream& out)
{
    const Problem problem = load_problem(a);
    std::mt19937_64 rng(a.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix e(problem.rows(), problem.cols());
    for (Eigen::Index i = 0; i < e.rows(); ++i)
        for (Eigen::Index j = 0; j < e.cols(); ++j)
            e(i, j) = normal(rng);
    e /= Eigen::JacobiSVD<Matrix>(e).singularValues()(0);
    const auto ks = stability::default_schedule(a.max_k);
    const auto report =
        stability::run_operator_stability(problem, stability::operator_schedule(problem.op, a.amplitude * e, ks), {}, ks);
    emit(a.out, out, [&](std::ostream& o) { stability::write_report(o, report); });
}

void cmd_stability_value(const StabilityArgs& a, std::ostream& out)
{
    const Problem problem = load_problem(a);
    if (a.num_eps < 1 || !(a.eps_min > 0.0) || !(a.eps_max >= a.eps_min))
        throw InvalidInput("need 0 < eps-min <= eps-max and num-eps >= 1");
    std::vector<double> eps = rates::geometric_grid(a.eps_min, a.eps_max, a.num_eps);
    std::reverse(eps.begin(), eps.end());
    const auto report =
        stability::check_value_right_continuity(problem.op, problem.data, problem.p, problem.beta, eps);
    std::vector<std::vector<double>> rows{{0.0, report.value_at_beta}};
    for (std::size_t i = 0; i < eps.size(); ++i)
        rows.push_back({eps[i], report.values[i]});
    emit(a.out, out, [&](std::ostream& o) { csv::write_table(o, "eps,value", rows); });
    if (!a.summary.empty()) {
        JsonObject json;
        json.number("beta", problem.beta)
            .number("value_at_beta", report.value_at_beta)
            .number("sup_gap", report.sup_gap)
            .number("monotonicity_excess", report.monotonicity_excess);
        emit(a.summary, out, [&](std::ostream& o) { json.write(o); });
    }
}

void cmd_stability_counterexample(const StabilityArgs& a, std::ostream& out)
{
    const auto report = stability::instability_demo(a.y, a.deltas, a.resolution);
    emit(a.out, out, [&](std::ostream& o) { stability::write_report(o, report); });
    if (!a.summary.empty()) {
        JsonObject json;
        json.number("y", a.y).number("jump", report.jump);
        emit(a.summary, out, [&](std::ostream& o) { json.write(o); });
    }
}

// ---- density --------------------------------------------------------------

struct DensityArgs {
    std::string samples;
    std::string beta = "auto";
    int cells = 100;
    double lower = 0.0;
    double upper = 1.0;
    std::string out;
    std::string summary;
};

void cmd_density(const DensityArgs& a, std::ostream& out)
{
    const Vector raw = csv::read_vector(a.samples);
    const std::vector<double> samples(raw.data(), raw.data() + raw.size());
    double beta = 0.0;
    const bool automatic = a.beta == "auto";
    if (automatic) {
        const auto hist = transport::histogram(samples, a.lower, a.upper, a.cells);
        const auto flat = transport::uniform_density(a.lower, a.upper, a.cells);
        beta = 2.0 * transport::grid_w1(hist, flat) / std::sqrt(static_cast<double>(samples.size()));
    } else {
        beta = parse_double("beta", a.beta);
    }
    const auto r = transport::density_estimate(samples, beta, a.lower, a.upper, a.cells);
    const double h = r.density.cell_width();
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < r.density.cells(); ++i)
        rows.push_back({a.lower + i * h, r.density.values[static_cast<std::size_t>(i)]});
    emit(a.out, out, [&](std::ostream& o) { csv::write_table(o, "cell_left,value", rows); });
    if (!a.summary.empty()) {
        JsonObject json;
        json.number("beta", beta)
            .string("beta_rule", automatic ? "2*W1(histogram,uniform)/sqrt(k)" : "given")
            .integer("samples", static_cast<long long>(samples.size()))
            .integer("cells", a.cells)
            .number("w1", r.w1)
            .number("entropy", r.entropy)
            .number("penalty", r.penalty)
            .boolean("constraint_active", r.constraint_active);
        emit(a.summary, out, [&](std::ostream& o) { json.write(o); });
    }
}

} // namespace

std::map<std::string, std::string> parse_config(std::istream& in)
{
    std::map<std::string, std::string> cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw InvalidInput("config line " + std::to_string(line_no) + ": empty key");
        if (!cfg.emplace(key, value).second)
            throw InvalidInput("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    return cfg;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Residual method for linear inverse problems", "resmeth"};
    app.require_subcommand(1);

    SolveArgs solve;
    auto* solve_cmd = app.add_subcommand("solve", "Solve min R_p(x) s.t. ||Fx - y|| <= beta from a config file");
    solve_cmd->add_option("config", solve.config, "key = value config file")->required();
    solve_cmd->add_option("--out", solve.out, "JSON report path (default: config key 'out', else stdout)");
    solve_cmd->add_flag("--radius-is-squared", solve.radius_is_squared, "beta bounds the squared misfit");

    RatesArgs rates_args;
    auto* rates_cmd = app.add_subcommand("rates", "Convergence-rate sweep on a synthetic instance");
    rates_cmd->add_option("--p", rates_args.p, "exponent in (0, 2]");
    rates_cmd->add_option("--sparsity", rates_args.sparsity, "nonzeros of x_dagger, 0 for dense");
    rates_cmd->add_option("--m", rates_args.m, "rows");
    rates_cmd->add_option("--n", rates_args.n, "columns");
    rates_cmd->add_option("--beta-min", rates_args.beta_min);
    rates_cmd->add_option("--beta-max", rates_args.beta_max);
    rates_cmd->add_option("--num-beta", rates_args.num_beta);
    rates_cmd->add_option("--seeds", rates_args.seeds, "noise draws per beta");
    rates_cmd->add_option("--seed", rates_args.seed, "instance and noise seed");
    rates_cmd->add_option("--restarts", rates_args.restarts, "start points for p < 1");
    rates_cmd->add_option("--out", rates_args.out, "rate table CSV")->required();
    rates_cmd->add_option("--summary", rates_args.summary, "summary JSON (default: <out>.summary.json)");

    StabilityArgs stab;
    auto* stab_cmd = app.add_subcommand("stability", "Stability experiments");
    stab_cmd->require_subcommand(1);
    auto add_problem_options = [&](CLI::App* cmd) {
        cmd->add_option("--operator", stab.op_path, "operator CSV")->required();
        cmd->add_option("--data", stab.data_path, "data CSV")->required();
        cmd->add_option("--beta", stab.beta);
        cmd->add_option("--p", stab.p);
        cmd->add_option("--out", stab.out, "report CSV (default stdout)");
    };
    auto* data_cmd = stab_cmd->add_subcommand("data", "y_k = y + amplitude * e / k");
    add_problem_options(data_cmd);
    data_cmd->add_option("--amplitude", stab.amplitude, "size of the k = 1 perturbation; 0 disables it");
    data_cmd->add_option("--max-k", stab.max_k);
    data_cmd->add_option("--seed", stab.seed, "seed of the direction e");
    auto* op_cmd = stab_cmd->add_subcommand("operator", "F_k = F + amplitude * E / k, ||E|| = 1");
    add_problem_options(op_cmd);
    op_cmd->add_option("--amplitude", stab.amplitude);
    op_cmd->add_option("--max-k", stab.max_k);
    op_cmd->add_option("--seed", stab.seed, "seed of the direction E");
    auto* value_cmd = stab_cmd->add_subcommand("value", "v(beta + eps) on a geometric eps grid");
    add_problem_options(value_cmd);
    value_cmd->add_option("--eps-min", stab.eps_min);
    value_cmd->add_option("--eps-max", stab.eps_max);
    value_cmd->add_option("--num-eps", stab.num_eps);
    value_cmd->add_option("--summary", stab.summary, "JSON with sup_gap");
    auto* cex_cmd = stab_cmd->add_subcommand("counterexample", "min x^2 s.t. |x^3 - x^2 - y - delta| <= y");
    cex_cmd->add_option("--y", stab.y);
    cex_cmd->add_option("--deltas", stab.deltas, "strictly decreasing positives")->delimiter(',');
    cex_cmd->add_option("--resolution", stab.resolution);
    cex_cmd->add_option("--out", stab.out, "report CSV (default stdout)");
    cex_cmd->add_option("--summary", stab.summary, "JSON with the jump");

    DensityArgs dens;
    auto* dens_cmd = app.add_subcommand("density", "Entropy density estimate under a W_1 bound");
    dens_cmd->add_option("--samples", dens.samples, "samples CSV (one row or column)")->required();
    dens_cmd->add_option("--beta", dens.beta, "radius or 'auto'");
    dens_cmd->add_option("--cells", dens.cells);
    dens_cmd->add_option("--lower", dens.lower);
    dens_cmd->add_option("--upper", dens.upper);
    dens_cmd->add_option("--out", dens.out, "density CSV (default stdout)");
    dens_cmd->add_option("--summary", dens.summary, "report JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitInput;
    }

    try {
        if (*solve_cmd)
            cmd_solve(solve, out);
        else if (*rates_cmd)
            cmd_rates(rates_args, out);
        else if (*data_cmd)
            cmd_stability_data(stab, out);
        else if (*op_cmd)
            cmd_stability_operator(stab, out);
        else if (*value_cmd)
            cmd_stability_value(stab, out);
        else if (*cex_cmd)
            cmd_stability_counterexample(stab, out);
        else if (*dens_cmd)
            cmd_density(dens, out);
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const SizeError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const InsufficientData& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ConstructionFailed& e) {
        err << "construction failed: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

} // namespace resmeth::cli
