// epismooth: solve smoothed problems, run probe suites, evaluate prox maps.
//
// Exit codes: 0 success (solve: kkt_point), 2 input error, 3 infeasible
// stationary point, 4 undetermined, 1 verification failure or runtime error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "epismooth/catalog.hpp"
#include "epismooth/problem_file.hpp"
#include "epismooth/report.hpp"
#include "epismooth/solver.hpp"
#include "epismooth/suites.hpp"

namespace {

using namespace epismooth;
using report::format_double;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitUndetermined = 4;
constexpr std::uint64_t kDefaultSeed = 7;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// A path that exists is read; otherwise the name is looked up in the catalog.
std::string problem_text(const std::string& arg) {
    if (std::ifstream(arg).good()) {
        return read_file(arg);
    }
    if (auto doc = catalog::find_problem(arg)) {
        return *doc;
    }
    throw ArgumentError("'" + arg + "' is neither a readable file nor a built-in problem");
}

Vector parse_csv_vector(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (item.empty() || end == item.c_str() || *end != '\0') {
            throw ArgumentError("--x: '" + item + "' is not a number");
        }
        vals.push_back(v);
    }
    if (vals.empty()) {
        throw ArgumentError("--x: empty vector");
    }
    return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

/// Writes to the named file, or to stdout when the path is empty.
class Sink {
  public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) {
                throw ArgumentError("cannot write '" + path + "'");
            }
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

  private:
    std::ofstream file_;
};

struct SolveArgs {
    std::string problem;
    std::optional<double> mu0;
    std::optional<double> rho;
    std::optional<int> kmax;
    std::optional<double> tol;
    bool guard = false;
    std::string trace_path;
    std::string summary_path;
};

int cmd_solve(const SolveArgs& args) {
    problem::SolveOverrides ov{args.mu0, args.rho, args.kmax, args.tol, std::nullopt};
    if (args.guard) {
        ov.guard = true;
    }
    const problem::LoadedProblem lp = problem::load_text(problem_text(args.problem), ov);
    const ContinuationResult res = continuation_solve(lp.family, lp.config, lp.x0, &lp.problem);

    Sink trace(args.trace_path);
    std::ostream& t = trace.stream();
    t << "k,mu,grad_norm,eval,feas_residual,stat_residual,cone_residual,guard\n";
    for (const StageRecord& s : res.trace) {
        t << s.k << ',' << format_double(s.mu) << ',' << format_double(s.grad_norm) << ',' << format_double(s.eval)
          << ',' << format_double(s.kkt->feasibility_residual) << ',' << format_double(s.kkt->stationarity_residual)
          << ',' << format_double(s.kkt->cone_residual) << ',' << to_string(s.guard) << '\n';
    }
    t.flush();

    const StageRecord& last = res.trace.back();
    report::Json j;
    j["problem"] = lp.name;
    j["classification"] = to_string(res.classification());
    j["status"] = to_string(res.status);
    j["stages"] = res.trace.size();
    j["mu"] = report::number(last.mu);
    j["x"] = report::vector(res.x);
    j["y"] = report::vector(res.y);
    double objective = lp.problem.objective.value(res.x);
    if (lp.problem.regularizer) {
        objective += lp.problem.regularizer->value(res.x);
    }
    j["objective"] = report::number(objective);
    j["eval"] = report::number(last.eval);
    report::Json resid;
    resid["stationarity"] = report::number(res.kkt->stationarity_residual);
    resid["feasibility"] = report::number(res.kkt->feasibility_residual);
    resid["cone"] = report::number(res.kkt->cone_residual);
    j["residuals"] = resid;
    if (res.kkt->infeasibility) {
        report::Json inf;
        inf["psi"] = report::number(res.kkt->infeasibility->psi);
        inf["residual"] = report::number(res.kkt->infeasibility->residual);
        inf["candidate"] = res.kkt->infeasibility->is_candidate;
        j["infeasibility"] = inf;
    }
    Sink summary(args.summary_path);
    summary.stream() << report::dump(j) << '\n';

    switch (res.classification()) {
    case Classification::kkt_point:
        return kExitOk;
    case Classification::infeasible_stationary:
        return kExitInfeasible;
    default:
        return kExitUndetermined;
    }
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("EPISMOOTH_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (*env == '\0' || *end != '\0') {
            throw ArgumentError("EPISMOOTH_SEED must be a nonnegative integer");
        }
        return v;
    }
    return kDefaultSeed;
}

int cmd_verify(const std::string& suite, std::optional<std::uint64_t> seed, const std::string& out_path) {
    const auto& names = verify::suite_names();
    if (std::find(names.begin(), names.end(), suite) == names.end()) {
        throw ArgumentError("unknown suite '" + suite + "' (expected kernels, envelopes, consistency, composite or all)");
    }
    const std::uint64_t s = seed ? *seed : default_seed();
    const auto reports = verify::run_suite(suite, s);
    Sink out(out_path);
    int unexpected = 0;
    for (const auto& r : reports) {
        out.stream() << report::dump(report::to_json(r)) << '\n';
        if (!r.as_expected()) {
            ++unexpected;
            std::cerr << "unexpected outcome: " << r.name << (r.expect_failure ? " (negative control passed)" : " failed")
                      << '\n';
        }
    }
    std::cerr << reports.size() << " probes, " << unexpected << " unexpected (suite " << suite << ", seed " << s
              << ")\n";
    return unexpected == 0 ? kExitOk : kExitFailure;
}

int cmd_prox(const std::string& name, const std::string& x_text, double mu) {
    const Vector x = parse_csv_vector(x_text);
    if (!(mu > 0.0)) {
        throw ArgumentError("--mu must be positive");
    }
    const auto g = catalog::find_function(name, x.size());
    if (!g) {
        throw ArgumentError("unknown function '" + name + "'; run 'epismooth catalog' for the list");
    }
    report::Json j;
    j["function"] = name;
    j["mu"] = report::number(mu);
    j["x"] = report::vector(x);
    j["prox"] = report::vector(moreau_prox(*g, mu, x));
    j["envelope"] = report::number(moreau_envelope(*g, mu, x));
    j["gradient"] = report::vector(moreau_gradient(*g, mu, x));
    std::cout << report::dump(j) << '\n';
    return kExitOk;
}

int cmd_catalog() {
    std::cout << "problems:\n";
    for (const auto& p : catalog::problems()) {
        const auto lp = problem::load_text(p.document);
        std::cout << "  " << p.name << "\n      " << lp.description << '\n';
    }
    std::cout << "functions (for prox):\n";
    for (const auto& f : catalog::functions(1)) {
        std::cout << "  " << f.name << "  " << f.description << '\n';
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Epi-smoothing toolkit: penalty continuation, Moreau envelopes and numerical probes"};
    app.require_subcommand(1);

    SolveArgs solve;
    auto* solve_cmd = app.add_subcommand("solve", "Run penalty continuation on a problem file or built-in problem");
    solve_cmd->add_option("problem", solve.problem, "Problem JSON file or built-in name")->required();
    solve_cmd->add_option("--mu0", solve.mu0, "Initial smoothing parameter");
    solve_cmd->add_option("--rho", solve.rho, "Reduction factor in (0, 1)");
    solve_cmd->add_option("--kmax", solve.kmax, "Maximum number of stages");
    solve_cmd->add_option("--tol", solve.tol, "KKT tolerance for stationarity, feasibility and cone residuals");
    solve_cmd->add_flag("--guard", solve.guard, "Use the problem's feasible_point as a descent guard");
    solve_cmd->add_option("--trace", solve.trace_path, "Write the stage trace CSV here (default: stdout)");
    solve_cmd->add_option("--summary", solve.summary_path, "Write the summary JSON here (default: stdout)");

    std::string suite;
    std::optional<std::uint64_t> seed;
    std::string verify_out;
    auto* verify_cmd = app.add_subcommand("verify", "Run a probe suite and emit JSON lines");
    verify_cmd->add_option("suite", suite, "kernels | envelopes | consistency | composite | all")->required();
    verify_cmd->add_option("--seed", seed, "Random seed (default: EPISMOOTH_SEED or 7)");
    verify_cmd->add_option("--out", verify_out, "Write reports here (default: stdout)");

    std::string prox_name;
    std::string prox_x;
    double prox_mu = 1.0;
    auto* prox_cmd = app.add_subcommand("prox", "Evaluate prox, Moreau envelope and its gradient");
    prox_cmd->add_option("name", prox_name, "Function name from the catalog")->required();
    prox_cmd->add_option("--x", prox_x, "Point as comma-separated values")->required();
    prox_cmd->add_option("--mu", prox_mu, "Smoothing parameter")->required();

    auto* catalog_cmd = app.add_subcommand("catalog", "List built-in problems and functions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*solve_cmd) {
            return cmd_solve(solve);
        }
        if (*verify_cmd) {
            return cmd_verify(suite, seed, verify_out);
        }
        if (*prox_cmd) {
            return cmd_prox(prox_name, prox_x, prox_mu);
        }
        if (*catalog_cmd) {
            return cmd_catalog();
        }
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitInput;
}
