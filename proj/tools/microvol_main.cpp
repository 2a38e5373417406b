// Command line front end: simulate, limit, verify, ml-eval, estimate.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "microvol/error.hpp"
#include "microvol/estimators.hpp"
#include "microvol/experiment.hpp"
#include "microvol/special_functions.hpp"

using nlohmann::json;
using namespace microvol;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitError = 2;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
};

void add_config_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "override master_seed");
    cmd->add_option("--out", o.out, "override output_dir");
    cmd->add_option("--workers", o.workers, "override workers")->check(CLI::PositiveNumber);
}

ExperimentConfig load(const Overrides& o) {
    std::ifstream in(o.config);
    if (!in) throw Error("cannot open config '" + o.config + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw Error("config '" + o.config + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw Error("config must be a JSON object");
    // Flags override top-level scalars only.
    if (o.seed) j["master_seed"] = *o.seed;
    if (o.out) j["output_dir"] = *o.out;
    if (o.workers) j["workers"] = *o.workers;
    return config_from_json(j);
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return xs;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"microvol: Hawkes microstructure simulation and scaling-limit checks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", MICROVOL_VERSION);

    Overrides sim_o;
    auto* sim = app.add_subcommand("simulate", "simulate the micro model over the horizon ladder");
    add_config_options(sim, sim_o);

    Overrides lim_o;
    auto* lim = app.add_subcommand("limit", "simulate the limit model under the mapped parameters");
    add_config_options(lim, lim_o);

    Overrides ver_o;
    auto* ver = app.add_subcommand("verify", "simulate, compare with the limit and write a report");
    add_config_options(ver, ver_o);

    double ml_alpha = 0.6;
    double ml_beta = 1.0;
    double ml_lambda = 1.0;
    double ml_from = -10.0;
    double ml_to = 1.0;
    std::size_t ml_points = 101;
    std::string ml_what = "function";
    std::string ml_out;
    auto* ml = app.add_subcommand("ml-eval", "tabulate Mittag-Leffler functions as CSV");
    ml->add_option("--alpha", ml_alpha, "first index")->capture_default_str();
    ml->add_option("--beta", ml_beta, "second index (function table)")->capture_default_str();
    ml->add_option("--lambda", ml_lambda, "rate of the density (density table)")->capture_default_str();
    ml->add_option("--from", ml_from, "first argument")->capture_default_str();
    ml->add_option("--to", ml_to, "last argument")->capture_default_str();
    ml->add_option("--points", ml_points, "number of arguments")->capture_default_str()->check(CLI::PositiveNumber);
    ml->add_option("--table", ml_what, "function or density")
        ->check(CLI::IsMember({"function", "density"}))
        ->capture_default_str();
    ml->add_option("--out", ml_out, "output file (stdout when empty)");

    std::string est_name;
    std::vector<std::string> est_inputs;
    std::size_t est_column = 1;
    double est_window = kDefaultLeverageWindowFraction;
    std::string est_other;
    auto* est = app.add_subcommand("estimate", "run an estimator on path CSV files");
    est->add_option("estimator", est_name, "realized-variance, leverage, covariation or hurst")
        ->required()
        ->check(CLI::IsMember({"realized-variance", "leverage", "covariation", "hurst"}));
    est->add_option("inputs", est_inputs, "path CSV files (t,value,...)")->required()->check(CLI::ExistingFile);
    est->add_option("--column", est_column, "value column (1 = first after t)")->capture_default_str();
    est->add_option("--window", est_window, "window length for realized-variance and leverage")->capture_default_str();
    est->add_option("--with", est_other, "second path for covariation")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            const ExperimentConfig c = load(sim_o);
            const SimulationRun run = cmd_simulate(c);
            std::cout << run.manifest["per_horizon"].dump(2) << '\n';
            std::cout << "wrote " << run.files.size() << " files and manifest.json to " << c.output_dir << '\n';
            return 0;
        }
        if (*lim) {
            const ExperimentConfig c = load(lim_o);
            const LimitRun run = cmd_limit(c);
            std::cout << run.params.dump(2) << '\n';
            std::cout << "wrote " << run.files.size() << " files and manifest.json to " << c.output_dir << '\n';
            return 0;
        }
        if (*ver) {
            const ExperimentConfig c = load(ver_o);
            const VerifyReport report = cmd_verify(c);
            std::cout << report.table();
            return report.all_passed() ? 0 : kExitFail;
        }
        if (*ml) {
            std::ofstream file;
            if (!ml_out.empty()) {
                file.open(ml_out);
                if (!file) throw Error("cannot write '" + ml_out + "'");
            }
            std::ostream& os = ml_out.empty() ? std::cout : file;
            os << std::setprecision(17);
            if (ml_what == "function") {
                os << "z,E\n";
                for (double z : linspace(ml_from, ml_to, ml_points)) os << z << ',' << mittag_leffler(ml_alpha, ml_beta, z) << '\n';
            } else {
                if (!(ml_from > 0.0)) throw Error("density table needs --from > 0");
                os << "t,density,cdf\n";
                for (double t : linspace(ml_from, ml_to, ml_points))
                    os << t << ',' << ml_density(ml_alpha, ml_lambda, t) << ',' << ml_cdf(ml_alpha, ml_lambda, t) << '\n';
            }
            return 0;
        }
        if (*est) {
            std::vector<PathGrid> paths;
            for (const auto& f : est_inputs) paths.push_back(read_path_csv(f, est_column));
            json rec;
            rec["estimator"] = est_name;
            rec["params"] = {{"inputs", est_inputs}, {"column", est_column}};
            if (est_name == "realized-variance") {
                rec["params"]["window"] = est_window;
                const PathGrid rv = realized_variance(paths.front(), est_window);
                const EstimateWithCI m = mean_estimate(rv.values);
                rec.update(to_json(m));
                rec["windows"] = rv.values;
            } else if (est_name == "leverage") {
                rec["params"]["window"] = est_window;
                rec.update(to_json(paths.size() == 1 ? leverage_correlation(paths.front(), est_window)
                                                     : leverage_correlation(paths, est_window)));
            } else if (est_name == "covariation") {
                const PathGrid other = est_other.empty() ? paths.front() : read_path_csv(est_other, est_column);
                rec["params"]["with"] = est_other;
                rec["point"] = quadratic_covariation(paths.front(), other);
                rec["stderr"] = 0.0;
                rec["n"] = 1;
            } else {
                rec["params"]["moments"] = kDefaultHurstMoments;
                rec["params"]["lags"] = kDefaultHurstLags;
                rec.update(to_json(hurst_moment_scaling(paths)));
            }
            rec["seed_manifest"] = nullptr;
            std::cout << rec.dump(2) << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return 0;
}
