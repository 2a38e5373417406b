#include "microvol/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "microvol/error.hpp"
#include "microvol/resolvent.hpp"
#include "microvol/special_functions.hpp"

namespace microvol {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kLimitStream = 0x4c494d4954ULL;  // "LIMIT"

const json* optional_field(const json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double get_number(const json& j, const std::string& key, const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_number()) throw Error("field '" + path + (path.empty() ? "" : ".") + key + "' must be a number");
    return v.get<double>();
}

void read_number(const json& j, const std::string& key, const std::string& path, double& out) {
    if (j.contains(key)) out = get_number(j, key, path);
}

std::size_t get_count(const json& v, const std::string& name) {
    if (!v.is_number_integer() || v.get<long long>() < 1) throw Error("field '" + name + "' must be an integer >= 1");
    return v.get<std::size_t>();
}

std::string horizon_label(double T) {
    std::ostringstream os;
    if (T == std::floor(T) && T < 1e15)
        os << static_cast<long long>(T);
    else
        os << std::setprecision(10) << T;
    return os.str();
}

std::uint64_t horizon_stream(double T) { return std::bit_cast<std::uint64_t>(T); }

/// Runs task(i) for i in [0, n) on `workers` threads pulling indices from a shared counter.
template <class Task>
void run_pool(std::size_t n, std::size_t workers, Task task) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(body);
        for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

std::ofstream open_out(const fs::path& p) {
    fs::create_directories(p.parent_path());
    std::ofstream os(p);
    if (!os) throw Error("cannot write '" + p.string() + "'");
    return os;
}

void write_json_file(const fs::path& p, const json& j) {
    auto os = open_out(p);
    os << j.dump(2) << '\n';
}

double left_riemann(const PathGrid& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) acc += p.values[i] * (p.times[i + 1] - p.times[i]);
    return acc;
}

double mean_of(const std::vector<double>& xs) {
    return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

// --------------------------------------------------------------------------
// Configuration

std::size_t ExperimentConfig::paths_at(std::size_t horizon_index) const {
    if (paths.size() == 1) return paths.front();
    return paths.at(horizon_index);
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw Error("config must be a JSON object");
    ExperimentConfig c{model_from_json(require_field(j, "model")), {}, {}, 0, "out", 1, {}, false,
                       kDefaultLeverageWindowFraction, {}, {}, {}};

    const json& hs = require_field(j, "horizons");
    if (!hs.is_array() || hs.empty()) throw Error("field 'horizons' must be a nonempty array");
    for (const auto& h : hs) {
        if (!h.is_number()) throw Error("field 'horizons' must contain numbers");
        c.horizons.push_back(h.get<double>());
    }
    for (std::size_t i = 0; i < c.horizons.size(); ++i) {
        if (!(c.horizons[i] >= 1.0)) throw Error("field 'horizons' entries must be >= 1");
        if (i > 0 && !(c.horizons[i] > c.horizons[i - 1])) throw Error("field 'horizons' must be strictly increasing");
        if (!(c.horizons[i] > c.model.sequence.min_horizon()))
            throw Error("horizon " + horizon_label(c.horizons[i]) + " gives a_T <= 0 for this sequence");
    }

    const json& ps = require_field(j, "paths");
    if (ps.is_array()) {
        for (const auto& p : ps) c.paths.push_back(get_count(p, "paths"));
    } else {
        c.paths.push_back(get_count(ps, "paths"));
    }
    if (c.paths.size() != 1 && c.paths.size() != c.horizons.size())
        throw Error("field 'paths' must hold one count or one per horizon");

    const json& seed = require_field(j, "master_seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
        throw Error("field 'master_seed' must be a nonnegative integer");
    c.master_seed = seed.get<std::uint64_t>();

    if (const json* v = optional_field(j, "output_dir")) {
        if (!v->is_string()) throw Error("field 'output_dir' must be a string");
        c.output_dir = v->get<std::string>();
    }
    if (const json* v = optional_field(j, "workers")) c.workers = get_count(*v, "workers");

    if (const json* s = optional_field(j, "simulation")) {
        if (const json* m = optional_field(*s, "power_law_mode")) {
            const std::string mode = m->get<std::string>();
            if (mode == "direct")
                c.simulation.power_law_mode = PowerLawMode::direct;
            else if (mode == "sum-of-exponentials")
                c.simulation.power_law_mode = PowerLawMode::sum_of_exponentials;
            else
                throw Error("field 'simulation.power_law_mode' must be direct or sum-of-exponentials");
        }
        if (const json* v = optional_field(*s, "soe_terms")) c.simulation.soe_terms = get_count(*v, "simulation.soe_terms");
        read_number(*s, "max_expected_events", "simulation", c.simulation.max_expected_events);
        if (const json* v = optional_field(*s, "write_events")) c.write_events = v->get<bool>();
    }
    if (const json* e = optional_field(j, "estimators")) {
        read_number(*e, "leverage_window", "estimators", c.leverage_window);
        if (!(c.leverage_window > 0.0 && c.leverage_window <= 0.5))
            throw Error("field 'estimators.leverage_window' must lie in (0, 0.5]");
    }
    if (const json* l = optional_field(j, "limit")) {
        if (const json* v = optional_field(*l, "paths")) c.limit.paths = get_count(*v, "limit.paths");
        if (const json* v = optional_field(*l, "steps")) c.limit.steps = get_count(*v, "limit.steps");
        if (const json* v = optional_field(*l, "rough_form")) {
            if (c.model.sequence.regime() != Regime::heavy)
                throw Error("field 'limit.rough_form' applies to the heavy-tail regime only");
            c.limit.rough_form = rough_form_from_string(v->get<std::string>());
        }
    }
    if (c.model.sequence.regime() == Regime::light && c.limit.steps < 100)
        throw Error("field 'limit.steps' must be >= 100 (Euler step <= 1e-2)");
    if (const json* t = optional_field(j, "tolerances")) {
        read_number(*t, "bracket_abs", "tolerances", c.tolerances.bracket_abs);
        read_number(*t, "symmetry_rel", "tolerances", c.tolerances.symmetry_rel);
        read_number(*t, "vanishing_ratio", "tolerances", c.tolerances.vanishing_ratio);
        read_number(*t, "ks_level", "tolerances", c.tolerances.ks_level);
        read_number(*t, "ks_critical_scale", "tolerances", c.tolerances.ks_critical_scale);
        read_number(*t, "hurst_halfwidth", "tolerances", c.tolerances.hurst_halfwidth);
        if (!(c.tolerances.ks_level > 0.0 && c.tolerances.ks_level < 1.0))
            throw Error("field 'tolerances.ks_level' must lie in (0, 1)");
    }
    if (const json* t = optional_field(j, "identity_tolerances")) {
        read_number(*t, "laplace", "identity_tolerances", c.identity_tolerances.laplace);
        read_number(*t, "fractional", "identity_tolerances", c.identity_tolerances.fractional);
        read_number(*t, "resolvent", "identity_tolerances", c.identity_tolerances.resolvent);
        read_number(*t, "wiener_hopf", "identity_tolerances", c.identity_tolerances.wiener_hopf);
    }
    return c;
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["model"] = to_json(c.model);
    j["horizons"] = c.horizons;
    j["paths"] = c.paths;
    j["master_seed"] = c.master_seed;
    j["output_dir"] = c.output_dir;
    j["workers"] = c.workers;
    j["simulation"] = {{"power_law_mode", c.simulation.power_law_mode == PowerLawMode::direct ? "direct"
                                                                                              : "sum-of-exponentials"},
                       {"soe_terms", c.simulation.soe_terms},
                       {"max_expected_events", c.simulation.max_expected_events},
                       {"write_events", c.write_events}};
    j["estimators"] = {{"leverage_window", c.leverage_window}};
    j["limit"] = {{"paths", c.limit.paths}, {"steps", c.limit.steps}};
    if (c.limit.rough_form) j["limit"]["rough_form"] = to_string(*c.limit.rough_form);
    j["tolerances"] = {{"bracket_abs", c.tolerances.bracket_abs},
                       {"symmetry_rel", c.tolerances.symmetry_rel},
                       {"vanishing_ratio", c.tolerances.vanishing_ratio},
                       {"ks_level", c.tolerances.ks_level},
                       {"ks_critical_scale", c.tolerances.ks_critical_scale},
                       {"hurst_halfwidth", c.tolerances.hurst_halfwidth}};
    j["identity_tolerances"] = {{"laplace", c.identity_tolerances.laplace},
                                {"fractional", c.identity_tolerances.fractional},
                                {"resolvent", c.identity_tolerances.resolvent},
                                {"wiener_hopf", c.identity_tolerances.wiener_hopf}};
    return j;
}

ExperimentConfig load_config(const std::string& filename) {
    std::ifstream in(filename);
    if (!in) throw Error("cannot open config '" + filename + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw Error("config '" + filename + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const json& j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

// Manifest fields shared by every command. Wall-clock is the only field that
// varies between reruns.
json base_manifest(const ExperimentConfig& c, const std::string& command) {
    const json cfg = to_json(c);
    json m;
    m["command"] = command;
    m["version"] = MICROVOL_VERSION;
    // The hash excludes run plumbing so serial and parallel runs agree.
    json hashed = cfg;
    hashed.erase("workers");
    hashed.erase("output_dir");
    m["config_hash"] = config_hash(hashed);
    m["config"] = cfg;
    m["master_seed"] = c.master_seed;
    return m;
}

PathSummary summarize_path(const ExperimentConfig& c, double T, std::size_t idx, PathGrid& rescaled,
                           const fs::path& out_dir) {
    const auto& spec = c.model.kernel;
    const auto& seq = c.model.sequence;
    const SeedRecord seed = make_seed_record(c.master_seed, idx, horizon_stream(T));
    const EventStream s = simulate(spec, seq, T, seed, c.simulation);

    PathSummary r;
    r.horizon = T;
    r.path_index = idx;
    r.seed = seed.seed;
    r.n_plus = s.count(Mark::up);
    r.n_minus = s.count(Mark::down);
    r.brackets = jump_brackets(s, spec.beta());

    const PathGrid price = microscopic_price(s);
    if (seq.regime() == Regime::light) {
        rescaled = rescale_light(price, T);
        r.direction_sup = vanishing_direction_sup(rescaled_intensity(s, spec, kRescaledPoints, c.simulation));
    } else {
        rescaled = rescale_heavy(price, T, seq).price;
        const auto h = rescaled_intensity_heavy(s, spec, seq, kRescaledPoints, c.simulation);
        double sup = 0.0;
        for (std::size_t i = 0; i < h.X.size(); ++i)
            for (int k = 0; k < 2; ++k) sup = std::max(sup, std::abs(h.Lambda.values[i][k] - h.X.values[i][k]));
        r.direction_sup = sup;
    }
    r.price_t1 = rescaled.values.back();
    r.integrated_t1 = left_riemann(rescaled);

    if (c.write_events) {
        auto os = open_out(out_dir / "paths" / ("events_T" + horizon_label(T) + "_p" + std::to_string(idx) + ".csv"));
        write_events_csv(os, s);
    }
    return r;
}

}  // namespace

SimulationRun cmd_simulate(const ExperimentConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path out_dir(c.output_dir);

    // Budget guard over the whole ladder before any work starts.
    for (double T : c.horizons) {
        const double expected = expected_event_bound(c.model.sequence.at(T), T);
        if (expected > c.simulation.max_expected_events) {
            std::ostringstream os;
            os << "event budget exceeded at T=" << horizon_label(T) << ": expected " << expected
               << " events, budget " << c.simulation.max_expected_events;
            throw BudgetError(os.str(), expected);
        }
    }

    struct Job {
        std::size_t h;
        std::size_t path;
    };
    std::vector<Job> jobs;
    SimulationRun run;
    run.prices.resize(c.horizons.size());
    std::vector<std::size_t> offset(c.horizons.size());
    for (std::size_t h = 0; h < c.horizons.size(); ++h) {
        offset[h] = jobs.size();
        run.prices[h].resize(c.paths_at(h));
        for (std::size_t p = 0; p < c.paths_at(h); ++p) jobs.push_back({h, p});
    }
    run.summaries.resize(jobs.size());

    run_pool(jobs.size(), c.workers, [&](std::size_t i) {
        const Job& job = jobs[i];
        run.summaries[i] = summarize_path(c, c.horizons[job.h], job.path, run.prices[job.h][job.path], out_dir);
    });

    json manifest = base_manifest(c, "simulate");
    json per_t = json::array();
    json seeds = json::array();
    for (std::size_t h = 0; h < c.horizons.size(); ++h) {
        const double T = c.horizons[h];
        const std::string label = horizon_label(T);
        const std::size_t n = c.paths_at(h);
        std::vector<double> np, nm, wb, ds, p1;
        json seed_list = json::array();
        for (std::size_t p = 0; p < n; ++p) {
            const PathSummary& s = run.summaries[offset[h] + p];
            np.push_back(static_cast<double>(s.n_plus));
            nm.push_back(static_cast<double>(s.n_minus));
            wb.push_back(s.brackets.wb);
            ds.push_back(s.direction_sup);
            p1.push_back(s.price_t1);
            seed_list.push_back(s.seed);
        }
        seeds.push_back({{"horizon", T}, {"stream", horizon_stream(T)}, {"seeds", seed_list}});
        per_t.push_back({{"horizon", T},
                         {"paths", n},
                         {"a_T", c.model.sequence.a(T)},
                         {"mu_T", c.model.sequence.mu_at(T)},
                         {"mean_n_plus", to_json(mean_estimate(np))},
                         {"mean_n_minus", to_json(mean_estimate(nm))},
                         {"mean_bracket_wb", to_json(mean_estimate(wb))},
                         {"mean_direction_sup", to_json(mean_estimate(ds))},
                         {"mean_price_t1", to_json(mean_estimate(p1))}});

        const std::string summary_name = "paths/summary_T" + label + ".csv";
        {
            auto os = open_out(out_dir / summary_name);
            os << "path,seed,n_plus,n_minus,price_t1,integrated_t1,bracket_wb,bracket_ww,bracket_bb,direction_sup\n"
               << std::setprecision(17);
            for (std::size_t p = 0; p < n; ++p) {
                const PathSummary& s = run.summaries[offset[h] + p];
                os << p << ',' << s.seed << ',' << s.n_plus << ',' << s.n_minus << ',' << s.price_t1 << ','
                   << s.integrated_t1 << ',' << s.brackets.wb << ',' << s.brackets.ww << ',' << s.brackets.bb << ','
                   << s.direction_sup << '\n';
            }
        }
        run.files.push_back(summary_name);

        const std::string price_name = "paths/price_T" + label + ".csv";
        {
            std::vector<const std::vector<double>*> cols;
            std::vector<std::string> names;
            for (std::size_t p = 0; p < n; ++p) {
                cols.push_back(&run.prices[h][p].values);
                names.push_back("p" + std::to_string(p));
            }
            auto os = open_out(out_dir / price_name);
            write_csv(os, run.prices[h].front().times, cols, names);
        }
        run.files.push_back(price_name);
        if (c.write_events)
            for (std::size_t p = 0; p < n; ++p)
                run.files.push_back("paths/events_T" + label + "_p" + std::to_string(p) + ".csv");
    }
    manifest["per_horizon"] = per_t;
    manifest["seeds"] = seeds;
    manifest["files"] = run.files;
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    run.manifest = manifest;
    write_json_file(out_dir / "manifest.json", manifest);
    return run;
}

LimitRun cmd_limit(const ExperimentConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path out_dir(c.output_dir);
    const auto& spec = c.model.kernel;
    const auto& seq = c.model.sequence;
    const std::size_t n = c.limit.paths;
    const std::size_t steps = c.limit.steps;
    const std::size_t kept = std::min<std::size_t>(n, 200);
    const std::size_t sample_cols = std::min<std::size_t>(n, 20);

    LimitRun run;
    run.price_t1.resize(n);
    run.variance_t1.resize(n);
    run.variance_paths.resize(kept);
    std::vector<PathGrid> sample_prices(sample_cols);

    auto keep = [&](std::size_t i, PriceVariancePaths&& pv) {
        run.price_t1[i] = pv.price.values.back();
        run.variance_t1[i] = pv.variance.values.back();
        if (i < sample_cols) sample_prices[i] = pv.price;
        if (i < kept) run.variance_paths[i] = std::move(pv.variance);
    };

    if (seq.regime() == Regime::light) {
        const HestonParams p = heston_params_from_micro(spec, seq);
        run.params = to_json(p);
        const double h = 1.0 / static_cast<double>(steps);
        run_pool(n, c.workers, [&](std::size_t i) {
            keep(i, simulate_heston(p, h, 1.0, derive_seed(c.master_seed, i, kLimitStream)));
        });
    } else {
        const RoughHestonParams p = rough_params_from_micro(spec, seq);
        const RoughForm form = c.limit.rough_form.value_or(RoughForm::fractional);
        run.params = to_json(p);
        run.params["form"] = to_string(form);
        run.params["generic"] = to_json(generic_rough_cir(p));
        const RoughCirScheme scheme(generic_rough_cir(p), form, steps);
        run_pool(n, c.workers, [&](std::size_t i) {
            keep(i, simulate_rough_heston(p, scheme, derive_seed(c.master_seed, i, kLimitStream)));
        });
    }

    write_json_file(out_dir / "params.json", run.params);
    run.files.push_back("params.json");
    {
        auto os = open_out(out_dir / "paths/limit_terminal.csv");
        os << "path,seed,price_t1,variance_t1\n" << std::setprecision(17);
        for (std::size_t i = 0; i < n; ++i)
            os << i << ',' << derive_seed(c.master_seed, i, kLimitStream) << ',' << run.price_t1[i] << ','
               << run.variance_t1[i] << '\n';
    }
    run.files.push_back("paths/limit_terminal.csv");
    {
        std::vector<const std::vector<double>*> cols;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < sample_cols; ++i) {
            cols.push_back(&sample_prices[i].values);
            names.push_back("price_" + std::to_string(i));
        }
        for (std::size_t i = 0; i < std::min(sample_cols, kept); ++i) {
            cols.push_back(&run.variance_paths[i].values);
            names.push_back("variance_" + std::to_string(i));
        }
        auto os = open_out(out_dir / "paths/limit_sample.csv");
        write_csv(os, sample_prices.front().times, cols, names);
    }
    run.files.push_back("paths/limit_sample.csv");

    json m = base_manifest(c, "limit");
    m["params"] = run.params;
    m["limit_stream"] = kLimitStream;
    m["files"] = run.files;
    m["summary"] = {{"mean_price_t1", to_json(mean_estimate(run.price_t1))},
                    {"mean_variance_t1", to_json(mean_estimate(run.variance_t1))}};
    m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    run.manifest = m;
    write_json_file(out_dir / "manifest.json", m);
    return run;
}

// --------------------------------------------------------------------------
// Identity checks

double ml_laplace_residual(double alpha, double lambda, const std::vector<double>& zs) {
    double worst = 0.0;
    for (double z : zs)
        worst = std::max(worst, std::abs(ml_density_laplace(alpha, lambda, z) - lambda / (lambda + std::pow(z, alpha))));
    return worst;
}

double fractional_identity_residual(double alpha, double lambda, double step) {
    const auto n = static_cast<std::size_t>(std::llround(1.0 / step));
    std::vector<double> times;
    for (std::size_t k = 1; k <= n; ++k) times.push_back(static_cast<double>(k) * step);
    const PathGrid lhs =
        fractional_integral([&](double s) { return ml_density(alpha, lambda, s); }, 1.0 - alpha, times);
    double worst = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        // lambda (1 - F(t)) = lambda E_{alpha,1}(-lambda t^alpha)
        const double rhs = lambda * mittag_leffler(alpha, 1.0, -lambda * std::pow(times[k], alpha));
        worst = std::max(worst, std::abs(lhs.values[k] - rhs));
    }
    return worst;
}

std::optional<double> resolvent_closed_form_error(const KernelMatrixSpec& spec, double a, double step,
                                                  std::size_t points) {
    const auto& k1 = spec.phi1();
    const auto& k2 = spec.phi2();
    if (k1.family() != KernelFamily::exponential_mixture || k1.components().size() != 1 ||
        k2.components().size() != 1 || k1.components()[0].rate != k2.components()[0].rate)
        return std::nullopt;
    const double g = k1.components()[0].rate;
    const Matrix2 w = spec.integral();
    // psi(t) = g A exp(g (A - I) t) with A = a W, via the spectral projectors of A.
    const double tr = a * (w[0][0] + w[1][1]);
    const double det = a * a * (w[0][0] * w[1][1] - w[0][1] * w[1][0]);
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double m1 = tr / 2.0 + disc;
    const double m2 = tr / 2.0 - disc;
    const ResolventSamples psi = resolvent_psi(spec, a, step, points);
    double worst = 0.0;
    for (std::size_t n = 0; n < psi.times.size(); ++n) {
        const double t = psi.times[n];
        const double e1 = m1 * std::exp(-g * (1.0 - m1) * t);
        const double e2 = m2 * std::exp(-g * (1.0 - m2) * t);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double aij = a * w[i][j];
                const double id = i == j ? 1.0 : 0.0;
                double exact;
                if (disc < 1e-12) {
                    exact = g * e1 * id;
                } else {
                    const double p1 = (aij - m2 * id) / (m1 - m2);
                    const double p2 = (aij - m1 * id) / (m2 - m1);
                    exact = g * (e1 * p1 + e2 * p2);
                }
                worst = std::max(worst, std::abs(psi.values[n][i][j] - exact));
            }
    }
    return worst;
}

// --------------------------------------------------------------------------
// Verification

bool VerifyReport::all_passed() const {
    return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.passed; });
}

json VerifyReport::to_json() const {
    json arr = json::array();
    for (const auto& r : rows)
        arr.push_back({{"name", r.name},
                       {"kind", r.kind},
                       {"value", r.value},
                       {"target", r.target},
                       {"tolerance", r.tolerance},
                       {"passed", r.passed},
                       {"detail", r.detail}});
    return {{"rows", arr}, {"all_passed", all_passed()}};
}

std::string VerifyReport::table() const {
    std::ostringstream os;
    os << std::left << std::setw(24) << "check" << std::setw(13) << "kind" << std::right << std::setw(14) << "value"
       << std::setw(14) << "target" << std::setw(12) << "tolerance" << "  result\n";
    os << std::string(85, '-') << '\n';
    for (const auto& r : rows) {
        os << std::left << std::setw(24) << r.name << std::setw(13) << r.kind << std::right << std::setprecision(6)
           << std::setw(14) << r.value << std::setw(14) << r.target << std::setw(12) << r.tolerance << "  "
           << (r.passed ? "PASS" : "FAIL") << '\n';
    }
    os << std::string(85, '-') << '\n';
    for (const auto& r : rows)
        if (!r.detail.empty()) os << r.name << ": " << r.detail << '\n';
    os << (all_passed() ? "all checks passed" : "some checks FAILED") << '\n';
    return os.str();
}

VerifyReport cmd_verify(const ExperimentConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path out_dir(c.output_dir);
    const auto& spec = c.model.kernel;
    const auto& seq = c.model.sequence;
    const bool light = seq.regime() == Regime::light;
    const Tolerances& tol = c.tolerances;
    const IdentityTolerances& itol = c.identity_tolerances;

    const SimulationRun sim = cmd_simulate(c);
    const LimitRun lim = cmd_limit(c);

    VerifyReport report;
    auto add = [&](std::string name, std::string kind, double value, double target, double tolerance, bool passed,
                   std::string detail = "") {
        report.rows.push_back({std::move(name), std::move(kind), value, target, tolerance, passed, std::move(detail)});
    };

    // Per-horizon groups of the summaries.
    std::vector<std::vector<const PathSummary*>> groups(c.horizons.size());
    {
        std::size_t k = 0;
        for (std::size_t h = 0; h < c.horizons.size(); ++h)
            for (std::size_t p = 0; p < c.paths_at(h); ++p) groups[h].push_back(&sim.summaries[k++]);
    }
    const auto& top = groups.back();
    const std::string top_label = "T=" + horizon_label(c.horizons.back());
    auto collect = [&](auto field) {
        std::vector<double> xs;
        for (const auto* s : top) xs.push_back(field(*s));
        return xs;
    };

    const double rho = leverage_rho(spec.beta());
    const double wb = mean_of(collect([](const PathSummary& s) { return s.brackets.wb; }));
    add("bracket_wb", "statistical", wb, rho, tol.bracket_abs, std::abs(wb - rho) <= tol.bracket_abs,
        "mean [W,B]_1 at " + top_label);
    const double ww = mean_of(collect([](const PathSummary& s) { return s.brackets.ww; }));
    add("bracket_ww", "statistical", ww, 1.0, tol.bracket_abs, std::abs(ww - 1.0) <= tol.bracket_abs);
    const double bb = mean_of(collect([](const PathSummary& s) { return s.brackets.bb; }));
    add("bracket_bb", "statistical", bb, 1.0, tol.bracket_abs, std::abs(bb - 1.0) <= tol.bracket_abs);

    const double np = mean_of(collect([](const PathSummary& s) { return static_cast<double>(s.n_plus); }));
    const double nm = mean_of(collect([](const PathSummary& s) { return static_cast<double>(s.n_minus); }));
    const double asym = np > 0.0 ? std::abs(np - nm) / np : 0.0;
    add("symmetry", "statistical", asym, 0.0, tol.symmetry_rel, asym < tol.symmetry_rel,
        "|E N+ - E N-| / E N+ at " + top_label);

    {
        std::vector<double> means;
        std::ostringstream detail;
        for (std::size_t h = 0; h < groups.size(); ++h) {
            double acc = 0.0;
            for (const auto* s : groups[h]) acc += s->direction_sup;
            means.push_back(acc / static_cast<double>(groups[h].size()));
            detail << (h ? ", " : "") << "T=" << horizon_label(c.horizons[h]) << ": " << means.back();
        }
        bool ok = true;
        double worst = 0.0;
        for (std::size_t h = 1; h < means.size(); ++h) {
            ok = ok && means[h] < tol.vanishing_ratio * means[h - 1];
            worst = std::max(worst, means[h] / means[h - 1]);
        }
        if (means.size() < 2) detail << " (single horizon)";
        add(light ? "vanishing_direction" : "compensator_gap", "statistical", worst, 0.0, tol.vanishing_ratio, ok,
            std::string(light ? "mean sup|C+ - C-|" : "mean sup|Lambda - X|") + " per horizon: " + detail.str());
    }

    {
        const KsResult ks = ks_two_sample(collect([](const PathSummary& s) { return s.price_t1; }), lim.price_t1,
                                          tol.ks_level);
        const double crit = tol.ks_critical_scale * ks.critical;
        std::ostringstream d;
        d << "micro (" << top.size() << " paths, " << top_label << ") vs " << (light ? "Heston" : "rough Heston")
          << " (" << lim.price_t1.size() << " paths) at t=1, p=" << ks.p_value;
        add("ks_marginal", "statistical", ks.statistic, 0.0, crit, ks.statistic <= crit, d.str());
    }

    {
        const EstimateWithCI lev = leverage_correlation(sim.prices.back(), c.leverage_window);
        std::ostringstream d;
        d << "path-only estimator, window " << c.leverage_window << ", stderr " << lev.std_error << ", pairs "
          << lev.n;
        add("leverage_path_only", "info", lev.point, rho, 0.0, true, d.str());
    }

    if (!light) {
        const EstimateWithCI h = hurst_moment_scaling(lim.variance_paths);
        const double target = seq.alpha() - 0.5;
        std::ostringstream d;
        d << "rough Heston variance, " << lim.variance_paths.size() << " paths, stderr " << h.std_error;
        add("hurst", "statistical", h.point, target, tol.hurst_halfwidth,
            std::abs(h.point - target) <= tol.hurst_halfwidth, d.str());
    }

    // Deterministic identities.
    const double ml_alpha = light ? 0.6 : seq.alpha();
    {
        std::vector<double> zs;
        for (int k = 1; k <= 100; ++k) zs.push_back(0.1 * k);
        const double r = ml_laplace_residual(ml_alpha, 1.0, zs);
        add("ml_laplace", "identity", r, 0.0, itol.laplace, r < itol.laplace, "z = 0.1..10");
    }
    {
        const double r = fractional_identity_residual(ml_alpha, 1.0, 1e-3);
        add("fractional_identity", "identity", r, 0.0, itol.fractional, r < itol.fractional, "h = 1e-3 on (0, 1]");
    }
    {
        const double a = seq.a(c.horizons.front());
        const double step = 1e-3;
        const std::size_t points = 2001;
        if (auto err = resolvent_closed_form_error(spec, a, step, points)) {
            add("resolvent_closed_form", "identity", *err, 0.0, itol.resolvent, *err < itol.resolvent,
                "a = a_T at the first horizon, h = 1e-3 on [0, 2]");
        }
        const double wh = wiener_hopf_residual(resolvent_psi(spec, a, step, points), spec);
        add("wiener_hopf", "identity", wh, 0.0, itol.wiener_hopf, wh < itol.wiener_hopf);
    }

    write_json_file(out_dir / "report.json", report.to_json());
    {
        auto os = open_out(out_dir / "report.txt");
        os << report.table();
    }
    json m = base_manifest(c, "verify");
    m["simulate"] = sim.manifest;
    m["limit"] = lim.manifest;
    m["simulate"].erase("config");
    m["limit"].erase("config");
    m["simulate"].erase("wall_clock_seconds");
    m["limit"].erase("wall_clock_seconds");
    json files = json::array();
    for (const auto& f : sim.files) files.push_back(f);
    for (const auto& f : lim.files) files.push_back(f);
    files.push_back("report.json");
    files.push_back("report.txt");
    m["files"] = files;
    m["simulate"].erase("files");
    m["limit"].erase("files");
    m["all_passed"] = report.all_passed();
    m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json_file(out_dir / "manifest.json", m);
    return report;
}

}  // namespace microvol
