#include "microvol/hawkes.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "microvol/error.hpp"

namespace microvol {

std::size_t EventStream::count(Mark m) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [m](const Event& e) { return e.mark == m; }));
}

void check_stream(const EventStream& s) {
    double prev = 0.0;
    for (std::size_t k = 0; k < s.events.size(); ++k) {
        const Event& e = s.events[k];
        if (!(e.time > prev)) throw Error("event times must be strictly increasing and positive");
        if (e.time > s.horizon) throw Error("event time beyond the horizon");
        const double floor = s.params.mu * (1.0 - 1e-12);
        if (e.lambda_plus < floor || e.lambda_minus < floor) throw Error("recorded intensity below the baseline");
        prev = e.time;
    }
}

// --------------------------------------------------------------------------
// IntensityTracker

struct IntensityTracker::Impl {
    ScaledParams params;
    double t = 0.0;
    bool markov = true;
    double approx_error = 0.0;

    // Markov representation: lambda_i = mu + sum_r sum_j amp[r][i][j] state[r][j]
    std::vector<double> rates;
    std::vector<Matrix2> amp;
    std::vector<Vector2> state;

    // Direct power law: lambda_i = mu + sum_j w[i][j] sum_k alpha (1 + t - t_k)^-(1+alpha)
    double alpha = 0.0;
    Matrix2 w{};
    std::vector<double> history[2];

    Vector2 intensity_at(double s) const {
        Vector2 lam{params.mu, params.mu};
        if (markov) {
            const double dt = s - t;
            for (std::size_t r = 0; r < rates.size(); ++r) {
                const double d = dt > 0.0 ? std::exp(-rates[r] * dt) : 1.0;
                const double s0 = state[r][0] * d;
                const double s1 = state[r][1] * d;
                lam[0] += amp[r][0][0] * s0 + amp[r][0][1] * s1;
                lam[1] += amp[r][1][0] * s0 + amp[r][1][1] * s1;
            }
            return lam;
        }
        double g[2] = {0.0, 0.0};
        const double p = -(1.0 + alpha);
        for (int j = 0; j < 2; ++j) {
            for (double tk : history[j]) g[j] += std::exp(p * std::log1p(s - tk));
            g[j] *= alpha;
        }
        lam[0] += w[0][0] * g[0] + w[0][1] * g[1];
        lam[1] += w[1][0] * g[0] + w[1][1] * g[1];
        return lam;
    }

    Vector2 advance(double t1, bool integrate) {
        if (t1 < t) throw Error("intensity tracker cannot move backwards in time");
        const double dt = t1 - t;
        Vector2 integral{0.0, 0.0};
        if (markov) {
            if (integrate) integral = {params.mu * dt, params.mu * dt};
            for (std::size_t r = 0; r < rates.size(); ++r) {
                const double d = std::exp(-rates[r] * dt);
                if (integrate) {
                    const double f = -std::expm1(-rates[r] * dt) / rates[r];
                    const double s0 = state[r][0] * f;
                    const double s1 = state[r][1] * f;
                    integral[0] += amp[r][0][0] * s0 + amp[r][0][1] * s1;
                    integral[1] += amp[r][1][0] * s0 + amp[r][1][1] * s1;
                }
                state[r][0] *= d;
                state[r][1] *= d;
            }
        } else if (integrate) {
            integral = {params.mu * dt, params.mu * dt};
            double g[2] = {0.0, 0.0};
            for (int j = 0; j < 2; ++j) {
                for (double tk : history[j]) {
                    g[j] += std::exp(-alpha * std::log1p(t - tk)) - std::exp(-alpha * std::log1p(t1 - tk));
                }
            }
            integral[0] += w[0][0] * g[0] + w[0][1] * g[1];
            integral[1] += w[1][0] * g[0] + w[1][1] * g[1];
        }
        t = t1;
        return integral;
    }

    void add_event(Mark m) {
        const int j = index_of(m);
        if (markov) {
            for (auto& s : state) s[j] += 1.0;
        } else {
            history[j].push_back(t);
        }
    }
};

IntensityTracker::IntensityTracker(const KernelMatrixSpec& spec, ScaledParams params, PowerLawMode mode,
                                   double horizon, std::size_t soe_terms)
    : impl_(std::make_unique<Impl>()) {
    if (!(params.mu > 0.0)) throw Error("baseline intensity must be positive");
    if (!(params.a >= 0.0)) throw Error("endogeneity level must be nonnegative");
    Impl& im = *impl_;
    im.params = params;
    const double a = params.a;
    const double beta = spec.beta();
    const double w1 = spec.phi1().weight();
    const double w2 = spec.phi2().weight();

    auto push_rate = [&](double rate, double p1, double p2) {
        im.rates.push_back(rate);
        im.amp.push_back({{{a * p1, a * beta * p2}, {a * p2, a * (p1 + (beta - 1.0) * p2)}}});
        im.state.push_back({0.0, 0.0});
    };

    if (spec.phi1().family() == KernelFamily::exponential_mixture) {
        std::vector<double> rates;
        for (const auto& c : spec.phi1().components()) rates.push_back(c.rate);
        for (const auto& c : spec.phi2().components()) rates.push_back(c.rate);
        std::sort(rates.begin(), rates.end());
        rates.erase(std::unique(rates.begin(), rates.end()), rates.end());
        auto amplitude = [](const KernelFunction& k, double rate) {
            for (const auto& c : k.components())
                if (c.rate == rate) return k.weight() * c.coefficient * c.rate;
            return 0.0;
        };
        for (double r : rates) push_rate(r, amplitude(spec.phi1(), r), amplitude(spec.phi2(), r));
        return;
    }

    im.alpha = spec.phi1().alpha();
    if (mode == PowerLawMode::sum_of_exponentials) {
        if (!(horizon > 0.0)) throw Error("sum-of-exponentials mode needs a positive horizon");
        const SoeFit fit = fit_power_law_soe(im.alpha, horizon, soe_terms);
        for (const auto& c : fit.terms) push_rate(c.rate, w1 * c.coefficient, w2 * c.coefficient);
        // Worst entry of the matrix is (w1 + (beta - 1) w2) or beta w2, both <= 1.
        im.approx_error = a * std::max({w1, beta * w2, w1 + (beta - 1.0) * w2}) * fit.sup_error;
        return;
    }
    im.markov = false;
    im.w = {{{a * w1, a * beta * w2}, {a * w2, a * (w1 + (beta - 1.0) * w2)}}};
}

IntensityTracker::~IntensityTracker() = default;
IntensityTracker::IntensityTracker(IntensityTracker&&) noexcept = default;
IntensityTracker& IntensityTracker::operator=(IntensityTracker&&) noexcept = default;

double IntensityTracker::time() const noexcept { return impl_->t; }
Vector2 IntensityTracker::intensity() const { return impl_->intensity_at(impl_->t); }
Vector2 IntensityTracker::intensity_at(double s) const {
    if (s < impl_->t) throw Error("intensity_at requires s >= current time");
    return impl_->intensity_at(s);
}
Vector2 IntensityTracker::advance(double t, bool integrate) { return impl_->advance(t, integrate); }
void IntensityTracker::add_event(Mark m) { impl_->add_event(m); }
double IntensityTracker::approximation_error() const noexcept { return impl_->approx_error; }

// --------------------------------------------------------------------------
// Simulation

double expected_event_bound(ScaledParams params, double T) {
    if (params.a >= 1.0) return std::numeric_limits<double>::infinity();
    return 2.0 * params.mu * T / (1.0 - params.a);
}

EventStream simulate(const KernelMatrixSpec& spec, ScaledParams params, double T, const SeedRecord& seed,
                     const SimulationOptions& options) {
    if (!(T > 0.0)) throw Error("horizon must be positive");
    if (!(params.a >= 0.0 && params.a < 1.0)) throw Error("endogeneity level a_T must lie in [0, 1)");

    const double expected = expected_event_bound(params, T);
    if (expected > options.max_expected_events) {
        std::ostringstream os;
        os << "expected event count " << expected << " at T=" << T << " exceeds the budget of "
           << options.max_expected_events << " events";
        throw BudgetError(os.str(), expected);
    }

    EventStream out;
    out.horizon = T;
    out.params = params;
    out.seed = seed;
    out.events.reserve(static_cast<std::size_t>(std::min(expected, 1e6)));

    IntensityTracker tracker(spec, params, options.power_law_mode, T, options.soe_terms);
    Rng rng(seed.seed);

    // Kernels are non-increasing, so the total intensity right now dominates the
    // intensity until the next event.
    Vector2 lam = tracker.intensity();
    double t = 0.0;
    while (true) {
        const double bound = lam[0] + lam[1];
        t += rng.exponential(bound);
        if (t > T) break;
        tracker.advance(t, false);
        lam = tracker.intensity();
        const double u = rng.uniform() * bound;
        if (u < lam[0] + lam[1]) {
            const Mark m = u < lam[0] ? Mark::up : Mark::down;
            out.events.push_back({t, m, lam[0], lam[1]});
            if (static_cast<double>(out.events.size()) > options.max_expected_events) {
                std::ostringstream os;
                os << "realized event count exceeded the budget of " << options.max_expected_events
                   << " events at T=" << T;
                throw BudgetError(os.str(), expected);
            }
            tracker.add_event(m);
            lam = tracker.intensity();
        }
    }
    return out;
}

EventStream simulate(const KernelMatrixSpec& spec, const AsymptoticSequence& seq, double T, const SeedRecord& seed,
                     const SimulationOptions& options) {
    if (!(T >= 1.0)) throw Error("horizon must be at least 1");
    return simulate(spec, seq.at(T), T, seed, options);
}

EventStream simulate(const KernelMatrixSpec& spec, const AsymptoticSequence& seq, double T, std::uint64_t seed,
                     const SimulationOptions& options) {
    return simulate(spec, seq, T, SeedRecord{seed, 0, 0, seed}, options);
}

// --------------------------------------------------------------------------
// Prices

PathGrid microscopic_price(const EventStream& s) {
    PathGrid p;
    p.times.reserve(s.events.size());
    p.values.reserve(s.events.size());
    long level = 0;
    for (const auto& e : s.events) {
        level += sign_of(e.mark);
        p.times.push_back(e.time);
        p.values.push_back(static_cast<double>(level));
    }
    return p;
}

namespace {

PathGrid sample_scaled(const PathGrid& price, double T, double factor, std::size_t points) {
    PathGrid out;
    out.times = uniform_times(points);
    out.values.resize(points);
    std::size_t k = 0;
    double current = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double real = out.times[i] * T;
        while (k < price.size() && price.times[k] <= real) current = price.values[k++];
        out.values[i] = factor * current;
    }
    return out;
}

}  // namespace

PathGrid rescale_light(const PathGrid& price, double T, std::size_t points) {
    if (!(T > 0.0)) throw Error("horizon must be positive");
    return sample_scaled(price, T, 1.0 / T, points);
}

HeavyRescaledPrice rescale_heavy(const PathGrid& price, double T, const AsymptoticSequence& seq,
                                 std::size_t points) {
    if (seq.regime() != Regime::heavy) throw Error("rescale_heavy needs a heavy-tail sequence");
    HeavyRescaledPrice out;
    out.scale = std::sqrt((1.0 - seq.a(T)) / (seq.mu() * std::pow(T, seq.alpha())));

    // Exact integral of the piecewise-constant price, then sampled on the grid.
    out.price = sample_scaled(price, T, out.scale, points);
    out.integrated.times = out.price.times;
    out.integrated.values.assign(points, 0.0);
    double acc = 0.0;
    double last_t = 0.0;
    double level = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < points; ++i) {
        const double target = out.price.times[i] * T;
        while (k < price.size() && price.times[k] <= target) {
            acc += level * (price.times[k] - last_t);
            last_t = price.times[k];
            level = price.values[k++];
        }
        out.integrated.values[i] = out.scale * (acc + level * (target - last_t)) / T;
    }
    return out;
}

// --------------------------------------------------------------------------
// Replays

ReplaySamples replay(const EventStream& s, const KernelMatrixSpec& spec, const std::vector<double>& real_times,
                     const SimulationOptions& options) {
    if (!std::is_sorted(real_times.begin(), real_times.end())) throw Error("replay times must be sorted");
    IntensityTracker tracker(spec, s.params, options.power_law_mode, s.horizon, options.soe_terms);
    ReplaySamples out;
    out.times = real_times;
    out.counts.reserve(real_times.size());
    out.compensator.reserve(real_times.size());
    out.intensity.reserve(real_times.size());

    Vector2 counts{0.0, 0.0};
    Vector2 comp{0.0, 0.0};
    std::size_t k = 0;
    for (double t : real_times) {
        while (k < s.events.size() && s.events[k].time <= t) {
            const Event& e = s.events[k++];
            const Vector2 d = tracker.advance(e.time);
            comp[0] += d[0];
            comp[1] += d[1];
            tracker.add_event(e.mark);
            counts[static_cast<std::size_t>(index_of(e.mark))] += 1.0;
        }
        const Vector2 d = tracker.advance(std::max(t, tracker.time()));
        comp[0] += d[0];
        comp[1] += d[1];
        out.counts.push_back(counts);
        out.compensator.push_back(comp);
        out.intensity.push_back(tracker.intensity());
    }
    return out;
}

VectorPathGrid rescaled_intensity(const EventStream& s, const KernelMatrixSpec& spec, std::size_t points,
                                  const SimulationOptions& options) {
    const double T = s.horizon;
    VectorPathGrid out;
    out.times = uniform_times(points);
    std::vector<double> real(points);
    for (std::size_t i = 0; i < points; ++i) real[i] = out.times[i] * T;
    const ReplaySamples r = replay(s, spec, real, options);
    out.values.resize(points);
    for (std::size_t i = 0; i < points; ++i) out.values[i] = {r.intensity[i][0] / T, r.intensity[i][1] / T};
    return out;
}

HeavyIntensityPaths rescaled_intensity_heavy(const EventStream& s, const KernelMatrixSpec& spec,
                                             const AsymptoticSequence& seq, std::size_t points,
                                             const SimulationOptions& options) {
    if (seq.regime() != Regime::heavy) throw Error("heavy rescaling needs a heavy-tail sequence");
    const double T = s.horizon;
    const double f = (1.0 - s.params.a) / (std::pow(T, seq.alpha()) * seq.mu());
    const double zf = 1.0 / std::sqrt(f);

    HeavyIntensityPaths out;
    const auto times = uniform_times(points);
    std::vector<double> real(points);
    for (std::size_t i = 0; i < points; ++i) real[i] = times[i] * T;
    const ReplaySamples r = replay(s, spec, real, options);
    out.X.times = out.Lambda.times = out.Z.times = times;
    for (std::size_t i = 0; i < points; ++i) {
        const Vector2 x{f * r.counts[i][0], f * r.counts[i][1]};
        const Vector2 l{f * r.compensator[i][0], f * r.compensator[i][1]};
        out.X.values.push_back(x);
        out.Lambda.values.push_back(l);
        out.Z.values.push_back({zf * (x[0] - l[0]), zf * (x[1] - l[1])});
    }
    return out;
}

double vanishing_direction_sup(const VectorPathGrid& c) {
    double sup = 0.0;
    for (const auto& v : c.values) sup = std::max(sup, std::abs(v[0] - v[1]));
    return sup;
}

MartingalePaths compensator_martingale(const EventStream& s, const KernelMatrixSpec& spec,
                                       const SimulationOptions& options) {
    IntensityTracker tracker(spec, s.params, options.power_law_mode, s.horizon, options.soe_terms);
    MartingalePaths out;
    const std::size_t n = s.events.size() + 2;
    out.martingale.times.reserve(n);
    out.martingale.values.reserve(n);
    out.compensator.times.reserve(n);
    out.compensator.values.reserve(n);
    out.martingale.times.push_back(0.0);
    out.martingale.values.push_back({0.0, 0.0});
    out.compensator.times.push_back(0.0);
    out.compensator.values.push_back({0.0, 0.0});

    Vector2 counts{0.0, 0.0};
    Vector2 comp{0.0, 0.0};
    auto record = [&](double t) {
        out.martingale.times.push_back(t);
        out.martingale.values.push_back({counts[0] - comp[0], counts[1] - comp[1]});
        out.compensator.times.push_back(t);
        out.compensator.values.push_back(comp);
    };
    for (const auto& e : s.events) {
        const Vector2 d = tracker.advance(e.time);
        comp[0] += d[0];
        comp[1] += d[1];
        tracker.add_event(e.mark);
        counts[static_cast<std::size_t>(index_of(e.mark))] += 1.0;
        record(e.time);
    }
    const Vector2 d = tracker.advance(s.horizon);
    comp[0] += d[0];
    comp[1] += d[1];
    record(s.horizon);
    return out;
}

namespace {

// 6-point Gauss-Legendre on [-1, 1].
constexpr double kGlNodes[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                                0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
constexpr double kGlWeights[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                                  0.4679139345726910, 0.3607615730481386, 0.1713244923791704};

}  // namespace

EmbeddedBrownians embedded_brownians(const EventStream& s, const KernelMatrixSpec& spec,
                                     const SimulationOptions& options) {
    const double T = s.horizon;
    const double beta = spec.beta();
    IntensityTracker tracker(spec, s.params, options.power_law_mode, T, options.soe_terms);

    double max_rate = 1.0;
    if (spec.phi1().family() == KernelFamily::exponential_mixture) {
        for (const auto& c : spec.phi1().components()) max_rate = std::max(max_rate, c.rate);
        for (const auto& c : spec.phi2().components()) max_rate = std::max(max_rate, c.rate);
    }
    const double max_chunk = 0.5 / max_rate;

    // Compensator parts of W and B over [t0, t1] with no events inside.
    auto drift = [&](double t0, double t1) {
        double dw = 0.0;
        double db = 0.0;
        const int chunks = std::max(1, static_cast<int>(std::ceil((t1 - t0) / max_chunk)));
        const double len = (t1 - t0) / chunks;
        for (int c = 0; c < chunks; ++c) {
            const double mid = t0 + (c + 0.5) * len;
            for (int q = 0; q < 6; ++q) {
                const Vector2 l = tracker.intensity_at(mid + 0.5 * len * kGlNodes[q]);
                const double wq = 0.5 * len * kGlWeights[q];
                dw += wq * (l[0] - l[1]) / std::sqrt(T * (l[0] + l[1]));
                db += wq * (l[0] + beta * l[1]) / std::sqrt(T * (l[0] + beta * beta * l[1]));
            }
        }
        return std::pair{dw, db};
    };

    EmbeddedBrownians out;
    const std::size_t n = 2 * s.events.size() + 2;
    out.W.times.reserve(n);
    out.W.values.reserve(n);
    out.B.times.reserve(n);
    out.B.values.reserve(n);
    double w = 0.0;
    double b = 0.0;
    auto record = [&](double t) {
        out.W.times.push_back(t / T);
        out.W.values.push_back(w);
        out.B.times.push_back(t / T);
        out.B.values.push_back(b);
    };
    record(0.0);
    for (const auto& e : s.events) {
        const auto [dw, db] = drift(tracker.time(), e.time);
        w -= dw;
        b -= db;
        tracker.advance(e.time, false);
        record(e.time);
        const Vector2 l = tracker.intensity();
        if (e.mark == Mark::up) {
            w += 1.0 / std::sqrt(T * (l[0] + l[1]));
            b += 1.0 / std::sqrt(T * (l[0] + beta * beta * l[1]));
        } else {
            w -= 1.0 / std::sqrt(T * (l[0] + l[1]));
            b += beta / std::sqrt(T * (l[0] + beta * beta * l[1]));
        }
        tracker.add_event(e.mark);
        record(e.time);
    }
    const auto [dw, db] = drift(tracker.time(), T);
    w -= dw;
    b -= db;
    record(T);
    return out;
}

BracketEstimate jump_brackets(const EventStream& s, double beta) {
    const double T = s.horizon;
    BracketEstimate out;
    for (const auto& e : s.events) {
        const double nw = 1.0 / std::sqrt(T * (e.lambda_plus + e.lambda_minus));
        const double nb = 1.0 / std::sqrt(T * (e.lambda_plus + beta * beta * e.lambda_minus));
        const double jw = e.mark == Mark::up ? nw : -nw;
        const double jb = e.mark == Mark::up ? nb : beta * nb;
        out.wb += jw * jb;
        out.ww += jw * jw;
        out.bb += jb * jb;
    }
    return out;
}

void write_events_csv(std::ostream& os, const EventStream& s) {
    os << "time,mark,lambda_plus,lambda_minus\n" << std::setprecision(17);
    for (const auto& e : s.events) {
        os << e.time << ',' << sign_of(e.mark) << ',' << e.lambda_plus << ',' << e.lambda_minus << '\n';
    }
}

EventStream read_events_csv(std::istream& is, double horizon, ScaledParams params) {
    std::string line;
    if (!std::getline(is, line)) throw Error("empty event CSV");
    if (line.rfind("time,mark,lambda_plus,lambda_minus", 0) != 0) throw Error("unexpected event CSV header");
    EventStream s;
    s.horizon = horizon;
    s.params = params;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        double v[4];
        for (double& x : v) {
            if (!std::getline(ss, cell, ',')) throw Error("short event CSV line " + std::to_string(lineno));
            x = std::stod(cell);
        }
        if (v[1] != 1.0 && v[1] != -1.0) throw Error("event mark must be +1 or -1 on line " + std::to_string(lineno));
        s.events.push_back({v[0], v[1] > 0 ? Mark::up : Mark::down, v[2], v[3]});
    }
    check_stream(s);
    return s;
}

}  // namespace microvol
