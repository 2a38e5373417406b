#pragma once

// Exact simulation of the bid/ask Hawkes price model and the statistics that
// the scaling limits are read from: rescaled prices and intensities,
// compensated martingales and the embedded Brownian motions W^T and B^T.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "microvol/kernels.hpp"
#include "microvol/path.hpp"
#include "microvol/rng.hpp"

namespace microvol {

enum class Mark : std::int8_t { up = 1, down = -1 };

constexpr int index_of(Mark m) noexcept { return m == Mark::up ? 0 : 1; }
constexpr int sign_of(Mark m) noexcept { return static_cast<int>(m); }

struct Event {
    double time = 0.0;
    Mark mark = Mark::up;
    /// Intensities immediately before the jump.
    double lambda_plus = 0.0;
    double lambda_minus = 0.0;
};

struct EventStream {
    double horizon = 0.0;
    ScaledParams params;
    std::vector<Event> events;
    SeedRecord seed;

    std::size_t count(Mark m) const;
};

/// Checks strictly increasing times in (0, T] and intensities >= mu_T.
void check_stream(const EventStream& s);

/// Sum-of-exponentials approximation alpha (1 + x)^-(1 + alpha) ~ sum_i c_i exp(-r_i x)
/// on [0, horizon]; `coefficient` holds the amplitude c_i >= 0.
struct SoeFit {
    double alpha = 0.0;
    double horizon = 0.0;
    std::vector<ExpComponent> terms;
    /// sup |approximation - kernel| over a dense check grid of [0, horizon].
    double sup_error = 0.0;
    bool least_squares_refined = false;
};

SoeFit fit_power_law_soe(double alpha, double horizon, std::size_t terms = 48);

enum class PowerLawMode { direct, sum_of_exponentials };

struct SimulationOptions {
    PowerLawMode power_law_mode = PowerLawMode::direct;
    std::size_t soe_terms = 48;
    /// Rejects runs whose estimate 2 mu_T T / (1 - a_T) exceeds this.
    double max_expected_events = 2e7;
};

/// Intensity of the two-mark process under a fixed (a_T, mu_T), evolved forward
/// in time. Exponential kernels (and the sum-of-exponentials approximation) use
/// a Markov state; power laws in direct mode sum over the stored history.
class IntensityTracker {
public:
    IntensityTracker(const KernelMatrixSpec& spec, ScaledParams params,
                     PowerLawMode mode = PowerLawMode::direct, double horizon = 0.0,
                     std::size_t soe_terms = 48);
    ~IntensityTracker();
    IntensityTracker(IntensityTracker&&) noexcept;
    IntensityTracker& operator=(IntensityTracker&&) noexcept;

    double time() const noexcept;
    /// Right-continuous intensity at time().
    Vector2 intensity() const;
    /// Intensity at s >= time() assuming no events in between.
    Vector2 intensity_at(double s) const;
    /// Moves to t >= time(); returns the integral of the intensity over the step
    /// when `integrate` is set, zeros otherwise.
    Vector2 advance(double t, bool integrate = true);
    void add_event(Mark m);

    /// Sup error of the kernel approximation in use (zero when exact).
    double approximation_error() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

EventStream simulate(const KernelMatrixSpec& spec, ScaledParams params, double T, const SeedRecord& seed,
                     const SimulationOptions& options = {});
EventStream simulate(const KernelMatrixSpec& spec, const AsymptoticSequence& seq, double T,
                     const SeedRecord& seed, const SimulationOptions& options = {});
EventStream simulate(const KernelMatrixSpec& spec, const AsymptoticSequence& seq, double T, std::uint64_t seed,
                     const SimulationOptions& options = {});

/// Expected number of events 2 mu_T T / (1 - a_T) used by the budget guard.
double expected_event_bound(ScaledParams params, double T);

/// P_t = N_t^+ - N_t^-, sampled at event times (P = 0 before the first event).
PathGrid microscopic_price(const EventStream& s);

/// Number of points of rescaled paths on [0, 1].
inline constexpr std::size_t kRescaledPoints = 1000;

/// t -> P_{tT} / T on the uniform grid.
PathGrid rescale_light(const PathGrid& price, double T, std::size_t points = kRescaledPoints);

struct HeavyRescaledPrice {
    double scale = 0.0;   // sqrt((1 - a_T) / (mu T^alpha))
    PathGrid price;       // scale * P_{tT}
    PathGrid integrated;  // int_0^t scale * P_{sT} ds
};

HeavyRescaledPrice rescale_heavy(const PathGrid& price, double T, const AsymptoticSequence& seq,
                                 std::size_t points = kRescaledPoints);

/// Counts, integrated intensity and intensity of both marks at the given real times.
struct ReplaySamples {
    std::vector<double> times;
    std::vector<Vector2> counts;
    std::vector<Vector2> compensator;
    std::vector<Vector2> intensity;
};

ReplaySamples replay(const EventStream& s, const KernelMatrixSpec& spec, const std::vector<double>& real_times,
                     const SimulationOptions& options = {});

/// C^T_t = lambda_{tT} / T on the uniform grid (light regime normalization).
VectorPathGrid rescaled_intensity(const EventStream& s, const KernelMatrixSpec& spec,
                                  std::size_t points = kRescaledPoints, const SimulationOptions& options = {});

struct HeavyIntensityPaths {
    VectorPathGrid X;       // (1 - a_T) / (T^alpha mu) N_{tT}
    VectorPathGrid Lambda;  // (1 - a_T) / (T^alpha mu) int_0^{tT} lambda
    VectorPathGrid Z;       // sqrt(T^alpha mu / (1 - a_T)) (X - Lambda)
};

HeavyIntensityPaths rescaled_intensity_heavy(const EventStream& s, const KernelMatrixSpec& spec,
                                             const AsymptoticSequence& seq, std::size_t points = kRescaledPoints,
                                             const SimulationOptions& options = {});

/// sup over the grid of |v2 . C^T| = |C^+ - C^-|.
double vanishing_direction_sup(const VectorPathGrid& c);

struct MartingalePaths {
    /// Sampled at 0, after every event, and at the horizon (real time).
    VectorPathGrid martingale;
    VectorPathGrid compensator;
};

MartingalePaths compensator_martingale(const EventStream& s, const KernelMatrixSpec& spec,
                                       const SimulationOptions& options = {});

struct EmbeddedBrownians {
    /// Rescaled time in [0, 1]. Every event contributes a pre-jump and a post-jump
    /// sample with the same time stamp, so increments separate drift from jumps.
    PathGrid W;
    PathGrid B;
};

/// W^T from dM^+ - dM^- normalized by sqrt(T (l+ + l-)); B^T from v1.dM normalized
/// by sqrt(T (l+ + beta^2 l-)). Drift parts use Gauss-Legendre quadrature between events.
EmbeddedBrownians embedded_brownians(const EventStream& s, const KernelMatrixSpec& spec,
                                     const SimulationOptions& options = {});

/// Jump part of [W^T, B^T]_1, [W^T, W^T]_1 and [B^T, B^T]_1 from the recorded intensities.
struct BracketEstimate {
    double wb = 0.0;
    double ww = 0.0;
    double bb = 0.0;
};

BracketEstimate jump_brackets(const EventStream& s, double beta);

/// Events as CSV `time,mark,lambda_plus,lambda_minus` (mark is +1 or -1).
void write_events_csv(std::ostream& os, const EventStream& s);
/// The CSV carries no run metadata; horizon and (a_T, mu_T) come from the manifest.
EventStream read_events_csv(std::istream& is, double horizon, ScaledParams params);

}  // namespace microvol
