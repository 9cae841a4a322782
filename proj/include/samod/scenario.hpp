#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "samod/instance.hpp"
#include "samod/types.hpp"

namespace samod {

struct FleetSpec {
    int vehicles = 1;                      // K
    double battery_max_kwh = 60.0;         // E_b_max
    double battery_initial_kwh = 30.0;     // E_b_0, also the end-of-day level
    double consumption_kwh_per_km = 0.12;  // E_con
    double charging_power_kw = 22.0;       // P_ch
    bool solar_enabled = true;
    bool allow_v2g = true;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

/// Piecewise-constant function of the time of day. Breakpoint k holds on
/// [time_k, time_{k+1}); the last one holds until midnight. The first
/// breakpoint must be at 0.
class StepFunction {
public:
    struct Breakpoint {
        Seconds time = 0;
        double value = 0.0;
    };

    StepFunction() = default;
    explicit StepFunction(std::vector<Breakpoint> points);

    const std::vector<Breakpoint>& breakpoints() const noexcept { return points_; }
    double at(Seconds t) const;
    /// Integral over [a, b] in value-seconds; requires 0 <= a <= b <= 86400.
    double integral(Seconds a, Seconds b) const;
    double min_over(Seconds a, Seconds b) const;
    double max_over(Seconds a, Seconds b) const;

private:
    std::size_t segment(Seconds t) const;
    Seconds segment_end(std::size_t k) const;

    std::vector<Breakpoint> points_;
};

/// Electricity price in AUD/kWh. Prices may be negative.
class PriceSeries {
public:
    PriceSeries() = default;
    explicit PriceSeries(std::vector<StepFunction::Breakpoint> points) : steps_(std::move(points)) {}

    const StepFunction& steps() const noexcept { return steps_; }
    double at(Seconds t) const { return steps_.at(t); }
    /// Time-weighted mean over [a, b]; the instantaneous price when a == b.
    double average(Seconds a, Seconds b) const;

    /// Synthetic solar-heavy market: cheap at night and around midday,
    /// expensive around 07:00 and 18:00.
    static PriceSeries duck_curve();
    static PriceSeries constant(double price) { return PriceSeries({{0, price}}); }

private:
    StepFunction steps_;
};

/// Rooftop harvest power per vehicle (kW) versus time of day.
class SolarProfile {
public:
    SolarProfile() = default;
    /// Throws ConfigError on negative power.
    explicit SolarProfile(std::vector<StepFunction::Breakpoint> points);

    /// Symmetric trapezoid between sunrise and sunset with linear ramps each
    /// lasting `ramp_fraction` of daylight, sampled as exact bin averages on
    /// `step`-second bins and scaled so the day integrates to `daily_kwh`.
    static SolarProfile trapezoid(Seconds sunrise, Seconds sunset, double daily_kwh,
                                  double ramp_fraction = 1.0 / 3.0, Seconds step = 300);
    static SolarProfile none() { return SolarProfile({{0, 0.0}}); }

    const StepFunction& steps() const noexcept { return steps_; }
    double power_kw(Seconds t) const { return steps_.at(t); }
    /// Harvested energy over [a, b] in kWh.
    double energy(Seconds a, Seconds b) const { return steps_.integral(a, b) / 3600.0; }
    double daily_total() const { return energy(0, kSecondsPerDay); }

private:
    StepFunction steps_;
};

struct FareModel {
    double base = 2.5;      // AUD
    double per_km = 1.45;   // AUD/km
    double per_min = 0.40;  // AUD/min

    void validate() const;
};

/// Affine mass model for consumption versus pack size.
struct BatteryMassModel {
    double specific_mass_kg_per_kwh = 5.0;  // rho_b
    double mass_sensitivity_per_kg = 5e-5;  // kappa_m
};

/// Everything exogenous to one optimization run.
struct Scenario {
    int id = 0;
    FleetSpec fleet;
    PriceSeries prices;
    SolarProfile solar;
    FareModel fares;
    std::vector<TravelRequest> requests;
};

/// Mean price over the transition window [t_i + t_fp(i, i), t_j].
double average_price(const PriceSeries& prices, const DagInstance& inst, int i, int j);

/// Solar energy harvested over the transition window; zero when the fleet
/// has no rooftops.
double solar_energy(const SolarProfile& profile, const FleetSpec& fleet, const DagInstance& inst,
                    int i, int j);

/// Revenue for serving node i; zero for the depot pseudo-requests.
double fare(const DagInstance& inst, int i, const FareModel& model);

/// Consumption for pack size `e_b` given a reference vehicle. Throws
/// ConfigError on non-positive inputs or result.
double consumption_for_battery(double e_con_ref, double e_b_ref, double e_b,
                               const BatteryMassModel& mass = {});

/// Draws `n_samples` request subsets of size `n_req` served by `n_veh`
/// vehicles. Draws are disjoint when n_samples * n_req <= I (one shuffle cut
/// into blocks) and independent shuffles otherwise. Each sample keeps time
/// order and is renumbered 1..n_req. Deterministic in `seed`.
std::vector<Scenario> sample_scenarios(const Scenario& base, int n_req, int n_veh, int n_samples,
                                       std::uint64_t seed);

/// Fleet and fare settings plus the study knobs, read from one key-value
/// JSON document (keys documented in docs/data-formats.md).
struct RunConfig {
    FleetSpec fleet;
    FareModel fares;
    BatteryMassModel mass;
    double reference_battery_kwh = 60.0;
    double reference_consumption_kwh_per_km = 0.12;
    std::map<double, double> charging_power_by_battery{{20.0, 8.0}, {40.0, 12.0}, {60.0, 22.0}};
    std::string depot_node;
    Seconds day_start = 0;
    Seconds day_end = kSecondsPerDay;

    /// Fleet variant for another pack size: consumption from the mass
    /// model, charging power from the map, initial charge at the same
    /// state of charge. Throws ConfigError for unmapped sizes.
    FleetSpec fleet_for_battery(double battery_kwh) const;
};

RunConfig load_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);
/// Merges keys of several documents (later files win) before parsing.
RunConfig load_run_config(std::span<const std::filesystem::path> paths);

PriceSeries load_price_series(std::istream& in);
PriceSeries load_price_series(const std::filesystem::path& path);

/// CSV rows (time_s, power_kw) or a JSON block {sunrise_s, sunset_s, daily_kwh}.
SolarProfile load_solar_profile(const std::filesystem::path& path);

}  // namespace samod
