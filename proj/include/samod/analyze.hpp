#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "samod/instance.hpp"
#include "samod/scenario.hpp"
#include "samod/solution.hpp"

namespace samod {

/// One violated constraint family with a human-readable location.
struct Violation {
    std::string family;
    std::string detail;
};

/// Constraint families reported by validate().
namespace family {
inline constexpr std::string_view time_window = "time_window";
inline constexpr std::string_view station_window = "station_window";
inline constexpr std::string_view charge_bound = "charge_bound";
inline constexpr std::string_view serve_once = "serve_once";
inline constexpr std::string_view depot_degree = "depot_degree";
inline constexpr std::string_view continuity = "continuity";
inline constexpr std::string_view station_visit = "station_visit";
inline constexpr std::string_view energy_balance = "energy_balance";
inline constexpr std::string_view spill_bound = "spill_bound";
inline constexpr std::string_view energy_bounds = "energy_bounds";
inline constexpr std::string_view energy_boundary = "energy_boundary";
inline constexpr std::string_view served_flag = "served_flag";
inline constexpr std::string_view objective = "objective";
}  // namespace family

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool has(std::string_view fam) const;
    /// Distinct family names in first-seen order.
    std::vector<std::string> families() const;
};

/// Replays the solution against the instance alone: rebuilds each vehicle
/// chain from x, recomputes energies from E_b_0 forward and compares them
/// with the reported ones. Never consults a MilpModel.
ValidationReport validate(const Solution& solution, const DagInstance& inst, const Scenario& scenario,
                          double tol = 1e-6);

/// Bin-average powers over the day. Charging and discharging run at P_ch
/// from arrival at the station until |C| is exchanged. Solar is the
/// harvest actually stored (gross harvest scaled by 1 - W / C_sol).
/// Consumption accrues uniformly over each driven segment.
struct PowerProfile {
    Seconds bin_width = 300;
    std::vector<double> grid_charge_kw;
    std::vector<double> v2g_kw;
    std::vector<double> solar_kw;
    std::vector<double> cum_consumption_kwh;  // consumed by the end of the bin

    std::size_t size() const noexcept { return grid_charge_kw.size(); }
    Seconds bin_start(std::size_t b) const noexcept { return static_cast<Seconds>(b) * bin_width; }
    /// Zero profile covering the whole day.
    static PowerProfile zeros(Seconds bin_width = 300);
};

PowerProfile power_profile(const Solution& solution, const DagInstance& inst, const Scenario& scenario,
                           Seconds bin_width = 300);

/// Breakdown recomputed from the signed exchanges and window prices.
CostBreakdown cost_breakdown(const Solution& solution, const DagInstance& inst, const Scenario& scenario);

/// Volume-weighted mean purchase and sale prices of a solution (0 when
/// there is no volume on that side).
struct TradePrices {
    double bought_kwh = 0.0;
    double sold_kwh = 0.0;
    double mean_buy = 0.0;
    double mean_sell = 0.0;
};
TradePrices trade_prices(const Solution& solution, const DagInstance& inst, const Scenario& scenario);

struct SampleSummary {
    PowerProfile profile;
    CostBreakdown breakdown;
    int vehicles = 0;
};

struct FleetSummary {
    PowerProfile profile;
    CostBreakdown breakdown;
    double scale = 0.0;  // fleet_size / sum of sample vehicles
};

/// Sums samples bin-wise and scales to `fleet_size` vehicles. Throws Error
/// when bin widths or lengths differ or there are no vehicles.
FleetSummary aggregate_samples(std::span<const SampleSummary> samples, int fleet_size);

struct ReportMeta {
    std::string tag;  // file stem suffix, e.g. from report_tag()
    SolveStatus status = SolveStatus::optimal;
    double objective = 0.0;
    double bound = 0.0;
    long nodes = 0;
};

std::string report_tag(int scenario_id, std::uint64_t seed);

void write_profile_csv(std::ostream& out, const PowerProfile& profile);
void write_summary_json(std::ostream& out, const CostBreakdown& breakdown, const ReportMeta& meta);

/// Writes profile_<tag>.csv and summary_<tag>.json into `dir` (created if
/// missing). Throws Error when the directory or files cannot be written.
void emit_report(const PowerProfile& profile, const CostBreakdown& breakdown, const ReportMeta& meta,
                 const std::filesystem::path& dir);

}  // namespace samod
