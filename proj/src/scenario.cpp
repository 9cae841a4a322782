#include "samod/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "csv.hpp"
#include "json_util.hpp"

namespace samod {

using nlohmann::json;

void FleetSpec::validate() const
{
    if (vehicles < 1)
        throw ConfigError("fleet needs at least one vehicle (K >= 1)");
    if (!(battery_max_kwh > 0.0))
        throw ConfigError("E_b_max must be positive");
    if (battery_initial_kwh < 0.0 || battery_initial_kwh > battery_max_kwh)
        throw ConfigError("E_b_0 must lie in [0, E_b_max]");
    if (!(consumption_kwh_per_km > 0.0))
        throw ConfigError("E_con must be positive");
    if (!(charging_power_kw > 0.0))
        throw ConfigError("P_ch must be positive");
}

void FareModel::validate() const
{
    if (base < 0.0 || per_km < 0.0 || per_min < 0.0)
        throw ConfigError("fare components must be non-negative");
}

StepFunction::StepFunction(std::vector<Breakpoint> points) : points_(std::move(points))
{
    if (points_.empty() || points_.front().time != 0)
        throw ConfigError("step function must start at time 0");
    for (std::size_t k = 0; k < points_.size(); ++k) {
        if (!std::isfinite(points_[k].value))
            throw ConfigError("step function values must be finite");
        if (points_[k].time >= kSecondsPerDay)
            throw ConfigError("breakpoint at or after 86400 s");
        if (k > 0 && points_[k].time <= points_[k - 1].time)
            throw ConfigError("breakpoints must be strictly increasing in time");
    }
}

std::size_t StepFunction::segment(Seconds t) const
{
    auto it = std::upper_bound(points_.begin(), points_.end(), t,
                               [](Seconds x, const Breakpoint& p) { return x < p.time; });
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - points_.begin()) - 1));
}

Seconds StepFunction::segment_end(std::size_t k) const
{
    return k + 1 < points_.size() ? points_[k + 1].time : kSecondsPerDay;
}

double StepFunction::at(Seconds t) const
{
    return points_.at(segment(std::min(t, kSecondsPerDay - 1))).value;
}

double StepFunction::integral(Seconds a, Seconds b) const
{
    if (a < 0 || b > kSecondsPerDay || a > b)
        throw std::out_of_range("StepFunction::integral: bad interval");
    double total = 0.0;
    for (std::size_t k = segment(a); k < points_.size() && points_[k].time < b; ++k) {
        const Seconds lo = std::max(a, points_[k].time);
        const Seconds hi = std::min(b, segment_end(k));
        if (hi > lo)
            total += points_[k].value * static_cast<double>(hi - lo);
    }
    return total;
}

double StepFunction::min_over(Seconds a, Seconds b) const
{
    double m = at(a);
    for (std::size_t k = segment(a); k < points_.size() && points_[k].time < b; ++k)
        m = std::min(m, points_[k].value);
    return m;
}

double StepFunction::max_over(Seconds a, Seconds b) const
{
    double m = at(a);
    for (std::size_t k = segment(a); k < points_.size() && points_[k].time < b; ++k)
        m = std::max(m, points_[k].value);
    return m;
}

double PriceSeries::average(Seconds a, Seconds b) const
{
    if (a == b)
        return at(a);
    return steps_.integral(a, b) / static_cast<double>(b - a);
}

PriceSeries PriceSeries::duck_curve()
{
    constexpr Seconds h = 3600;
    return PriceSeries({
        {0 * h, 0.06},   // night trough
        {5 * h, 0.15},
        {6 * h, 0.45},   // morning peak
        {9 * h, 0.15},
        {10 * h, 0.02},  // midday solar trough
        {15 * h, 0.15},
        {17 * h, 0.60},  // evening peak
        {20 * h, 0.12},
    });
}

SolarProfile::SolarProfile(std::vector<StepFunction::Breakpoint> points) : steps_(std::move(points))
{
    for (const auto& p : steps_.breakpoints())
        if (p.value < 0.0)
            throw ConfigError("solar harvest power must be non-negative");
}

SolarProfile SolarProfile::trapezoid(Seconds sunrise, Seconds sunset, double daily_kwh,
                                     double ramp_fraction, Seconds step)
{
    if (!(sunrise >= 0 && sunrise < sunset && sunset <= kSecondsPerDay))
        throw ConfigError("solar profile needs 0 <= sunrise < sunset <= 86400");
    if (!(ramp_fraction > 0.0 && ramp_fraction <= 0.5))
        throw ConfigError("solar ramp fraction must lie in (0, 0.5]");
    if (daily_kwh < 0.0)
        throw ConfigError("daily solar energy must be non-negative");
    if (step <= 0)
        throw ConfigError("solar step must be positive");

    const double sr = static_cast<double>(sunrise);
    const double ss = static_cast<double>(sunset);
    const double daylight = ss - sr;
    const double ramp = daylight * ramp_fraction;
    // Antiderivative of the unit-peak trapezoid.
    auto area = [&](double t) {
        if (t <= sr)
            return 0.0;
        if (t <= sr + ramp)
            return (t - sr) * (t - sr) / (2.0 * ramp);
        if (t <= ss - ramp)
            return ramp / 2.0 + (t - sr - ramp);
        if (t <= ss)
            return daylight - ramp - (ss - t) * (ss - t) / (2.0 * ramp);
        return daylight - ramp;
    };
    const double peak_kw = daily_kwh * 3600.0 / (daylight - ramp);

    std::vector<StepFunction::Breakpoint> points;
    for (Seconds a = 0; a < kSecondsPerDay; a += step) {
        const Seconds b = std::min(a + step, kSecondsPerDay);
        const double kw = peak_kw * (area(static_cast<double>(b)) - area(static_cast<double>(a))) /
                          static_cast<double>(b - a);
        if (points.empty() || points.back().value != kw)
            points.push_back({a, kw});
    }
    return SolarProfile(std::move(points));
}

double average_price(const PriceSeries& prices, const DagInstance& inst, int i, int j)
{
    return prices.average(inst.release_time(i), inst.start_time(j));
}

double solar_energy(const SolarProfile& profile, const FleetSpec& fleet, const DagInstance& inst,
                    int i, int j)
{
    if (!fleet.solar_enabled)
        return 0.0;
    const Seconds a = inst.release_time(i);
    const Seconds b = inst.start_time(j);
    if (b <= a)
        return 0.0;
    return profile.energy(a, b);
}

double fare(const DagInstance& inst, int i, const FareModel& model)
{
    if (!inst.is_request(i))
        return 0.0;
    return model.base + model.per_km * (inst.d_fp(i, i) / 1000.0) +
           model.per_min * (static_cast<double>(inst.t_fp(i, i)) / 60.0);
}

double consumption_for_battery(double e_con_ref, double e_b_ref, double e_b,
                               const BatteryMassModel& mass)
{
    if (!(e_b > 0.0) || !(e_b_ref > 0.0))
        throw ConfigError("battery sizes must be positive");
    const double e_con = e_con_ref * (1.0 + mass.mass_sensitivity_per_kg *
                                                mass.specific_mass_kg_per_kwh * (e_b - e_b_ref));
    if (!(e_con > 0.0))
        throw ConfigError("consumption model yields non-positive consumption for " +
                          std::to_string(e_b) + " kWh");
    return e_con;
}

namespace {

// Bounded draw on top of the standard engine; std::uniform_int_distribution
// is implementation-defined and would break the pinned sample fixtures.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n)
{
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
    std::uint64_t v = 0;
    do {
        v = rng();
    } while (v >= limit);
    return v % n;
}

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng)
{
    for (std::size_t k = v.size(); k > 1; --k)
        std::swap(v[k - 1], v[uniform_below(rng, k)]);
}

}  // namespace

std::vector<Scenario> sample_scenarios(const Scenario& base, int n_req, int n_veh, int n_samples,
                                       std::uint64_t seed)
{
    const auto total = base.requests.size();
    if (n_req < 0 || static_cast<std::size_t>(n_req) > total)
        throw ConfigError("cannot draw " + std::to_string(n_req) + " requests from " +
                          std::to_string(total));
    if (n_veh < 1 || n_samples < 0)
        throw ConfigError("samples need n_veh >= 1 and n_samples >= 0");

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(total);
    const bool disjoint = static_cast<std::size_t>(n_samples) * static_cast<std::size_t>(n_req) <= total;
    if (disjoint) {
        std::iota(order.begin(), order.end(), 0);
        shuffle(order, rng);
    }

    std::vector<Scenario> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    for (int s = 0; s < n_samples; ++s) {
        std::vector<std::size_t> pick;
        if (disjoint) {
            pick.assign(order.begin() + s * n_req, order.begin() + (s + 1) * n_req);
        } else {
            std::iota(order.begin(), order.end(), 0);
            shuffle(order, rng);
            pick.assign(order.begin(), order.begin() + n_req);
        }
        std::sort(pick.begin(), pick.end());

        Scenario sc = base;
        sc.id = s;
        sc.fleet.vehicles = n_veh;
        sc.requests.clear();
        for (std::size_t idx : pick)
            sc.requests.push_back(base.requests[idx]);
        for (std::size_t k = 0; k < sc.requests.size(); ++k)
            sc.requests[k].id = static_cast<int>(k + 1);
        out.push_back(std::move(sc));
    }
    return out;
}

FleetSpec RunConfig::fleet_for_battery(double battery_kwh) const
{
    auto it = std::find_if(charging_power_by_battery.begin(), charging_power_by_battery.end(),
                           [&](const auto& kv) { return std::abs(kv.first - battery_kwh) < 1e-9; });
    if (it == charging_power_by_battery.end()) {
        std::ostringstream msg;
        msg << "no charging power configured for a " << battery_kwh << " kWh battery; map is {";
        for (auto kv = charging_power_by_battery.begin(); kv != charging_power_by_battery.end(); ++kv)
            msg << (kv == charging_power_by_battery.begin() ? "" : ", ") << kv->first << " kWh -> "
                << kv->second << " kW";
        msg << "}";
        throw ConfigError(msg.str());
    }
    FleetSpec f = fleet;
    f.battery_max_kwh = battery_kwh;
    f.battery_initial_kwh = fleet.battery_initial_kwh / fleet.battery_max_kwh * battery_kwh;
    f.consumption_kwh_per_km = consumption_for_battery(reference_consumption_kwh_per_km,
                                                       reference_battery_kwh, battery_kwh, mass);
    f.charging_power_kw = it->second;
    f.validate();
    return f;
}

namespace {

RunConfig run_config_from(const json& doc)
{
    if (!doc.is_object())
        throw ParseError("configuration must be a JSON object", 1);
    RunConfig cfg;
    FleetSpec& f = cfg.fleet;
    if (doc.contains("K")) {
        if (!doc.at("K").is_number_integer())
            throw ParseError("field \"K\" must be an integer", 0, "K");
        f.vehicles = doc.at("K").get<int>();
    }
    f.battery_max_kwh = detail::number_or(doc, "E_b_max", "", f.battery_max_kwh);
    f.battery_initial_kwh = detail::number_or(doc, "E_b_0", "", f.battery_max_kwh / 2.0);
    f.consumption_kwh_per_km = detail::number_or(doc, "E_con", "", f.consumption_kwh_per_km);
    f.charging_power_kw = detail::number_or(doc, "P_ch", "", f.charging_power_kw);
    f.solar_enabled = doc.value("solar_enabled", f.solar_enabled);
    f.allow_v2g = doc.value("allow_v2g", f.allow_v2g);
    f.validate();

    cfg.fares.base = detail::number_or(doc, "fare_base", "", cfg.fares.base);
    cfg.fares.per_km = detail::number_or(doc, "fare_per_km", "", cfg.fares.per_km);
    cfg.fares.per_min = detail::number_or(doc, "fare_per_min", "", cfg.fares.per_min);
    cfg.fares.validate();

    cfg.mass.specific_mass_kg_per_kwh = detail::number_or(doc, "rho_b", "", cfg.mass.specific_mass_kg_per_kwh);
    cfg.mass.mass_sensitivity_per_kg = detail::number_or(doc, "kappa_m", "", cfg.mass.mass_sensitivity_per_kg);
    cfg.reference_battery_kwh = detail::number_or(doc, "E_b_ref", "", f.battery_max_kwh);
    cfg.reference_consumption_kwh_per_km = detail::number_or(doc, "E_con_ref", "", f.consumption_kwh_per_km);

    if (doc.contains("P_ch_by_battery")) {
        const json& map = doc.at("P_ch_by_battery");
        if (!map.is_object())
            throw ParseError("\"P_ch_by_battery\" must be an object", 0, "P_ch_by_battery");
        cfg.charging_power_by_battery.clear();
        for (auto it = map.begin(); it != map.end(); ++it) {
            const std::string field = "P_ch_by_battery." + it.key();
            const double size = detail::parse_double(it.key(), 0, field);
            if (!it.value().is_number())
                throw ParseError("field \"" + field + "\" must be a number", 0, field);
            cfg.charging_power_by_battery[size] = it.value().get<double>();
        }
    }
    if (doc.contains("depot")) {
        const json& d = doc.at("depot");
        cfg.depot_node = d.is_string() ? d.get<std::string>() : std::to_string(d.get<std::int64_t>());
    }
    cfg.day_start = static_cast<Seconds>(detail::number_or(doc, "day_start_s", "", 0.0));
    cfg.day_end = static_cast<Seconds>(detail::number_or(doc, "day_end_s", "", static_cast<double>(kSecondsPerDay)));
    if (cfg.day_start < 0 || cfg.day_end > kSecondsPerDay || cfg.day_start >= cfg.day_end)
        throw ConfigError("day window must satisfy 0 <= day_start_s < day_end_s <= 86400");
    return cfg;
}

}  // namespace

RunConfig load_run_config(std::istream& in)
{
    return run_config_from(detail::parse_json(in));
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open configuration file " + path.string());
    return load_run_config(in);
}

RunConfig load_run_config(std::span<const std::filesystem::path> paths)
{
    json merged = json::object();
    for (const auto& p : paths) {
        std::ifstream in(p);
        if (!in)
            throw Error("cannot open configuration file " + p.string());
        json doc = detail::parse_json(in);
        if (!doc.is_object())
            throw ParseError(p.string() + ": configuration must be a JSON object", 1);
        merged.update(doc);
    }
    return run_config_from(merged);
}

PriceSeries load_price_series(std::istream& in)
{
    const auto table = detail::read_csv(in);
    const std::size_t col_t = table.column("time_s");
    const std::size_t col_p = table.column("price_aud_per_kwh");
    std::vector<StepFunction::Breakpoint> points;
    for (const auto& row : table.rows)
        points.push_back({detail::parse_int(row.cells[col_t], row.line, "time_s"),
                          detail::parse_double(row.cells[col_p], row.line, "price_aud_per_kwh")});
    return PriceSeries(std::move(points));
}

PriceSeries load_price_series(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open price file " + path.string());
    return load_price_series(in);
}

SolarProfile load_solar_profile(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open solar file " + path.string());
    if (path.extension() == ".json") {
        const json doc = detail::parse_json(in);
        return SolarProfile::trapezoid(static_cast<Seconds>(detail::number(doc, "sunrise_s", "")),
                                       static_cast<Seconds>(detail::number(doc, "sunset_s", "")),
                                       detail::number(doc, "daily_kwh", ""),
                                       detail::number_or(doc, "ramp_fraction", "", 1.0 / 3.0),
                                       static_cast<Seconds>(detail::number_or(doc, "step_s", "", 300.0)));
    }
    const auto table = detail::read_csv(in);
    const std::size_t col_t = table.column("time_s");
    const std::size_t col_p = table.column("power_kw");
    std::vector<StepFunction::Breakpoint> points;
    for (const auto& row : table.rows)
        points.push_back({detail::parse_int(row.cells[col_t], row.line, "time_s"),
                          detail::parse_double(row.cells[col_p], row.line, "power_kw")});
    return SolarProfile(std::move(points));
}

}  // namespace samod
