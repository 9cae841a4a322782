#include "samod/cli.hpp"

#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <omp.h>

#include "json_util.hpp"
#include "samod/analyze.hpp"

namespace samod::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::vector<fs::path> RunManifest::inputs() const
{
    std::vector<fs::path> out{network, requests, prices, fleet};
    if (solar)
        out.push_back(*solar);
    if (fare)
        out.push_back(*fare);
    return out;
}

namespace {

fs::path resolve(const fs::path& base, const nlohmann::json& v, const std::string& field)
{
    if (!v.is_string())
        throw ParseError("manifest field \"" + field + "\" must be a path string", 0, field);
    fs::path p = v.get<std::string>();
    return (p.is_absolute() ? p : base / p).lexically_normal();
}

int integer(const nlohmann::json& obj, const char* key, const std::string& where, int fallback)
{
    if (!obj.contains(key))
        return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer())
        throw ParseError("manifest field \"" + detail::join_field(where, key) + "\" must be an integer", 0,
                         detail::join_field(where, key));
    return v.get<int>();
}

const char* rule_name(BranchRule r)
{
    return r == BranchRule::pseudo_cost ? "pseudo_cost" : "most_fractional";
}

}  // namespace

RunManifest load_manifest(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open manifest " + path.string());
    const nlohmann::json doc = detail::parse_json(in);
    if (!doc.is_object())
        throw ParseError("manifest must be a JSON object", 1);
    const fs::path base = path.parent_path();
    RunManifest m;
    m.network = resolve(base, detail::require(doc, "network", ""), "network");
    m.requests = resolve(base, detail::require(doc, "requests", ""), "requests");
    m.prices = resolve(base, detail::require(doc, "prices", ""), "prices");
    m.fleet = resolve(base, detail::require(doc, "fleet", ""), "fleet");
    if (doc.contains("solar"))
        m.solar = resolve(base, doc.at("solar"), "solar");
    if (doc.contains("fare"))
        m.fare = resolve(base, doc.at("fare"), "fare");
    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_unsigned())
            throw ParseError("manifest field \"seed\" must be a non-negative integer", 0, "seed");
        m.seed = doc.at("seed").get<std::uint64_t>();
    }
    if (doc.contains("samples")) {
        const auto& s = doc.at("samples");
        m.requests_per_sample = integer(s, "n_req", "samples", m.requests_per_sample);
        m.vehicles_per_sample = integer(s, "n_veh", "samples", m.vehicles_per_sample);
        m.samples = integer(s, "n_samples", "samples", m.samples);
    }
    if (doc.contains("solver")) {
        const auto& s = doc.at("solver");
        m.solver.abs_gap = detail::number_or(s, "abs_gap", "solver", m.solver.abs_gap);
        if (s.contains("time_limit_s"))
            m.solver.time_limit_s = detail::number(s, "time_limit_s", "solver");
        if (s.contains("node_limit"))
            m.solver.node_limit = integer(s, "node_limit", "solver", 0);
        if (s.contains("branch_rule")) {
            const std::string r = s.at("branch_rule").get<std::string>();
            if (r == "most_fractional")
                m.solver.branch = BranchRule::most_fractional;
            else if (r == "pseudo_cost")
                m.solver.branch = BranchRule::pseudo_cost;
            else
                throw ParseError("unknown branch_rule \"" + r + "\"", 0, "solver.branch_rule");
        }
    }
    if (doc.contains("output"))
        m.output = resolve(base, doc.at("output"), "output");
    if (doc.contains("battery_sizes"))
        m.battery_sizes = doc.at("battery_sizes").get<std::vector<double>>();
    return m;
}

void write_manifest(std::ostream& out, const RunManifest& m)
{
    json doc;
    doc["network"] = m.network.string();
    doc["requests"] = m.requests.string();
    doc["prices"] = m.prices.string();
    if (m.solar)
        doc["solar"] = m.solar->string();
    doc["fleet"] = m.fleet.string();
    if (m.fare)
        doc["fare"] = m.fare->string();
    doc["seed"] = m.seed;
    doc["samples"] = {{"n_req", m.requests_per_sample}, {"n_veh", m.vehicles_per_sample}, {"n_samples", m.samples}};
    json solver;
    solver["abs_gap"] = m.solver.abs_gap;
    if (std::isfinite(m.solver.time_limit_s))
        solver["time_limit_s"] = m.solver.time_limit_s;
    if (m.solver.node_limit != std::numeric_limits<long>::max())
        solver["node_limit"] = m.solver.node_limit;
    solver["branch_rule"] = rule_name(m.solver.branch);
    doc["solver"] = std::move(solver);
    doc["battery_sizes"] = m.battery_sizes;
    out << doc.dump(2) << '\n';
}

namespace {

struct Options {
    std::string manifest;
    std::uint64_t seed = 0;
    int samples = 0;
    int n_req = 0;
    int n_veh = 0;
    bool export_only = false;
    bool allow_gap = false;
    bool dry_run = false;
    int jobs = 0;
    std::string out;
    std::string format = "mps";
    int sample = 0;
    std::string solution;
    std::vector<double> batteries;

    CLI::App* active = nullptr;  // the subcommand that ran

    bool given(const char* flag) const { return active->get_option_no_throw(flag) && active->count(flag) > 0; }
};

struct Inputs {
    RunManifest manifest;
    RoadNetwork net;
    RunConfig config;
    Scenario base;
    DepotSpec depot;
};

// Input problems surface as this so the tool can exit with bad_input.
struct InputError : Error {
    using Error::Error;
};

RunManifest effective_manifest(const Options& o)
{
    RunManifest m = load_manifest(o.manifest);
    if (o.given("--seed"))
        m.seed = o.seed;
    if (o.given("--samples"))
        m.samples = o.samples;
    if (o.given("--requests-per-sample"))
        m.requests_per_sample = o.n_req;
    if (o.given("--vehicles-per-sample"))
        m.vehicles_per_sample = o.n_veh;
    if (o.given("--out"))
        m.output = o.out;
    if (o.given("--batteries"))
        m.battery_sizes = o.batteries;
    return m;
}

Inputs load_inputs(const Options& o)
{
    if (!fs::exists(o.manifest))
        throw InputError("manifest not found: " + o.manifest);
    Inputs in;
    in.manifest = effective_manifest(o);
    for (const fs::path& p : in.manifest.inputs())
        if (!fs::exists(p))
            throw InputError("input file not found: " + p.string());
    in.net = load_network(in.manifest.network);
    std::vector<fs::path> docs{in.manifest.fleet};
    if (in.manifest.fare)
        docs.push_back(*in.manifest.fare);
    in.config = load_run_config(docs);
    if (in.config.depot_node.empty())
        throw ConfigError("configuration needs a \"depot\" node");
    in.depot.node = in.net.index_of(in.config.depot_node);
    in.depot.day_start = in.config.day_start;
    in.depot.day_end = in.config.day_end;
    in.base.fleet = in.config.fleet;
    in.base.fares = in.config.fares;
    in.base.prices = load_price_series(in.manifest.prices);
    in.base.solar = in.manifest.solar ? load_solar_profile(*in.manifest.solar) : SolarProfile::none();
    in.base.requests = load_requests(in.manifest.requests, in.net);
    return in;
}

std::vector<Scenario> samples_for(const Inputs& in, const FleetSpec& fleet)
{
    Scenario base = in.base;
    base.fleet = fleet;
    return sample_scenarios(base, in.manifest.requests_per_sample, in.manifest.vehicles_per_sample,
                            in.manifest.samples, in.manifest.seed);
}

void write_file(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text))
        throw Error("cannot write " + path.string());
}

template <class F>
std::string render(F&& f)
{
    std::ostringstream s;
    f(s);
    return s.str();
}

std::string num(double v)
{
    if (v == 0.0)
        return "0";
    if (!std::isfinite(v))
        return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);
}

bool acceptable(const BatchResult& r, bool allow_gap)
{
    if (!r.error.empty())
        return false;
    return r.solution.status == SolveStatus::optimal ||
           (allow_gap && r.solution.status == SolveStatus::feasible_with_gap && r.solution.has_solution());
}

void set_jobs(int jobs)
{
    if (jobs > 0)
        omp_set_num_threads(jobs);
}

Execution mode(int jobs)
{
    return jobs == 1 ? Execution::serial : Execution::parallel;
}

int cmd_build(const Options& o, std::ostream& out)
{
    set_jobs(o.jobs);
    Inputs in = load_inputs(o);
    const DagInstance inst = build_dag(in.net, in.base.requests, in.depot, in.base.fleet.charging_power_kw, mode(o.jobs));
    const auto arcs = inst.arcs().size();
    if (o.dry_run) {
        out << fmt::format("valid: {} requests, {} stations, {} feasible transitions\n", inst.request_count(),
                           inst.station_count(), arcs);
        return ok;
    }
    const fs::path dest = in.manifest.output / "instance.json";
    write_file(dest, render([&](std::ostream& s) { write_instance(s, inst); }));
    write_file(in.manifest.output / "manifest.json", render([&](std::ostream& s) { write_manifest(s, in.manifest); }));
    out << fmt::format("wrote {} ({} requests, {} feasible transitions)\n", dest.string(), inst.request_count(), arcs);
    return ok;
}

int export_samples(const Inputs& in, const std::string& format, std::ostream& out)
{
    if (format != "mps" && format != "lp")
        throw InputError("unknown export format \"" + format + "\" (expected mps or lp)");
    const auto scenarios = samples_for(in, in.base.fleet);
    for (const Scenario& sc : scenarios) {
        const std::string tag = report_tag(sc.id, in.manifest.seed);
        const DagInstance inst = build_dag(in.net, sc.requests, in.depot, sc.fleet.charging_power_kw, Execution::serial);
        const MilpModel model = build_model(inst, sc);
        const fs::path dest = in.manifest.output / "samples" / tag / ("model." + format);
        fs::create_directories(dest.parent_path());
        export_model(model, dest);
        out << fmt::format("{}: {} variables, {} constraints -> {}\n", tag, model.variables().size(),
                           model.constraints().size(), dest.string());
    }
    write_file(in.manifest.output / "manifest.json", render([&](std::ostream& s) { write_manifest(s, in.manifest); }));
    return ok;
}

int cmd_export(const Options& o, std::ostream& out)
{
    return export_samples(load_inputs(o), o.format, out);
}

int cmd_solve(const Options& o, std::ostream& out)
{
    set_jobs(o.jobs);
    Inputs in = load_inputs(o);
    if (o.export_only)
        return export_samples(in, "mps", out);
    const auto scenarios = samples_for(in, in.base.fleet);
    const auto results = solve_batch(in.net, in.depot, scenarios, in.manifest.solver, mode(o.jobs));
    const fs::path root = in.manifest.output;
    write_file(root / "manifest.json", render([&](std::ostream& s) { write_manifest(s, in.manifest); }));

    std::ostringstream table;
    table << "sample,status,objective,bound,nodes,served,charging_cost,v2g_revenue,request_revenue,validation\n";
    std::vector<SampleSummary> summaries;
    bool all_ok = true;
    for (std::size_t s = 0; s < results.size(); ++s) {
        const Scenario& sc = scenarios[s];
        const BatchResult& r = results[s];
        const std::string tag = report_tag(sc.id, in.manifest.seed);
        const fs::path dir = root / "samples" / tag;
        fs::create_directories(dir);
        const bool good = acceptable(r, o.allow_gap);
        all_ok = all_ok && good;
        if (!r.error.empty()) {
            write_file(dir / "error.txt", r.error + "\n");
            table << fmt::format("{},error,,,,,,,,\n", tag);
            out << fmt::format("{}: error: {}\n", tag, r.error);
            continue;
        }
        const Solution& sol = r.solution;
        write_file(dir / "instance.json", render([&](std::ostream& f) { write_instance(f, r.instance); }));
        std::string verdict = "skipped";
        if (sol.has_solution()) {
            const MilpModel model = build_model(r.instance, sc);
            write_file(dir / "solution.sol", render([&](std::ostream& f) { write_solution(f, model, sol); }));
            const ValidationReport rep = validate(sol, r.instance, sc);
            verdict = rep.ok() ? "pass" : "fail";
            all_ok = all_ok && rep.ok();
            write_file(dir / "validation.txt", render([&](std::ostream& f) {
                           f << verdict << '\n';
                           for (const Violation& v : rep.violations)
                               f << v.family << ": " << v.detail << '\n';
                       }));
            const PowerProfile profile = power_profile(sol, r.instance, sc);
            emit_report(profile, sol.breakdown, {tag, sol.status, sol.objective, sol.bound, sol.nodes}, dir);
            summaries.push_back({profile, sol.breakdown, sc.fleet.vehicles});
        }
        table << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", tag, to_string(sol.status), num(sol.objective),
                             num(sol.bound), sol.nodes, sol.served.size(), num(sol.breakdown.charging_cost),
                             num(sol.breakdown.v2g_revenue), num(sol.breakdown.request_revenue), verdict);
        out << fmt::format("{}: {} J = {} ({} nodes, validation {})\n", tag, to_string(sol.status), num(sol.objective),
                           sol.nodes, verdict);
    }
    write_file(root / "samples.csv", table.str());
    if (!summaries.empty()) {
        const FleetSummary fleet = aggregate_samples(summaries, in.config.fleet.vehicles);
        const std::string tag = fmt::format("fleet_seed{}", in.manifest.seed);
        emit_report(fleet.profile, fleet.breakdown,
                    {tag, all_ok ? SolveStatus::optimal : SolveStatus::feasible_with_gap, fleet.breakdown.objective(),
                     fleet.breakdown.objective(), 0},
                    root / "aggregate");
        out << fmt::format("fleet of {} (scale {}): J = {}\n", in.config.fleet.vehicles, num(fleet.scale),
                           num(fleet.breakdown.objective()));
    }
    return all_ok ? ok : run_failed;
}

int cmd_sweep(const Options& o, std::ostream& out)
{
    set_jobs(o.jobs);
    Inputs in = load_inputs(o);
    if (in.manifest.battery_sizes.empty())
        throw InputError("battery list is empty");
    std::vector<FleetSpec> fleets;
    for (double b : in.manifest.battery_sizes)
        fleets.push_back(in.config.fleet_for_battery(b));

    std::ostringstream table;
    table << "battery_kwh,solar,charging_cost,v2g_revenue,trading_profit,request_revenue,J\n";
    bool all_ok = true;
    for (std::size_t f = 0; f < fleets.size(); ++f)
        for (bool solar : {true, false}) {
            FleetSpec fleet = fleets[f];
            fleet.solar_enabled = solar;
            const auto scenarios = samples_for(in, fleet);
            const auto results = solve_batch(in.net, in.depot, scenarios, in.manifest.solver, mode(o.jobs));
            CostBreakdown mean;
            int counted = 0;
            for (const BatchResult& r : results) {
                all_ok = all_ok && acceptable(r, o.allow_gap);
                if (!r.error.empty() || !r.solution.has_solution())
                    continue;
                mean.charging_cost += r.solution.breakdown.charging_cost;
                mean.v2g_revenue += r.solution.breakdown.v2g_revenue;
                mean.request_revenue += r.solution.breakdown.request_revenue;
                ++counted;
            }
            if (counted > 0) {
                mean.charging_cost /= counted;
                mean.v2g_revenue /= counted;
                mean.request_revenue /= counted;
            }
            const std::string row = fmt::format("{},{},{},{},{},{},{}", num(in.manifest.battery_sizes[f]),
                                                solar ? "on" : "off", num(mean.charging_cost), num(mean.v2g_revenue),
                                                num(mean.trading_profit()), num(mean.request_revenue),
                                                num(mean.objective()));
            table << row << '\n';
            out << row << '\n';
        }
    write_file(in.manifest.output / "sweep.csv", table.str());
    write_file(in.manifest.output / "manifest.json", render([&](std::ostream& s) { write_manifest(s, in.manifest); }));
    return all_ok ? ok : run_failed;
}

int cmd_validate(const Options& o, std::ostream& out)
{
    Inputs in = load_inputs(o);
    const auto scenarios = samples_for(in, in.base.fleet);
    if (o.sample < 0 || o.sample >= static_cast<int>(scenarios.size()))
        throw InputError(fmt::format("sample {} out of range (run has {})", o.sample, scenarios.size()));
    if (!fs::exists(o.solution))
        throw InputError("solution file not found: " + o.solution);
    const Scenario& sc = scenarios[static_cast<std::size_t>(o.sample)];
    const DagInstance inst = build_dag(in.net, sc.requests, in.depot, sc.fleet.charging_power_kw, Execution::serial);
    const MilpModel model = build_model(inst, sc);
    Solution sol;
    try {
        sol = import_solution(fs::path(o.solution), model);
    } catch (const ValidationError& e) {
        out << "fail\nmodel: " << e.what() << '\n';
        return run_failed;
    }
    const ValidationReport rep = validate(sol, inst, sc);
    out << (rep.ok() ? "pass" : "fail") << '\n';
    for (const Violation& v : rep.violations)
        out << v.family << ": " << v.detail << '\n';
    out << "objective " << num(sol.objective) << '\n';
    return rep.ok() ? ok : run_failed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Solar-electric mobility-on-demand fleet optimizer", "samod"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--manifest", o.manifest, "Run manifest (JSON)")->required();
        cmd->add_option("--seed", o.seed, "Sampling seed");
        cmd->add_option("--samples", o.samples, "Number of scenario samples")->check(CLI::NonNegativeNumber);
        cmd->add_option("--requests-per-sample", o.n_req, "Requests per sample")->check(CLI::NonNegativeNumber);
        cmd->add_option("--vehicles-per-sample", o.n_veh, "Vehicles per sample")->check(CLI::PositiveNumber);
        cmd->add_option("--out", o.out, "Output directory");
        cmd->add_option("--jobs", o.jobs, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
        cmd->add_flag("--allow-gap", o.allow_gap, "Accept feasible-with-gap samples");
    };

    CLI::App* build = app.add_subcommand("build", "Build and serialize the request DAG");
    common(build);
    build->add_flag("--dry-run", o.dry_run, "Validate inputs only; write nothing");

    CLI::App* solve = app.add_subcommand("solve", "Solve sampled scenarios and write reports");
    common(solve);
    solve->add_flag("--export-only", o.export_only, "Write MPS models instead of solving");

    CLI::App* sweep = app.add_subcommand("sweep", "Battery-size study with solar on and off");
    common(sweep);
    sweep->add_option("--batteries", o.batteries, "Battery sizes in kWh")->delimiter(',');

    CLI::App* val = app.add_subcommand("validate", "Validate an external solution of one sample");
    common(val);
    val->add_option("--sample", o.sample, "Sample index")->required();
    val->add_option("--solution", o.solution, "Name/value solution file")->required();

    CLI::App* exp = app.add_subcommand("export", "Export sample models");
    common(exp);
    exp->add_option("--format", o.format, "mps or lp")->check(CLI::IsMember({"mps", "lp"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : bad_input;
    }

    for (CLI::App* cmd : {build, solve, sweep, val, exp})
        if (*cmd)
            o.active = cmd;
    try {
        if (*build)
            return cmd_build(o, out);
        if (*solve)
            return cmd_solve(o, out);
        if (*sweep)
            return cmd_sweep(o, out);
        if (*val)
            return cmd_validate(o, out);
        return cmd_export(o, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what();
        if (!e.field().empty())
            err << " [" << e.field() << "]";
        err << '\n';
        return bad_input;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return bad_input;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return bad_input;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return bad_input;
    } catch (const BuildError& e) {
        err << "error: " << e.what() << '\n';
        return bad_input;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return internal;
    }
}

}  // namespace samod::cli
