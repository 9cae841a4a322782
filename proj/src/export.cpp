#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "samod/solve.hpp"

namespace samod {

namespace {

// Shortest representation that parses back to the same double.
std::string num(double v)
{
    if (v == 0.0)
        return "0";
    return fmt::format("{}", v);
}

char row_type(Relation r)
{
    switch (r) {
    case Relation::less_equal: return 'L';
    case Relation::greater_equal: return 'G';
    case Relation::equal: return 'E';
    }
    return 'N';
}

const char* lp_sense(Relation r)
{
    switch (r) {
    case Relation::less_equal: return "<=";
    case Relation::greater_equal: return ">=";
    case Relation::equal: return "=";
    }
    return "=";
}

// Column-major copy of the rows: per variable, (row index, coefficient).
std::vector<std::vector<std::pair<std::size_t, double>>> by_column(const MilpModel& model)
{
    std::vector<std::vector<std::pair<std::size_t, double>>> cols(model.variables().size());
    const auto& rows = model.constraints();
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (const LinearTerm& t : rows[r].terms)
            cols[static_cast<std::size_t>(t.var)].emplace_back(r, t.coef);
    return cols;
}

}  // namespace

void write_mps(std::ostream& out, const MilpModel& model)
{
    const auto& vars = model.variables();
    const auto& rows = model.constraints();
    const auto& cost = model.objective();
    out << "NAME " << model.name << '\n';
    out << "OBJSENSE\n    MIN\n";
    out << "ROWS\n N OBJ\n";
    for (const LinearConstraint& r : rows)
        out << ' ' << row_type(r.relation) << ' ' << r.name << '\n';

    out << "COLUMNS\n";
    const auto cols = by_column(model);
    bool in_int = false;
    int marker = 0;
    for (std::size_t v = 0; v < vars.size(); ++v) {
        if (vars[v].binary() != in_int) {
            out << "    MARKER" << marker++ << " 'MARKER' '" << (in_int ? "INTEND" : "INTORG") << "'\n";
            in_int = !in_int;
        }
        const std::string& name = model.var_name(static_cast<int>(v));
        if (cost[v] != 0.0 || cols[v].empty())
            out << "    " << name << " OBJ " << num(cost[v]) << '\n';
        for (const auto& [r, a] : cols[v])
            out << "    " << name << ' ' << rows[r].name << ' ' << num(a) << '\n';
    }
    if (in_int)
        out << "    MARKER" << marker << " 'MARKER' 'INTEND'\n";

    out << "RHS\n";
    for (const LinearConstraint& r : rows)
        if (r.rhs != 0.0)
            out << "    RHS " << r.name << ' ' << num(r.rhs) << '\n';

    out << "BOUNDS\n";
    for (std::size_t v = 0; v < vars.size(); ++v) {
        const std::string& name = model.var_name(static_cast<int>(v));
        if (vars[v].lower == vars[v].upper) {
            out << " FX BND " << name << ' ' << num(vars[v].lower) << '\n';
            continue;
        }
        out << " LO BND " << name << ' ' << num(vars[v].lower) << '\n';
        out << " UP BND " << name << ' ' << num(vars[v].upper) << '\n';
    }
    out << "ENDATA\n";
}

void write_lp(std::ostream& out, const MilpModel& model)
{
    const auto& vars = model.variables();
    const auto& cost = model.objective();
    constexpr int kTermsPerLine = 6;

    auto terms = [&](const std::vector<LinearTerm>& ts) {
        int on_line = 0;
        bool first = true;
        for (const LinearTerm& t : ts) {
            if (t.coef == 0.0)
                continue;
            if (on_line == kTermsPerLine) {
                out << "\n   ";
                on_line = 0;
            }
            const double a = std::abs(t.coef);
            out << (t.coef < 0.0 ? (first ? " -" : " - ") : (first ? " " : " + "));
            if (a != 1.0)
                out << num(a) << ' ';
            out << model.var_name(t.var);
            first = false;
            ++on_line;
        }
        if (first)
            out << " 0";
    };

    out << "\\ " << model.name << '\n';
    out << "Minimize\n obj:";
    std::vector<LinearTerm> obj;
    for (std::size_t v = 0; v < vars.size(); ++v)
        if (cost[v] != 0.0)
            obj.push_back({static_cast<int>(v), cost[v]});
    terms(obj);
    out << "\nSubject To\n";
    for (const LinearConstraint& r : model.constraints()) {
        out << ' ' << r.name << ':';
        terms(r.terms);
        out << ' ' << lp_sense(r.relation) << ' ' << num(r.rhs) << '\n';
    }
    out << "Bounds\n";
    for (std::size_t v = 0; v < vars.size(); ++v) {
        const std::string& name = model.var_name(static_cast<int>(v));
        if (vars[v].lower == vars[v].upper)
            out << ' ' << name << " = " << num(vars[v].lower) << '\n';
        else
            out << ' ' << num(vars[v].lower) << " <= " << name << " <= " << num(vars[v].upper) << '\n';
    }
    out << "Binaries\n";
    for (std::size_t v = 0; v < vars.size(); ++v)
        if (vars[v].binary())
            out << ' ' << model.var_name(static_cast<int>(v)) << '\n';
    out << "End\n";
}

void export_model(const MilpModel& model, const std::filesystem::path& path)
{
    const std::string ext = path.extension().string();
    if (ext != ".mps" && ext != ".lp")
        throw Error("unknown model format for " + path.string() + " (expected .mps or .lp)");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    if (ext == ".mps")
        write_mps(out, model);
    else
        write_lp(out, model);
}

void write_solution(std::ostream& out, const MilpModel& model, const Solution& solution)
{
    out << "# status " << to_string(solution.status) << '\n';
    out << "# objective " << num(solution.objective) << '\n';
    const auto& vars = model.variables();
    if (solution.values.size() != vars.size())
        throw Error("solution values do not match the model");
    for (std::size_t v = 0; v < vars.size(); ++v)
        out << model.var_name(static_cast<int>(v)) << ' ' << num(solution.values[v]) << '\n';
}

Solution import_solution(std::istream& in, const MilpModel& model)
{
    constexpr double kTol = 1e-5;
    const auto& vars = model.variables();
    std::vector<double> values(vars.size(), 0.0);
    std::vector<char> seen(vars.size(), 0);
    bool optimal = false;
    std::size_t assignments = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::istringstream ls(line);
        std::string name;
        if (!(ls >> name))
            continue;
        if (name.front() == '#') {
            std::string key, value;
            std::istringstream cs(line.substr(line.find('#') + 1));
            if (cs >> key >> value && (key == "status" || key == "Status") && value == "optimal")
                optimal = true;
            continue;
        }
        std::string value_text, extra;
        if (!(ls >> value_text) || (ls >> extra))
            throw ParseError(fmt::format("line {}: expected \"name value\"", line_no), line_no);
        const int v = model.find(name);
        if (v < 0)
            throw ParseError(fmt::format("line {}: unknown variable {}", line_no, name), line_no, name);
        double x = 0.0;
        try {
            std::size_t used = 0;
            x = std::stod(value_text, &used);
            if (used != value_text.size())
                throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ParseError(fmt::format("line {}: bad value \"{}\"", line_no, value_text), line_no, name);
        }
        if (!std::isfinite(x))
            throw ParseError(fmt::format("line {}: non-finite value for {}", line_no, name), line_no, name);
        const auto u = static_cast<std::size_t>(v);
        if (seen[u])
            throw ParseError(fmt::format("line {}: {} assigned twice", line_no, name), line_no, name);
        seen[u] = 1;
        values[u] = x;
        ++assignments;
    }
    if (assignments == 0)
        throw ParseError("solution file has no assignments");

    for (std::size_t v = 0; v < vars.size(); ++v)
        if (vars[v].binary() && std::abs(values[v] - std::round(values[v])) > kTol)
            throw ValidationError(fmt::format("{} = {} is not integral", model.var_name(static_cast<int>(v)), values[v]));
    std::string worst;
    const double viol = model.max_violation(values, &worst);
    if (viol > kTol)
        throw ValidationError(fmt::format("imported solution violates {} by {}", worst, viol));

    for (std::size_t v = 0; v < vars.size(); ++v)
        if (vars[v].binary())
            values[v] = std::round(values[v]);
    Solution sol = solution_from_values(model, std::move(values));
    sol.status = optimal ? SolveStatus::optimal : SolveStatus::feasible_with_gap;
    sol.bound = optimal ? sol.objective : -std::numeric_limits<double>::infinity();
    return sol;
}

Solution import_solution(const std::filesystem::path& path, const MilpModel& model)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot read " + path.string());
    return import_solution(in, model);
}

}  // namespace samod
