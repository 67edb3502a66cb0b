#include <fmt/format.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <functional>
#include <iostream>
#include <list>
#include <map>

#include "CLI11.hpp"
#include "json.hpp"
#include "rovella/combinatorics.hpp"
#include "rovella/config.hpp"
#include "rovella/errors.hpp"
#include "rovella/family.hpp"
#include "rovella/flow.hpp"
#include "rovella/induction.hpp"
#include "rovella/measures.hpp"
#include "rovella/orbit.hpp"
#include "rovella/search.hpp"

using namespace rovella;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Key {
    const char* name;
    const char* fallback;
    const char* help;
};

// shared by every command
const std::vector<Key> kGlobal = {
    {"s", "1.5", "map exponent"},
    {"a_max", "0.4", "upper end of the parameter range"},
    {"Delta", "3", "partition depth"},
    {"alpha", "0.03", "basic assumption exponent"},
    {"beta", "0.05", "distance exponent"},
    {"lambda0", "1.5", "initial expansion rate"},
    {"seed", "1", "seed for sampled grids"},
    {"threads", "1", "worker cap"},
    {"out", "rovella-out", "output directory"},
};

const std::map<std::string, std::vector<Key>> kCommands = {
    {"axioms", {{"nx", "10000", "x grid points"}, {"na", "20", "parameter grid points"}}},
    {"orbit", {{"a", "0.0003", "parameter"}, {"n", "40", "orbit length"}, {"side", "plus", "plus or minus"}}},
    {"induct",
     {{"nmax", "30", "last generation"},
      {"check_budget", "1000", "sampled bound-period checks"},
      {"slack", "0.5", "escape check slack"},
      {"a_lo", "", "override of the initial interval"},
      {"a_hi", "", "override of the initial interval"}}},
    {"super-search", {{"lo", "0.25", "interval start"}, {"hi", "0.35", "interval end"}, {"k", "3", "index"}}},
    {"period2", {{"a", "0", "parameter"}}},
    {"prep-search",
     {{"lo", "", "interval start"},
      {"hi", "", "interval end"},
      {"k", "", "hitting index"},
      {"grid", "100", "scan grid"},
      {"alternation", "50", "alternation steps"}}},
    {"measure",
     {{"a", "0.0003", "parameter"},
      {"x0", "0.3", "seed point"},
      {"n", "1000000", "iterations"},
      {"burn", "10000", "discarded iterations"},
      {"bins", "2000", "histogram bins"}}},
    {"instability",
     {{"nmax", "30", "induction generations"},
      {"k", "0", "escape index"},
      {"depth", "4", "sequence depth"},
      {"k_cap", "320", "largest period scanned"},
      {"x0", "0.3", "seed for the reference histogram"},
      {"n", "1000000", "iterations"},
      {"burn", "10000", "discarded iterations"},
      {"bins", "2000", "histogram bins"}}},
    {"flow-average",
     {{"a", "0.29839311281882919", "parameter"},
      {"x", "0.3", "section x"},
      {"y", "0.2", "section y"},
      {"T", "10000", "horizon"},
      {"phi", "dist", "dist, x, y, z or const"},
      {"reinjection", "frozen", "frozen or linear"},
      {"critical_tolerance", "0", "critical line tolerance"},
      {"tau0", "1", "reinjection time"},
      {"rho_g", "0.25", "leaf contraction"},
      {"c_g", "0.5", "stable offset"},
      {"lambda1", "1", "unstable eigenvalue"},
      {"lambda2", "-5", "strong stable eigenvalue"},
      {"lambda3", "-1.5", "weak stable eigenvalue"}}},
    {"constants", {}},
};

struct Settings {
    KeyValues kv;
    double num(const std::string& k) const
    {
        const auto v = kv.get(k);
        if (!v || v->empty()) throw ConfigError("missing value for " + k);
        return kv.number(k, 0);
    }
    long integer(const std::string& k) const
    {
        const auto v = kv.get(k);
        if (!v || v->empty()) throw ConfigError("missing value for " + k);
        return kv.integer(k, 0);
    }
    std::string text(const std::string& k) const { return kv.text(k, ""); }
    bool has(const std::string& k) const
    {
        const auto v = kv.get(k);
        return v && !v->empty();
    }
};

FamilyParams family(const Settings& st)
{
    FamilyParams fp = FamilyParams::for_exponent(st.num("s"), st.num("a_max"));
    fp.validate();
    return fp;
}

ConstantsBundle bundle(const Settings& st)
{
    return derive_constants(st.num("s"), static_cast<int>(st.integer("Delta")), st.num("alpha"), st.num("beta"),
                            st.num("lambda0"));
}

json bundle_json(const ConstantsBundle& b)
{
    return {{"s", b.s},           {"Delta", b.Delta},     {"delta", b.delta},     {"alpha", b.alpha},
            {"beta", b.beta},     {"lambda0", b.lambda0}, {"c_prime", b.c_prime}, {"lambda", b.lambda},
            {"kappa1", b.kappa1}, {"kappa2", b.kappa2},   {"kappa", b.kappa},     {"A", b.A},
            {"eta1", b.eta1},     {"N", b.N},             {"N0", b.N0},           {"N1", b.N1},
            {"a0", b.a0},         {"c", b.c},             {"lambda_c", b.lambda_c}};
}

struct Output {
    fs::path dir;
    std::vector<std::string> files;
    json summary = json::object();

    std::list<std::ofstream> streams;

    std::ofstream& open(const std::string& name)
    {
        files.push_back(name);
        std::ofstream& f = streams.emplace_back(dir / name);
        if (!f) throw Error("cannot write " + (dir / name).string());
        return f;
    }
};

void cmd_axioms(const Settings& st, Output& out)
{
    const FamilyParams fp = family(st);
    const AxiomReport rep = verify_axioms(fp, {static_cast<int>(st.integer("nx")), static_cast<int>(st.integer("na"))});
    json checks = json::array();
    for (const auto& c : rep.checks)
        checks.push_back({{"id", c.id},
                          {"passed", c.passed},
                          {"margin", c.margin},
                          {"worst_a", c.worst_a},
                          {"worst_x", c.worst_x},
                          {"note", c.note}});
    json j = {{"all_passed", rep.all_passed()}, {"worst_margin", rep.worst_margin()}, {"checks", checks}};
    out.open("axioms.json") << j.dump(2) << '\n';
    std::cout << j.dump(2) << '\n';
    out.summary = {{"all_passed", rep.all_passed()}, {"worst_margin", rep.worst_margin()}};
    if (!rep.all_passed()) throw NumericalError("axiom checks failed");
}

void cmd_orbit(const Settings& st, Output& out)
{
    const FamilyParams fp = family(st);
    const ConstantsBundle b = bundle(st);
    const double a = st.num("a");
    const int n = static_cast<int>(st.integer("n"));
    const std::string side = st.text("side");
    if (side != "plus" && side != "minus") throw ConfigError("side must be plus or minus");
    const CriticalOrbit o = critical_orbit(fp, a, n, side == "plus" ? CriticalSide::plus : CriticalSide::minus);
    write_orbit_csv(out.open("orbit.csv"), o);
    const Itinerary it = itinerary(fp, a, n, b);
    write_itinerary_csv(out.open("itinerary.csv"), it);
    out.summary = {{"a", a}, {"n", o.size()}, {"free_time", it.F}, {"passes_FA", it.passes_FA}};
    if (o.truncated_at) out.summary["truncated_at"] = *o.truncated_at;
    std::cout << out.summary.dump() << '\n';
}

InductionRun induct(const Settings& st, int nmax)
{
    const FamilyParams fp = family(st);
    InductionOptions opt;
    opt.seed = static_cast<std::uint64_t>(st.integer("seed"));
    opt.threads = static_cast<int>(st.integer("threads"));
    if (st.kv.has("check_budget")) opt.check_budget = static_cast<int>(st.integer("check_budget"));
    if (st.kv.has("slack")) opt.slack = st.num("slack");
    if (st.has("a_lo") != st.has("a_hi")) throw ConfigError("a_lo and a_hi go together");
    if (st.has("a_lo")) opt.a_range = std::make_pair(st.num("a_lo"), st.num("a_hi"));
    if (nmax < 1) throw ConfigError("nmax >= 1");
    return run_induction(fp, bundle(st), nmax, opt);
}

void cmd_induct(const Settings& st, Output& out)
{
    const InductionRun run = induct(st, static_cast<int>(st.integer("nmax")));
    save_run(run, out.dir.string());
    out.files.insert(out.files.end(),
                     {"run.json", fmt::format("survivors_{}.csv", run.last().n), "checks.csv"});
    const Generation& g = run.last();
    out.summary = {{"n", g.n},
                   {"survivors", g.count},
                   {"survivor_measure", g.survivor_measure},
                   {"max_bookkeeping_error", run.max_bookkeeping_error},
                   {"quarantined", run.quarantined},
                   {"escapes_total", run.escapes_total}};
    bool pass = true;
    for (const auto& c : run.checks) pass = pass && c.pass;
    out.summary["all_checks_pass"] = pass;
    std::cout << out.summary.dump() << '\n';
}

void cmd_super(const Settings& st, Output& out)
{
    const FamilyParams fp = family(st);
    const SuperAttractorHit h =
        find_super_attractor(fp, st.num("lo"), st.num("hi"), static_cast<int>(st.integer("k")));
    write_hits_csv(out.open("super.csv"), std::vector<SuperAttractorHit>{h});
    out.summary = {{"a", h.a}, {"period", h.period}, {"residual", h.residual}, {"monotone", h.monotone},
                   {"type", to_string(verify_periodic(fp, h.a, h.orbit))}};
    if (!h.monotone) std::cerr << "warning: non-monotone screen over the bracket\n";
    std::cout << out.summary.dump() << '\n';
}

void cmd_period2(const Settings& st, Output& out)
{
    const FamilyParams fp = family(st);
    const PeriodTwoOrbit o = period2(fp, st.num("a"));
    out.summary = {{"a", st.num("a")}, {"y_minus", o.y_minus}, {"y_plus", o.y_plus}, {"multiplier", o.multiplier}};
    out.open("period2.json") << out.summary.dump(2) << '\n';
    std::cout << out.summary.dump() << '\n';
}

void cmd_prep(const Settings& st, Output& out)
{
    const FamilyParams fp = family(st);
    PreperiodicOptions opt;
    opt.grid = static_cast<int>(st.integer("grid"));
    opt.alternation_steps = static_cast<int>(st.integer("alternation"));
    const PreperiodicHit h = find_preperiodic(fp, st.num("lo"), st.num("hi"), static_cast<int>(st.integer("k")), opt);
    write_hits_csv(out.open("preperiodic.csv"), std::vector<PreperiodicHit>{h});
    out.summary = {{"a", h.a_text}, {"k", h.k}, {"residual", h.residual}, {"max_drift", h.max_drift}};
    std::cout << out.summary.dump() << '\n';
}

MeasureOptions measure_options(const Settings& st)
{
    MeasureOptions m;
    m.n = st.integer("n");
    m.burn = st.integer("burn");
    m.bins = static_cast<int>(st.integer("bins"));
    return m;
}

void cmd_measure(const Settings& st, Output& out)
{
    const FamilyParams fp = family(st);
    const double a = st.num("a");
    const EmpiricalMeasure mu = empirical_measure(fp, a, st.num("x0"), measure_options(st));
    write_measure_csv(out.open("measure.csv"), mu);
    json obs = json::object();
    for (const auto& phi : observable_registry()) obs[phi.name()] = integrate(mu, phi);
    out.summary = {{"a", a}, {"period", mu.period}, {"occupied", mu.occupied()}, {"bins", mu.bins()},
                   {"integrals", obs}};
    if (!mu.periodic()) out.summary["stationarity_w1"] = wasserstein1(mu, pushforward(fp, a, mu));
    std::cout << out.summary.dump() << '\n';
}

void cmd_instability(const Settings& st, Output& out)
{
    const FamilyParams fp = family(st);
    const InductionRun run = induct(st, static_cast<int>(st.integer("nmax")));
    InstabilityOptions opt;
    opt.escape_index = static_cast<int>(st.integer("k"));
    opt.sequence.k_cap = static_cast<int>(st.integer("k_cap"));
    const InstabilitySource src =
        preperiodic_from_escape(fp, run.bundle, run.escapes, static_cast<int>(st.integer("depth")), opt);
    if (src.sequence.hits.empty()) throw NotFound(src.sequence.diagnostics);
    const double ref = reference_parameter(run.last());
    const InstabilityTable table =
        instability_table(fp, src.hit, src.sequence, ref, st.num("x0"), measure_options(st));
    write_instability_csv(out.open("instability.csv"), table);
    write_hits_csv(out.open("super_sequence.csv"), src.sequence.hits);
    write_hits_csv(out.open("preperiodic.csv"), std::vector<PreperiodicHit>{src.hit});
    out.summary = {{"escape", {{"lo", src.escape.lo}, {"hi", src.escape.hi}, {"theta", src.escape.theta}}},
                   {"gamma", src.gamma},
                   {"b", src.b},
                   {"c", src.c},
                   {"j0", src.chain.j0},
                   {"j1", src.chain.j1},
                   {"separation", src.chain.separation},
                   {"ell", src.ell},
                   {"a_pre", src.hit.a_text},
                   {"k_pre", src.hit.k},
                   {"reference_a", ref},
                   {"w1_target_acim", table.w1_target_acim},
                   {"sequence", src.sequence.diagnostics}};
    std::cout << out.summary.dump() << '\n';
}

void cmd_flow(const Settings& st, Output& out)
{
    const FamilyParams fp = family(st);
    FlowParams fl;
    fl.lambda1 = st.num("lambda1");
    fl.lambda2 = st.num("lambda2");
    fl.lambda3 = st.num("lambda3");
    fl.tau0 = st.num("tau0");
    fl.rho_g = st.num("rho_g");
    fl.c_g = st.num("c_g");
    fl.critical_tolerance = st.num("critical_tolerance");
    const std::string mode = st.text("reinjection");
    if (mode != "frozen" && mode != "linear") throw ConfigError("reinjection must be frozen or linear");
    fl.reinjection = mode == "frozen" ? Reinjection::frozen : Reinjection::linear;
    try {
        fl.validate(fp);
    } catch (const ParameterRangeError& e) {
        throw ConfigError(e.what());
    }
    const std::string p = st.text("phi");
    Observable3D phi;
    if (p == "dist")
        phi = Observable3D::dist_to_origin_capped();
    else if (p == "x" || p == "y" || p == "z")
        phi = Observable3D::coordinate(p[0] - 'x');
    else if (p == "const")
        phi = Observable3D::constant(1);
    else
        throw ConfigError("phi must be dist, x, y, z or const");
    FlowOptions opt;
    opt.record_series = true;
    const FlowResult r = flow_average(fl, fp, st.num("a"), {st.num("x"), st.num("y")}, phi, st.num("T"), opt);
    write_flow_csv(out.open("flow.csv"), r);
    out.summary = {{"average", r.average},         {"dwell_fraction", r.dwell_fraction},
                   {"returns", r.returns},         {"terminal", r.terminal},
                   {"terminal_time", r.terminal_time}, {"visit_ratio_holds", r.visit_ratio_holds()}};
    std::cout << out.summary.dump() << '\n';
}

void cmd_constants(const Settings& st, Output& out)
{
    std::cout << "# defaults\n";
    for (const auto& k : kGlobal) std::cout << k.name << " = " << k.fallback << '\n';
    for (const auto& [cmd, keys] : kCommands)
        for (const auto& k : keys) std::cout << cmd << '.' << k.name << " = " << k.fallback << '\n';
    const ConstantsBundle b = bundle(st);
    out.summary = bundle_json(b);
    out.open("constants.json") << out.summary.dump(2) << '\n';
    std::cout << "# derived\n";
    for (const auto& [k, v] : out.summary.items()) std::cout << k << " = " << v.dump() << '\n';
}

const std::map<std::string, std::function<void(const Settings&, Output&)>> kRun = {
    {"axioms", cmd_axioms},   {"orbit", cmd_orbit},         {"induct", cmd_induct},
    {"super-search", cmd_super}, {"period2", cmd_period2},  {"prep-search", cmd_prep},
    {"measure", cmd_measure}, {"instability", cmd_instability}, {"flow-average", cmd_flow},
    {"constants", cmd_constants},
};

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"contracting Lorenz map family: parameter exclusion, super-attractors, statistical instability"};
    app.require_subcommand(1);
    std::string config;
    app.add_option("--config", config, "flat key = value file");
    std::map<std::string, std::string> flags;
    for (const auto& k : kGlobal) app.add_option("--" + std::string(k.name), flags[k.name], k.help);
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, keys] : kCommands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->fallthrough();
        for (const auto& k : keys) sub->add_option("--" + std::string(k.name), flags[name + "." + k.name], k.help);
        subs[name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::string command;
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) command = name;

    Settings st;
    Output out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        KeyValues file;
        if (!config.empty()) file = KeyValues::load(config);
        for (const auto& k : kGlobal) {
            std::string v = file.text(k.name, k.fallback);
            if (app.get_option("--" + std::string(k.name))->count() > 0) v = flags[k.name];
            st.kv.set(k.name, v);
        }
        for (const auto& k : kCommands.at(command)) {
            const std::string scoped = command + "." + k.name;
            std::string v = file.text(scoped, file.text(k.name, k.fallback));
            if (subs[command]->get_option("--" + std::string(k.name))->count() > 0) v = flags[scoped];
            st.kv.set(k.name, v);
        }
        for (const auto& [key, value] : file.entries()) {
            const bool known = std::any_of(kGlobal.begin(), kGlobal.end(), [&](const Key& k) { return key == k.name; });
            bool sub_known = false;
            for (const auto& [cmd, keys] : kCommands)
                for (const auto& k : keys)
                    if (key == k.name || key == cmd + "." + k.name) sub_known = true;
            if (!known && !sub_known) throw ConfigError("unknown config key " + key);
        }
        if (st.integer("threads") < 1) throw ConfigError("threads >= 1");
        out.dir = fs::path(st.text("out")) / command;
        fs::create_directories(out.dir);
        // validates the constants before any pipeline
        bundle(st);
        family(st);

        kRun.at(command)(st, out);

        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json cfg = json::object();
        for (const auto& [k, v] : st.kv.entries()) cfg[k] = v;
        json manifest = {{"command", command},
                         {"config", cfg},
                         {"versions", {{"rovella", kVersion}, {"fmt", FMT_VERSION}}},
                         {"timings", {{"seconds", secs}}},
                         {"outputs", out.files},
                         {"summary", out.summary}};
        std::ofstream(out.dir / "manifest.json") << manifest.dump(2) << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ConstraintError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ParameterRangeError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << command << " failed: " << e.what() << '\n';
        return 1;
    }
}
