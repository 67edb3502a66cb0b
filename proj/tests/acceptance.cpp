#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rovella/config.hpp"
#include "rovella/family.hpp"
#include "rovella/flow.hpp"
#include "rovella/induction.hpp"
#include "rovella/measures.hpp"
#include "rovella/orbit.hpp"
#include "rovella/search.hpp"

using namespace rovella;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

ConstantsBundle desk() { return derive_constants(1.5, 3, 0.03, 0.05, 1.5); }

std::string read_dir(const fs::path& dir)
{
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        all += f.filename().string() + "\n" + ss.str();
    }
    return all;
}

Outcome axioms()
{
    FamilyParams fp;
    const AxiomReport rep = verify_axioms(fp, {10000, 20});
    // S f = -(s^2 - 1) / (2 x^2) for the power branches
    const double bound = -(fp.s * fp.s - 1) / 2;
    double worst = -1e300;
    bool closed_form = true;
    for (int i = 0; i <= 2000; ++i) {
        const double x = -1 + 2.0 * i / 2000;
        if (x == 0) continue;
        for (double a : {0.0, 0.2, 0.4}) {
            const double S = map_eval(fp, a, x).schwarzian;
            worst = std::max(worst, S);
            const double ref = bound / (x * x);
            if (std::fabs(S - ref) > 1e-9 * std::fabs(ref)) closed_form = false;
        }
    }
    const bool pass = rep.all_passed() && rep.worst_margin() > 0 && worst <= bound + 1e-10 && closed_form;
    std::string ids;
    for (const auto& c : rep.checks) ids += fmt::format(" {}={}", c.id, c.passed ? "ok" : "fail");
    return {pass, fmt::format("worst margin {:.3g}, max S {:.6g} vs {:.6g}, closed form {};{}", rep.worst_margin(),
                              worst, bound, closed_form ? "ok" : "fail", ids)};
}

Outcome derivatives()
{
    using oracle::hp;
    FamilyParams fp;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ua(0, fp.a_max);
    const hp h("1e-25");
    double errD = 0, errA = 0;
    int compared = 0, skipped = 0;
    for (int t = 0; t < 100; ++t) {
        const double a = ua(rng);
        const CriticalOrbit o = critical_orbit(fp, a, 20);
        for (int n = 1; n <= 20; ++n) {
            // the finite difference straddles the critical point
            if (n >= 2 && std::fabs(o.xi_at(n - 1)) < 1e-8) {
                skipped += 20 - n + 1;
                break;
            }
            const hp d = (oracle::iterate(fp.s, hp(a), hp(-1) + h, n) - oracle::iterate(fp.s, hp(a), hp(-1) - h, n)) /
                         (2 * h);
            errD = std::max(errD, std::fabs(o.D_at(n) / static_cast<double>(d) - 1));
            if (n >= 2) {
                const hp da =
                    (oracle::iterate(fp.s, hp(a) + h, hp(-1), n - 1) - oracle::iterate(fp.s, hp(a) - h, hp(-1), n - 1)) /
                    (2 * h);
                errA = std::max(errA, std::fabs(o.dxi_at(n) / static_cast<double>(da) - 1));
            }
            ++compared;
        }
    }
    return {errD <= 1e-6 && errA <= 1e-5 && compared >= 1000,
            fmt::format("max rel error D {:.3g}, dxi/da {:.3g}; {} comparisons, {} skipped", errD, errA, compared,
                        skipped)};
}

Outcome period_two()
{
    FamilyParams fp;
    const PeriodTwoOrbit o = period2(fp, 0.0);
    const double t = oracle::bisect([](double t) { return 2 * std::pow(t, 1.5) + t - 1; }, 0.0, 1.0);
    const bool pass = std::fabs(o.y_plus - 0.4320) <= 1e-3 && std::fabs(o.y_plus - t) <= 1e-12 &&
                      std::fabs(o.multiplier - 9 * t) <= 1e-3 && std::fabs(o.y_minus + t) <= 1e-12;
    return {pass, fmt::format("y+ {:.12f} (oracle {:.12f}), multiplier {:.12f} vs 9y+ {:.12f}", o.y_plus, t,
                              o.multiplier, 9 * t)};
}

Outcome super_attractor()
{
    FamilyParams fp;
    const SuperAttractorHit hit = find_super_attractor(fp, 0.25, 0.35, 3);
    const double ref = oracle::bisect([](double a) { return (2 - a) * std::pow(1 - a, 1.5) - 1; }, 0.25, 0.35);
    double x = 0;
    for (int i = 0; i < 3; ++i) x = oracle::f(1.5, hit.a, x);
    const double closure = std::fabs(x);
    const std::vector<double> cycle{-1.0, oracle::f(1.5, hit.a, -1.0), 0.0};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e-3, 1e-3);
    int converged = 0;
    for (int i = 0; i < 1000; ++i) {
        double y = u(rng);
        for (int j = 0; j < 300; ++j) y = oracle::f(1.5, hit.a, y);
        double d = 1;
        for (double c : cycle) d = std::min(d, std::fabs(y - c));
        if (d <= 1e-9) ++converged;
    }
    const bool pass = std::fabs(hit.a - ref) <= 1e-10 && std::fabs(hit.a - 0.2984) <= 1e-4 && hit.period == 3 &&
                      closure <= 1e-10 && converged == 1000;
    return {pass, fmt::format("a {:.15f} (oracle {:.15f}), loop gap {:.2g}, {}/1000 seeds converge", hit.a, ref,
                              closure, converged)};
}

struct Shared {
    InductionRun run;
    std::string run_bytes;
    std::string pipeline_bytes;
    std::string flow_bytes;
};

std::string serialise_run(const InductionRun& run, const std::string& tag)
{
    const fs::path dir = fs::temp_directory_path() / ("rovella-acceptance-" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    save_run(run, dir.string());
    std::string bytes = read_dir(dir);
    fs::remove_all(dir);
    return bytes;
}

Outcome induction(Shared& sh)
{
    FamilyParams fp;
    sh.run = run_induction(fp, desk(), 30);
    const InductionRun& run = sh.run;
    sh.run_bytes = serialise_run(run, "a");
    const Generation& g = run.last();
    const double total = run.a_hi - run.a_lo;
    bool bound_ok = true, escape_ok = true, all_ok = true;
    int bound_n = 0, escape_n = 0;
    for (const auto& c : run.checks) {
        all_ok = all_ok && c.pass;
        if (c.id.rfind("bound_", 0) == 0) {
            bound_ok = bound_ok && c.pass;
            bound_n += c.count;
        }
        if (c.id == "escape_return" || c.id == "escape_length") {
            escape_ok = escape_ok && c.pass;
            escape_n += c.count;
        }
    }
    const bool pass = g.n == 30 && g.survivor_measure > 0 && run.max_bookkeeping_error <= 1e-10 && bound_ok &&
                      escape_ok && bound_n > 0 && escape_n > 0 && run.quarantined < 0.05 * total;
    return {pass, fmt::format("survivor measure {:.6g} of {:.6g} ({} intervals), bookkeeping {:.2g}, bound checks {} "
                              "{}, escape checks {} {}, all logged checks {}, quarantined {:.3g}, escapes {}",
                              g.survivor_measure, total, g.count, run.max_bookkeeping_error, bound_n,
                              bound_ok ? "pass" : "FAIL", escape_n, escape_ok ? "pass" : "FAIL",
                              all_ok ? "pass" : "FAIL", run.quarantined / total, run.escapes_total)};
}

std::string serialise_pipeline(const FamilyParams& fp, const InductionRun& run, InstabilityTable* table_out,
                               InstabilitySource* src_out)
{
    const InstabilitySource src = preperiodic_from_escape(fp, run.bundle, run.escapes, 4);
    const InstabilityTable table = instability_table(fp, src.hit, src.sequence, reference_parameter(run.last()));
    std::ostringstream os;
    write_hits_csv(os, std::vector<PreperiodicHit>{src.hit});
    write_hits_csv(os, src.sequence.hits);
    write_instability_csv(os, table);
    os << fmt_num(table.w1_target_acim) << '\n';
    if (table_out) *table_out = table;
    if (src_out) *src_out = src;
    return os.str();
}

Outcome instability(Shared& sh)
{
    FamilyParams fp;
    InstabilityTable t;
    InstabilitySource src;
    sh.pipeline_bytes = serialise_pipeline(fp, sh.run, &t, &src);
    const auto& rows = t.rows;
    bool offsets = rows.size() >= 3;
    int inversions = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (!(std::fabs(rows[i].offset) < std::fabs(rows[i - 1].offset))) offsets = false;
        if (rows[i].w1_atomic >= rows[i - 1].w1_atomic) ++inversions;
    }
    const double last = rows.empty() ? 1 : rows.back().w1_atomic;
    double min_acim = 1e300;
    for (const auto& r : rows) min_acim = std::min(min_acim, r.w1_acim);
    const bool pass = src.hit.alternates && offsets && inversions <= 1 && last < 0.05 && min_acim > 4 * last;
    std::string cols;
    for (const auto& r : rows)
        cols += fmt::format(" [K={} off={:.3g} W1={:.4f} acim={:.4f}]", r.period, r.offset, r.w1_atomic, r.w1_acim);
    return {pass, fmt::format("escape theta {} gamma {}, ell {}, a_pre {:.12g} (k={}, drift {:.2g}), {} hits, {} "
                              "inversions, final W1 {:.4f}, min acim W1 {:.4f};{}",
                              src.escape.theta, src.gamma, src.ell, src.hit.a, src.hit.k,
                              src.hit.max_drift, rows.size(), inversions, last, min_acim, cols)};
}

std::string serialise_flow(const std::vector<FlowResult>& rs)
{
    std::ostringstream os;
    for (const auto& r : rs) {
        write_flow_csv(os, r);
        os << fmt_num(r.average) << ',' << fmt_num(r.dwell_fraction) << ',' << r.returns << '\n';
        for (double v : r.visits) os << fmt_num(v) << '\n';
    }
    return os.str();
}

std::vector<FlowResult> flow_runs(double a_star)
{
    FamilyParams fp;
    FlowParams fl;
    fl.critical_tolerance = 1e-12;
    std::vector<FlowResult> out;
    FlowOptions opt;
    opt.record_series = true;
    for (double T : {1e2, 1e3, 1e4})
        out.push_back(flow_average(fl, fp, a_star, {0.3, 0.2}, Observable3D::dist_to_origin_capped(), T, opt));
    out.push_back(flow_average(fl, fp, 0.0, {-1.0, 0.2}, Observable3D::dist_to_origin_capped(), 1e4, opt));
    return out;
}

Outcome flow(Shared& sh)
{
    FamilyParams fp;
    const double a_star = find_super_attractor(fp, 0.25, 0.35, 3).a;
    const auto rs = flow_runs(a_star);
    sh.flow_bytes = serialise_flow(rs);
    const bool decreasing = rs[0].average > rs[1].average && rs[1].average > rs[2].average;
    const bool pass = decreasing && rs[2].average <= 0.05 && rs[2].dwell_fraction >= 0.9 &&
                      rs[0].visit_ratio_holds() && rs[1].visit_ratio_holds() && rs[2].visit_ratio_holds() &&
                      rs[3].average >= 0.3;
    return {pass, fmt::format("a* {:.17g}: averages {:.4g} {:.4g} {:.4g}, dwell {:.4f}, visits {}, terminal {} at "
                              "t={:.4g}; contrast a=0 average {:.4f}",
                              a_star, rs[0].average, rs[1].average, rs[2].average, rs[2].dwell_fraction,
                              rs[2].visits.size(), rs[2].terminal, rs[2].terminal_time, rs[3].average)};
}

Outcome determinism(const Shared& sh)
{
    FamilyParams fp;
    const InductionRun again = run_induction(fp, desk(), 30);
    const bool r = serialise_run(again, "b") == sh.run_bytes;
    const bool p = serialise_pipeline(fp, again, nullptr, nullptr) == sh.pipeline_bytes;
    const bool f = serialise_flow(flow_runs(find_super_attractor(fp, 0.25, 0.35, 3).a)) == sh.flow_bytes;
    return {r && p && f && !sh.run_bytes.empty() && !sh.pipeline_bytes.empty() && !sh.flow_bytes.empty(),
            fmt::format("induction {}, pipeline {}, flow {} ({} + {} + {} bytes)", r ? "identical" : "DIFFERS",
                        p ? "identical" : "DIFFERS", f ? "identical" : "DIFFERS", sh.run_bytes.size(),
                        sh.pipeline_bytes.size(), sh.flow_bytes.size())};
}

}  // namespace

int main()
{
    Shared sh;
    struct Criterion {
        int id;
        double limit;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all = {
        {1, 5, axioms},
        {2, 10, derivatives},
        {3, 1, period_two},
        {4, 5, super_attractor},
        {5, 300, [&] { return induction(sh); }},
        {6, 600, [&] { return instability(sh); }},
        {7, 120, [&] { return flow(sh); }},
        {8, 1e9, [&] { return determinism(sh); }},
    };
    int failed = 0;
    for (const auto& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.limit;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << o.detail
                  << fmt::format(" ({:.2f} s{})", secs, in_time ? "" : ", over the time limit") << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
