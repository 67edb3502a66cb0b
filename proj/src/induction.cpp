#include "rovella/induction.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "json.hpp"

#include "parallel.hpp"
#include "rovella/config.hpp"
#include "rovella/errors.hpp"

namespace rovella {

void ReturnList::push(const ReturnRecord& r)
{
    head_ = std::make_shared<const Node>(Node{r, head_});
    ++size_;
    if (!r.escape) ++deep_;
}

std::vector<ReturnRecord> ReturnList::to_vector() const
{
    std::vector<ReturnRecord> out;
    for (const Node* p = head_.get(); p; p = p->prev.get()) out.push_back(p->r);
    std::reverse(out.begin(), out.end());
    return out;
}

bool InductionRun::all_pass(const std::string& id) const
{
    return std::all_of(checks.begin(), checks.end(), [&](auto& c) { return c.id != id || c.pass; });
}

int InductionRun::count(const std::string& id) const
{
    return static_cast<int>(std::count_if(checks.begin(), checks.end(), [&](auto& c) { return c.id == id; }));
}

namespace {

bool screen_monotone(const FamilyParams& fp, double lo, double hi, int n, int points, double xlo, double xhi)
{
    const int dir = xhi > xlo ? 1 : (xhi < xlo ? -1 : 0);
    if (dir == 0) return false;
    double prev = xlo;
    for (int i = 1; i <= points; ++i) {
        const double v = i == points ? xhi : xi_plus(fp, lo + (hi - lo) * i / points, n);
        if ((v - prev) * dir < 0) return false;
        prev = v;
    }
    return true;
}

struct Solved {
    double a;
    double x;
};

// xi_n(a) = y on [lo, hi], xi_n monotone with direction `up`; safeguarded Newton
Solved solve_level(const FamilyParams& fp, double lo, double hi, int n, double y, bool up)
{
    const double sg = up ? 1.0 : -1.0;
    Solved best{lo, xi_plus(fp, lo, n)};
    double a = lo + (hi - lo) / 2;
    double dx = hi - lo, dxold = dx;
    OrbitPoint op = orbit_point(fp, a, n);
    for (int it = 0; it < 400; ++it) {
        const double f = sg * (op.xi - y), df = sg * op.dxi_da;
        if (std::fabs(op.xi - y) < std::fabs(best.x - y)) best = {a, op.xi};
        if (f == 0) break;
        if (f < 0)
            lo = a;
        else
            hi = a;
        const double newton = a - f / df;
        if (!(df > 0) || !(newton > lo && newton < hi) || std::fabs(2 * f) > std::fabs(dxold * df)) {
            dxold = dx;
            dx = (hi - lo) / 2;
            a = lo + dx;
        } else {
            dxold = dx;
            dx = a - newton;
            a = newton;
        }
        if (!(a > lo && a < hi)) break;
        op = orbit_point(fp, a, n);
    }
    const double vh = xi_plus(fp, hi, n), vl = xi_plus(fp, lo, n);
    if (std::fabs(vh - y) < std::fabs(best.x - y)) best = {hi, vh};
    if (std::fabs(vl - y) < std::fabs(best.x - y)) best = {lo, vl};
    return best;
}

// does [u, v] contain a whole cell I_{m,k} with |m| >= Delta
bool covers_deep_cell(double u, double v, const ConstantsBundle& b)
{
    if (u <= 0 && v >= 0) return u < v;
    const double p = u > 0 ? u : -v;
    const double q = std::min(u > 0 ? v : -u, b.delta);
    if (p >= q) return false;
    const Location loc = locate(p, b);
    if (!loc.address) return false;
    const int m = loc.address->m, k = loc.address->k;
    IntervalAddress cand = *loc.address;
    if (cand.lo != p) {
        if (k > 1)
            cand = cell(m, k - 1);
        else if (m > b.Delta)
            cand = cell(m - 1, (m - 1) * (m - 1));
        else
            return false;
    }
    return cand.hi <= q;
}

struct Candidate {
    double lo, hi;
    int n, m, k;
};

enum class Kind { bound, free, inessential, essential, quarantined };

struct Work {
    Kind kind = Kind::free;
    std::vector<ParamInterval> kept;
    std::vector<bool> fresh;
    std::vector<Piece> pieces;
    std::vector<std::pair<int, int>> escapes;  // (kept index, side)
    std::optional<std::pair<int, double>> escape_return;
    std::vector<Candidate> candidates;
    int host_checks = 0, host_fails = 0;
};

struct Segment1 {
    double y0, y1;
    int type;  // 0 outside U_Delta, 1 kept cell, 2 exclusion zone
    int m = 0, k = 0;
    int side = 0;
    bool complete = false;
};

Work process(const FamilyParams& fp, const ParamInterval& w, int n, const ConstantsBundle& b,
             const RefineOptions& opt)
{
    Work out;
    ParamInterval c = w;
    c.generation = n;
    c.xlo = map_value(fp.s, w.lo, w.xlo);
    c.xhi = map_value(fp.s, w.hi, w.xhi);
    auto keep_same = [&](Kind k) {
        out.kind = k;
        out.kept.push_back(c);
        out.fresh.push_back(false);
    };
    if (n <= w.bound_until) {
        keep_same(Kind::bound);
        return out;
    }
    const double u = std::min(c.xlo, c.xhi), v = std::max(c.xlo, c.xhi);
    const double dz = b.delta - cell_width(b.Delta);
    if (u >= dz || v <= -dz) {
        keep_same(Kind::free);
        return out;
    }

    if (c.escape_pending) {
        out.escape_return = std::make_pair(n, v - u);
        c.escape_pending = false;
    }
    if (!screen_monotone(fp, c.lo, c.hi, n, opt.screen_points, c.xlo, c.xhi)) {
        out.kind = Kind::quarantined;
        out.pieces.push_back({c.lo, c.hi, PieceStatus::quarantined, "non-monotone image"});
        return out;
    }
    const int E = b.exclusion_level(n);

    if (!covers_deep_cell(u, v, b)) {
        out.kind = Kind::inessential;
        const double y = (std::max(u, -b.delta) + std::min(v, b.delta)) / 2;
        const Location loc = locate(y, b);
        if (!loc.address || std::abs(loc.address->m) >= E) {
            out.pieces.push_back({c.lo, c.hi, PieceStatus::excluded, "deep inessential return"});
            return out;
        }
        const int m = loc.address->m;
        const int p = bound_period_interval(fp, b, c.lo, c.hi, m);
        c.returns.push({n, m, loc.address->k, false, false, p});
        c.bound_until = n + p;
        out.kept.push_back(c);
        out.fresh.push_back(false);
        out.pieces.push_back({c.lo, c.hi, PieceStatus::kept, "inessential return"});
        return out;
    }

    out.kind = Kind::essential;
    std::vector<double> Y;
    auto add = [&](double y) {
        if (y > u && y < v) Y.push_back(y);
    };
    for (int m = b.Delta; m < E; ++m) {
        const double top = std::exp(-static_cast<double>(m));
        const double wd = cell_width(m);
        for (int k = 0; k < m * m; ++k) {
            add(top - k * wd);
            add(-(top - k * wd));
        }
    }
    const double eE = std::exp(-static_cast<double>(E));
    add(eE);
    add(-eE);
    std::sort(Y.begin(), Y.end());
    Y.erase(std::unique(Y.begin(), Y.end()), Y.end());

    std::vector<double> pts;
    pts.push_back(u);
    pts.insert(pts.end(), Y.begin(), Y.end());
    pts.push_back(v);
    const IntervalAddress esc = cell(b.Delta - 1, (b.Delta - 1) * (b.Delta - 1));
    const int last = static_cast<int>(pts.size()) - 2;

    std::vector<Segment1> segs;
    for (int i = 0; i <= last; ++i) {
        Segment1 g{pts[i], pts[i + 1], 0};
        const double mid = (g.y0 + g.y1) / 2;
        const bool inner = i > 0, outer = i < last;
        if (std::fabs(mid) >= b.delta) {
            g.type = 0;
            g.side = mid > 0 ? 1 : -1;
            g.complete = g.side > 0 ? (inner && g.y1 >= esc.hi) : (outer && g.y0 <= -esc.hi);
        } else if (std::fabs(mid) < eE) {
            g.type = 2;
            g.complete = true;
        } else {
            const Location loc = locate(mid, b);
            g.type = 1;
            g.m = loc.address->m;
            g.k = loc.address->k;
            g.complete = inner && outer;
        }
        segs.push_back(g);
    }

    // glue incomplete end fragments to the neighbour
    auto incomplete = [&](const Segment1& g) { return g.type != 2 && !g.complete; };
    if (segs.size() == 2 && incomplete(segs[0]) && incomplete(segs[1])) {
        Segment1 g = (segs[0].y1 - segs[0].y0) >= (segs[1].y1 - segs[1].y0) ? segs[0] : segs[1];
        g.y0 = segs[0].y0;
        g.y1 = segs[1].y1;
        segs = {g};
    } else if (segs.size() >= 2) {
        if (incomplete(segs.front())) {
            segs[1].y0 = segs[0].y0;
            segs.erase(segs.begin());
        }
        if (segs.size() >= 2 && incomplete(segs.back())) {
            segs[segs.size() - 2].y1 = segs.back().y1;
            segs.pop_back();
        }
    }

    const bool up = c.xhi > c.xlo;
    auto param_of = [&](double y, double& x) {
        if (y == u) {
            x = up ? c.xlo : c.xhi;
            return up ? c.lo : c.hi;
        }
        if (y == v) {
            x = up ? c.xhi : c.xlo;
            return up ? c.hi : c.lo;
        }
        const Solved s = solve_level(fp, c.lo, c.hi, n, y, up);
        x = s.x;
        return s.a;
    };
    for (auto& g : segs) {
        double x0, x1;
        const double a0 = param_of(g.y0, x0), a1 = param_of(g.y1, x1);
        ParamInterval ch = c;
        ch.lo = std::min(a0, a1);
        ch.hi = std::max(a0, a1);
        ch.xlo = a0 <= a1 ? x0 : x1;
        ch.xhi = a0 <= a1 ? x1 : x0;
        ch.parent = c.id;
        if (!(ch.hi > ch.lo)) continue;
        if (g.type == 2) {
            out.pieces.push_back({ch.lo, ch.hi, PieceStatus::excluded, "exclusion zone"});
            continue;
        }
        if (g.type == 0) {
            if (g.complete) {
                ch.returns.push({n, g.side * (b.Delta - 1), esc.k, true, true, 0});
                ch.bound_until = n;
                ch.escape_pending = true;
                out.escapes.emplace_back(static_cast<int>(out.kept.size()), g.side);
            }
        } else {
            const int p = bound_period_interval(fp, b, ch.lo, ch.hi, g.m);
            ch.returns.push({n, g.m, g.k, true, false, p});
            ch.bound_until = n + p;
            const IntervalAddress host = cell(g.m, g.k);
            const double tol = 1e-12 * std::fabs(host.hi);
            ++out.host_checks;
            if (!(g.y0 <= host.lo + tol && g.y1 >= host.hi - tol && g.y0 >= host.plus_lo - tol &&
                  g.y1 <= host.plus_hi + tol))
                ++out.host_fails;
        }
        out.kept.push_back(ch);
        out.fresh.push_back(true);
        out.pieces.push_back({ch.lo, ch.hi, PieceStatus::kept, g.type == 0 ? "escape" : "essential return"});
    }

    // deep children sampled for the bound-period checks, before exclusion
    for (int sign : {1, -1}) {
        for (int m = b.Delta; m <= b.Delta + 3; ++m) {
            std::vector<int> ks;
            for (int k = 1; k <= m * m; ++k) {
                const IntervalAddress a = cell(sign * m, k);
                if (a.lo >= u && a.hi <= v) ks.push_back(k);
            }
            if (!ks.empty()) out.candidates.push_back({c.lo, c.hi, n, sign * m, ks[ks.size() / 2]});
        }
    }
    return out;
}

double min_expansion(const FamilyParams& fp, double a, int m, int steps)
{
    const double sg = m > 0 ? 1.0 : -1.0;
    const double lo = -(std::abs(m) + 2.0), hi = -(std::abs(m) - 1.0);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 33; ++i) {
        const double x = sg * std::exp(lo + (hi - lo) * i / 32);
        worst = std::min(worst, std::fabs(iterate_derivative(fp, a, x, steps)));
    }
    return worst;
}

std::vector<CheckRecord> bound_checks(const FamilyParams& fp, const ConstantsBundle& b, const Candidate& cd)
{
    const bool up = xi_plus(fp, cd.hi, cd.n) > xi_plus(fp, cd.lo, cd.n);
    const IntervalAddress host = cell(cd.m, cd.k);
    const double p0 = solve_level(fp, cd.lo, cd.hi, cd.n, host.lo, up).a;
    const double p1 = solve_level(fp, cd.lo, cd.hi, cd.n, host.hi, up).a;
    const double lo = std::min(p0, p1), hi = std::max(p0, p1);
    const double mid = lo + (hi - lo) / 2;
    const double limit = b.bound_period_limit(cd.m);
    const int am = std::abs(cd.m);
    std::vector<CheckRecord> out;

    const int pa = bound_period_at(fp, b, mid, cd.m);
    out.push_back({"bound_period", cd.n, double(pa), limit, limit - pa, pa <= limit});
    {
        const double val = min_expansion(fp, mid, cd.m, pa + 1);
        const double bound = std::exp((1.0 - b.kappa1) * am);
        out.push_back({"bound_expansion", cd.n, val, bound, std::log(val / bound), val >= bound});
    }
    const int pw = bound_period_interval(fp, b, lo, hi, cd.m);
    out.push_back({"bound_period_interval", cd.n, double(pw), limit, limit - pw, pw < limit});
    {
        double val = std::numeric_limits<double>::infinity();
        for (double a : {lo, mid, hi}) val = std::min(val, min_expansion(fp, a, cd.m, pw + 1));
        const double bound = std::exp((1.0 - b.kappa2) * am);
        out.push_back({"bound_expansion_interval", cd.n, val, bound, std::log(val / bound), val >= bound});
    }
    {
        const double d = distortion_bound(fp, mid, cd.m, pa);
        out.push_back({"distortion", cd.n, d, 0.0, 0.0, std::isfinite(d)});
    }
    return out;
}

}  // namespace

RefineResult refine_step(const FamilyParams& fp, const Generation& prev, const ConstantsBundle& b, long& next_id,
                         const RefineOptions& opt)
{
    const int n = prev.n + 1;
    std::vector<Work> work(prev.intervals.size());
    detail::parallel_for(work.size(), opt.threads,
                         [&](std::size_t i) { work[i] = process(fp, prev.intervals[i], n, b, opt); });

    RefineResult r;
    Generation& g = r.next;
    g.n = n;
    std::vector<Candidate> candidates;
    int host_checks = 0, host_fails = 0;
    for (std::size_t i = 0; i < work.size(); ++i) {
        Work& w = work[i];
        switch (w.kind) {
        case Kind::bound: ++g.bound_steps; break;
        case Kind::free: ++g.free_steps; break;
        case Kind::inessential: ++g.inessential; break;
        case Kind::essential: ++g.essential; break;
        case Kind::quarantined: break;
        }
        if (w.escape_return)
            r.escape_returns.push_back({prev.intervals[i].id, *w.escape_return});
        std::vector<long> ids;
        for (std::size_t j = 0; j < w.kept.size(); ++j) {
            if (w.fresh[j]) w.kept[j].id = next_id++;
            ids.push_back(w.kept[j].id);
        }
        for (auto [idx, side] : w.escapes) {
            const ParamInterval& e = w.kept[idx];
            r.new_escapes.push_back({ids[idx], e.lo, e.hi, n, side, std::nullopt, 0.0});
            ++g.escapes;
        }
        for (auto& p : w.pieces) {
            if (p.status == PieceStatus::excluded) g.excluded_measure += p.hi - p.lo;
            if (p.status == PieceStatus::quarantined) {
                g.excluded_measure += p.hi - p.lo;
                g.quarantined_measure += p.hi - p.lo;
            }
        }
        for (auto& k : w.kept) g.intervals.push_back(std::move(k));
        r.pieces.insert(r.pieces.end(), w.pieces.begin(), w.pieces.end());
        candidates.insert(candidates.end(), w.candidates.begin(), w.candidates.end());
        host_checks += w.host_checks;
        host_fails += w.host_fails;
    }
    if (host_checks > 0)
    {
        CheckRecord hc{"host", n, double(host_fails), 0.0, double(-host_fails), host_fails == 0};
        hc.count = host_checks;
        r.checks.push_back(hc);
    }

    // spread the sampled candidates over the list
    std::vector<Candidate> chosen;
    const std::size_t want = std::min<std::size_t>(candidates.size(), std::max(opt.check_candidates, 0));
    for (std::size_t j = 0; j < want; ++j) chosen.push_back(candidates[j * candidates.size() / want]);
    std::vector<std::vector<CheckRecord>> res(chosen.size());
    detail::parallel_for(chosen.size(), opt.threads, [&](std::size_t j) { res[j] = bound_checks(fp, b, chosen[j]); });
    for (auto& v : res) r.checks.insert(r.checks.end(), v.begin(), v.end());

    for (auto& iv : g.intervals) g.survivor_measure += iv.length();
    g.count = static_cast<int>(g.intervals.size());
    return r;
}

Generation apply_FA_filter(const FamilyParams& fp, const Generation& gen, const ConstantsBundle& b, int samples,
                           int threads)
{
    if (samples < 1) throw DomainError("apply_FA_filter: samples >= 1");
    Generation out = gen;
    if (gen.n < b.N1) return out;
    std::vector<char> pass(gen.intervals.size(), 1);
    detail::parallel_for(gen.intervals.size(), threads, [&](std::size_t i) {
        const ParamInterval& w = gen.intervals[i];
        // without deep returns every iterate of the interval is free
        if (!w.returns.has_deep()) return;
        for (int j = 0; j < samples; ++j) {
            const double a = samples == 1 ? w.lo + w.length() / 2 : w.lo + w.length() * j / (samples - 1);
            if (!itinerary(fp, a, gen.n, b).passes_FA) {
                pass[i] = 0;
                return;
            }
        }
    });
    out.intervals.clear();
    out.survivor_measure = 0;
    for (std::size_t i = 0; i < gen.intervals.size(); ++i) {
        if (pass[i]) {
            out.intervals.push_back(gen.intervals[i]);
            out.survivor_measure += gen.intervals[i].length();
        } else {
            out.excluded_measure += gen.intervals[i].length();
        }
    }
    out.count = static_cast<int>(out.intervals.size());
    return out;
}

ConstantsBundle calibrate_bundle(const FamilyParams& fp, ConstantsBundle b, int n_max, std::uint64_t seed,
                                 InitialInterval* init)
{
    b.N = comparability_horizon(b.eta1, b.lambda);
    b.N0 = b.N;
    const InitialInterval ii = find_initial_interval(fp, b.Delta, b.eta1, b.lambda0, b.N0);
    b.N1 = ii.N1;
    b.a0 = ii.a0;
    const ComparabilityCalibration cc =
        calibrate_comparability(fp, b.a0, b.lambda, b.eta1, b.N, std::max(n_max, 30), 64, seed);
    b.A = cc.A;
    const ExpansionCalibration ec = calibrate_expansion(fp, b.a0, b.Delta, 2000, 60, seed + 1);
    b.c = ec.c;
    b.lambda_c = ec.lambda_c;
    if (init) *init = ii;
    return b;
}

InductionRun run_induction(const FamilyParams& fp, const ConstantsBundle& bundle, int n_max,
                           const InductionOptions& opt)
{
    if (n_max < 1) throw DomainError("run_induction: n_max >= 1 required");
    InductionRun run;
    run.n_max = n_max;
    run.bundle = calibrate_bundle(fp, bundle, n_max, opt.seed, &run.init);
    const ConstantsBundle& b = run.bundle;
    run.a_lo = 0;
    run.a_hi = b.a0;
    if (opt.a_range) {
        run.a_lo = opt.a_range->first;
        run.a_hi = opt.a_range->second;
        if (!(run.a_lo >= 0 && run.a_hi <= b.a0 && run.a_lo < run.a_hi))
            throw ParameterRangeError("run_induction: a_range must lie in [0, a0] = [0, " + fmt_num(b.a0) + "]");
    }
    const double total = run.a_hi - run.a_lo;

    ParamInterval root;
    root.lo = run.a_lo;
    root.hi = run.a_hi;
    long next_id = 1;

    const int start = std::min(b.N1 - 1, n_max);
    for (int n = 1; n <= start; ++n) {
        Generation g;
        g.n = n;
        g.survivor_measure = total;
        g.count = 1;
        if (n == start || opt.keep_all) {
            root.generation = n;
            root.xlo = xi_plus(fp, root.lo, n);
            root.xhi = xi_plus(fp, root.hi, n);
            g.intervals = {root};
        }
        run.generations.push_back(std::move(g));
    }

    const int gens = std::max(1, n_max - b.N1 + 1);
    RefineOptions ro;
    ro.threads = opt.threads;
    ro.slack = opt.slack;
    ro.check_candidates = (opt.check_budget / 5 + gens - 1) / gens;
    std::unordered_map<long, std::size_t> escape_index;
    const double escape_floor = opt.slack * std::exp(-b.kappa * b.Delta);

    for (int n = b.N1; n <= n_max; ++n) {
        Generation& prev = run.generations.back();
        RefineResult r = refine_step(fp, prev, b, next_id, ro);
        Generation g = apply_FA_filter(fp, r.next, b, 9, opt.threads);
        if (!opt.keep_all) prev.intervals.clear();

        run.checks.insert(run.checks.end(), r.checks.begin(), r.checks.end());
        if (!r.escape_returns.empty()) {
            double shortest = std::numeric_limits<double>::infinity();
            for (auto& [id, ret] : r.escape_returns) {
                shortest = std::min(shortest, ret.second);
                auto it = escape_index.find(id);
                if (it == escape_index.end()) continue;
                EscapeEvent& e = run.escapes[it->second];
                e.next_return = ret.first;
                e.next_image_length = ret.second;
                escape_index.erase(it);
            }
            CheckRecord c{"escape_return", n, shortest, escape_floor, shortest - escape_floor,
                          shortest >= escape_floor};
            c.count = static_cast<int>(r.escape_returns.size());
            run.checks.push_back(c);
        }
        run.escapes_total += static_cast<long>(r.new_escapes.size());
        for (auto& e : r.new_escapes) {
            if (run.escapes.size() >= opt.escape_log) break;
            escape_index[e.id] = run.escapes.size();
            run.escapes.push_back(e);
        }

        const double bound = 2.0 * b.A * std::pow(b.lambda, -n) / opt.slack;
        double widest = 0;
        for (auto& iv : g.intervals) widest = std::max(widest, iv.length());
        CheckRecord el{"escape_length", n, widest, bound, 1.0 - widest / bound, widest <= bound};
        el.count = g.count;
        run.checks.push_back(el);

        run.cumulative_excluded += g.excluded_measure;
        run.quarantined += g.quarantined_measure;
        run.max_bookkeeping_error =
            std::max(run.max_bookkeeping_error, std::fabs(g.survivor_measure + run.cumulative_excluded - total));
        const bool empty = g.intervals.empty();
        run.generations.push_back(std::move(g));
        if (empty) {
            run.terminated_early = true;
            run.diagnostics = fmt::format("survivor set empty at n = {}", n);
            break;
        }
    }

    // growth and deviation on sampled survivors
    const Generation& fin = run.generations.back();
    if (!fin.intervals.empty() && fin.n >= b.N1) {
        const std::size_t count = fin.intervals.size();
        const std::size_t want = std::min<std::size_t>(count, 200);
        int eg_fail = 0, dev_max = 0;
        for (std::size_t j = 0; j < want; ++j) {
            const ParamInterval& iv = fin.intervals[j * count / want];
            const double a = iv.lo + iv.length() / 2;
            const CriticalOrbit o = critical_orbit(fp, a, fin.n);
            if (!check_growth(o, b.lambda, b.eta1, b.N).passes_EG) ++eg_fail;
            dev_max = std::max(dev_max, deviation_statistic(fp, a, fin.n, b).T);
        }
        run.checks.push_back({"eg_survivors", fin.n, double(eg_fail), 0.0, double(-eg_fail), eg_fail == 0});
        const double lim = b.alpha * fin.n;
        run.checks.push_back({"deviation", fin.n, double(dev_max), lim, lim - dev_max, dev_max < lim});
    }
    return run;
}

double invert_critical_map(const FamilyParams& fp, double lo, double hi, int n, double target, int screen_points)
{
    if (!(lo < hi)) throw DomainError("invert_critical_map: lo < hi required");
    const double vlo = xi_plus(fp, lo, n), vhi = xi_plus(fp, hi, n);
    if (target == vlo) return lo;
    if (target == vhi) return hi;
    if (!((vlo < target && target < vhi) || (vhi < target && target < vlo)))
        throw NotFound(fmt::format("invert_critical_map: no bracket, target {} outside image [{}, {}]",
                                   fmt_num(target), fmt_num(std::min(vlo, vhi)), fmt_num(std::max(vlo, vhi))));
    if (!screen_monotone(fp, lo, hi, n, screen_points, vlo, vhi))
        throw NumericalError("invert_critical_map: diffeomorphism hypothesis violated (non-monotone screen)");
    return solve_level(fp, lo, hi, n, target, vhi > vlo).a;
}

Deviation deviation_statistic(const FamilyParams& fp, double a, int n, const ConstantsBundle& b)
{
    const Itinerary it = itinerary(fp, a, n, b);
    Deviation d;
    d.n = it.n;
    d.T = it.T;
    d.F = it.F;
    d.inequality_holds = it.n - it.T >= it.F;
    return d;
}

namespace {

nlohmann::json bundle_json(const ConstantsBundle& b)
{
    return {{"s", b.s},           {"Delta", b.Delta},   {"delta", b.delta},     {"alpha", b.alpha},
            {"beta", b.beta},     {"lambda0", b.lambda0}, {"c_prime", b.c_prime}, {"lambda", b.lambda},
            {"kappa1", b.kappa1}, {"kappa2", b.kappa2}, {"kappa", b.kappa},     {"A", b.A},
            {"eta1", b.eta1},     {"N", b.N},           {"N0", b.N0},           {"N1", b.N1},
            {"a0", b.a0},         {"c", b.c},           {"lambda_c", b.lambda_c}};
}

}  // namespace

void save_run(const InductionRun& run, const std::string& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json j;
    j["bundle"] = bundle_json(run.bundle);
    const InitialInterval& ii = run.init;
    j["initial_interval"] = {{"a0", ii.a0},         {"N1", ii.N1},         {"N0", ii.N0},
                             {"a_N0", ii.a_N0},     {"x0", ii.x0},         {"lambda0_prime", ii.lambda0_prime},
                             {"a_minus_delta", ii.a_minus_delta}, {"a_plus_delta", ii.a_plus_delta}};
    j["a_range"] = {run.a_lo, run.a_hi};
    j["n_max"] = run.n_max;
    j["terminated_early"] = run.terminated_early;
    j["diagnostics"] = run.diagnostics;
    j["escapes_total"] = run.escapes_total;
    j["cumulative_excluded"] = run.cumulative_excluded;
    j["quarantined"] = run.quarantined;
    j["max_bookkeeping_error"] = run.max_bookkeeping_error;
    auto& gens = j["generations"] = nlohmann::json::array();
    for (auto& g : run.generations)
        gens.push_back({{"n", g.n},
                        {"intervals", g.count},
                        {"survivor_measure", g.survivor_measure},
                        {"excluded_measure", g.excluded_measure},
                        {"quarantined_measure", g.quarantined_measure},
                        {"escapes", g.escapes},
                        {"bound", g.bound_steps},
                        {"free", g.free_steps},
                        {"inessential", g.inessential},
                        {"essential", g.essential}});
    auto& esc = j["escapes"] = nlohmann::json::array();
    for (auto& e : run.escapes) {
        nlohmann::json x = {{"id", e.id}, {"lo", e.lo}, {"hi", e.hi}, {"theta", e.theta}, {"side", e.side}};
        if (e.next_return) {
            x["next_return"] = *e.next_return;
            x["next_image_length"] = e.next_image_length;
        }
        esc.push_back(x);
    }
    std::ofstream(fs::path(dir) / "run.json") << j.dump(2) << '\n';

    const Generation& fin = run.last();
    std::ofstream sv(fs::path(dir) / fmt::format("survivors_{}.csv", fin.n));
    sv << "lo,hi,generation\n";
    for (auto& iv : fin.intervals) sv << fmt_num(iv.lo) << ',' << fmt_num(iv.hi) << ',' << iv.generation << '\n';

    std::ofstream ck(fs::path(dir) / "checks.csv");
    ck << "check,n,margin,pass,value,bound,count\n";
    for (auto& c : run.checks)
        ck << c.id << ',' << c.n << ',' << fmt_num(c.margin) << ',' << (c.pass ? 1 : 0) << ','
           << fmt_num(c.value) << ',' << fmt_num(c.bound) << ',' << c.count << '\n';
}

}  // namespace rovella
