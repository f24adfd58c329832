// Runs the ten acceptance criteria and prints one PASS/FAIL line per criterion.
//
//   acceptance [--only N]... [--known-failure ID]...   (ID as printed, e.g. 6(c))
//
// Exit status is 0 when the failing set equals the --known-failure set, so a
// regression and an unexpected pass both surface in ctest.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cascade/dti.hpp"
#include "cascade/graph.hpp"
#include "cascade/observables.hpp"
#include "cascade/pipeline.hpp"
#include "cascade/sim.hpp"
#include "cascade/tailstats.hpp"
#include "cascade/trace.hpp"
#include "cascade/util.hpp"

using namespace cascade;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

TraceBundle concat(std::vector<TraceBundle>& parts) {
    TraceBundle out;
    for (auto& b : parts) append_bundle(out, std::move(b));
    return out;
}

EventMix mix_with_merge(double m) {
    const double x = 1.0 - m - 0.05;
    EventMix e;
    e.p = {0.25 / 0.8 * x, 0.30 / 0.8 * x, 0.25 / 0.8 * x, m, 0.05};
    return e;
}

const std::vector<int> kSizes{8, 16, 32, 64, 128};

// ---- 1

Outcome worked_example() {
    const auto t0 = Clock::now();
    auto b = load_trace(std::string(CASCADE_DATA_DIR) + "/worked_example.jsonl");
    PipelineConfig cfg;
    auto out = analyze_bundle(b, cfg);
    const double dt = seconds_since(t0);
    const auto& r = out.runs.at(0);
    auto one = [&](Observable o) -> long {
        const auto& s = r.samples.at(o);
        return s.size() == 1 ? s[0].x : -1;
    };
    const long wave = one(Observable::revision_wave), burst = one(Observable::contradiction_burst),
               fan = one(Observable::merge_fanin), tce = one(Observable::tce);
    const bool cascade_ok = r.cascades.size() == 1 && r.cascades[0].member_claims.size() == 5;
    Outcome o;
    o.pass = wave == 3 && burst == 1 && fan == 3 && tce == 5 && cascade_ok && dt < 1.0;
    o.detail = "wave=" + std::to_string(wave) + " burst=" + std::to_string(burst) + " fanin=" + std::to_string(fan) +
               " tce=" + std::to_string(tce) + " cascades=" + std::to_string(r.cascades.size()) + " (" +
               std::to_string(cascade_ok ? 5 : -1) + " claims) in " + fmt("%.3fs", dt);
    return o;
}

// ---- 2

Outcome mle_recovery() {
    Rng rng(20250101);
    auto pl = sample_power_law(2.5, 5, 50000, rng);
    auto t0 = Clock::now();
    auto fpl = fit_family(pl, Family::power_law, 5);
    const double t_pl = seconds_since(t0);

    auto tpl = sample_truncated_power_law(2.3, 50.0, 1, 50000, rng);
    t0 = Clock::now();
    auto ftpl = fit_family(tpl, Family::truncated_power_law, 1);
    const double t_tpl = seconds_since(t0);

    Outcome o;
    o.pass = fpl.alpha_hat >= 2.45 && fpl.alpha_hat <= 2.55 && std::abs(ftpl.alpha_hat - 2.3) <= 0.07 &&
             std::abs(ftpl.xc_hat - 50.0) <= 0.25 * 50.0 && t_pl < 60 && t_tpl < 60;
    o.detail = "PL alpha=" + fmt("%.4f", fpl.alpha_hat) + " (" + fmt("%.3fs", t_pl) + "); TPL alpha=" +
               fmt("%.4f", ftpl.alpha_hat) + " xc=" + fmt("%.2f", ftpl.xc_hat) + " (" + fmt("%.3fs", t_tpl) + ")";
    return o;
}

// ---- 3

Outcome model_selection() {
    int favored = 0, exp_ok = 0;
    for (int seed = 0; seed < 20; ++seed) {
        Rng rng(7000 + seed);
        auto s = sample_truncated_power_law(2.3, 50.0, 1, 50000, rng);
        auto tpl = fit_family(s, Family::truncated_power_law, 1);
        auto ln = compare_fits(s, tpl, fit_family(s, Family::log_normal, 1));
        auto pl = compare_fits(s, tpl, fit_family(s, Family::power_law, 1));
        favored += ln.lr > 0 && ln.p_value < 0.05 && pl.lr > 0 && pl.p_value < 0.05;

        auto e = sample_exponential(0.1, 1, 50000, rng);
        auto c = compare_models(e, 1, Family::exponential, Family::truncated_power_law);
        // rejected only when TPL is significantly better
        const bool rejected = !c.identical && c.lr < 0 && c.p_value < 0.05;
        exp_ok += !rejected;
    }
    Outcome o;
    o.pass = favored >= 18 && exp_ok >= 18;
    o.detail = "TPL favored over LN and PL in " + std::to_string(favored) + "/20 seeds; exponential kept in " +
               std::to_string(exp_ok) + "/20";
    return o;
}

// ---- 4

double brute_gini(const std::vector<double>& v) {
    double num = 0, sum = 0;
    for (double a : v) {
        sum += a;
        for (double b : v) num += std::abs(a - b);
    }
    return num / (2.0 * static_cast<double>(v.size()) * sum);
}

double brute_neff(const std::vector<double>& v) {
    double sum = 0, s2 = 0;
    for (double a : v) sum += a;
    for (double a : v) s2 += (a / sum) * (a / sum);
    return 1.0 / s2;
}

double brute_ks(const std::vector<long>& samples, const TailFit& f) {
    std::vector<long> tail;
    for (long x : samples)
        if (x >= f.x_min) tail.push_back(x);
    double ks = 0;
    for (long v : tail) {
        double above = 0;
        for (long x : tail) above += x >= v;
        double below = 0;
        for (long x = f.x_min; x < v; ++x) below += std::exp(f.log_pmf(x));
        ks = std::max(ks, std::abs(above / static_cast<double>(tail.size()) - (1.0 - below)));
    }
    return ks;
}

std::string random_trace(Rng& rng, int n) {
    std::ostringstream os;
    std::vector<std::string> made;
    std::int64_t step = 0;
    for (int i = 0; i < n; ++i) {
        const std::string id = "c" + std::to_string(i);
        ojson r;
        r["run_id"] = "x";
        r["step_id"] = ++step;
        r["agent_id"] = "a" + std::to_string(rng.below(6));
        r["timestamp"] = step;
        r["message_length"] = 1;
        const double u = rng.uniform();
        std::vector<std::string> parents;
        std::string type, status;
        if (made.empty() || u < 0.15) {
            type = "propose_claim", status = "proposed";
        } else if (u < 0.45) {
            type = "revise_claim", status = "revised";
            parents.push_back(made[rng.below(made.size())]);
        } else if (u < 0.7) {
            type = "contradict_claim", status = "contradictory";
            parents.push_back(made[rng.below(made.size())]);
        } else if (u < 0.9 && made.size() >= 2) {
            type = "merge_claims", status = "merged";
            std::set<std::string> ps;
            while (ps.size() < 2 + std::min<std::size_t>(rng.below(3), made.size() - 2))
                ps.insert(made[rng.below(made.size())]);
            parents.assign(ps.begin(), ps.end());
        } else {
            r["event_type"] = "endorse_claim";
            r["target_claim_id"] = made[rng.below(made.size())];
            os << r.dump() << '\n';
            continue;
        }
        r["event_type"] = type;
        if (!parents.empty()) r["target_claim_id"] = parents.front();
        r["claim"] = {{"claim_id", id}, {"parent_claim_ids", parents}, {"claim_status", status}};
        os << r.dump() << '\n';
        made.push_back(id);
    }
    return os.str();
}

Outcome brute_force() {
    Rng rng(404);
    double worst_ks = 0, worst_gini = 0, worst_neff = 0;
    long cascade_mismatch = 0, instances = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = 10 + rng.below(91);
        auto s = trial % 2 ? sample_power_law(2.2, 1, n, rng) : sample_truncated_power_law(2.0, 15.0, 1, n, rng);
        for (auto fam : {Family::power_law, Family::truncated_power_law, Family::log_normal, Family::exponential}) {
            try {
                auto f = fit_family(s, fam, 1);
                worst_ks = std::max(worst_ks, std::abs(f.ks - brute_ks(s, f)));
            } catch (const InsufficientTail&) {
            }
        }
        std::vector<double> v(n);
        for (auto& x : v) x = static_cast<double>(1 + rng.below(50));
        worst_gini = std::max(worst_gini, std::abs(gini(v) - brute_gini(v)));
        worst_neff = std::max(worst_neff, std::abs(n_eff(v) - brute_neff(v)));

        // cascades: follow the earliest-step parent to a parentless claim
        auto b = parse_trace_text(random_trace(rng, static_cast<int>(n)));
        auto g = build_claim_graph(b);
        auto cs = extract_cascades(g, b);
        std::map<std::string, const EventRecord*> by_id;
        for (const auto& r : b.records)
            if (r.claim) by_id[r.claim->claim_id] = &r;
        std::function<std::string(const std::string&)> root_of = [&](const std::string& id) -> std::string {
            const auto* r = by_id.at(id);
            if (r->claim->parent_claim_ids.empty()) return id;
            const EventRecord* best = nullptr;
            for (const auto& p : r->claim->parent_claim_ids)
                if (!best || by_id.at(p)->step_id < best->step_id) best = by_id.at(p);
            return root_of(best->claim->claim_id);
        };
        std::map<std::string, std::set<std::size_t>> events;
        std::map<std::string, std::set<std::string>> members;
        for (std::size_t i = 0; i < b.records.size(); ++i) {
            const auto& r = b.records[i];
            const auto root = root_of(r.claim ? r.claim->claim_id : *r.target_claim_id);
            events[root].insert(i);
            if (r.claim) members[root].insert(r.claim->claim_id);
        }
        if (cs.size() != members.size()) ++cascade_mismatch;
        for (const auto& c : cs) {
            std::set<std::string> got;
            for (auto m : c.member_claims) got.insert(g.nodes[m].claim_id);
            std::set<std::size_t> ev(c.member_event_indices.begin(), c.member_event_indices.end());
            if (!members.count(c.root_claim_id) || got != members[c.root_claim_id] || ev != events[c.root_claim_id])
                ++cascade_mismatch;
        }
        ++instances;
    }
    Outcome o;
    o.pass = worst_ks <= 1e-12 && worst_gini <= 1e-12 && worst_neff <= 1e-12 && cascade_mismatch == 0;
    o.detail = std::to_string(instances) + " instances: max |dKS|=" + fmt("%.2e", worst_ks) + " |dGini|=" +
               fmt("%.2e", worst_gini) + " |dNeff|=" + fmt("%.2e", worst_neff) +
               " cascade mismatches=" + std::to_string(cascade_mismatch);
    return o;
}

// ---- 5

Outcome attachment() {
    Outcome o;
    o.pass = true;
    for (double beta : {0.0, 0.07, 0.15}) {
        std::vector<TraceBundle> parts;
        for (int s = 0; s < 40; ++s) {
            SimConfig c;
            c.N = 64;
            c.beta = beta;
            c.seed = 100 + s;
            c.steps_per_agent = 60;
            parts.push_back(run_simulation(c));
        }
        auto all = concat(parts);
        std::vector<ClaimGraph> graphs;
        for (const auto& id : all.run_ids()) graphs.push_back(build_claim_graph(all, id));
        std::vector<const ClaimGraph*> gp;
        for (const auto& g : graphs) gp.push_back(&g);
        auto e = estimate_attachment(all, gp);
        const double tol = beta == 0.0 ? 0.03 : 0.05;
        const bool ok = e.decisions >= 100000 && std::abs(e.beta_hat - beta) <= tol;
        o.pass = o.pass && ok;
        o.detail += (o.detail.empty() ? "" : "; ") + std::string("beta=") + fmt("%.2f", beta) + " -> " +
                    fmt("%.4f", e.beta_hat) + " (" + std::to_string(e.decisions) + " decisions)";
    }
    return o;
}

// ---- 6 and 7 share a sweep

struct SweepStats {
    long events = 0;
    std::vector<long> tce;
    std::vector<ExtremeSample> extremes;
    std::map<int, double> e_active10, delta_active10;
};

SweepStats default_sweep(double beta) {
    SweepStats st;
    for (int N : kSizes) {
        double e = 0, d = 0;
        for (int s = 0; s < 5; ++s) {
            SimConfig c;
            c.N = N;
            c.beta = beta;
            c.seed = static_cast<std::uint64_t>(s);
            auto b = run_simulation(c);
            st.events += static_cast<long>(b.records.size());
            auto a = analyze_run(b, b.run_ids().front());
            for (const auto& x : a.samples.at(Observable::tce)) st.tce.push_back(x.x);
            auto ex = extreme_samples(a.samples.at(Observable::tce));
            st.extremes.insert(st.extremes.end(), ex.begin(), ex.end());
            e += a.concentration->E_active[0] / 5.0;
            d += a.concentration->delta_active[0] / 5.0;
        }
        st.e_active10[N] = e;
        st.delta_active10[N] = d;
    }
    return st;
}

std::vector<Outcome> law_regeneration(const SweepStats& st, double secs) {
    auto tail = summarize_tail("tce", st.tce, {});
    std::vector<Outcome> out(3);
    const bool budget = st.events <= 100000 && secs <= 600;
    const std::string scale = std::to_string(st.events) + " events, " + fmt("%.1fs", secs);
    if (!tail.truncated_power_law || !tail.tpl_vs_ln || !tail.tpl_vs_pl) {
        for (auto& o : out) o.detail = "TCE tail not fittable: " + tail.status;
        return out;
    }
    const auto& ln = *tail.tpl_vs_ln;
    const auto& pl = *tail.tpl_vs_pl;
    out[0].pass = budget && ln.lr > 0 && ln.p_value < 0.05 && pl.lr > 0 && pl.p_value < 0.05;
    out[0].detail = "vs LN lr=" + fmt("%.2f", ln.lr) + " p=" + fmt("%.3g", ln.p_value) + "; vs PL lr=" +
                    fmt("%.2f", pl.lr) + " p=" + fmt("%.3g", pl.p_value) + " (x_min=" +
                    std::to_string(tail.truncated_power_law->x_min) + ", " + scale + ")";

    const double alpha = tail.truncated_power_law->alpha_hat;
    out[1].pass = budget && alpha > 2 && alpha < 3;
    out[1].detail = "alpha_hat=" + fmt("%.4f", alpha) + " xc_hat=" + fmt("%.1f", tail.truncated_power_law->xc_hat);

    auto sc = fit_extreme_scaling(st.extremes, alpha);
    bool increasing = true;
    std::string means;
    for (std::size_t i = 0; i < sc.points.size(); ++i) {
        if (i && !(sc.points[i].mean_xmax > sc.points[i - 1].mean_xmax)) increasing = false;
        means += (i ? "," : "") + fmt("%.1f", sc.points[i].mean_xmax);
    }
    const double gth = 1.0 / (alpha - 1.0);
    out[2].pass = budget && increasing && sc.points.size() == kSizes.size() && std::abs(sc.gamma_hat - gth) <= 0.15;
    out[2].detail = "<x_max>=[" + means + "] gamma_hat=" + fmt("%.3f", sc.gamma_hat) + " gamma_th=" +
                    fmt("%.3f", gth) + " diff=" + fmt("%+.3f", sc.gamma_hat - gth);
    return out;
}

Outcome concentration_direction(const SweepStats& reinforced, const SweepStats& uniform) {
    Outcome o;
    bool above = true, monotone = true, flat = true;
    std::string e15, d15, e0;
    double prev = -1;
    for (int N : kSizes) {
        const double e = reinforced.e_active10.at(N), d = reinforced.delta_active10.at(N);
        above = above && e > 0.10;
        monotone = monotone && d >= prev;
        prev = d;
        flat = flat && std::abs(uniform.e_active10.at(N) - 0.10) <= 0.03;
        e15 += fmt(" %.3f", e);
        d15 += fmt(" %.3f", d);
        e0 += fmt(" %.3f", uniform.e_active10.at(N));
    }
    o.pass = above && monotone && flat;
    o.detail = "beta=0.15 E10:" + e15 + " | delta10:" + d15 + " | beta=0 E10:" + e0;
    return o;
}

// ---- 8

std::vector<Outcome> dti_behaviour() {
    std::vector<TraceBundle> cal_parts;
    for (int N : kSizes)
        for (int s = 0; s < 5; ++s) {
            SimConfig c;
            c.N = N;
            c.seed = 1000 + static_cast<std::uint64_t>(s);
            cal_parts.push_back(run_simulation(c));
        }
    const auto params = calibrate(concat(cal_parts)).at("fully_connected/qa");
    auto off = params;
    off.delta_c = std::numeric_limits<double>::infinity();

    std::vector<TraceBundle> base_parts, treat_parts;
    std::vector<DtiReport> reports;
    long off_triggers = 0, off_diffs = 0;
    for (int N : kSizes)
        for (int s = 0; s < 5; ++s) {
            SimConfig c;
            c.N = N;
            c.seed = static_cast<std::uint64_t>(s);
            c.event_mix = mix_with_merge(0.05);
            auto base = run_simulation(c);
            auto treated = run_with_dti(c, params);
            auto disabled = run_with_dti(c, off);
            off_triggers += static_cast<long>(disabled.report.triggers.size());
            off_diffs += serialize_trace(disabled.bundle) != serialize_trace(base);
            base_parts.push_back(std::move(base));
            treat_parts.push_back(std::move(treated.bundle));
            reports.push_back(std::move(treated.report));
        }
    auto rep = evaluate_intervention(concat(base_parts), concat(treat_parts), reports);
    const auto& b = rep.baseline;
    const auto& t = rep.treated;

    std::vector<Outcome> out(4);
    const std::string cal = "a_c=" + fmt("%.3f", params.a_c) + " beta_c=" + fmt("%.3f", params.beta_c_hat) +
                            " delta_c=" + fmt("%.3f", params.delta_c);
    const double cb = b.top_decile_conversion.value_or(std::nan("")), ct = t.top_decile_conversion.value_or(std::nan(""));
    out[0].pass = ct > cb;
    out[0].detail = "top-decile merge conversion " + fmt("%.4f", cb) + " -> " + fmt("%.4f", ct) + " (" +
                    std::to_string(t.executed_triggers) + " executed triggers; " + cal + ")";

    if (t.tce_tail && t.tce_tail->tpl_vs_ln && t.tce_tail->tpl_vs_pl) {
        const auto& ln = *t.tce_tail->tpl_vs_ln;
        const auto& pl = *t.tce_tail->tpl_vs_pl;
        out[1].pass = ln.lr > 0 && pl.lr > 0;
        out[1].detail = "treated vs LN lr=" + fmt("%.2f", ln.lr) + " vs PL lr=" + fmt("%.2f", pl.lr);
    } else {
        out[1].detail = "treated tail not fittable";
    }

    if (b.tce_tail && t.tce_tail && b.tce_tail->truncated_power_law && t.tce_tail->truncated_power_law) {
        const double xb = b.tce_tail->truncated_power_law->xc_hat, xt = t.tce_tail->truncated_power_law->xc_hat;
        out[2].pass = xt <= xb;
        out[2].detail = "xc_hat " + fmt("%.1f", xb) + " -> " + fmt("%.1f", xt) + " at x_min=" +
                        std::to_string(b.tce_tail->truncated_power_law->x_min);
    } else {
        out[2].detail = "TPL fit missing";
    }

    out[3].pass = off_triggers == 0 && off_diffs == 0;
    out[3].detail = std::to_string(off_triggers) + " triggers, " + std::to_string(off_diffs) +
                    " of 25 traces differ from baseline";
    return out;
}

// ---- 9

Outcome state_law() {
    Rng rng(99);
    long events = 0, triggers = 0, violations = 0;
    while (events < 1'000'000) {
        DtiParams p;
        p.a_c = 0.1 + 2.0 * rng.uniform();
        p.beta_c_hat = 0.3 + 1.2 * rng.uniform();
        p.delta_c = 5.0 * rng.uniform();
        DtiState s;
        std::vector<std::string> roots;
        std::map<std::string, std::vector<std::string>> claims;
        long next = 0;
        for (int i = 0; i < 10000 && events < 1'000'000; ++i, ++events) {
            EventRecord e;
            e.step_id = i + 1;
            std::string root;
            if (roots.empty() || rng.bernoulli(0.04)) {
                root = "c" + std::to_string(next++);
                roots.push_back(root);
                e.event_type = EventType::propose_claim;
                e.claim = ClaimPayload{root, {}, ClaimStatus::proposed};
            } else {
                root = roots[rng.below(roots.size())];
                const auto& cl = claims[root];
                const auto pick = [&] { return cl[rng.below(cl.size())]; };
                const double u = rng.uniform();
                const std::string id = "c" + std::to_string(next++);
                if (u < 0.1) {
                    e.event_type = EventType::endorse_claim;
                    e.target_claim_id = pick();
                } else if (u < 0.3 && cl.size() >= 2) {
                    e.event_type = EventType::merge_claims;
                    auto a = pick(), b = pick();
                    std::vector<std::string> ps{a};
                    if (b != a) ps.push_back(b);
                    e.claim = ClaimPayload{id, ps, ClaimStatus::merged};
                } else {
                    e.event_type = u < 0.6 ? EventType::revise_claim : EventType::contradict_claim;
                    e.claim = ClaimPayload{id, {pick()},
                                           u < 0.6 ? ClaimStatus::revised : ClaimStatus::contradictory};
                }
            }
            const RootState before = s.roots.count(root) ? s.roots.at(root) : RootState{};
            auto d = dti_step(s, p, e, root);
            const auto& st = s.roots.at(root);
            const long t = before.t + 1;
            const long M = before.M + (e.event_type == EventType::merge_claims);
            const double deficit = p.a_c * std::pow(static_cast<double>(t), p.beta_c_hat) - static_cast<double>(M);
            if (d) {
                ++triggers;
                if (st.t != 0 || st.M != 1) ++violations;
                if (!(deficit > p.delta_c) || !(d->deficit > p.delta_c)) ++violations;
            } else {
                if (st.t != t || st.M != M) ++violations;
            }
            if (e.claim) claims[root].push_back(e.claim->claim_id);
        }
    }
    Outcome o;
    o.pass = violations == 0 && triggers > 0;
    o.detail = std::to_string(events) + " events, " + std::to_string(triggers) + " triggers, " +
               std::to_string(violations) + " violations";
    return o;
}

// ---- 10

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path().string());
    return out;
}

Outcome determinism() {
    const auto root = fs::temp_directory_path() / "cascade_acceptance_det";
    fs::remove_all(root);
    std::vector<std::map<std::string, std::string>> snaps;
    for (int rep = 0; rep < 2; ++rep) {
        const auto dir = root / std::to_string(rep);
        PipelineConfig c;
        c.seed = 17;
        c.threads = rep == 0 ? 1 : 0;
        c.sweep.N = {8, 16, 32};
        c.sweep.replicates = 3;
        c.out = (dir / "sim").string();
        cmd_simulate(c);
        PipelineConfig a = c;
        a.inputs = {(dir / "sim").string()};
        a.out = (dir / "analyze").string();
        a.bootstrap = 50;
        cmd_analyze(a);
        PipelineConfig d = c;
        d.out = (dir / "dti").string();
        cmd_dti_run(d);
        PipelineConfig r = c;
        r.inputs = {(dir / "sim").string(), (dir / "dti").string()};
        r.out = (dir / "report").string();
        cmd_report(r);
        snaps.push_back(snapshot(dir));
    }
    long differing = 0;
    for (const auto& [k, v] : snaps[0]) differing += !snaps[1].count(k) || snaps[1].at(k) != v;
    differing += static_cast<long>(snaps[1].size() > snaps[0].size());
    fs::remove_all(root);
    Outcome o;
    o.pass = differing == 0 && snaps[0].size() > 20;
    o.detail = std::to_string(snaps[0].size()) + " files compared across two runs (threads 1 vs auto), " +
               std::to_string(differing) + " differ";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    std::set<std::string> known;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--only")
            only.insert(std::atoi(argv[i + 1]));
        else if (flag == "--known-failure")
            known.insert(argv[i + 1]);
        else {
            std::fprintf(stderr, "usage: acceptance [--only N]... [--known-failure ID]...\n");
            return 2;
        }
    }
    auto wanted = [&](int k) { return only.empty() || only.count(k); };

    std::set<std::string> failed;
    auto report = [&](const std::string& id, const Outcome& o) {
        std::printf("%s  %-4s %s\n", o.pass ? "PASS" : "FAIL", id.c_str(), o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) failed.insert(id);
    };

    if (wanted(1)) report("1", worked_example());
    if (wanted(2)) report("2", mle_recovery());
    if (wanted(3)) report("3", model_selection());
    if (wanted(4)) report("4", brute_force());
    if (wanted(5)) report("5", attachment());
    if (wanted(6) || wanted(7)) {
        const auto t0 = Clock::now();
        auto reinforced = default_sweep(0.15);
        const double secs = seconds_since(t0);
        if (wanted(6)) {
            auto o = law_regeneration(reinforced, secs);
            report("6(a)", o[0]);
            report("6(b)", o[1]);
            report("6(c)", o[2]);
        }
        if (wanted(7)) report("7", concentration_direction(reinforced, default_sweep(0.0)));
    }
    if (wanted(8)) {
        auto o = dti_behaviour();
        report("8(a)", o[0]);
        report("8(b)", o[1]);
        report("8(c)", o[2]);
        report("8(d)", o[3]);
    }
    if (wanted(9)) report("9", state_law());
    if (wanted(10)) report("10", determinism());

    std::set<std::string> expected;
    for (const auto& k : known)
        if (wanted(std::atoi(k.c_str()))) expected.insert(k);
    for (const auto& k : failed)
        if (!expected.count(k)) std::printf("unexpected failure: %s\n", k.c_str());
    for (const auto& k : expected)
        if (!failed.count(k)) std::printf("known failure now passes: %s\n", k.c_str());
    return failed == expected ? 0 : 1;
}
