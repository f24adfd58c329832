#include "cascade/dti.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "cascade/util.hpp"

namespace cascade {

namespace {

bool is_expansion(EventType t) {
    return t == EventType::delegate_subtask || t == EventType::revise_claim || t == EventType::contradict_claim;
}

ojson num_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

double num_from(const json& j, const char* key, double fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (it->is_string()) {
        const auto s = it->get<std::string>();
        if (s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
        throw ConfigError(std::string("bad value for ") + key);
    }
    if (!it->is_number()) throw ConfigError(std::string("bad value for ") + key);
    return it->get<double>();
}

// Parents lose their leaf status, the new claim becomes the freshest leaf.
void note_claim(RootState& s, const EventRecord& e) {
    if (!e.claim || !creates_claim(e.event_type)) return;
    for (const auto& p : e.claim->parent_claim_ids) {
        auto it = std::find(s.leaves.begin(), s.leaves.end(), p);
        if (it != s.leaves.end()) s.leaves.erase(it);
    }
    s.leaves.push_back(e.claim->claim_id);
    if (s.leaves.size() > kMaxHeads) s.leaves.pop_front();
}

}  // namespace

std::string condition_key(Topology t, TaskFamily f, std::optional<int> N) {
    std::string k = std::string(to_string(t)) + "/" + to_string(f);
    if (N) k += "/N" + std::to_string(*N);
    return k;
}

double DtiParams::pressure(long t) const {
    if (t <= 0) return 0.0;
    return a_c * std::pow(static_cast<double>(t), beta_c_hat);
}

ojson DtiParams::to_json() const {
    ojson o;
    o["condition"] = condition;
    o["a_c"] = a_c;
    o["delta_c"] = std::isfinite(delta_c) ? ojson(delta_c) : ojson("inf");
    o["beta_c_hat"] = beta_c_hat;
    o["cascades"] = cascades;
    o["delta_mean"] = delta_mean;
    o["delta_sd"] = delta_sd;
    o["seeds"] = seeds;
    return o;
}

DtiParams DtiParams::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("calibration entry must be an object");
    DtiParams p;
    if (auto it = j.find("condition"); it != j.end() && it->is_string()) p.condition = it->get<std::string>();
    p.a_c = num_from(j, "a_c", p.a_c);
    p.delta_c = num_from(j, "delta_c", p.delta_c);
    p.beta_c_hat = num_from(j, "beta_c_hat", p.beta_c_hat);
    p.delta_mean = num_from(j, "delta_mean", 0.0);
    p.delta_sd = num_from(j, "delta_sd", 0.0);
    if (auto it = j.find("cascades"); it != j.end() && it->is_number_integer()) p.cascades = it->get<long>();
    if (auto it = j.find("seeds"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("seeds must be an array");
        for (const auto& v : *it) {
            if (!v.is_number_integer()) throw ConfigError("seeds must be integers");
            p.seeds.push_back(v.get<std::int64_t>());
        }
    }
    if (!(p.a_c > 0) || !std::isfinite(p.a_c)) throw ConfigError("a_c must be positive");
    if (!(p.beta_c_hat > 0) || !std::isfinite(p.beta_c_hat)) throw ConfigError("beta_c_hat must be positive");
    if (std::isnan(p.delta_c)) throw ConfigError("delta_c is NaN");
    return p;
}

std::optional<TriggerDirective> dti_step(DtiState& state, const DtiParams& params, const EventRecord& event,
                                         const std::string& root) {
    auto it = state.roots.find(root);
    if (it == state.roots.end()) {
        const bool opens = event.event_type == EventType::propose_claim && event.claim &&
                           event.claim->parent_claim_ids.empty() && event.claim->claim_id == root;
        if (!opens) throw UnknownRoot("event at step " + std::to_string(event.step_id) + " names unopened root '" +
                                      root + "'");
        it = state.roots.emplace(root, RootState{}).first;
    }
    RootState& s = it->second;
    s.t += 1;
    if (event.event_type == EventType::merge_claims) s.M += 1;
    note_claim(s, event);

    const double deficit = params.pressure(s.t) - static_cast<double>(s.M);
    if (!(deficit > params.delta_c) || s.leaves.size() < 2) return std::nullopt;

    TriggerDirective d;
    d.root_claim_id = root;
    d.step_id = event.step_id;
    d.t = s.t;
    d.deficit = deficit;
    d.heads.assign(s.leaves.rbegin(), s.leaves.rend());
    // the merge counted by the trigger is folded into the restart
    s.t = 0;
    s.M = 1;
    s.last_trigger_step = event.step_id;
    s.leaves.clear();
    return d;
}

long DtiReport::executed() const {
    return std::count_if(triggers.begin(), triggers.end(), [](const TriggerEvent& t) { return t.executed; });
}

ojson DtiReport::to_json(bool with_series) const {
    ojson o;
    o["run_id"] = run_id;
    o["params"] = params.to_json();
    o["trigger_count"] = static_cast<long>(triggers.size());
    o["executed"] = executed();
    ojson tr = ojson::array();
    for (const auto& t : triggers) {
        ojson j;
        j["step_id"] = t.step_id;
        j["root_claim_id"] = t.root_claim_id;
        j["t"] = t.t;
        j["deficit"] = t.deficit;
        j["heads"] = t.heads;
        j["executed"] = t.executed;
        tr.push_back(j);
    }
    o["triggers"] = tr;
    ojson cv = ojson::array();
    for (const auto& c : conversions) {
        if (!c.triggered) continue;
        ojson j;
        j["root_claim_id"] = c.root_claim_id;
        j["pre_merges"] = c.pre_merges;
        j["pre_expansions"] = c.pre_expansions;
        j["post_merges"] = c.post_merges;
        j["post_expansions"] = c.post_expansions;
        j["pre_ratio"] = c.pre_expansions > 0 ? ojson(double(c.pre_merges) / c.pre_expansions) : ojson(nullptr);
        j["post_ratio"] = c.post_expansions > 0 ? ojson(double(c.post_merges) / c.post_expansions) : ojson(nullptr);
        cv.push_back(j);
    }
    o["triggered_cascades"] = cv;
    if (with_series) {
        ojson s = ojson::object();
        for (const auto& [root, v] : deficits) s[root] = v;
        o["deficits"] = s;
    }
    return o;
}

std::string DtiReport::triggers_csv() const {
    std::ostringstream os;
    os << "run_id,step_id,root_claim_id,t,deficit,heads,executed\n";
    for (const auto& t : triggers) {
        std::string heads;
        for (std::size_t i = 0; i < t.heads.size(); ++i) heads += (i ? ";" : "") + t.heads[i];
        os << csv_escape(run_id) << ',' << t.step_id << ',' << csv_escape(t.root_claim_id) << ',' << t.t << ','
           << fmt_double(t.deficit) << ',' << csv_escape(heads) << ',' << (t.executed ? 1 : 0) << '\n';
    }
    return os.str();
}

DtiController::DtiController(DtiParams params, bool record_series)
    : params_(std::move(params)), record_series_(record_series) {}

void DtiController::account(const EventRecord& rec, const std::string& root) {
    auto [it, fresh] = conv_.try_emplace(root);
    if (fresh) {
        it->second.root_claim_id = root;
        order_.push_back(root);
    }
    auto& c = it->second;
    const bool post = c.triggered;
    if (rec.event_type == EventType::merge_claims) ++(post ? c.post_merges : c.pre_merges);
    if (is_expansion(rec.event_type)) ++(post ? c.post_expansions : c.pre_expansions);
}

void DtiController::on_record(const EventRecord& rec, const std::string& root, bool injected) {
    if (root.empty()) return;
    if (injected) {
        // already counted by the restart; only the lineage moves
        auto it = state_.roots.find(root);
        if (it != state_.roots.end()) note_claim(it->second, rec);
        account(rec, root);
        return;
    }
    account(rec, root);
    auto d = dti_step(state_, params_, rec, root);
    if (record_series_) {
        const auto& s = state_.roots.at(root);
        series_[root].push_back(d ? d->deficit : params_.pressure(s.t) - static_cast<double>(s.M));
    }
    if (!d) return;
    conv_[root].triggered = true;
    TriggerEvent te;
    te.step_id = d->step_id;
    te.root_claim_id = d->root_claim_id;
    te.t = d->t;
    te.deficit = d->deficit;
    te.heads = d->heads;
    triggers_.push_back(std::move(te));
    pending_.push_back(std::move(*d));
}

std::optional<MergeDirective> DtiController::pending_merge() {
    if (pending_.empty()) return std::nullopt;
    return MergeDirective{pending_.front().root_claim_id, pending_.front().heads};
}

void DtiController::merge_done(const MergeDirective& d, bool executed) {
    for (auto it = triggers_.rbegin(); it != triggers_.rend(); ++it) {
        if (it->root_claim_id == d.root_claim_id && it->heads == d.heads) {
            it->executed = executed;
            break;
        }
    }
    if (!pending_.empty()) pending_.pop_front();
}

DtiReport DtiController::take_report(const std::string& run_id) {
    DtiReport r;
    r.run_id = run_id;
    r.params = params_;
    r.triggers = std::move(triggers_);
    for (const auto& root : order_) r.conversions.push_back(conv_.at(root));
    r.deficits = std::move(series_);
    triggers_.clear();
    order_.clear();
    conv_.clear();
    series_.clear();
    return r;
}

std::map<std::string, DtiParams> calibrate(const TraceBundle& baseline, const CalibrationOptions& opt) {
    std::vector<RunAnalysis> runs;
    for (const auto& id : baseline.run_ids()) runs.push_back(analyze_run(baseline, id));
    return calibrate(baseline, runs, opt);
}

std::map<std::string, DtiParams> calibrate(const TraceBundle& baseline, const std::vector<RunAnalysis>& runs,
                                           const CalibrationOptions& opt) {
    struct Terminal {
        double t;
        double M;
    };
    struct Pool {
        std::vector<double> log_t, log_c;
        std::vector<Terminal> ends;
        std::set<std::int64_t> seeds;
    };
    std::map<std::string, Pool> pools;
    for (const auto& run : runs) {
        const auto& c = run.condition;
        auto& pool = pools[condition_key(c.topology, c.task_family,
                                         opt.stratify_by_N ? std::optional<int>(c.N) : std::nullopt)];
        if (auto m = baseline.run_meta.find(run.run_id); m != baseline.run_meta.end() && !m->second.synthesized)
            pool.seeds.insert(m->second.seed);
        for (const auto& cas : run.cascades) {
            long t = 0, C = 0, M = 0;
            for (std::size_t i : cas.member_event_indices) {
                ++t;
                const auto type = baseline.records[i].event_type;
                if (type == EventType::merge_claims) ++M;
                if (type == EventType::contradict_claim) {
                    ++C;
                    pool.log_t.push_back(std::log(static_cast<double>(t)));
                    pool.log_c.push_back(std::log(static_cast<double>(C)));
                }
            }
            pool.ends.push_back({static_cast<double>(t), static_cast<double>(M)});
        }
    }
    if (pools.empty()) throw InsufficientCascades("baseline has no runs");

    std::map<std::string, DtiParams> out;
    for (const auto& [key, pool] : pools) {
        const long n = static_cast<long>(pool.ends.size());
        if (n < opt.min_cascades)
            throw InsufficientCascades(key + ": " + std::to_string(n) + " cascades, need " +
                                       std::to_string(opt.min_cascades));
        if (pool.log_t.empty()) throw InsufficientCascades(key + ": no contradictions, pressure exponent undefined");
        const double t0 = pool.log_t.front();
        if (std::all_of(pool.log_t.begin(), pool.log_t.end(), [&](double v) { return v == t0; }))
            throw InsufficientCascades(key + ": contradictions at a single cascade age, pressure exponent undefined");
        DtiParams p;
        p.condition = key;
        p.cascades = n;
        p.seeds.assign(pool.seeds.begin(), pool.seeds.end());
        p.beta_c_hat = ols(pool.log_t, pool.log_c).slope;
        if (!(p.beta_c_hat > 0))
            throw InsufficientCascades(key + ": non-positive pressure exponent " + fmt_double(p.beta_c_hat));
        double num = 0.0, den = 0.0;
        for (const auto& e : pool.ends) {
            const double x = std::pow(e.t, p.beta_c_hat);
            num += x * e.M;
            den += x * x;
        }
        p.a_c = num / den;
        if (!(p.a_c > 0)) throw InsufficientCascades(key + ": no merges, pressure scale undefined");
        std::vector<double> deficits;
        deficits.reserve(pool.ends.size());
        for (const auto& e : pool.ends) deficits.push_back(p.a_c * std::pow(e.t, p.beta_c_hat) - e.M);
        const double mean = std::accumulate(deficits.begin(), deficits.end(), 0.0) / static_cast<double>(n);
        double ss = 0.0;
        for (double d : deficits) ss += (d - mean) * (d - mean);
        p.delta_mean = mean;
        p.delta_sd = std::sqrt(ss / static_cast<double>(n - 1));
        p.delta_c = mean + p.delta_sd;
        out[key] = p;
    }
    return out;
}

ojson calibration_to_json(const std::map<std::string, DtiParams>& params) {
    ojson o = ojson::object();
    for (const auto& [k, p] : params) o[k] = p.to_json();
    return o;
}

std::map<std::string, DtiParams> calibration_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("calibration file must hold an object keyed by condition class");
    std::map<std::string, DtiParams> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto p = DtiParams::from_json(it.value());
        if (p.condition.empty()) p.condition = it.key();
        out[it.key()] = p;
    }
    return out;
}

const DtiParams& params_for(const std::map<std::string, DtiParams>& cal, const SimConfig& cfg) {
    auto it = cal.find(condition_key(cfg.topology, cfg.task_family, cfg.N));
    if (it != cal.end()) return it->second;
    it = cal.find(condition_key(cfg.topology, cfg.task_family));
    if (it != cal.end()) return it->second;
    throw MissingParams("no DTI parameters for " + condition_key(cfg.topology, cfg.task_family));
}

DtiRun run_with_dti(const SimConfig& cfg, const DtiParams& params) {
    DtiController ctl(params);
    DtiRun out;
    out.bundle = run_simulation(cfg, &ctl);
    out.report = ctl.take_report(cfg.effective_run_id());
    return out;
}

ojson ArmSummary::to_json() const {
    ojson o;
    o["runs"] = runs;
    o["cascades"] = cascades;
    o["events"] = events;
    if (tce_tail) {
        const auto& s = *tce_tail;
        auto cmp = [](const std::optional<ModelComparison>& c) { return c ? c->to_json() : ojson(nullptr); };
        o["tpl_vs_ln"] = cmp(s.tpl_vs_ln);
        o["tpl_vs_pl"] = cmp(s.tpl_vs_pl);
        o["alpha_hat"] = s.truncated_power_law ? ojson(s.truncated_power_law->alpha_hat) : ojson(nullptr);
        o["xc_hat"] = s.truncated_power_law ? num_or_null(s.truncated_power_law->xc_hat) : ojson(nullptr);
        o["x_min"] = s.power_law ? ojson(s.power_law->x_min) : ojson(nullptr);
        o["tail_status"] = s.status;
    } else {
        o["tail_status"] = "missing";
    }
    ojson dec = ojson::array();
    for (double v : conversion_by_decile) dec.push_back(num_or_null(v));
    o["merge_conversion_by_decile"] = dec;
    o["top_decile_merge_conversion"] = top_decile_conversion ? ojson(*top_decile_conversion) : ojson(nullptr);
    o["contradiction_density"] = contradiction_density;
    o["e_active_10"] = e_active_10;
    o["triggers"] = triggers;
    o["executed_triggers"] = executed_triggers;
    return o;
}

ArmSummary summarize_arm(const TraceBundle& bundle, const std::vector<RunAnalysis>& runs,
                         const std::vector<DtiReport>& reports, std::optional<long> fixed_xmin) {
    ArmSummary a;
    a.runs = static_cast<long>(runs.size());
    struct Row {
        long tce;
        long merges;
        long expansions;
    };
    std::vector<Row> rows;
    std::vector<long> tce;
    long contradictions = 0, cascade_events = 0;
    for (const auto& run : runs) {
        for (const auto& s : run.stats) {
            rows.push_back({s.tce, s.counts[3], s.expansions()});
            tce.push_back(s.tce);
            contradictions += s.counts[2];
            cascade_events += s.tce;
        }
        if (run.concentration) a.e_active_10 += run.concentration->E_active[0];
    }
    a.events = static_cast<long>(bundle.records.size());
    a.cascades = static_cast<long>(rows.size());
    if (a.runs > 0) a.e_active_10 /= static_cast<double>(a.runs);
    if (cascade_events > 0) a.contradiction_density = static_cast<double>(contradictions) / cascade_events;
    if (!tce.empty()) {
        TailOptions opt;
        opt.fixed_xmin = fixed_xmin;
        a.tce_tail = summarize_tail("tce", tce, opt);
    }

    // rank deciles, largest TCE last; stable so ties keep run order
    std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.tce < y.tce; });
    const std::size_t n = rows.size();
    if (n >= 10) {
        std::array<double, 10> m{}, e{};
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t d = i * 10 / n;
            m[d] += rows[i].merges;
            e[d] += rows[i].expansions;
        }
        for (int d = 0; d < 10; ++d)
            a.conversion_by_decile.push_back(e[d] > 0 ? m[d] / e[d] : std::numeric_limits<double>::quiet_NaN());
        const std::size_t top = static_cast<std::size_t>(std::floor(kTopQuantile * static_cast<double>(n)));
        double tm = 0, tx = 0;
        for (std::size_t i = top; i < n; ++i) {
            tm += rows[i].merges;
            tx += rows[i].expansions;
        }
        if (tx > 0) a.top_decile_conversion = tm / tx;
    }
    for (const auto& r : reports) {
        a.triggers += static_cast<long>(r.triggers.size());
        a.executed_triggers += r.executed();
    }
    return a;
}

InterventionReport evaluate_intervention(const TraceBundle& baseline, const TraceBundle& treated,
                                         const std::vector<DtiReport>& reports) {
    auto analyze_all = [](const TraceBundle& b) {
        std::vector<RunAnalysis> out;
        for (const auto& id : b.run_ids()) out.push_back(analyze_run(b, id));
        return out;
    };
    InterventionReport r;
    r.baseline = summarize_arm(baseline, analyze_all(baseline));
    // both arms share the baseline's tail onset so x_c and alpha are comparable
    std::optional<long> xmin;
    if (r.baseline.tce_tail && r.baseline.tce_tail->power_law) xmin = r.baseline.tce_tail->power_law->x_min;
    r.treated = summarize_arm(treated, analyze_all(treated), reports, xmin);
    return r;
}

namespace {

struct Metric {
    std::string name;
    std::optional<double> base;
    std::optional<double> treat;
};

std::vector<Metric> metrics(const InterventionReport& r) {
    auto tail = [](const ArmSummary& a, int which) -> std::optional<double> {
        if (!a.tce_tail) return std::nullopt;
        const auto& s = *a.tce_tail;
        switch (which) {
            case 0: return s.tpl_vs_ln ? std::optional<double>(s.tpl_vs_ln->lr) : std::nullopt;
            case 1: return s.tpl_vs_ln ? std::optional<double>(s.tpl_vs_ln->p_value) : std::nullopt;
            case 2: return s.tpl_vs_pl ? std::optional<double>(s.tpl_vs_pl->lr) : std::nullopt;
            case 3: return s.tpl_vs_pl ? std::optional<double>(s.tpl_vs_pl->p_value) : std::nullopt;
            case 4: return s.truncated_power_law ? std::optional<double>(s.truncated_power_law->alpha_hat) : std::nullopt;
            default: return s.truncated_power_law ? std::optional<double>(s.truncated_power_law->xc_hat) : std::nullopt;
        }
    };
    const auto& b = r.baseline;
    const auto& t = r.treated;
    std::vector<Metric> m = {
        {"cascades", double(b.cascades), double(t.cascades)},
        {"events", double(b.events), double(t.events)},
        {"lr_tpl_ln", tail(b, 0), tail(t, 0)},
        {"p_tpl_ln", tail(b, 1), tail(t, 1)},
        {"lr_tpl_pl", tail(b, 2), tail(t, 2)},
        {"p_tpl_pl", tail(b, 3), tail(t, 3)},
        {"alpha_hat", tail(b, 4), tail(t, 4)},
        {"xc_hat", tail(b, 5), tail(t, 5)},
        {"top_decile_merge_conversion", b.top_decile_conversion, t.top_decile_conversion},
        {"contradiction_density", b.contradiction_density, t.contradiction_density},
        {"e_active_10", b.e_active_10, t.e_active_10},
        {"triggers", double(b.triggers), double(t.triggers)},
        {"executed_triggers", double(b.executed_triggers), double(t.executed_triggers)},
    };
    for (std::size_t d = 0; d < 10; ++d) {
        auto at = [&](const ArmSummary& a) -> std::optional<double> {
            if (d >= a.conversion_by_decile.size() || std::isnan(a.conversion_by_decile[d])) return std::nullopt;
            return a.conversion_by_decile[d];
        };
        m.push_back({"merge_conversion_d" + std::to_string(d + 1), at(b), at(t)});
    }
    return m;
}

}  // namespace

ojson InterventionReport::to_json() const {
    ojson o;
    o["baseline"] = baseline.to_json();
    o["treated"] = treated.to_json();
    ojson d = ojson::object();
    for (const auto& m : metrics(*this)) {
        if (m.base && m.treat && std::isfinite(*m.base) && std::isfinite(*m.treat))
            d[m.name] = *m.treat - *m.base;
        else
            d[m.name] = nullptr;
    }
    o["delta"] = d;
    return o;
}

std::string InterventionReport::to_csv() const {
    std::ostringstream os;
    os << "metric,baseline,treated,delta\n";
    for (const auto& m : metrics(*this)) {
        auto f = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
        std::string delta;
        if (m.base && m.treat && std::isfinite(*m.base) && std::isfinite(*m.treat)) delta = fmt_double(*m.treat - *m.base);
        os << m.name << ',' << f(m.base) << ',' << f(m.treat) << ',' << delta << '\n';
    }
    return os.str();
}

}  // namespace cascade
