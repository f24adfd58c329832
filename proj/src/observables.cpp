#include "cascade/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "cascade/util.hpp"

namespace cascade {

namespace {

const char* const kObservableNames[] = {"delegation_cascade", "revision_wave", "contradiction_burst", "merge_fanin",
                                        "tce"};
const char* const kPrimitiveNames[] = {"delegation", "revision", "contradiction", "merge", "endorsement"};

EventSizeSample sample(Observable o, long x, const std::string& run, const Condition& c) {
    EventSizeSample s;
    s.observable = o;
    s.x = x;
    s.run_id = run;
    s.condition = c;
    return s;
}

}  // namespace

const char* to_string(Observable o) { return kObservableNames[static_cast<int>(o)]; }
const char* to_string(Primitive p) { return kPrimitiveNames[static_cast<int>(p)]; }

std::optional<Observable> parse_observable(const std::string& s) {
    for (int i = 0; i < 5; ++i)
        if (s == kObservableNames[i]) return static_cast<Observable>(i);
    return std::nullopt;
}

Condition condition_of(const TraceBundle& bundle, const std::string& run_id) {
    Condition c;
    auto it = bundle.run_meta.find(run_id);
    if (it != bundle.run_meta.end()) {
        c.topology = it->second.topology;
        c.task_family = it->second.task_family;
        c.N = it->second.agent_count;
    }
    return c;
}

std::vector<EventSizeSample> delegation_cascade_sizes(const SubtaskTree& tree, const Condition& cond) {
    const auto n = tree.nodes.size();
    std::vector<long> size(n, 1);
    // children always carry larger depth, so deepest-first accumulation is a post-order
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return tree.nodes[a].subtask_depth > tree.nodes[b].subtask_depth; });
    for (auto v : order)
        for (auto c : tree.children[v]) size[v] += size[c];
    std::vector<EventSizeSample> out;
    out.reserve(n);
    for (std::size_t v = 0; v < n; ++v) out.push_back(sample(Observable::delegation_cascade, size[v], tree.run_id, cond));
    return out;
}

std::vector<EventSizeSample> revision_waves(const ClaimGraph& g, const Condition& cond) {
    std::vector<EventSizeSample> out;
    for (const auto& [id, chain] : g.revision_chains)
        out.push_back(sample(Observable::revision_wave, static_cast<long>(chain.size()), g.run_id, cond));
    return out;
}

std::vector<EventSizeSample> contradiction_bursts(const ClaimGraph& g, const Condition& cond) {
    std::vector<EventSizeSample> out;
    for (const auto& [id, members] : g.contradiction_groups) {
        std::set<std::string> agents;
        for (auto v : members) agents.insert(g.nodes[v].agent_id);
        out.push_back(sample(Observable::contradiction_burst, static_cast<long>(agents.size()), g.run_id, cond));
    }
    return out;
}

std::vector<EventSizeSample> merge_fanins(const ClaimGraph& g, const Condition& cond) {
    std::vector<EventSizeSample> out;
    for (const auto& nd : g.nodes)
        if (nd.claim_status == ClaimStatus::merged)
            out.push_back(sample(Observable::merge_fanin, static_cast<long>(nd.parents.size()), g.run_id, cond));
    return out;
}

std::vector<CascadeStats> cascade_stats(const std::vector<Cascade>& cascades, const TraceBundle& bundle) {
    std::vector<CascadeStats> out;
    out.reserve(cascades.size());
    for (const auto& c : cascades) {
        CascadeStats s;
        s.root_claim_id = c.root_claim_id;
        s.cascade_size = static_cast<long>(c.member_claims.size());
        s.tce = static_cast<long>(c.member_event_indices.size());
        for (auto i : c.member_event_indices) {
            const auto& r = bundle.records[i];
            s.run_id = r.run_id;
            switch (r.event_type) {
                case EventType::delegate_subtask: ++s.counts[0]; break;
                case EventType::revise_claim: ++s.counts[1]; break;
                case EventType::contradict_claim: ++s.counts[2]; break;
                case EventType::merge_claims: ++s.counts[3]; break;
                case EventType::endorse_claim: ++s.counts[4]; break;
                case EventType::propose_claim: ++s.proposals; break;
            }
        }
        long prim = std::accumulate(s.counts.begin(), s.counts.end(), 0L);
        if (prim > 0)
            for (int k = 0; k < kPrimitiveCount; ++k) s.composition[k] = static_cast<double>(s.counts[k]) / prim;
        if (s.expansions() > 0) s.merge_conversion_ratio = static_cast<double>(s.counts[3]) / s.expansions();
        out.push_back(s);
    }
    return out;
}

std::vector<EventSizeSample> tce_samples(const std::vector<CascadeStats>& stats, const Condition& cond) {
    std::vector<EventSizeSample> out;
    out.reserve(stats.size());
    for (const auto& s : stats) out.push_back(sample(Observable::tce, s.tce, s.run_id, cond));
    return out;
}

double top_share(std::vector<double> v, double percent) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end(), std::greater<>());
    double total = std::accumulate(v.begin(), v.end(), 0.0);
    if (!(total > 0)) return 0.0;
    double g = percent / 100.0 * static_cast<double>(v.size());
    auto f = static_cast<std::size_t>(std::floor(g));
    double s = 0.0;
    for (std::size_t i = 0; i < f && i < v.size(); ++i) s += v[i];
    if (f < v.size()) s += (g - static_cast<double>(f)) * v[f];
    return s / total;
}

double gini(std::vector<double> v) {
    const auto n = v.size();
    if (n == 0) return 0.0;
    std::sort(v.begin(), v.end());
    double total = 0.0, weighted = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += v[i];
        weighted += static_cast<double>(i + 1) * v[i];
    }
    if (!(total > 0)) return 0.0;
    double g = 2.0 * weighted / (static_cast<double>(n) * total) - (static_cast<double>(n) + 1.0) / static_cast<double>(n);
    return std::clamp(g, 0.0, 1.0);
}

double n_eff(const std::vector<double>& v) {
    double total = std::accumulate(v.begin(), v.end(), 0.0);
    if (!(total > 0)) return 0.0;
    double s2 = 0.0;
    for (double x : v) s2 += (x / total) * (x / total);
    return 1.0 / s2;
}

double ConcentrationReport::S_k(std::size_t k) const {
    if (k == 0 || S.empty()) return 0.0;
    return S[std::min(k, S.size()) - 1];
}

ConcentrationReport concentration_from_efforts(const std::map<std::string, long>& effort, int N) {
    ConcentrationReport r;
    r.effort = effort;
    std::vector<std::pair<std::string, long>> active;
    for (const auto& [a, n] : effort) {
        if (n > 0) active.emplace_back(a, n);
        r.total_claims += n;
    }
    if (active.empty()) throw InsufficientAgents("no agent authored a claim");
    r.active_agents = static_cast<long>(active.size());
    r.N = std::max<int>(N, static_cast<int>(active.size()));
    std::stable_sort(active.begin(), active.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    double cum = 0.0;
    for (const auto& [a, n] : active) {
        r.ranking.push_back(a);
        cum += static_cast<double>(n);
        r.S.push_back(cum / static_cast<double>(r.total_claims));
    }
    r.S.back() = 1.0;

    std::vector<double> va;
    for (const auto& [a, n] : active) va.push_back(static_cast<double>(n));
    std::vector<double> vall = va;
    vall.resize(static_cast<std::size_t>(r.N), 0.0);
    for (std::size_t i = 0; i < kTopPercents.size(); ++i) {
        r.E_active[i] = top_share(va, kTopPercents[i]);
        r.E_all[i] = top_share(vall, kTopPercents[i]);
        r.delta_active[i] = r.E_active[i] - kTopPercents[i] / 100.0;
    }
    r.gini = gini(va);
    r.n_eff = n_eff(va);
    r.n_eff_ratio = r.n_eff / r.N;
    r.active_fraction = static_cast<double>(r.active_agents) / r.N;
    return r;
}

ConcentrationReport concentration(const TraceBundle& bundle, const std::string& run_id) {
    std::map<std::string, long> effort;
    for (auto i : bundle.run_records(run_id)) {
        const auto& rec = bundle.records[i];
        effort.try_emplace(rec.agent_id, 0);
        if (creates_claim(rec.event_type) && rec.claim) ++effort[rec.agent_id];
    }
    int N = 0;
    auto it = bundle.run_meta.find(run_id);
    if (it != bundle.run_meta.end()) N = it->second.agent_count;
    auto r = concentration_from_efforts(effort, N);
    r.run_id = run_id;
    return r;
}

std::vector<ExtremeSample> extreme_samples(const std::vector<EventSizeSample>& samples) {
    std::map<std::pair<std::string, int>, ExtremeSample> groups;
    std::vector<std::pair<std::string, int>> order;
    for (const auto& s : samples) {
        auto key = std::make_pair(s.run_id, static_cast<int>(s.observable));
        auto it = groups.find(key);
        if (it == groups.end()) {
            ExtremeSample e;
            e.run_id = s.run_id;
            e.observable = s.observable;
            e.N = s.condition.N;
            e.x_max = s.x;
            groups.emplace(key, e);
            order.push_back(key);
        } else {
            it->second.x_max = std::max(it->second.x_max, s.x);
        }
    }
    std::vector<ExtremeSample> out;
    for (const auto& k : order) out.push_back(groups.at(k));
    return out;
}

RunAnalysis analyze_run(const TraceBundle& bundle, const std::string& run_id, std::int64_t tau) {
    RunAnalysis a;
    a.run_id = run_id;
    a.condition = condition_of(bundle, run_id);
    a.tree = build_subtask_tree(bundle, run_id);
    a.graph = build_claim_graph(bundle, run_id);
    derive_groupings(a.graph, tau);
    a.cascades = extract_cascades(a.graph, bundle);
    a.stats = cascade_stats(a.cascades, bundle);
    a.samples[Observable::delegation_cascade] = delegation_cascade_sizes(a.tree, a.condition);
    a.samples[Observable::revision_wave] = revision_waves(a.graph, a.condition);
    a.samples[Observable::contradiction_burst] = contradiction_bursts(a.graph, a.condition);
    a.samples[Observable::merge_fanin] = merge_fanins(a.graph, a.condition);
    a.samples[Observable::tce] = tce_samples(a.stats, a.condition);
    for (auto& s : a.samples[Observable::tce]) s.run_id = run_id;
    try {
        a.concentration = concentration(bundle, run_id);
    } catch (const InsufficientAgents&) {
    }
    return a;
}

std::string samples_csv(const std::vector<EventSizeSample>& samples) {
    std::ostringstream os;
    os << "observable,x,run_id,topology,task_family,N\n";
    for (const auto& s : samples)
        os << to_string(s.observable) << ',' << s.x << ',' << csv_escape(s.run_id) << ','
           << to_string(s.condition.topology) << ',' << to_string(s.condition.task_family) << ',' << s.condition.N
           << '\n';
    return os.str();
}

std::string cascade_stats_csv(const std::vector<CascadeStats>& stats) {
    std::ostringstream os;
    os << "run_id,root_claim_id,cascade_size,tce,proposals";
    for (auto n : kPrimitiveNames) os << ',' << n;
    for (auto n : kPrimitiveNames) os << ",frac_" << n;
    os << ",merge_conversion_ratio\n";
    for (const auto& s : stats) {
        os << csv_escape(s.run_id) << ',' << csv_escape(s.root_claim_id) << ',' << s.cascade_size << ',' << s.tce << ','
           << s.proposals;
        for (auto c : s.counts) os << ',' << c;
        for (auto f : s.composition) os << ',' << fmt_double(f);
        os << ',' << (s.merge_conversion_ratio ? fmt_double(*s.merge_conversion_ratio) : std::string()) << '\n';
    }
    return os.str();
}

std::string concentration_csv(const std::vector<ConcentrationReport>& reports) {
    std::ostringstream os;
    os << "run_id,N,active_agents,total_claims,E_active_10,E_active_25,E_active_50,E_all_10,E_all_25,E_all_50,"
          "delta_active_10,delta_active_25,delta_active_50,gini,n_eff,n_eff_ratio,active_fraction\n";
    for (const auto& r : reports) {
        os << csv_escape(r.run_id) << ',' << r.N << ',' << r.active_agents << ',' << r.total_claims;
        for (auto v : r.E_active) os << ',' << fmt_double(v);
        for (auto v : r.E_all) os << ',' << fmt_double(v);
        for (auto v : r.delta_active) os << ',' << fmt_double(v);
        os << ',' << fmt_double(r.gini) << ',' << fmt_double(r.n_eff) << ',' << fmt_double(r.n_eff_ratio) << ','
           << fmt_double(r.active_fraction) << '\n';
    }
    return os.str();
}

ojson concentration_json(const ConcentrationReport& r) {
    ojson o;
    o["run_id"] = r.run_id;
    o["N"] = r.N;
    o["active_agents"] = r.active_agents;
    o["total_claims"] = r.total_claims;
    for (std::size_t i = 0; i < kTopPercents.size(); ++i) {
        auto k = std::to_string(kTopPercents[i]);
        o["E_active_" + k] = r.E_active[i];
        o["E_all_" + k] = r.E_all[i];
        o["delta_active_" + k] = r.delta_active[i];
    }
    o["gini"] = r.gini;
    o["n_eff"] = r.n_eff;
    o["n_eff_ratio"] = r.n_eff_ratio;
    o["active_fraction"] = r.active_fraction;
    ojson eff = ojson::object();
    for (const auto& [a, n] : r.effort) eff[a] = n;
    o["effort"] = eff;
    o["S"] = r.S;
    return o;
}

ojson cascade_stats_json(const CascadeStats& s) {
    ojson o;
    o["run_id"] = s.run_id;
    o["root_claim_id"] = s.root_claim_id;
    o["cascade_size"] = s.cascade_size;
    o["tce"] = s.tce;
    o["proposals"] = s.proposals;
    ojson comp = ojson::object();
    for (int k = 0; k < kPrimitiveCount; ++k) {
        comp[kPrimitiveNames[k]] = s.composition[k];
    }
    o["composition"] = comp;
    if (s.merge_conversion_ratio)
        o["merge_conversion_ratio"] = *s.merge_conversion_ratio;
    else
        o["merge_conversion_ratio"] = nullptr;
    return o;
}

}  // namespace cascade
