#include "cascade/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "cascade/util.hpp"

namespace cascade {

namespace {

const char* const kRoutingNames[] = {"plain", "lead"};
const char* const kDelegationNames[] = {"new_roots", "nested"};
const char* const kMixKeys[] = {"delegate", "revise", "contradict", "merge", "endorse"};

// Growable Fenwick tree over non-negative weights.
class Fenwick {
public:
    std::size_t size() const { return tree_.size(); }
    double total() const { return total_; }

    void push(double w) {
        const std::size_t i = tree_.size() + 1;
        const std::size_t low = i & (~i + 1);
        tree_.push_back(w + prefix(i - 1) - prefix(i - low));
        total_ += w;
    }
    void add(std::size_t pos, double dw) {
        total_ += dw;
        for (std::size_t i = pos + 1; i <= tree_.size(); i += i & (~i + 1)) tree_[i - 1] += dw;
    }
    // Smallest position whose prefix sum exceeds u.
    std::size_t find(double u) const {
        std::size_t pos = 0;
        std::size_t step = 1;
        while (step * 2 <= tree_.size()) step *= 2;
        for (; step > 0; step /= 2) {
            if (pos + step <= tree_.size() && tree_[pos + step - 1] <= u) {
                pos += step;
                u -= tree_[pos - 1];
            }
        }
        return std::min(pos, tree_.size() - 1);
    }

private:
    double prefix(std::size_t i) const {
        double s = 0.0;
        for (; i > 0; i -= i & (~i + 1)) s += tree_[i - 1];
        return s;
    }
    std::vector<double> tree_;
    double total_ = 0.0;
};

struct Claim {
    int owner = 0;
    std::size_t slot = 0;  // position in the owner's Fenwick tree
    std::size_t root = 0;
    int depth = 0;
    long x = 1;  // 1 + references so far
    std::string subtask;
    bool retired = false;  // consolidated by an injected merge, no longer routable
};

std::string agent_name(int a) { return "a" + std::to_string(a); }
std::string claim_name(std::size_t i) { return "c" + std::to_string(i + 1); }

class Run {
public:
    Run(const SimConfig& cfg, SimObserver* obs)
        : cfg_(cfg),
          obs_(obs),
          rng_(derive_seed(cfg.seed,
                           std::string("routing/") + to_string(cfg.topology) + "/" + to_string(cfg.task_family),
                           static_cast<std::uint64_t>(cfg.N))),
          run_id_(cfg.effective_run_id()),
          adj_(build_topology(cfg.topology, cfg.N, derive_seed(cfg.seed, "topology", cfg.N))),
          trees_(cfg.N),
          owned_(cfg.N),
          effort_(cfg.N, 0) {}

    TraceBundle run() {
        RunMeta meta;
        meta.agent_count = cfg_.N;
        meta.topology = cfg_.topology;
        meta.task_family = cfg_.task_family;
        meta.seed = static_cast<std::int64_t>(cfg_.seed);
        out_.run_meta[run_id_] = meta;

        declare_workload();
        const long steps = cfg_.step_limit();
        for (long t = 0; t < steps && !full(); ++t) {
            const int a = static_cast<int>(t % cfg_.N);
            step(a);
            if (cfg_.topology == Topology::dynamic_reputation && (t + 1) % 50 == 0) rewire();
        }
        return std::move(out_);
    }

private:
    bool full() const { return static_cast<long>(out_.records.size()) >= cfg_.context_budget; }

    EventRecord& emit(int agent, EventType type) {
        EventRecord r;
        r.run_id = run_id_;
        r.step_id = ++step_counter_;
        r.agent_id = agent_name(agent);
        r.event_type = type;
        r.timestamp = r.step_id;
        r.message_length = 20 + static_cast<std::int64_t>(mix64(cfg_.seed ^ mix64(r.step_id)) % 400);
        out_.records.push_back(std::move(r));
        return out_.records.back();
    }

    void notify(const std::string& root, bool injected = false) {
        if (obs_) obs_->on_record(out_.records.back(), root, injected);
    }

    void declare_workload() {
        dag_ = generate_workload(cfg_.workload, cfg_.N, derive_seed(cfg_.seed, "workload", cfg_.N));
        std::vector<std::vector<std::string>> deps(dag_.task_ids.size());
        for (auto [t, pre] : dag_.dependencies) deps[t].push_back(dag_.task_ids[pre]);
        for (std::size_t i = 0; i < dag_.task_ids.size() && !full(); ++i) {
            const int agent = static_cast<int>(i % cfg_.N);
            auto& r = emit(agent, EventType::delegate_subtask);
            SubtaskPayload s;
            s.subtask_id = dag_.task_ids[i];
            s.assigned_agent = agent_name(agent);
            r.subtask = s;
            if (!deps[i].empty()) r.extra["depends_on"] = deps[i];
            notify("");
        }
    }

    double weight(long x) const { return cfg_.beta == 0.0 ? 1.0 : std::pow(static_cast<double>(x), cfg_.beta); }

    std::size_t add_claim(int owner, std::optional<std::size_t> root, int depth, std::string subtask) {
        Claim c;
        c.owner = owner;
        c.slot = trees_[owner].size();
        c.depth = depth;
        c.subtask = std::move(subtask);
        const std::size_t id = claims_.size();
        c.root = root ? *root : id;
        trees_[owner].push(weight(1));
        claims_.push_back(std::move(c));
        ++effort_[owner];
        return id;
    }

    void reference(std::size_t c) {
        auto& cl = claims_[c];
        double before = weight(cl.x);
        ++cl.x;
        if (!cl.retired) trees_[cl.owner].add(cl.slot, weight(cl.x) - before);
    }

    void retire(std::size_t c) {
        auto& cl = claims_[c];
        if (cl.retired) return;
        cl.retired = true;
        trees_[cl.owner].add(cl.slot, -weight(cl.x));
    }

    void count_event(std::size_t root) { ++root_events_[root]; }

    std::vector<int> visible_agents(int a) const {
        std::vector<int> v{a};
        v.insert(v.end(), adj_[a].begin(), adj_[a].end());
        return v;
    }

    std::size_t visible_claims(const std::vector<int>& vis) const {
        std::size_t n = 0;
        for (int b : vis) n += trees_[b].size();
        return n;
    }

    std::optional<std::size_t> select(const std::vector<int>& vis) {
        double total = 0.0;
        for (int b : vis) total += trees_[b].total();
        if (!(total > 0)) return std::nullopt;
        double u = rng_.uniform() * total;
        int author = -1;
        for (int b : vis) {
            double w = trees_[b].total();
            if (w <= 0) continue;
            author = b;  // the last non-empty author absorbs float slack
            if (u < w) break;
            u -= w;
        }
        std::size_t id = owned_[author][trees_[author].find(u)];
        // float residue can leave a retired slot reachable at the very edge
        if (claims_[id].retired) return std::nullopt;
        return id;
    }

    std::size_t new_claim_registered(int owner, std::optional<std::size_t> root, int depth, std::string subtask) {
        auto id = add_claim(owner, root, depth, std::move(subtask));
        owned_[owner].push_back(id);
        return id;
    }

    void propose_root(int agent, const std::string& subtask) {
        auto& r = emit(agent, EventType::propose_claim);
        const std::size_t id = claims_.size();
        ClaimPayload p;
        p.claim_id = claim_name(id);
        r.claim = p;
        r.target_subtask_id = subtask;
        new_claim_registered(agent, std::nullopt, 0, subtask);
        count_event(id);
        notify(claim_name(id));
    }

    const std::string& home_task(int agent) const {
        return dag_.task_ids[static_cast<std::size_t>(agent) % dag_.task_ids.size()];
    }

    int draw_type() {
        double u = rng_.uniform();
        for (int i = 0; i < 4; ++i) {
            if (u < cfg_.event_mix.p[i]) return i;
            u -= cfg_.event_mix.p[i];
        }
        return 4;
    }

    void endorse(int actor, std::size_t c) {
        auto& r = emit(actor, EventType::endorse_claim);
        r.target_claim_id = claim_name(c);
        r.target_subtask_id = claims_[c].subtask;
        reference(c);
        count_event(claims_[c].root);
        notify(claim_name(claims_[c].root));
    }

    bool merge(int actor, std::vector<std::size_t> parents, bool injected) {
        int depth = 0;
        for (auto p : parents) depth = std::max(depth, claims_[p].depth);
        if (depth + 1 > cfg_.max_depth) return false;
        const std::size_t earliest = *std::min_element(parents.begin(), parents.end());
        const std::size_t root = claims_[earliest].root;
        auto& r = emit(actor, EventType::merge_claims);
        const std::size_t id = claims_.size();
        ClaimPayload p;
        p.claim_id = claim_name(id);
        p.claim_status = ClaimStatus::merged;
        for (auto q : parents) p.parent_claim_ids.push_back(claim_name(q));
        r.claim = p;
        r.target_claim_id = claim_name(parents.front());
        r.target_subtask_id = claims_[parents.front()].subtask;
        if (injected) r.extra["injected"] = true;
        for (auto q : parents) reference(q);
        // the cascade resumes from the merged claim
        if (injected)
            for (auto q : parents) retire(q);
        new_claim_registered(actor, root, depth + 1, claims_[parents.front()].subtask);
        count_event(root);
        notify(claim_name(root), injected);
        return true;
    }

    bool run_directive(int a) {
        if (!obs_) return false;
        auto d = obs_->pending_merge();
        if (!d) return false;
        std::vector<std::size_t> parents;
        for (const auto& h : d->heads) {
            // claim names are c<index+1>
            std::size_t idx = std::stoul(h.substr(1)) - 1;
            if (idx < claims_.size()) parents.push_back(idx);
        }
        bool ok = parents.size() >= 2 && merge(a, parents, true);
        obs_->merge_done(*d, ok);
        return ok;
    }

    void step(int a) {
        if (run_directive(a)) return;
        const long k = rng_.poisson(cfg_.lambda);
        const auto vis = visible_agents(a);
        const auto picked = k == 0 ? std::nullopt : select(vis);
        if (!picked) {
            propose_root(a, home_task(a));
            return;
        }
        const std::size_t c = *picked;
        int type = draw_type();
        const std::size_t r = claims_[c].root;
        int actor = a;
        if (cfg_.routing == Routing::lead) {
            const double q = 1.0 - std::pow(1.0 + static_cast<double>(root_events_[r]), -cfg_.beta);
            if (rng_.bernoulli(q)) actor = claims_[r].owner;
        }
        switch (type) {
            case 0: delegate(actor, c, k); return;
            case 1:
            case 2: {
                if (claims_[c].depth + 1 > cfg_.max_depth) break;
                for (long j = 0; j < k && !full(); ++j) derive(actor, c, type == 1, claims_[c].subtask);
                return;
            }
            case 3: {
                const std::size_t avail = visible_claims(vis);
                if (avail < 2) break;
                const long f = std::min<long>(static_cast<long>(avail), 2 + rng_.poisson(std::max(cfg_.lambda - 1.0, 0.0)));
                std::vector<std::size_t> parents{c};
                int tries = 0;
                while (static_cast<long>(parents.size()) < f && tries < 64 * f) {
                    ++tries;
                    auto pick = select(vis);
                    if (!pick) continue;
                    const std::size_t q = *pick;
                    if (std::find(parents.begin(), parents.end(), q) == parents.end()) parents.push_back(q);
                }
                if (parents.size() < 2) break;
                if (merge(actor, parents, false)) return;
                break;
            }
            default: break;
        }
        endorse(actor, c);
    }

    void derive(int actor, std::size_t c, bool revise, const std::string& subtask) {
        auto& rec = emit(actor, revise ? EventType::revise_claim : EventType::contradict_claim);
        const std::size_t id = claims_.size();
        const std::size_t r = claims_[c].root;
        ClaimPayload p;
        p.claim_id = claim_name(id);
        p.claim_status = revise ? ClaimStatus::revised : ClaimStatus::contradictory;
        p.parent_claim_ids = {claim_name(c)};
        rec.claim = p;
        rec.target_claim_id = claim_name(c);
        rec.target_subtask_id = subtask;
        reference(c);
        new_claim_registered(actor, r, claims_[c].depth + 1, subtask);
        count_event(r);
        notify(claim_name(r));
    }

    void delegate(int actor, std::size_t c, long k) {
        auto& r = emit(actor, EventType::delegate_subtask);
        SubtaskPayload s;
        s.subtask_id = "s" + std::to_string(++subtask_counter_);
        s.parent_subtask_id = claims_[c].subtask;
        s.assigned_agent = agent_name(actor);
        r.subtask = s;
        r.target_claim_id = claim_name(c);
        reference(c);
        count_event(claims_[c].root);
        notify(claim_name(claims_[c].root));
        const bool nested = cfg_.delegation == Delegation::nested && claims_[c].depth + 1 <= cfg_.max_depth;
        for (long j = 0; j < k && !full(); ++j) {
            if (nested)
                derive(actor, c, true, s.subtask_id);
            else
                propose_root(actor, s.subtask_id);
        }
    }

    void rewire() {
        const int N = cfg_.N;
        for (int a = 0; a < N; ++a) {
            if (!rng_.bernoulli(0.5)) continue;
            auto& na = adj_[a];
            int best = -1;
            for (int b = 0; b < N; ++b) {
                if (b == a || std::binary_search(na.begin(), na.end(), b)) continue;
                if (best < 0 || effort_[b] > effort_[best]) best = b;
            }
            if (best < 0 || na.empty()) continue;
            // drop the weakest current neighbour
            int worst = na.front();
            for (int b : na)
                if (effort_[b] < effort_[worst]) worst = b;
            auto drop = [&](int u, int v) {
                auto& l = adj_[u];
                l.erase(std::lower_bound(l.begin(), l.end(), v));
            };
            auto add = [&](int u, int v) {
                auto& l = adj_[u];
                l.insert(std::lower_bound(l.begin(), l.end(), v), v);
            };
            drop(a, worst);
            drop(worst, a);
            add(a, best);
            add(best, a);
        }
    }

    const SimConfig& cfg_;
    SimObserver* obs_;
    Rng rng_;
    std::string run_id_;
    Adjacency adj_;
    TaskDag dag_;
    std::vector<Fenwick> trees_;
    std::vector<std::vector<std::size_t>> owned_;
    std::vector<Claim> claims_;
    std::vector<long> effort_;
    std::unordered_map<std::size_t, long> root_events_;
    std::int64_t step_counter_ = 0;
    long subtask_counter_ = 0;
    TraceBundle out_;
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

}  // namespace

const char* to_string(Routing r) { return kRoutingNames[static_cast<int>(r)]; }

std::optional<Routing> parse_routing(const std::string& s) {
    for (int i = 0; i < 2; ++i)
        if (s == kRoutingNames[i]) return static_cast<Routing>(i);
    return std::nullopt;
}

const char* to_string(Delegation d) { return kDelegationNames[static_cast<int>(d)]; }

std::optional<Delegation> parse_delegation(const std::string& s) {
    for (int i = 0; i < 2; ++i)
        if (s == kDelegationNames[i]) return static_cast<Delegation>(i);
    return std::nullopt;
}

int WorkloadConfig::tasks_per_seed(int N) const {
    const long ka = static_cast<long>(seeds_K) * agents_per_task_A;
    return static_cast<int>(std::max<long>(1, (N + ka - 1) / ka));
}

void WorkloadConfig::validate() const {
    require(seeds_K >= 1, "workload.seeds_K must be positive");
    require(agents_per_task_A >= 1, "workload.target_agents_per_task_A must be positive");
    require(dependency_density >= 0.0 && dependency_density <= 1.0, "workload.dependency_density must lie in [0,1]");
}

TaskDag generate_workload(const WorkloadConfig& cfg, int N, std::uint64_t seed) {
    cfg.validate();
    TaskDag d;
    d.K = cfg.seeds_K;
    d.M = cfg.tasks_per_seed(N);
    Rng rng(seed);
    for (int k = 0; k < d.K; ++k) {
        const int base = static_cast<int>(d.task_ids.size());
        for (int m = 0; m < d.M; ++m) d.task_ids.push_back("T" + std::to_string(k) + "." + std::to_string(m));
        // prerequisites come from earlier tasks of the same seed, which keeps the DAG shallow and acyclic
        for (int m = 1; m < d.M; ++m)
            for (int p = 0; p < m; ++p)
                if (rng.bernoulli(cfg.dependency_density)) d.dependencies.emplace_back(base + m, base + p);
    }
    return d;
}

Adjacency build_topology(Topology kind, int N, std::uint64_t seed) {
    if (N < 2) throw InvalidN("topology needs N >= 2, got " + std::to_string(N));
    Adjacency adj(N);
    auto link = [&](int u, int v) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    };
    switch (kind) {
        case Topology::chain:
            for (int i = 0; i + 1 < N; ++i) link(i, i + 1);
            break;
        case Topology::star:
            for (int i = 1; i < N; ++i) link(0, i);
            break;
        case Topology::tree:
            for (int i = 1; i < N; ++i) link((i - 1) / 2, i);
            break;
        case Topology::hierarchical: {
            // one coordinator, ~sqrt(N-1) managers, workers spread over managers
            const int managers = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(N - 1)))));
            const int m = std::min(managers, N - 1);
            for (int i = 1; i <= m; ++i) link(0, i);
            for (int w = m + 1; w < N; ++w) link(1 + (w - m - 1) % m, w);
            break;
        }
        case Topology::fully_connected:
            for (int i = 0; i < N; ++i)
                for (int j = i + 1; j < N; ++j) link(i, j);
            break;
        case Topology::sparse_mesh:
        case Topology::dynamic_reputation: {
            const double p = std::min(1.0, 4.0 / (N - 1));
            Rng rng(seed);
            for (;;) {
                for (auto& l : adj) l.clear();
                for (int i = 0; i < N; ++i)
                    for (int j = i + 1; j < N; ++j)
                        if (rng.bernoulli(p)) link(i, j);
                // connectivity by BFS from 0
                std::vector<char> seen(N, 0);
                std::vector<int> q{0};
                seen[0] = 1;
                for (std::size_t h = 0; h < q.size(); ++h)
                    for (int v : adj[q[h]])
                        if (!seen[v]) {
                            seen[v] = 1;
                            q.push_back(v);
                        }
                if (static_cast<int>(q.size()) == N) break;
            }
            break;
        }
    }
    for (auto& l : adj) std::sort(l.begin(), l.end());
    return adj;
}

std::vector<std::pair<int, int>> edge_list(const Adjacency& adj) {
    std::vector<std::pair<int, int>> e;
    for (int u = 0; u < static_cast<int>(adj.size()); ++u)
        for (int v : adj[u])
            if (u < v) e.emplace_back(u, v);
    return e;
}

std::string SimConfig::effective_run_id() const {
    if (!run_id.empty()) return run_id;
    std::ostringstream os;
    os << to_string(topology) << '-' << to_string(task_family) << "-N" << N << "-b" << fmt_double(beta) << "-l"
       << fmt_double(lambda) << "-s" << seed;
    return os.str();
}

void SimConfig::validate() const {
    require(N >= 2, "N must be at least 2");
    require(beta >= 0.0 && std::isfinite(beta), "beta must be non-negative");
    require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
    double s = 0.0;
    for (double p : event_mix.p) {
        require(p >= 0.0, "event_mix entries must be non-negative");
        s += p;
    }
    require(std::abs(s - 1.0) <= 1e-12, "event_mix must sum to 1");
    require(max_steps >= 0, "max_steps must be positive");
    require(steps_per_agent > 0, "steps_per_agent must be positive");
    require(max_depth > 0, "max_depth must be positive");
    require(context_budget > 0, "context_budget must be positive");
    workload.validate();
}

ojson sim_config_to_json(const SimConfig& c) {
    ojson o;
    o["N"] = c.N;
    o["topology"] = to_string(c.topology);
    o["task_family"] = to_string(c.task_family);
    o["beta"] = c.beta;
    o["lambda"] = c.lambda;
    ojson mix;
    for (int i = 0; i < 5; ++i) mix[kMixKeys[i]] = c.event_mix.p[i];
    o["event_mix"] = mix;
    o["max_steps"] = c.step_limit();
    o["max_depth"] = c.max_depth;
    o["context_budget"] = c.context_budget;
    o["seed"] = c.seed;
    o["workload"] = {{"seeds_K", c.workload.seeds_K},
                     {"target_agents_per_task_A", c.workload.agents_per_task_A},
                     {"dependency_density", c.workload.dependency_density}};
    o["routing"] = to_string(c.routing);
    o["delegation"] = to_string(c.delegation);
    o["run_id"] = c.effective_run_id();
    return o;
}

SimConfig sim_config_from_json(const json& j, SimConfig c) {
    if (!j.is_object()) throw ConfigError("simulation config must be a JSON object");
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& k = it.key();
            const json& v = it.value();
            if (k == "N")
                c.N = v.get<int>();
            else if (k == "topology") {
                auto t = parse_topology(v.get<std::string>());
                require(t.has_value(), "unknown topology '" + v.get<std::string>() + "'");
                c.topology = *t;
            } else if (k == "task_family") {
                auto t = parse_task_family(v.get<std::string>());
                require(t.has_value(), "unknown task_family '" + v.get<std::string>() + "'");
                c.task_family = *t;
            } else if (k == "beta")
                c.beta = v.get<double>();
            else if (k == "lambda")
                c.lambda = v.get<double>();
            else if (k == "event_mix") {
                require(v.is_object(), "event_mix must be an object");
                std::array<double, 5> p{};
                for (auto e = v.begin(); e != v.end(); ++e) {
                    auto pos = std::find(std::begin(kMixKeys), std::end(kMixKeys), e.key());
                    require(pos != std::end(kMixKeys), "unknown event_mix key '" + e.key() + "'");
                    p[pos - std::begin(kMixKeys)] = e.value().get<double>();
                }
                c.event_mix.p = p;
            } else if (k == "max_steps")
                c.max_steps = v.get<long>();
            else if (k == "steps_per_agent")
                c.steps_per_agent = v.get<int>();
            else if (k == "max_depth")
                c.max_depth = v.get<int>();
            else if (k == "context_budget")
                c.context_budget = v.get<long>();
            else if (k == "seed")
                c.seed = v.get<std::uint64_t>();
            else if (k == "routing") {
                auto r = parse_routing(v.get<std::string>());
                require(r.has_value(), "unknown routing '" + v.get<std::string>() + "'");
                c.routing = *r;
            } else if (k == "delegation") {
                auto d = parse_delegation(v.get<std::string>());
                require(d.has_value(), "unknown delegation '" + v.get<std::string>() + "'");
                c.delegation = *d;
            } else if (k == "run_id")
                c.run_id = v.get<std::string>();
            else if (k == "workload") {
                require(v.is_object(), "workload must be an object");
                for (auto e = v.begin(); e != v.end(); ++e) {
                    if (e.key() == "seeds_K")
                        c.workload.seeds_K = e.value().get<int>();
                    else if (e.key() == "target_agents_per_task_A")
                        c.workload.agents_per_task_A = e.value().get<int>();
                    else if (e.key() == "dependency_density")
                        c.workload.dependency_density = e.value().get<double>();
                    else
                        throw ConfigError("unknown workload key '" + e.key() + "'");
                }
            } else
                throw ConfigError("unknown simulation key '" + k + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad simulation config: ") + e.what());
    }
    c.validate();
    return c;
}

TraceBundle run_simulation(const SimConfig& cfg, SimObserver* observer) {
    cfg.validate();
    Run r(cfg, observer);
    return r.run();
}

std::string sweep_index_csv(const std::vector<SweepEntry>& entries) {
    std::ostringstream os;
    os << "run_id,topology,task_family,N,beta,lambda,seed,events,file\n";
    for (const auto& e : entries) {
        const auto& c = e.config;
        os << csv_escape(c.effective_run_id()) << ',' << to_string(c.topology) << ',' << to_string(c.task_family)
           << ',' << c.N << ',' << fmt_double(c.beta) << ',' << fmt_double(c.lambda) << ',' << c.seed << ','
           << e.events << ',' << csv_escape(e.file) << '\n';
    }
    return os.str();
}

SweepResult sweep(const std::vector<SimConfig>& configs, const std::string& out_dir, int threads) {
    if (configs.empty()) throw ConfigError("sweep needs at least one config");
    std::filesystem::create_directories(out_dir);
    if (threads <= 0) threads = std::max(1u, std::thread::hardware_concurrency());

    struct Slot {
        std::optional<SweepEntry> entry;
        std::optional<SweepFailure> failure;
    };
    std::vector<Slot> slots(configs.size());
    auto work = [&](std::size_t i) {
        const auto& cfg = configs[i];
        try {
            auto b = run_simulation(cfg);
            std::string name = cfg.effective_run_id() + ".jsonl";
            write_trace(b, (std::filesystem::path(out_dir) / name).string());
            slots[i].entry = SweepEntry{cfg, name, static_cast<long>(b.records.size())};
        } catch (const std::exception& e) {
            slots[i].failure = SweepFailure{cfg, e.what()};
        }
    };
    std::size_t next = 0;
    while (next < configs.size()) {
        std::vector<std::future<void>> batch;
        for (int t = 0; t < threads && next < configs.size(); ++t, ++next) batch.push_back(std::async(std::launch::async, work, next));
        for (auto& f : batch) f.get();
    }
    SweepResult res;
    for (auto& s : slots) {
        if (s.entry) res.entries.push_back(std::move(*s.entry));
        if (s.failure) res.failures.push_back(std::move(*s.failure));
    }
    write_file((std::filesystem::path(out_dir) / "index.csv").string(), sweep_index_csv(res.entries));
    return res;
}

}  // namespace cascade
