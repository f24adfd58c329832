#include "cascade/graph.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <sstream>

namespace cascade {

namespace {

std::string only_run(const TraceBundle& bundle) {
    auto runs = bundle.run_ids();
    if (runs.size() != 1)
        throw std::invalid_argument("bundle holds " + std::to_string(runs.size()) + " runs; name one explicitly");
    return runs.front();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

SubtaskTree build_subtask_tree(const TraceBundle& bundle, const std::string& run_id, SubtaskTreeOptions opt) {
    SubtaskTree t;
    t.run_id = run_id;
    for (auto i : bundle.run_records(run_id)) {
        const auto& r = bundle.records[i];
        if (r.event_type != EventType::delegate_subtask || !r.subtask) continue;
        const auto& s = *r.subtask;
        auto it = t.index.find(s.subtask_id);
        if (it != t.index.end()) {
            // A repeated subtask id is a status update.
            auto& n = t.nodes[it->second];
            n.subtask_status = s.subtask_status;
            n.assigned_agent = s.assigned_agent;
            continue;
        }
        SubtaskNode n;
        n.subtask_id = s.subtask_id;
        n.parent_subtask_id = s.parent_subtask_id;
        n.assigned_agent = s.assigned_agent;
        n.subtask_status = s.subtask_status;
        n.record_index = i;
        t.index.emplace(n.subtask_id, t.nodes.size());
        t.nodes.push_back(std::move(n));
    }

    const std::size_t n = t.nodes.size();
    t.children.assign(n, {});
    std::vector<long> parent(n, -1);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& p = t.nodes[v].parent_subtask_id;
        if (!p) continue;
        auto it = t.index.find(*p);
        if (it == t.index.end()) {
            if (opt.strict) throw DanglingParent("subtask '" + t.nodes[v].subtask_id + "' has undefined parent '" + *p + "'");
            t.diagnostics.push_back({bundle.records[t.nodes[v].record_index].line, "OrphanPromoted",
                                     "subtask '" + t.nodes[v].subtask_id + "' parent '" + *p +
                                         "' is undefined; treated as a root"});
            continue;
        }
        parent[v] = static_cast<long>(it->second);
        t.children[it->second].push_back(v);
    }
    for (std::size_t v = 0; v < n; ++v)
        if (parent[v] < 0) t.roots.push_back(v);

    std::vector<bool> seen(n, false);
    std::deque<std::size_t> q(t.roots.begin(), t.roots.end());
    for (auto r : t.roots) {
        seen[r] = true;
        t.nodes[r].subtask_depth = 0;
    }
    std::size_t visited = 0;
    while (!q.empty()) {
        auto v = q.front();
        q.pop_front();
        ++visited;
        for (auto c : t.children[v]) {
            seen[c] = true;
            t.nodes[c].subtask_depth = t.nodes[v].subtask_depth + 1;
            q.push_back(c);
        }
    }
    if (visited != n) {
        for (std::size_t v = 0; v < n; ++v)
            if (!seen[v]) throw CycleError("subtask parent links form a cycle through '" + t.nodes[v].subtask_id + "'");
    }
    return t;
}

SubtaskTree build_subtask_tree(const TraceBundle& bundle, SubtaskTreeOptions opt) {
    return build_subtask_tree(bundle, only_run(bundle), opt);
}

ClaimGraph build_claim_graph(const TraceBundle& bundle, const std::string& run_id) {
    ClaimGraph g;
    g.run_id = run_id;
    for (auto i : bundle.run_records(run_id)) {
        const auto& r = bundle.records[i];
        if (!creates_claim(r.event_type) || !r.claim) continue;
        const auto& c = *r.claim;
        if (g.index.count(c.claim_id)) {
            g.diagnostics.push_back({r.line, "DuplicateClaim", "claim '" + c.claim_id + "' redefined; later copy ignored"});
            continue;
        }
        ClaimNode nd;
        nd.claim_id = c.claim_id;
        nd.parent_claim_ids = c.parent_claim_ids;
        nd.claim_status = c.claim_status;
        nd.agent_id = r.agent_id;
        nd.step_id = r.step_id;
        nd.record_index = i;
        g.index.emplace(nd.claim_id, g.nodes.size());
        g.nodes.push_back(std::move(nd));
    }

    const std::size_t n = g.nodes.size();
    std::vector<std::size_t> indeg(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
        auto& nd = g.nodes[v];
        for (const auto& pid : nd.parent_claim_ids) {
            auto it = g.index.find(pid);
            if (it == g.index.end())
                throw DanglingParent("claim '" + nd.claim_id + "' references undefined parent '" + pid + "'");
            if (std::find(nd.parents.begin(), nd.parents.end(), it->second) != nd.parents.end()) continue;
            nd.parents.push_back(it->second);
            g.nodes[it->second].children.push_back(v);
            g.edges.emplace_back(it->second, v);
            ++indeg[v];
        }
    }

    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t v = 0; v < n; ++v)
        if (indeg[v] == 0) ready.push(v);
    std::size_t done = 0;
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        ++done;
        auto& nd = g.nodes[v];
        if (nd.parents.empty()) {
            nd.claim_depth = 0;
            nd.root = v;
        } else {
            int d = 0;
            std::size_t first = nd.parents.front();
            for (auto p : nd.parents) {
                d = std::max(d, g.nodes[p].claim_depth);
                const auto& a = g.nodes[p];
                const auto& b = g.nodes[first];
                if (a.step_id < b.step_id || (a.step_id == b.step_id && p < first)) first = p;
            }
            nd.claim_depth = d + 1;
            nd.root = g.nodes[first].root;
        }
        for (auto c : nd.children)
            if (--indeg[c] == 0) ready.push(c);
    }
    if (done != n) {
        for (std::size_t v = 0; v < n; ++v)
            if (indeg[v] > 0) throw CycleError("claim lineage cycle through '" + g.nodes[v].claim_id + "'");
    }

    for (auto& nd : g.nodes) {
        nd.root_claim_id = g.nodes[nd.root].claim_id;
        const auto& extra = bundle.records[nd.record_index].extra;
        auto line = bundle.records[nd.record_index].line;
        auto d = extra.find("claim_depth");
        if (d != extra.end() && d->is_number_integer() && d->get<long long>() != nd.claim_depth)
            g.diagnostics.push_back({line, "DepthMismatch",
                                     "claim '" + nd.claim_id + "' logged depth " + d->dump() + ", recomputed " +
                                         std::to_string(nd.claim_depth)});
        auto rc = extra.find("root_claim_id");
        if (rc != extra.end() && rc->is_string() && rc->get<std::string>() != nd.root_claim_id)
            g.diagnostics.push_back({line, "RootMismatch",
                                     "claim '" + nd.claim_id + "' logged root " + rc->get<std::string>() +
                                         ", recomputed " + nd.root_claim_id});
    }
    return g;
}

ClaimGraph build_claim_graph(const TraceBundle& bundle) { return build_claim_graph(bundle, only_run(bundle)); }

void derive_groupings(ClaimGraph& g, std::int64_t tau) {
    const std::size_t n = g.nodes.size();
    g.revision_chain_id.assign(n, "");
    g.contradiction_group_id.assign(n, "");
    g.merge_groups.clear();
    g.revision_chains.clear();
    g.contradiction_groups.clear();

    auto single_revised = [&](std::size_t v) {
        return g.nodes[v].claim_status == ClaimStatus::revised && g.nodes[v].parents.size() == 1;
    };

    // A revised claim extends its parent's chain when it is the parent's first
    // revised child; any other revised claim opens a chain whose origin is its parent.
    std::vector<long> chain_of(n, -1);
    std::vector<std::vector<std::size_t>> chains;
    for (std::size_t v = 0; v < n; ++v) {
        if (!single_revised(v)) continue;
        auto p = g.nodes[v].parents.front();
        bool first_revised_child = true;
        for (auto c : g.nodes[p].children) {
            if (c == v) break;
            if (single_revised(c)) {
                first_revised_child = false;
                break;
            }
        }
        if (single_revised(p) && first_revised_child && chain_of[p] >= 0) {
            chain_of[v] = chain_of[p];
            chains[chain_of[v]].push_back(v);
        } else {
            chain_of[v] = static_cast<long>(chains.size());
            chains.push_back({p, v});
        }
    }
    for (std::size_t k = 0; k < chains.size(); ++k) {
        auto id = "rc" + std::to_string(k);
        for (auto v : chains[k]) {
            // an origin already owned by an earlier chain keeps that id
            if (g.revision_chain_id[v].empty()) g.revision_chain_id[v] = id;
        }
        g.revision_chains[id] = chains[k];
    }

    std::size_t gid = 0;
    for (std::size_t p = 0; p < n; ++p) {
        std::vector<std::size_t> contra;
        for (auto c : g.nodes[p].children)
            if (g.nodes[c].claim_status == ClaimStatus::contradictory && g.nodes[c].parents.size() == 1)
                contra.push_back(c);
        std::stable_sort(contra.begin(), contra.end(),
                         [&](auto a, auto b) { return g.nodes[a].step_id < g.nodes[b].step_id; });
        std::size_t i = 0;
        while (i < contra.size()) {
            auto start = g.nodes[contra[i]].step_id;
            auto id = "cg" + std::to_string(gid++);
            auto& members = g.contradiction_groups[id];
            while (i < contra.size() && g.nodes[contra[i]].step_id - start <= tau) {
                g.contradiction_group_id[contra[i]] = id;
                members.push_back(contra[i]);
                ++i;
            }
        }
    }

    for (std::size_t v = 0; v < n; ++v)
        if (g.nodes[v].claim_status == ClaimStatus::merged) g.merge_groups[g.nodes[v].claim_id] = g.nodes[v].parent_claim_ids;
    g.groupings_derived = true;
}

std::vector<Cascade> extract_cascades(const ClaimGraph& g, const TraceBundle& bundle) {
    std::vector<long> slot(g.nodes.size(), -1);
    std::vector<Cascade> out;
    for (std::size_t v = 0; v < g.nodes.size(); ++v) {
        auto r = g.nodes[v].root;
        if (slot[r] < 0) {
            slot[r] = static_cast<long>(out.size());
            Cascade c;
            c.root = r;
            c.root_claim_id = g.nodes[r].claim_id;
            out.push_back(std::move(c));
        }
        out[slot[r]].member_claims.push_back(v);
    }
    for (auto i : bundle.run_records(g.run_id)) {
        const auto& rec = bundle.records[i];
        long owner = -1;
        if (creates_claim(rec.event_type) && rec.claim) {
            auto it = g.index.find(rec.claim->claim_id);
            if (it != g.index.end() && g.nodes[it->second].record_index == i) owner = slot[g.nodes[it->second].root];
        }
        if (owner < 0 && rec.target_claim_id) {
            auto it = g.index.find(*rec.target_claim_id);
            if (it != g.index.end()) owner = slot[g.nodes[it->second].root];
        }
        if (owner >= 0) out[owner].member_event_indices.push_back(i);
    }
    return out;
}

std::vector<long> record_cascade_map(const TraceBundle& bundle, const std::vector<Cascade>& cascades) {
    std::vector<long> out(bundle.records.size(), -1);
    for (std::size_t k = 0; k < cascades.size(); ++k)
        for (auto i : cascades[k].member_event_indices) out[i] = static_cast<long>(k);
    return out;
}

std::string claim_edges_csv(const ClaimGraph& g) {
    std::ostringstream os;
    os << "parent_id,child_id,kind\n";
    for (const auto& [p, c] : g.edges)
        os << csv_field(g.nodes[p].claim_id) << ',' << csv_field(g.nodes[c].claim_id) << ','
           << to_string(g.nodes[c].claim_status) << '\n';
    return os.str();
}

std::string subtask_edges_csv(const SubtaskTree& t) {
    std::ostringstream os;
    os << "parent_id,child_id,kind\n";
    for (std::size_t v = 0; v < t.nodes.size(); ++v)
        for (auto c : t.children[v])
            os << csv_field(t.nodes[v].subtask_id) << ',' << csv_field(t.nodes[c].subtask_id) << ",delegation\n";
    return os.str();
}

}  // namespace cascade
