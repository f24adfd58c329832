#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>

#include "cascade/graph.hpp"
#include "cascade/util.hpp"
#include "support.hpp"

using namespace cascade;
using testing::Trace;

namespace {

std::set<std::pair<std::string, std::string>> edge_names(const ClaimGraph& g) {
    std::set<std::pair<std::string, std::string>> out;
    for (auto [p, c] : g.edges) out.emplace(g.nodes[p].claim_id, g.nodes[c].claim_id);
    return out;
}

std::vector<std::string> ids(const ClaimGraph& g, const std::vector<std::size_t>& v) {
    std::vector<std::string> out;
    for (auto i : v) out.push_back(g.nodes[i].claim_id);
    return out;
}

// Random run: proposals, single-parent expansions, merges over earlier claims, endorsements.
Trace random_run(Rng& rng, int n_claims) {
    Trace t("rand");
    std::vector<std::string> made;
    for (int i = 0; i < n_claims; ++i) {
        const std::string id = "c" + std::to_string(i);
        const std::string agent = "a" + std::to_string(rng.below(5));
        const double u = rng.uniform();
        if (made.empty() || u < 0.15) {
            t.propose(id, agent);
        } else if (u < 0.45) {
            t.revise(id, made[rng.below(made.size())], agent);
        } else if (u < 0.7) {
            t.contradict(id, made[rng.below(made.size())], agent);
        } else if (u < 0.9 && made.size() >= 2) {
            std::set<std::string> ps;
            const auto k = 2 + rng.below(std::min<std::size_t>(3, made.size() - 1));
            while (ps.size() < k) ps.insert(made[rng.below(made.size())]);
            t.merge(id, {ps.begin(), ps.end()}, agent);
        } else {
            t.endorse(made[rng.below(made.size())], agent);
            continue;
        }
        made.push_back(id);
    }
    return t;
}

}  // namespace

TEST_CASE("worked example subtask tree is rooted at T0") {
    auto b = load_trace(testing::data_path("worked_example.jsonl"));
    auto t = build_subtask_tree(b);
    CHECK(t.size() == 6);
    REQUIRE(t.roots.size() == 1);
    CHECK(t.nodes[t.roots[0]].subtask_id == "T0");
    CHECK(t.nodes[t.index.at("T4")].subtask_depth == 3);
    CHECK(t.nodes[t.index.at("T5")].parent_subtask_id == "T2");
}

TEST_CASE("no delegations gives an empty tree") {
    auto t = build_subtask_tree(testing::worked_example().bundle());
    CHECK(t.size() == 0);
    CHECK(t.roots.empty());
}

TEST_CASE("mutual subtask parents raise CycleError") {
    Trace t;
    t.delegate("A", "B").delegate("B", "A");
    CHECK_THROWS_AS(build_subtask_tree(t.bundle()), CycleError);
}

TEST_CASE("undefined subtask parent: promoted by default, thrown in strict mode") {
    Trace t;
    t.delegate("A", std::nullopt).delegate("B", "Z");
    auto tree = build_subtask_tree(t.bundle());
    CHECK(tree.roots.size() == 2);
    REQUIRE(tree.diagnostics.size() == 1);
    CHECK(tree.diagnostics[0].kind == "OrphanPromoted");
    CHECK_THROWS_AS(build_subtask_tree(t.bundle(), SubtaskTreeOptions{true}), DanglingParent);
}

TEST_CASE("worked example claim DAG") {
    auto g = build_claim_graph(testing::worked_example().bundle());
    CHECK(g.nodes.size() == 5);
    CHECK(edge_names(g) == std::set<std::pair<std::string, std::string>>{
                               {"c1", "c2"}, {"c1", "c3"}, {"c2", "c4"}, {"c2", "c5"}, {"c4", "c5"}, {"c3", "c5"}});
    for (const auto& n : g.nodes) CHECK(n.root_claim_id == "c1");
    CHECK(g.node("c5").claim_depth == 3);
    CHECK(g.node("c3").claim_depth == 1);
}

TEST_CASE("lone proposal is its own root at depth 0") {
    Trace t;
    t.propose("c1");
    auto g = build_claim_graph(t.bundle());
    REQUIRE(g.nodes.size() == 1);
    CHECK(g.edges.empty());
    CHECK(g.nodes[0].claim_depth == 0);
    CHECK(g.nodes[0].root_claim_id == "c1");
}

TEST_CASE("revision chain depths count up") {
    Trace t;
    t.propose("c0").revise("c1", "c0").revise("c2", "c1").revise("c3", "c2");
    auto g = build_claim_graph(t.bundle());
    for (int i = 0; i < 4; ++i) CHECK(g.node("c" + std::to_string(i)).claim_depth == i);
}

TEST_CASE("undefined claim parent raises DanglingParent") {
    Trace t;
    t.propose("c1").revise("c2", "nope");
    CHECK_THROWS_AS(build_claim_graph(t.bundle()), DanglingParent);
}

TEST_CASE("logged depth disagreeing with lineage is reported, not trusted") {
    auto text = Trace().propose("c1").text();
    text += R"({"run_id":"r0","step_id":2,"agent_id":"a0","event_type":"revise_claim","target_claim_id":"c1","timestamp":2,"message_length":1,"claim":{"claim_id":"c2","parent_claim_ids":["c1"],"claim_status":"revised"},"claim_depth":4})"
            "\n";
    auto g = build_claim_graph(parse_trace_text(text));
    CHECK(g.node("c2").claim_depth == 1);
    REQUIRE(g.diagnostics.size() == 1);
    CHECK(g.diagnostics[0].kind == "DepthMismatch");
}

TEST_CASE("worked example groupings") {
    auto g = build_claim_graph(testing::worked_example().bundle());
    derive_groupings(g);
    REQUIRE(g.revision_chains.size() == 1);
    CHECK(ids(g, g.revision_chains.begin()->second) == std::vector<std::string>{"c1", "c2", "c4"});
    REQUIRE(g.contradiction_groups.size() == 1);
    CHECK(ids(g, g.contradiction_groups.begin()->second) == std::vector<std::string>{"c3"});
    REQUIRE(g.merge_groups.size() == 1);
    CHECK(g.merge_groups.at("c5") == std::vector<std::string>{"c2", "c3", "c4"});
}

TEST_CASE("contradiction window splits or joins groups") {
    Trace t;
    t.propose("p").at(1).contradict("x", "p", "a1").at(100).contradict("y", "p", "a2");
    auto b = t.bundle();
    auto g = build_claim_graph(b);
    derive_groupings(g, 10);
    CHECK(g.contradiction_groups.size() == 2);
    for (const auto& [id, m] : g.contradiction_groups) CHECK(m.size() == 1);

    derive_groupings(g, 200);
    REQUIRE(g.contradiction_groups.size() == 1);
    CHECK(g.contradiction_groups.begin()->second.size() == 2);
}

TEST_CASE("worked example is one cascade of five claims") {
    auto b = testing::worked_example().bundle();
    auto g = build_claim_graph(b);
    auto cs = extract_cascades(g, b);
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].root_claim_id == "c1");
    CHECK(cs[0].member_claims.size() == 5);
    CHECK(cs[0].member_event_indices.size() == 5);
}

TEST_CASE("isolated proposals are separate cascades") {
    Trace t;
    t.propose("a").propose("b");
    auto b = t.bundle();
    auto cs = extract_cascades(build_claim_graph(b), b);
    REQUIRE(cs.size() == 2);
    CHECK(cs[0].member_claims.size() == 1);
    CHECK(cs[1].member_claims.size() == 1);
}

TEST_CASE("merge across roots joins the earlier root") {
    Trace t;
    t.propose("r1").propose("r2").revise("x", "r2").merge("m", {"x", "r1"}).revise("m2", "m");
    auto b = t.bundle();
    auto g = build_claim_graph(b);
    CHECK(g.node("m").root_claim_id == "r1");
    CHECK(g.node("m2").root_claim_id == "r1");
    auto cs = extract_cascades(g, b);
    REQUIRE(cs.size() == 2);
    CHECK(cs[0].root_claim_id == "r1");
    CHECK(ids(g, cs[0].member_claims) == std::vector<std::string>{"r1", "m", "m2"});
}

TEST_CASE("endorsements join the cascade of their target") {
    Trace t;
    t.propose("a").propose("b").endorse("a").endorse("b").endorse("a");
    auto b = t.bundle();
    auto cs = extract_cascades(build_claim_graph(b), b);
    REQUIRE(cs.size() == 2);
    CHECK(cs[0].member_event_indices == std::vector<std::size_t>{0, 2, 4});
    CHECK(cs[1].member_event_indices == std::vector<std::size_t>{1, 3});
}

TEST_CASE("cascade extraction matches a brute-force walk on random DAGs") {
    Rng rng(20240611);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(99));
        auto tr = random_run(rng, n);
        auto b = tr.bundle();
        auto g = build_claim_graph(b);
        auto cs = extract_cascades(g, b);

        // oracle: follow the earliest-step parent until a parentless claim
        std::map<std::string, const EventRecord*> by_id;
        for (const auto& r : b.records)
            if (r.claim) by_id[r.claim->claim_id] = &r;
        std::function<std::string(const std::string&)> root_of = [&](const std::string& id) {
            const auto* r = by_id.at(id);
            if (r->claim->parent_claim_ids.empty()) return id;
            const EventRecord* best = nullptr;
            for (const auto& p : r->claim->parent_claim_ids)
                if (!best || by_id.at(p)->step_id < best->step_id) best = by_id.at(p);
            return root_of(best->claim->claim_id);
        };
        std::map<std::string, std::set<std::string>> members;
        std::map<std::string, std::set<std::size_t>> events;
        for (std::size_t i = 0; i < b.records.size(); ++i) {
            const auto& r = b.records[i];
            const std::string anchor = r.claim ? r.claim->claim_id : *r.target_claim_id;
            const auto root = root_of(anchor);
            if (r.claim) members[root].insert(r.claim->claim_id);
            events[root].insert(i);
        }

        REQUIRE(cs.size() == members.size());
        for (const auto& c : cs) {
            auto got = ids(g, c.member_claims);
            CHECK(std::set<std::string>(got.begin(), got.end()) == members.at(c.root_claim_id));
            CHECK(std::set<std::size_t>(c.member_event_indices.begin(), c.member_event_indices.end()) ==
                  events.at(c.root_claim_id));
            // every member is reachable from the root along lineage edges
            std::set<std::size_t> seen{c.root};
            std::deque<std::size_t> q{c.root};
            while (!q.empty()) {
                auto v = q.front();
                q.pop_front();
                for (auto ch : g.nodes[v].children)
                    if (seen.insert(ch).second) q.push_back(ch);
            }
            for (auto m : c.member_claims) CHECK(seen.count(m) == 1);
        }
        // root idempotence
        for (const auto& nd : g.nodes) CHECK(g.node(nd.root_claim_id).root_claim_id == nd.root_claim_id);
        // depth is one more than the deepest parent
        for (const auto& nd : g.nodes) {
            int d = -1;
            for (auto p : nd.parents) d = std::max(d, g.nodes[p].claim_depth);
            CHECK(nd.claim_depth == d + 1);
        }
    }
}

TEST_CASE("edge CSV lists every lineage edge") {
    auto g = build_claim_graph(testing::worked_example().bundle());
    auto csv = claim_edges_csv(g);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}
