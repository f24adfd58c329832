#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cascade/trace.hpp"

namespace cascade {

class CycleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DanglingParent : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SubtaskNode {
    std::string subtask_id;
    std::optional<std::string> parent_subtask_id;
    int subtask_depth = 0;
    std::string assigned_agent;
    SubtaskStatus subtask_status = SubtaskStatus::active;
    // Index of the delegate_subtask record that introduced the node.
    std::size_t record_index = 0;
};

struct SubtaskTree {
    std::string run_id;
    std::vector<SubtaskNode> nodes;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::vector<std::size_t>> children;
    std::vector<std::size_t> roots;
    std::vector<Diagnostic> diagnostics;

    std::size_t size() const { return nodes.size(); }
};

struct SubtaskTreeOptions {
    // Throw DanglingParent instead of promoting orphans to roots.
    bool strict = false;
};

SubtaskTree build_subtask_tree(const TraceBundle& bundle, const std::string& run_id,
                               SubtaskTreeOptions opt = {});
// Single-run convenience; throws std::invalid_argument on multi-run bundles.
SubtaskTree build_subtask_tree(const TraceBundle& bundle, SubtaskTreeOptions opt = {});

struct ClaimNode {
    std::string claim_id;
    std::vector<std::string> parent_claim_ids;
    std::string root_claim_id;
    int claim_depth = 0;
    ClaimStatus claim_status = ClaimStatus::proposed;
    std::string agent_id;
    std::int64_t step_id = 0;
    std::size_t record_index = 0;

    std::vector<std::size_t> parents;
    std::vector<std::size_t> children;
    std::size_t root = 0;
};

struct ClaimGraph {
    std::string run_id;
    std::vector<ClaimNode> nodes;  // in record order
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // parent -> child

    // Filled by derive_groupings; empty string means "not in a group".
    std::vector<std::string> revision_chain_id;
    std::vector<std::string> contradiction_group_id;
    std::map<std::string, std::vector<std::string>> merge_groups;
    // chain id -> claims in order, origin first
    std::map<std::string, std::vector<std::size_t>> revision_chains;
    // group id -> contradicting claims
    std::map<std::string, std::vector<std::size_t>> contradiction_groups;
    bool groupings_derived = false;

    std::vector<Diagnostic> diagnostics;

    const ClaimNode& node(const std::string& id) const { return nodes.at(index.at(id)); }
};

ClaimGraph build_claim_graph(const TraceBundle& bundle, const std::string& run_id);
ClaimGraph build_claim_graph(const TraceBundle& bundle);

constexpr std::int64_t kDefaultTau = 10;

void derive_groupings(ClaimGraph& graph, std::int64_t tau = kDefaultTau);

struct Cascade {
    std::string root_claim_id;
    std::size_t root = 0;
    std::vector<std::size_t> member_claims;         // node indices, ascending
    std::vector<std::size_t> member_event_indices;  // bundle record indices, ascending
};

std::vector<Cascade> extract_cascades(const ClaimGraph& graph, const TraceBundle& bundle);

// Cascade slot per bundle record; -1 for records outside every listed cascade.
std::vector<long> record_cascade_map(const TraceBundle& bundle, const std::vector<Cascade>& cascades);

std::string claim_edges_csv(const ClaimGraph& graph);
std::string subtask_edges_csv(const SubtaskTree& tree);

}  // namespace cascade
