#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cascade/trace.hpp"

namespace cascade {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class InvalidN : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct WorkloadConfig {
    int seeds_K = 5;
    int agents_per_task_A = 5;
    double dependency_density = 0.1;

    int tasks_per_seed(int N) const;  // M = ceil(N / (K*A))
    void validate() const;
};

struct TaskDag {
    int K = 0;
    int M = 0;
    std::vector<std::string> task_ids;             // seed-major
    std::vector<std::pair<int, int>> dependencies;  // (task, prerequisite), prerequisite < task
};

TaskDag generate_workload(const WorkloadConfig& cfg, int N, std::uint64_t seed);

using Adjacency = std::vector<std::vector<int>>;  // sorted neighbor lists
Adjacency build_topology(Topology kind, int N, std::uint64_t seed);
std::vector<std::pair<int, int>> edge_list(const Adjacency& adj);

// Slots follow the expansion/integration split: delegate, revise, contradict, merge, endorse.
struct EventMix {
    std::array<double, 5> p{0.25, 0.30, 0.25, 0.15, 0.05};
    double delegate() const { return p[0]; }
    double merge() const { return p[3]; }
};

enum class Routing {
    plain,  // the scheduled agent acts on the selected claim
    lead,   // with probability 1-(1+X_r)^-beta the root's originator acts instead
};
const char* to_string(Routing r);
std::optional<Routing> parse_routing(const std::string& s);

enum class Delegation {
    new_roots,  // the assignee opens fresh root claims inside the subtask
    nested,     // the assignee's claims derive from the delegated claim
};
const char* to_string(Delegation d);
std::optional<Delegation> parse_delegation(const std::string& s);

struct SimConfig {
    int N = 64;
    Topology topology = Topology::fully_connected;
    TaskFamily task_family = TaskFamily::qa;
    double beta = 0.15;
    double lambda = 1.2;
    EventMix event_mix;
    // 0 means steps_per_agent * N
    long max_steps = 0;
    int steps_per_agent = 40;
    int max_depth = 64;
    long context_budget = 1'000'000;
    std::uint64_t seed = 0;
    WorkloadConfig workload;
    Routing routing = Routing::lead;
    Delegation delegation = Delegation::new_roots;
    std::string run_id;  // derived from the condition when empty

    long step_limit() const { return max_steps > 0 ? max_steps : static_cast<long>(steps_per_agent) * N; }
    std::string effective_run_id() const;
    void validate() const;
};

ojson sim_config_to_json(const SimConfig& c);
// Missing keys keep their defaults; unknown keys and bad values raise ConfigError.
SimConfig sim_config_from_json(const json& j, SimConfig base = {});

struct MergeDirective {
    std::string root_claim_id;
    std::vector<std::string> heads;
};

// Hook for controllers embedded in a run. Must not draw from the run's RNG.
class SimObserver {
public:
    virtual ~SimObserver() = default;
    // root is the cascade root claim id, empty for records outside any cascade
    virtual void on_record(const EventRecord& rec, const std::string& root, bool injected) = 0;
    // polled once at the start of every scheduled step
    virtual std::optional<MergeDirective> pending_merge() = 0;
    virtual void merge_done(const MergeDirective&, bool executed) { (void)executed; }
};

TraceBundle run_simulation(const SimConfig& cfg, SimObserver* observer = nullptr);

struct SweepEntry {
    SimConfig config;
    std::string file;
    long events = 0;
};

struct SweepFailure {
    SimConfig config;
    std::string error;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    std::vector<SweepFailure> failures;
    bool ok() const { return failures.empty(); }
};

// Runs every config, writing <out_dir>/<run_id>.jsonl and <out_dir>/index.csv.
SweepResult sweep(const std::vector<SimConfig>& configs, const std::string& out_dir, int threads = 0);
std::string sweep_index_csv(const std::vector<SweepEntry>& entries);

}  // namespace cascade
