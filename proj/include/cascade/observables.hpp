#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cascade/graph.hpp"
#include "cascade/trace.hpp"

namespace cascade {

enum class Observable { delegation_cascade, revision_wave, contradiction_burst, merge_fanin, tce };
const char* to_string(Observable o);
std::optional<Observable> parse_observable(const std::string& s);
constexpr std::array<Observable, 5> kAllObservables = {Observable::delegation_cascade, Observable::revision_wave,
                                                       Observable::contradiction_burst, Observable::merge_fanin,
                                                       Observable::tce};

struct Condition {
    Topology topology = Topology::fully_connected;
    TaskFamily task_family = TaskFamily::qa;
    int N = 1;
};

struct EventSizeSample {
    Observable observable = Observable::tce;
    long x = 1;
    std::string run_id;
    Condition condition;
};

Condition condition_of(const TraceBundle& bundle, const std::string& run_id);

std::vector<EventSizeSample> delegation_cascade_sizes(const SubtaskTree& tree, const Condition& cond = {});
std::vector<EventSizeSample> revision_waves(const ClaimGraph& graph, const Condition& cond = {});
std::vector<EventSizeSample> contradiction_bursts(const ClaimGraph& graph, const Condition& cond = {});
std::vector<EventSizeSample> merge_fanins(const ClaimGraph& graph, const Condition& cond = {});

// Composition slots, in this order.
enum class Primitive { delegation, revision, contradiction, merge, endorsement };
constexpr int kPrimitiveCount = 5;
const char* to_string(Primitive p);

struct CascadeStats {
    std::string run_id;
    std::string root_claim_id;
    long cascade_size = 0;
    long tce = 0;
    // counts per Primitive; proposals are not a primitive and are counted apart
    std::array<long, kPrimitiveCount> counts{};
    long proposals = 0;
    std::array<double, kPrimitiveCount> composition{};
    std::optional<double> merge_conversion_ratio;
    long expansions() const { return counts[0] + counts[1] + counts[2]; }
};

std::vector<CascadeStats> cascade_stats(const std::vector<Cascade>& cascades, const TraceBundle& bundle);
std::vector<EventSizeSample> tce_samples(const std::vector<CascadeStats>& stats, const Condition& cond = {});

class InsufficientAgents : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConcentrationReport {
    std::string run_id;
    int N = 0;
    // agent id -> authored claims, agents sorted by id
    std::map<std::string, long> effort;
    // S_k for k = 1..|active|, top agents by effort, ties by agent id
    std::vector<double> S;
    std::vector<std::string> ranking;
    std::array<double, 3> E_active{};  // k = 10, 25, 50
    std::array<double, 3> E_all{};
    std::array<double, 3> delta_active{};
    double gini = 0.0;
    double n_eff = 0.0;
    double n_eff_ratio = 0.0;
    double active_fraction = 0.0;
    long active_agents = 0;
    long total_claims = 0;

    double S_k(std::size_t k) const;
};

constexpr std::array<int, 3> kTopPercents = {10, 25, 50};

// Effort share of the top `percent` of the given efforts, linearly interpolating
// the Lorenz curve when percent·n/100 is fractional.
double top_share(std::vector<double> efforts, double percent);
double gini(std::vector<double> efforts);
double n_eff(const std::vector<double>& efforts);

ConcentrationReport concentration(const TraceBundle& bundle, const std::string& run_id);
// Effort vector form; `N` counts agents including inactive ones.
ConcentrationReport concentration_from_efforts(const std::map<std::string, long>& effort, int N);

struct ExtremeSample {
    std::string run_id;
    Observable observable = Observable::tce;
    int N = 0;
    long x_max = 0;
};

std::vector<ExtremeSample> extreme_samples(const std::vector<EventSizeSample>& samples);

// Everything the analysis pipeline derives from one run.
struct RunAnalysis {
    std::string run_id;
    Condition condition;
    SubtaskTree tree;
    ClaimGraph graph;
    std::vector<Cascade> cascades;
    std::vector<CascadeStats> stats;
    std::map<Observable, std::vector<EventSizeSample>> samples;
    std::optional<ConcentrationReport> concentration;
};

RunAnalysis analyze_run(const TraceBundle& bundle, const std::string& run_id, std::int64_t tau = kDefaultTau);

std::string samples_csv(const std::vector<EventSizeSample>& samples);
std::string cascade_stats_csv(const std::vector<CascadeStats>& stats);
std::string concentration_csv(const std::vector<ConcentrationReport>& reports);
ojson concentration_json(const ConcentrationReport& r);
ojson cascade_stats_json(const CascadeStats& s);

}  // namespace cascade
