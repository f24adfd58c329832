#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cascade/observables.hpp"
#include "cascade/sim.hpp"
#include "cascade/tailstats.hpp"
#include "cascade/trace.hpp"

namespace cascade {

class UnknownRoot : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class MissingParams : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class InsufficientCascades : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// "<topology>/<task_family>", or "<topology>/<task_family>/N<n>" when stratified
std::string condition_key(Topology t, TaskFamily f, std::optional<int> N = std::nullopt);

struct DtiParams {
    std::string condition;
    double a_c = 1.0;
    double delta_c = std::numeric_limits<double>::infinity();
    double beta_c_hat = 1.0;
    // calibration diagnostics
    long cascades = 0;
    double delta_mean = 0.0;
    double delta_sd = 0.0;
    // baseline seeds the parameters came from; treated runs must avoid them
    std::vector<std::int64_t> seeds;

    double pressure(long t) const;
    ojson to_json() const;
    static DtiParams from_json(const json& j);
};

constexpr std::size_t kMaxHeads = 8;

struct RootState {
    long t = 0;
    long M = 0;
    std::optional<std::int64_t> last_trigger_step;
    // leaves created in the current segment, oldest first, at most kMaxHeads
    std::deque<std::string> leaves;
};

struct DtiState {
    std::unordered_map<std::string, RootState> roots;
};

struct TriggerDirective {
    std::string root_claim_id;
    std::int64_t step_id = 0;
    long t = 0;
    double deficit = 0.0;
    std::vector<std::string> heads;  // most recent first
};

// Advances the state of `root` by one event. A parentless proposal whose claim is
// `root` opens it; any other event on an unopened root throws UnknownRoot. On a
// trigger the state is reset to (0, 1) before returning.
std::optional<TriggerDirective> dti_step(DtiState& state, const DtiParams& params, const EventRecord& event,
                                         const std::string& root);

struct TriggerEvent {
    std::int64_t step_id = 0;
    std::string root_claim_id;
    long t = 0;
    double deficit = 0.0;
    std::vector<std::string> heads;
    bool executed = false;
};

struct CascadeConversion {
    std::string root_claim_id;
    long pre_merges = 0;
    long pre_expansions = 0;
    long post_merges = 0;
    long post_expansions = 0;
    bool triggered = false;
};

struct DtiReport {
    std::string run_id;
    DtiParams params;
    std::vector<TriggerEvent> triggers;
    std::vector<CascadeConversion> conversions;  // in root opening order
    std::map<std::string, std::vector<double>> deficits;  // root -> deficit after each event

    long executed() const;
    ojson to_json(bool with_series = false) const;
    std::string triggers_csv() const;
};

// Simulator hook running the controller against a live run.
class DtiController : public SimObserver {
public:
    explicit DtiController(DtiParams params, bool record_series = true);

    void on_record(const EventRecord& rec, const std::string& root, bool injected) override;
    std::optional<MergeDirective> pending_merge() override;
    void merge_done(const MergeDirective& d, bool executed) override;

    const DtiState& state() const { return state_; }
    DtiReport take_report(const std::string& run_id);

private:
    void account(const EventRecord& rec, const std::string& root);

    DtiParams params_;
    bool record_series_;
    DtiState state_;
    std::deque<TriggerDirective> pending_;
    std::vector<TriggerEvent> triggers_;
    std::vector<std::string> order_;
    std::unordered_map<std::string, CascadeConversion> conv_;
    std::map<std::string, std::vector<double>> series_;
};

struct CalibrationOptions {
    bool stratify_by_N = false;
    long min_cascades = 20;
};

// One parameter set per condition class found in the bundle.
std::map<std::string, DtiParams> calibrate(const TraceBundle& baseline, const CalibrationOptions& opt = {});
// Same, from runs already analyzed.
std::map<std::string, DtiParams> calibrate(const TraceBundle& baseline, const std::vector<RunAnalysis>& runs,
                                           const CalibrationOptions& opt = {});

ojson calibration_to_json(const std::map<std::string, DtiParams>& params);
std::map<std::string, DtiParams> calibration_from_json(const json& j);
// Looks up the stratified key first, then the pooled one; throws MissingParams.
const DtiParams& params_for(const std::map<std::string, DtiParams>& cal, const SimConfig& cfg);

struct DtiRun {
    TraceBundle bundle;
    DtiReport report;
};

DtiRun run_with_dti(const SimConfig& cfg, const DtiParams& params);

// Cascades at or above this TCE quantile count as the top bin.
constexpr double kTopQuantile = 0.9;

struct ArmSummary {
    long runs = 0;
    long cascades = 0;
    long events = 0;
    std::optional<TailSummary> tce_tail;
    std::vector<double> conversion_by_decile;  // ratio of summed merges to summed expansions
    std::optional<double> top_decile_conversion;
    double contradiction_density = 0.0;  // contradictions per cascade event
    double e_active_10 = 0.0;            // mean over runs
    long triggers = 0;
    long executed_triggers = 0;
    ojson to_json() const;
};

struct InterventionReport {
    ArmSummary baseline;
    ArmSummary treated;
    ojson to_json() const;
    std::string to_csv() const;
};

// x_min is scanned unless fixed
ArmSummary summarize_arm(const TraceBundle& bundle, const std::vector<RunAnalysis>& runs,
                         const std::vector<DtiReport>& reports = {}, std::optional<long> fixed_xmin = std::nullopt);
InterventionReport evaluate_intervention(const TraceBundle& baseline, const TraceBundle& treated,
                                         const std::vector<DtiReport>& reports = {});

}  // namespace cascade
