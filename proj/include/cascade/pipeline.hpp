#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cascade/dti.hpp"
#include "cascade/observables.hpp"
#include "cascade/sim.hpp"
#include "cascade/trace.hpp"

namespace cascade {

enum ExitCode : int { kExitOk = 0, kExitData = 1, kExitConfig = 2 };

struct SweepGrid {
    std::vector<int> N{8, 16, 32, 64, 128};
    std::vector<Topology> topologies{Topology::fully_connected};
    std::vector<TaskFamily> task_families{TaskFamily::qa};
    std::vector<double> beta;    // empty keeps the base value
    std::vector<double> lambda;  // empty keeps the base value
    int replicates = 5;
    SimConfig base;
};

struct DtiSection {
    std::string calibration;  // path to a calibration file, calibrated on the fly when empty
    std::int64_t calibration_seed_offset = 1'000'000;
    bool stratify_by_N = false;
    std::optional<double> delta_override;
};

struct PipelineConfig {
    std::vector<std::string> inputs;
    std::string out = "out";
    std::vector<Observable> observables{kAllObservables.begin(), kAllObservables.end()};
    std::int64_t tau = kDefaultTau;
    std::optional<long> xmin;  // scan when empty
    int bootstrap = 0;
    std::uint64_t seed = 0;
    int threads = 0;
    SweepGrid sweep;
    DtiSection dti;

    void validate() const;
};

// Unknown keys and bad values raise ConfigError.
PipelineConfig pipeline_config_from_json(const json& j, PipelineConfig base = {});
PipelineConfig load_pipeline_config(const std::string& path, PipelineConfig base = {});
ojson pipeline_config_to_json(const PipelineConfig& c);

// Replicate r of a grid cell runs with seed + offset + r.
std::vector<SimConfig> expand_grid(const SweepGrid& grid, std::uint64_t seed, std::int64_t offset = 0);

void append_bundle(TraceBundle& into, TraceBundle&& from);
// A file, or a directory whose *.jsonl / *.jsonl.gz files are read in name order.
TraceBundle load_inputs(const std::vector<std::string>& paths);

struct AnalysisOutputs {
    std::vector<RunAnalysis> runs;
    std::map<Observable, TailSummary> tails;
};

// Each command writes under cfg.out and returns an exit code; messages go to stderr.
int cmd_validate(const PipelineConfig& cfg);
int cmd_analyze(const PipelineConfig& cfg);
int cmd_simulate(const PipelineConfig& cfg);
int cmd_dti_calibrate(const PipelineConfig& cfg);
int cmd_dti_run(const PipelineConfig& cfg);
int cmd_report(const PipelineConfig& cfg);

// Pure pieces of the commands, shared with tests.
AnalysisOutputs analyze_bundle(const TraceBundle& bundle, const PipelineConfig& cfg);
std::map<std::string, DtiParams> calibrate_from_sweep(const PipelineConfig& cfg);

}  // namespace cascade
