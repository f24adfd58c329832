// Command-line front end over the pipeline commands.
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "cascade/graph.hpp"
#include "cascade/pipeline.hpp"
#include "cascade/tailstats.hpp"

using namespace cascade;

namespace {

struct Flags {
    std::vector<std::string> inputs;
    std::string out;
    std::uint64_t seed = 0;
    std::int64_t tau = kDefaultTau;
    std::string xmin;
    int bootstrap = 0;
    std::string config;
    std::string delta;
};

struct Options {
    CLI::Option* input = nullptr;
    CLI::Option* out = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* tau = nullptr;
    CLI::Option* xmin = nullptr;
    CLI::Option* bootstrap = nullptr;
    CLI::Option* delta = nullptr;
};

Options add_common(CLI::App* sub, Flags& f) {
    Options o;
    o.input = sub->add_option("--input", f.inputs, "trace file(s) or directories");
    o.out = sub->add_option("--out", f.out, "output directory");
    o.seed = sub->add_option("--seed", f.seed, "global seed");
    o.tau = sub->add_option("--tau", f.tau, "revision-chain time window");
    o.xmin = sub->add_option("--xmin", f.xmin, "tail onset: scan or an integer >= 1");
    o.bootstrap = sub->add_option("--bootstrap", f.bootstrap, "bootstrap resamples for the TPL fit");
    sub->add_option("--config", f.config, "pipeline config (JSON)");
    o.delta = sub->add_option("--delta-override", f.delta, "replace every calibrated delta_c (inf disables DTI)");
    return o;
}

PipelineConfig resolve(const Flags& f, const Options& o) {
    PipelineConfig cfg;
    if (!f.config.empty()) cfg = load_pipeline_config(f.config);
    if (o.input->count()) cfg.inputs = f.inputs;
    if (o.out->count()) cfg.out = f.out;
    if (o.seed->count()) cfg.seed = f.seed;
    if (o.tau->count()) cfg.tau = f.tau;
    if (o.bootstrap->count()) cfg.bootstrap = f.bootstrap;
    if (o.xmin->count()) {
        if (f.xmin == "scan") {
            cfg.xmin.reset();
        } else {
            char* end = nullptr;
            long v = std::strtol(f.xmin.c_str(), &end, 10);
            if (f.xmin.empty() || *end != '\0' || v < 1) throw ConfigError("--xmin takes 'scan' or an integer >= 1");
            cfg.xmin = v;
        }
    }
    if (o.delta->count()) {
        try {
            std::size_t used = 0;
            double v = std::stod(f.delta, &used);
            if (used != f.delta.size()) throw std::invalid_argument(f.delta);
            cfg.dti.delta_override = v;
        } catch (const std::logic_error&) {
            throw ConfigError("--delta-override takes a number or inf");
        }
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coordination cascade analysis, simulation and deficit-triggered integration"};
    app.require_subcommand(1);
    Flags flags;
    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const PipelineConfig&);
    };
    const Sub subs[] = {
        {"validate", "check a trace bundle against the schema and lineage rules", cmd_validate},
        {"analyze", "observables, tail fits, concentration, scaling and attachment", cmd_analyze},
        {"simulate", "run a simulator sweep and write trace bundles", cmd_simulate},
        {"dti-calibrate", "estimate a_c, beta_c and delta_c from baseline runs", cmd_dti_calibrate},
        {"dti-run", "baseline and treated sweeps with the intervention report", cmd_dti_run},
        {"report", "aggregate tables across conditions", cmd_report},
    };
    std::vector<std::pair<CLI::App*, Options>> bound;
    for (const auto& s : subs) {
        auto* sub = app.add_subcommand(s.name, s.help);
        bound.emplace_back(sub, add_common(sub, flags));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    for (std::size_t i = 0; i < bound.size(); ++i) {
        if (!bound[i].first->parsed()) continue;
        try {
            return subs[i].run(resolve(flags, bound[i].second));
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return kExitConfig;
        } catch (const IoError& e) {
            std::cerr << "io error: " << e.what() << '\n';
            return kExitConfig;
        } catch (const std::filesystem::filesystem_error& e) {
            std::cerr << "io error: " << e.what() << '\n';
            return kExitConfig;
        } catch (const EmptyInput& e) {
            std::cerr << "data error: " << e.what() << '\n';
            return kExitData;
        } catch (const InsufficientCascades& e) {
            std::cerr << "data error: " << e.what() << '\n';
            return kExitData;
        } catch (const CycleError& e) {
            std::cerr << "data error: " << e.what() << '\n';
            return kExitData;
        } catch (const DanglingParent& e) {
            std::cerr << "data error: " << e.what() << '\n';
            return kExitData;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitConfig;
        }
    }
    return kExitConfig;
}
