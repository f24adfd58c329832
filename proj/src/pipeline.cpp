#include "cascade/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "cascade/tailstats.hpp"
#include "cascade/util.hpp"

namespace fs = std::filesystem;

namespace cascade {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

template <class T>
std::vector<T> array_of(const json& v, const char* key) {
    require(v.is_array(), std::string(key) + " must be an array");
    std::vector<T> out;
    for (const auto& e : v) {
        try {
            out.push_back(e.get<T>());
        } catch (const json::exception&) {
            throw ConfigError(std::string("bad element in ") + key);
        }
    }
    return out;
}

template <class E, class Parse>
std::vector<E> enum_array(const json& v, const char* key, Parse parse) {
    std::vector<E> out;
    for (const auto& s : array_of<std::string>(v, key)) {
        auto e = parse(s);
        require(e.has_value(), std::string("unknown value '") + s + "' in " + key);
        out.push_back(*e);
    }
    return out;
}

SweepGrid sweep_from_json(const json& j, SweepGrid g) {
    require(j.is_object(), "sweep must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        if (k == "N")
            g.N = array_of<int>(v, "sweep.N");
        else if (k == "topologies")
            g.topologies = enum_array<Topology>(v, "sweep.topologies", parse_topology);
        else if (k == "task_families")
            g.task_families = enum_array<TaskFamily>(v, "sweep.task_families", parse_task_family);
        else if (k == "beta")
            g.beta = array_of<double>(v, "sweep.beta");
        else if (k == "lambda")
            g.lambda = array_of<double>(v, "sweep.lambda");
        else if (k == "replicates") {
            require(v.is_number_integer(), "sweep.replicates must be an integer");
            g.replicates = v.get<int>();
        } else if (k == "base")
            g.base = sim_config_from_json(v, g.base);
        else
            throw ConfigError("unknown sweep key '" + k + "'");
    }
    return g;
}

DtiSection dti_from_json(const json& j, DtiSection d) {
    require(j.is_object(), "dti must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        if (k == "calibration") {
            require(v.is_string(), "dti.calibration must be a path");
            d.calibration = v.get<std::string>();
        } else if (k == "calibration_seed_offset") {
            require(v.is_number_integer(), "dti.calibration_seed_offset must be an integer");
            d.calibration_seed_offset = v.get<std::int64_t>();
        } else if (k == "stratify_by_N") {
            require(v.is_boolean(), "dti.stratify_by_N must be a boolean");
            d.stratify_by_N = v.get<bool>();
        } else if (k == "delta_override") {
            if (v.is_string() && (v == "inf" || v == "Infinity"))
                d.delta_override = std::numeric_limits<double>::infinity();
            else {
                require(v.is_number(), "dti.delta_override must be a number or \"inf\"");
                d.delta_override = v.get<double>();
            }
        } else
            throw ConfigError("unknown dti key '" + k + "'");
    }
    return d;
}

// Runs f(i) for i in [0, n) in batches; results land by index so order never depends on timing.
template <class F>
void parallel_for(std::size_t n, int threads, F f) {
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::size_t next = 0;
    while (next < n) {
        std::vector<std::future<void>> batch;
        for (int t = 0; t < threads && next < n; ++t, ++next) batch.push_back(std::async(std::launch::async, f, next));
        for (auto& b : batch) b.get();
    }
}

fs::path out_path(const PipelineConfig& cfg, const std::string& name) { return fs::path(cfg.out) / name; }

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) throw IoError("cannot create output directory " + p.string());
}

void put(const PipelineConfig& cfg, const std::string& name, const std::string& content) {
    write_file(out_path(cfg, name).string(), content);
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

std::map<std::string, DtiParams> load_calibration(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("calibration file " + path + ": " + e.what());
    }
    return calibration_from_json(j);
}

TraceBundle run_all(const std::vector<SimConfig>& configs, int threads) {
    std::vector<TraceBundle> parts(configs.size());
    parallel_for(configs.size(), threads, [&](std::size_t i) { parts[i] = run_simulation(configs[i]); });
    TraceBundle all;
    for (auto& p : parts) append_bundle(all, std::move(p));
    return all;
}

std::string extremes_csv(const std::vector<ExtremeSample>& xs) {
    std::ostringstream os;
    os << "run_id,observable,N,x_max\n";
    for (const auto& e : xs) os << csv_escape(e.run_id) << ',' << to_string(e.observable) << ',' << e.N << ',' << e.x_max << '\n';
    return os.str();
}

std::optional<double> tail_alpha(const TailSummary& s) {
    if (s.truncated_power_law) return s.truncated_power_law->alpha_hat;
    if (s.power_law) return s.power_law->alpha_hat;
    return std::nullopt;
}

ojson scaling_json(const std::vector<ExtremeSample>& xs, const TailSummary& tail) {
    auto alpha = tail_alpha(tail);
    if (!alpha) return ojson{{"status", "insufficient: no tail exponent"}};
    try {
        auto j = fit_extreme_scaling(xs, *alpha).to_json();
        j["status"] = "ok";
        return j;
    } catch (const InsufficientScales& e) {
        return ojson{{"status", std::string("insufficient: ") + e.what()}};
    }
}

std::vector<RunAnalysis> analyze_all(const TraceBundle& b, std::int64_t tau) {
    std::vector<RunAnalysis> out;
    for (const auto& id : b.run_ids()) out.push_back(analyze_run(b, id, tau));
    return out;
}

// Writes the bundle set of one sweep arm plus its index.
void write_arm(const fs::path& dir, const std::vector<SimConfig>& configs, const std::vector<TraceBundle>& bundles) {
    ensure_dir(dir);
    std::vector<SweepEntry> entries;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        std::string name = configs[i].effective_run_id() + ".jsonl";
        write_trace(bundles[i], (dir / name).string());
        entries.push_back({configs[i], name, static_cast<long>(bundles[i].records.size())});
    }
    write_file((dir / "index.csv").string(), sweep_index_csv(entries));
}

bool is_dti_pair(const fs::path& p) {
    return fs::is_directory(p) && fs::is_directory(p / "baseline") && fs::is_directory(p / "treated");
}

}  // namespace

void PipelineConfig::validate() const {
    require(!xmin || *xmin >= 1, "fixed x_min must be >= 1");
    require(bootstrap >= 0, "bootstrap count must be >= 0");
    require(tau >= 0, "tau must be >= 0");
    require(!out.empty(), "output directory must be set");
    require(!observables.empty(), "at least one observable is required");
    require(sweep.replicates >= 1, "sweep.replicates must be >= 1");
    require(!sweep.N.empty() && !sweep.topologies.empty() && !sweep.task_families.empty(),
            "sweep grid has an empty axis");
    require(sweep.base.run_id.empty(), "sweep.base.run_id must be empty, run ids are derived per cell");
    require(!dti.delta_override || !std::isnan(*dti.delta_override), "delta override is NaN");
    for (const auto& c : expand_grid(sweep, seed)) c.validate();
}

PipelineConfig pipeline_config_from_json(const json& j, PipelineConfig c) {
    require(j.is_object(), "pipeline config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        if (k == "inputs")
            c.inputs = array_of<std::string>(v, "inputs");
        else if (k == "out") {
            require(v.is_string(), "out must be a path");
            c.out = v.get<std::string>();
        } else if (k == "observables")
            c.observables = enum_array<Observable>(v, "observables", parse_observable);
        else if (k == "tau") {
            require(v.is_number_integer(), "tau must be an integer");
            c.tau = v.get<std::int64_t>();
        } else if (k == "xmin") {
            if (v.is_string() && v == "scan")
                c.xmin.reset();
            else {
                require(v.is_number_integer(), "xmin must be \"scan\" or an integer");
                c.xmin = v.get<long>();
            }
        } else if (k == "bootstrap") {
            require(v.is_number_integer(), "bootstrap must be an integer");
            c.bootstrap = v.get<int>();
        } else if (k == "seed") {
            require(v.is_number_unsigned(), "seed must be a non-negative integer");
            c.seed = v.get<std::uint64_t>();
        } else if (k == "threads") {
            require(v.is_number_integer(), "threads must be an integer");
            c.threads = v.get<int>();
        } else if (k == "sweep")
            c.sweep = sweep_from_json(v, c.sweep);
        else if (k == "dti")
            c.dti = dti_from_json(v, c.dti);
        else
            throw ConfigError("unknown config key '" + k + "'");
    }
    return c;
}

PipelineConfig load_pipeline_config(const std::string& path, PipelineConfig base) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return pipeline_config_from_json(j, std::move(base));
}

ojson pipeline_config_to_json(const PipelineConfig& c) {
    ojson o;
    o["inputs"] = c.inputs;
    o["out"] = c.out;
    ojson obs = ojson::array();
    for (auto ob : c.observables) obs.push_back(to_string(ob));
    o["observables"] = obs;
    o["tau"] = c.tau;
    o["xmin"] = c.xmin ? ojson(*c.xmin) : ojson("scan");
    o["bootstrap"] = c.bootstrap;
    o["seed"] = c.seed;
    ojson s;
    s["N"] = c.sweep.N;
    ojson tops = ojson::array(), fams = ojson::array();
    for (auto t : c.sweep.topologies) tops.push_back(to_string(t));
    for (auto f : c.sweep.task_families) fams.push_back(to_string(f));
    s["topologies"] = tops;
    s["task_families"] = fams;
    s["beta"] = c.sweep.beta;
    s["lambda"] = c.sweep.lambda;
    s["replicates"] = c.sweep.replicates;
    s["base"] = sim_config_to_json(c.sweep.base);
    o["sweep"] = s;
    ojson d;
    d["calibration"] = c.dti.calibration;
    d["calibration_seed_offset"] = c.dti.calibration_seed_offset;
    d["stratify_by_N"] = c.dti.stratify_by_N;
    if (c.dti.delta_override)
        d["delta_override"] = std::isfinite(*c.dti.delta_override) ? ojson(*c.dti.delta_override) : ojson("inf");
    o["dti"] = d;
    return o;
}

std::vector<SimConfig> expand_grid(const SweepGrid& g, std::uint64_t seed, std::int64_t offset) {
    const std::vector<double> betas = g.beta.empty() ? std::vector<double>{g.base.beta} : g.beta;
    const std::vector<double> lambdas = g.lambda.empty() ? std::vector<double>{g.base.lambda} : g.lambda;
    std::vector<SimConfig> out;
    for (auto t : g.topologies)
        for (auto f : g.task_families)
            for (double b : betas)
                for (double l : lambdas)
                    for (int n : g.N)
                        for (int r = 0; r < g.replicates; ++r) {
                            SimConfig c = g.base;
                            c.topology = t;
                            c.task_family = f;
                            c.beta = b;
                            c.lambda = l;
                            c.N = n;
                            c.seed = seed + static_cast<std::uint64_t>(offset) + static_cast<std::uint64_t>(r);
                            c.run_id.clear();
                            out.push_back(c);
                        }
    return out;
}

void append_bundle(TraceBundle& into, TraceBundle&& from) {
    for (auto& r : from.records) into.records.push_back(std::move(r));
    for (auto& [k, v] : from.run_meta) into.run_meta[k] = v;
    for (auto& d : from.diagnostics) into.diagnostics.push_back(std::move(d));
}

TraceBundle load_inputs(const std::vector<std::string>& paths) {
    if (paths.empty()) throw ConfigError("no --input given");
    std::vector<std::string> files;
    for (const auto& p : paths) {
        if (!fs::exists(p)) throw IoError("no such file or directory: " + p);
        if (fs::is_directory(p)) {
            std::vector<std::string> found;
            for (const auto& e : fs::directory_iterator(p)) {
                const auto name = e.path().filename().string();
                auto ends = [&](const std::string& s) {
                    return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
                };
                if (e.is_regular_file() && (ends(".jsonl") || ends(".jsonl.gz"))) found.push_back(e.path().string());
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(p);
        }
    }
    if (files.empty()) throw IoError("no trace files under the given inputs");
    TraceBundle all;
    for (const auto& f : files) append_bundle(all, load_trace(f));
    return all;
}

AnalysisOutputs analyze_bundle(const TraceBundle& bundle, const PipelineConfig& cfg) {
    AnalysisOutputs out;
    out.runs = analyze_all(bundle, cfg.tau);
    for (auto ob : cfg.observables) {
        std::vector<long> xs;
        for (const auto& r : out.runs) {
            auto it = r.samples.find(ob);
            if (it == r.samples.end()) continue;
            for (const auto& s : it->second) xs.push_back(s.x);
        }
        TailOptions opt;
        opt.fixed_xmin = cfg.xmin;
        opt.bootstrap = cfg.bootstrap;
        opt.seed = derive_seed(cfg.seed, std::string("bootstrap/") + to_string(ob));
        out.tails[ob] = summarize_tail(to_string(ob), xs, opt);
    }
    return out;
}

int cmd_validate(const PipelineConfig& cfg) {
    auto bundle = load_inputs(cfg.inputs);
    auto rep = validate_bundle(bundle);
    ensure_dir(cfg.out);
    put(cfg, "validation.json", dump(rep.to_json()));
    std::cerr << "validate: " << rep.records_checked << " records, " << rep.violations.size() << " violations\n";
    for (std::size_t i = 0; i < rep.violations.size() && i < 20; ++i) {
        const auto& v = rep.violations[i];
        std::cerr << "  line " << v.line << ": " << v.kind << ": " << v.message << '\n';
    }
    return rep.ok ? kExitOk : kExitData;
}

int cmd_analyze(const PipelineConfig& cfg) {
    cfg.validate();
    auto bundle = load_inputs(cfg.inputs);
    ensure_dir(cfg.out);
    auto rep = validate_bundle(bundle);
    put(cfg, "validation.json", dump(rep.to_json()));
    if (!rep.ok) {
        std::cerr << "analyze: input has " << rep.violations.size() << " violations, see validation.json\n";
        return kExitData;
    }
    auto res = analyze_bundle(bundle, cfg);

    std::vector<CascadeStats> stats;
    std::vector<ConcentrationReport> conc;
    for (const auto& r : res.runs) {
        stats.insert(stats.end(), r.stats.begin(), r.stats.end());
        if (r.concentration) conc.push_back(*r.concentration);
    }
    put(cfg, "cascades.csv", cascade_stats_csv(stats));
    put(cfg, "concentration.csv", concentration_csv(conc));

    ojson fits = ojson::object();
    ojson scaling = ojson::object();
    std::string summary = tail_summary_csv_header();
    std::vector<ExtremeSample> all_extremes;
    for (auto ob : cfg.observables) {
        std::vector<EventSizeSample> pooled;
        for (const auto& r : res.runs) {
            auto it = r.samples.find(ob);
            if (it != r.samples.end()) pooled.insert(pooled.end(), it->second.begin(), it->second.end());
        }
        put(cfg, std::string(to_string(ob)) + ".csv", samples_csv(pooled));
        const auto& tail = res.tails.at(ob);
        fits[to_string(ob)] = tail.to_json();
        summary += tail_summary_csv_row(tail);
        auto xs = extreme_samples(pooled);
        scaling[to_string(ob)] = scaling_json(xs, tail);
        all_extremes.insert(all_extremes.end(), xs.begin(), xs.end());
    }
    put(cfg, "fits.json", dump(fits));
    put(cfg, "summary.csv", summary);
    put(cfg, "scaling.json", dump(scaling));
    put(cfg, "extremes.csv", extremes_csv(all_extremes));

    std::vector<const ClaimGraph*> graphs;
    for (const auto& r : res.runs) graphs.push_back(&r.graph);
    ojson att;
    try {
        att = estimate_attachment(bundle, graphs).to_json();
        att["status"] = "ok";
    } catch (const InsufficientDecisions& e) {
        att = ojson{{"status", std::string("insufficient: ") + e.what()}};
    }
    put(cfg, "attachment.json", dump(att));
    std::cerr << "analyze: " << res.runs.size() << " runs, " << bundle.records.size() << " records -> " << cfg.out
              << '\n';
    return kExitOk;
}

int cmd_simulate(const PipelineConfig& cfg) {
    cfg.validate();
    auto configs = expand_grid(cfg.sweep, cfg.seed);
    auto res = sweep(configs, cfg.out, cfg.threads);
    if (!res.ok()) {
        std::ostringstream os;
        os << "run_id,error\n";
        for (const auto& f : res.failures) os << csv_escape(f.config.effective_run_id()) << ',' << csv_escape(f.error) << '\n';
        put(cfg, "failures.csv", os.str());
        std::cerr << "simulate: " << res.failures.size() << " of " << configs.size() << " runs failed\n";
        return kExitConfig;
    }
    long events = 0;
    for (const auto& e : res.entries) events += e.events;
    std::cerr << "simulate: " << res.entries.size() << " runs, " << events << " events -> " << cfg.out << '\n';
    return kExitOk;
}

std::map<std::string, DtiParams> calibrate_from_sweep(const PipelineConfig& cfg) {
    auto configs = expand_grid(cfg.sweep, cfg.seed, cfg.dti.calibration_seed_offset);
    auto baseline = run_all(configs, cfg.threads);
    CalibrationOptions opt;
    opt.stratify_by_N = cfg.dti.stratify_by_N;
    return calibrate(baseline, analyze_all(baseline, cfg.tau), opt);
}

int cmd_dti_calibrate(const PipelineConfig& cfg) {
    cfg.validate();
    std::map<std::string, DtiParams> cal;
    if (!cfg.inputs.empty()) {
        auto baseline = load_inputs(cfg.inputs);
        auto rep = validate_bundle(baseline);
        if (!rep.ok) {
            std::cerr << "dti-calibrate: baseline has " << rep.violations.size() << " violations\n";
            return kExitData;
        }
        CalibrationOptions opt;
        opt.stratify_by_N = cfg.dti.stratify_by_N;
        cal = calibrate(baseline, analyze_all(baseline, cfg.tau), opt);
    } else {
        cal = calibrate_from_sweep(cfg);
    }
    ensure_dir(cfg.out);
    put(cfg, "calibration.json", dump(calibration_to_json(cal)));
    for (const auto& [k, p] : cal)
        std::cerr << "dti-calibrate: " << k << " a_c=" << fmt_double(p.a_c) << " beta_c=" << fmt_double(p.beta_c_hat)
                  << " delta_c=" << fmt_double(p.delta_c) << " (" << p.cascades << " cascades)\n";
    return kExitOk;
}

int cmd_dti_run(const PipelineConfig& cfg) {
    cfg.validate();
    std::map<std::string, DtiParams> cal;
    std::string cal_path = cfg.dti.calibration;
    for (const auto& in : cfg.inputs)
        if (cal_path.empty() && fs::path(in).extension() == ".json") cal_path = in;
    cal = cal_path.empty() ? calibrate_from_sweep(cfg) : load_calibration(cal_path);
    if (cfg.dti.delta_override)
        for (auto& [k, p] : cal) p.delta_c = *cfg.dti.delta_override;

    auto configs = expand_grid(cfg.sweep, cfg.seed);
    std::vector<DtiParams> params;
    for (const auto& c : configs) {
        const auto& p = params_for(cal, c);
        if (std::find(p.seeds.begin(), p.seeds.end(), static_cast<std::int64_t>(c.seed)) != p.seeds.end())
            throw ConfigError("seed " + std::to_string(c.seed) + " was used to calibrate " + p.condition +
                              "; intervention seeds must be disjoint");
        params.push_back(p);
    }

    std::vector<TraceBundle> base(configs.size()), treat(configs.size());
    std::vector<DtiReport> reports(configs.size());
    parallel_for(configs.size(), cfg.threads, [&](std::size_t i) {
        base[i] = run_simulation(configs[i]);
        auto r = run_with_dti(configs[i], params[i]);
        treat[i] = std::move(r.bundle);
        reports[i] = std::move(r.report);
    });

    ensure_dir(cfg.out);
    write_arm(out_path(cfg, "baseline"), configs, base);
    write_arm(out_path(cfg, "treated"), configs, treat);
    put(cfg, "calibration_used.json", dump(calibration_to_json(cal)));

    std::string trig = "run_id,step_id,root_claim_id,t,deficit,heads,executed\n";
    ojson reps = ojson::array();
    for (const auto& r : reports) {
        auto csv = r.triggers_csv();
        trig += csv.substr(csv.find('\n') + 1);
        reps.push_back(r.to_json());
    }
    put(cfg, "triggers.csv", trig);
    put(cfg, "dti_reports.json", dump(reps));

    TraceBundle b, t;
    for (auto& x : base) append_bundle(b, std::move(x));
    for (auto& x : treat) append_bundle(t, std::move(x));
    auto ev = evaluate_intervention(b, t, reports);
    put(cfg, "intervention.json", dump(ev.to_json()));
    put(cfg, "intervention.csv", ev.to_csv());
    std::cerr << "dti-run: " << configs.size() << " runs, " << ev.treated.triggers << " triggers ("
              << ev.treated.executed_triggers << " executed) -> " << cfg.out << '\n';
    return kExitOk;
}

int cmd_report(const PipelineConfig& cfg) {
    cfg.validate();
    if (cfg.inputs.empty()) throw ConfigError("report needs --input");
    std::vector<std::string> plain;
    std::vector<fs::path> pairs;
    for (const auto& in : cfg.inputs) {
        if (!fs::exists(in)) throw IoError("no such file or directory: " + in);
        if (is_dti_pair(in))
            pairs.emplace_back(in);
        else
            plain.push_back(in);
    }
    std::vector<std::string> main_inputs = plain;
    if (main_inputs.empty())
        for (const auto& p : pairs) main_inputs.push_back((p / "baseline").string());
    auto bundle = load_inputs(main_inputs);
    auto runs = analyze_all(bundle, cfg.tau);
    ensure_dir(cfg.out);

    TailOptions topt;
    topt.fixed_xmin = cfg.xmin;

    // per condition cell
    struct Cell {
        long runs = 0;
        long events = 0;
        long cascades = 0;
        double e10 = 0;
        double xmax = 0;
        std::vector<long> tce;
    };
    std::map<std::tuple<std::string, std::string, int>, Cell> cells;
    std::map<int, std::vector<long>> byN;
    std::map<int, long> runsN;
    std::vector<EventSizeSample> tce_all;
    for (const auto& r : runs) {
        auto key = std::make_tuple(std::string(to_string(r.condition.topology)),
                                   std::string(to_string(r.condition.task_family)), r.condition.N);
        auto& c = cells[key];
        ++c.runs;
        c.events += static_cast<long>(bundle.run_records(r.run_id).size());
        c.cascades += static_cast<long>(r.stats.size());
        if (r.concentration) c.e10 += r.concentration->E_active[0];
        long mx = 0;
        static const std::vector<EventSizeSample> kNone;
        auto found = r.samples.find(Observable::tce);
        const auto& ts = found != r.samples.end() ? found->second : kNone;
        for (const auto& s : ts) {
            c.tce.push_back(s.x);
            byN[r.condition.N].push_back(s.x);
            mx = std::max(mx, s.x);
        }
        c.xmax += static_cast<double>(mx);
        ++runsN[r.condition.N];
        tce_all.insert(tce_all.end(), ts.begin(), ts.end());
    }

    std::ostringstream cond;
    cond << "topology,task_family,N,runs,events,cascades,mean_tce_xmax,e_active_10,x_min,alpha_hat,xc_hat,status\n";
    for (const auto& [key, c] : cells) {
        auto s = summarize_tail("tce", c.tce, topt);
        cond << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << c.runs << ','
             << c.events << ',' << c.cascades << ',' << fmt_double(c.xmax / c.runs) << ','
             << fmt_double(c.e10 / c.runs) << ',' << (s.power_law ? std::to_string(s.power_law->x_min) : "") << ','
             << (s.truncated_power_law ? fmt_double(s.truncated_power_law->alpha_hat) : "") << ','
             << (s.truncated_power_law ? fmt_double(s.truncated_power_law->xc_hat) : "") << ','
             << csv_escape(s.status) << '\n';
    }
    put(cfg, "conditions.csv", cond.str());

    std::string alpha = "N,runs," + tail_summary_csv_header();
    for (const auto& [N, xs] : byN) alpha += std::to_string(N) + "," + std::to_string(runsN[N]) + "," +
                                             tail_summary_csv_row(summarize_tail("tce", xs, topt));
    put(cfg, "alpha_vs_N.csv", alpha);

    std::vector<long> pooled;
    for (const auto& s : tce_all) pooled.push_back(s.x);
    auto tail = summarize_tail("tce", pooled, topt);
    auto xs = extreme_samples(tce_all);
    auto sc = scaling_json(xs, tail);
    put(cfg, "scaling.json", dump(sc));
    std::string pts = "N,runs,mean_xmax,ci_lo,ci_hi\n";
    if (sc.contains("points"))
        for (const auto& p : sc["points"])
            pts += std::to_string(p["N"].get<int>()) + "," + std::to_string(p["runs"].get<int>()) + "," +
                   fmt_double(p["mean_xmax"].get<double>()) + "," + fmt_double(p["lo"].get<double>()) + "," +
                   fmt_double(p["hi"].get<double>()) + "\n";
    put(cfg, "xmax_vs_N.csv", pts);

    if (!pairs.empty()) {
        std::string csv = "source,metric,baseline,treated,delta\n";
        ojson cmp = ojson::object();
        for (const auto& p : pairs) {
            auto b = load_inputs({(p / "baseline").string()});
            auto t = load_inputs({(p / "treated").string()});
            auto ev = evaluate_intervention(b, t);
            if (fs::exists(p / "dti_reports.json")) {
                json reps;
                try {
                    reps = json::parse(read_file((p / "dti_reports.json").string()));
                } catch (const json::parse_error& e) {
                    throw IoError((p / "dti_reports.json").string() + ": " + e.what());
                }
                for (const auto& r : reps) {
                    ev.treated.triggers += r.value("trigger_count", 0L);
                    ev.treated.executed_triggers += r.value("executed", 0L);
                }
            }
            const auto src = p.filename().empty() ? p.parent_path().filename().string() : p.filename().string();
            cmp[src] = ev.to_json();
            std::istringstream rows(ev.to_csv());
            std::string line;
            std::getline(rows, line);
            while (std::getline(rows, line)) csv += csv_escape(src) + "," + line + "\n";
        }
        put(cfg, "comparison.csv", csv);
        put(cfg, "comparison.json", dump(cmp));
    }
    std::cerr << "report: " << runs.size() << " runs in " << cells.size() << " conditions -> " << cfg.out << '\n';
    return kExitOk;
}

}  // namespace cascade
