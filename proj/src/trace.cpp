#include "cascade/trace.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace cascade {

namespace {

template <typename E, std::size_t K>
std::optional<E> lookup(const std::string& s, const char* const (&names)[K]) {
    for (std::size_t i = 0; i < K; ++i)
        if (s == names[i]) return static_cast<E>(i);
    return std::nullopt;
}

const char* const kEventNames[] = {"propose_claim",    "revise_claim",     "contradict_claim",
                                   "merge_claims",     "delegate_subtask", "endorse_claim"};
const char* const kClaimStatusNames[] = {"proposed", "revised", "contradictory", "merged"};
const char* const kSubtaskStatusNames[] = {"active", "completed"};
const char* const kTopologyNames[] = {"chain",           "star",        "tree",
                                      "hierarchical",    "fully_connected", "sparse_mesh",
                                      "dynamic_reputation"};
const char* const kFamilyNames[] = {"qa", "coding", "planning", "reasoning"};

const std::set<std::string> kRecordFields = {
    "run_id",   "step_id",        "agent_id", "event_type", "target_claim_id", "target_subtask_id",
    "timestamp", "message_length", "claim",    "subtask"};

struct LineError {
    std::string msg;
};

std::string need_string(const json& o, const char* key) {
    auto it = o.find(key);
    if (it == o.end() || it->is_null()) throw LineError{std::string("missing required field '") + key + "'"};
    if (!it->is_string()) throw LineError{std::string("field '") + key + "' must be a string"};
    return it->get<std::string>();
}

std::int64_t need_count(const json& o, const char* key) {
    auto it = o.find(key);
    if (it == o.end() || it->is_null()) throw LineError{std::string("missing required field '") + key + "'"};
    if (!it->is_number_integer()) throw LineError{std::string("field '") + key + "' must be an integer"};
    if (it->is_number_unsigned()) {
        auto u = it->get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(INT64_MAX)) throw LineError{std::string("field '") + key + "' out of range"};
        return static_cast<std::int64_t>(u);
    }
    auto v = it->get<std::int64_t>();
    if (v < 0) throw LineError{std::string("field '") + key + "' must be non-negative"};
    return v;
}

std::optional<std::string> opt_string(const json& o, const char* key) {
    auto it = o.find(key);
    if (it == o.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw LineError{std::string("field '") + key + "' must be a string or null"};
    return it->get<std::string>();
}

bool looks_iso8601(const std::string& s) {
    static const std::regex re(
        R"(^\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}(:?\d{2})?)?)?$)");
    return std::regex_match(s, re);
}

ClaimPayload parse_claim(const json& c) {
    if (!c.is_object()) throw LineError{"field 'claim' must be an object"};
    ClaimPayload p;
    p.claim_id = need_string(c, "claim_id");
    auto pit = c.find("parent_claim_ids");
    if (pit != c.end() && !pit->is_null()) {
        if (!pit->is_array()) throw LineError{"claim.parent_claim_ids must be an array"};
        for (const auto& v : *pit) {
            if (!v.is_string()) throw LineError{"claim.parent_claim_ids entries must be strings"};
            p.parent_claim_ids.push_back(v.get<std::string>());
        }
    }
    auto st = need_string(c, "claim_status");
    auto s = parse_claim_status(st);
    if (!s) throw LineError{"unknown claim_status '" + st + "'"};
    p.claim_status = *s;
    return p;
}

SubtaskPayload parse_subtask(const json& c) {
    if (!c.is_object()) throw LineError{"field 'subtask' must be an object"};
    SubtaskPayload p;
    p.subtask_id = need_string(c, "subtask_id");
    p.parent_subtask_id = opt_string(c, "parent_subtask_id");
    p.assigned_agent = need_string(c, "assigned_agent");
    auto st = need_string(c, "subtask_status");
    auto s = parse_subtask_status(st);
    if (!s) throw LineError{"unknown subtask_status '" + st + "'"};
    p.subtask_status = *s;
    return p;
}

EventRecord parse_record(const json& o) {
    EventRecord r;
    r.run_id = need_string(o, "run_id");
    r.step_id = need_count(o, "step_id");
    r.agent_id = need_string(o, "agent_id");
    auto et = need_string(o, "event_type");
    auto t = parse_event_type(et);
    if (!t) throw LineError{"unknown event_type '" + et + "'"};
    r.event_type = *t;
    r.target_claim_id = opt_string(o, "target_claim_id");
    r.target_subtask_id = opt_string(o, "target_subtask_id");

    auto ts = o.find("timestamp");
    if (ts == o.end() || ts->is_null()) throw LineError{"missing required field 'timestamp'"};
    if (ts->is_string()) {
        auto s = ts->get<std::string>();
        if (!looks_iso8601(s)) throw LineError{"timestamp '" + s + "' is not ISO-8601"};
        r.timestamp = s;
    } else {
        r.timestamp = need_count(o, "timestamp");
    }
    r.message_length = need_count(o, "message_length");

    auto c = o.find("claim");
    if (c != o.end() && !c->is_null()) r.claim = parse_claim(*c);
    auto s = o.find("subtask");
    if (s != o.end() && !s->is_null()) r.subtask = parse_subtask(*s);

    for (auto it = o.begin(); it != o.end(); ++it)
        if (!kRecordFields.count(it.key())) r.extra[it.key()] = it.value();
    return r;
}

std::pair<std::string, RunMeta> parse_run_meta(const json& o) {
    RunMeta m;
    auto run = need_string(o, "run_id");
    auto n = need_count(o, "agent_count");
    if (n < 1 || n > INT32_MAX) throw LineError{"agent_count must be a positive integer"};
    m.agent_count = static_cast<int>(n);
    auto topo = need_string(o, "topology");
    auto tp = parse_topology(topo);
    if (!tp) throw LineError{"unknown topology '" + topo + "'"};
    m.topology = *tp;
    auto fam = need_string(o, "task_family");
    auto fp = parse_task_family(fam);
    if (!fp) throw LineError{"unknown task_family '" + fam + "'"};
    m.task_family = *fp;
    auto sd = o.find("seed");
    if (sd != o.end() && !sd->is_null()) {
        if (!sd->is_number_integer()) throw LineError{"seed must be an integer"};
        m.seed = sd->get<std::int64_t>();
    }
    return {run, m};
}

void finish_bundle(TraceBundle& b) {
    std::map<std::string, std::set<std::string>> agents;
    for (const auto& r : b.records) agents[r.run_id].insert(r.agent_id);
    for (const auto& [run, set] : agents) {
        if (b.run_meta.count(run)) continue;
        RunMeta m;
        m.agent_count = static_cast<int>(set.size());
        m.synthesized = true;
        b.run_meta[run] = m;
        b.diagnostics.push_back({0, "RunMetaSynthesized",
                                 "run '" + run + "' has no run_meta line; agent_count set to " +
                                     std::to_string(m.agent_count) + " observed agents"});
    }
}

}  // namespace

const char* to_string(EventType t) { return kEventNames[static_cast<int>(t)]; }
const char* to_string(ClaimStatus s) { return kClaimStatusNames[static_cast<int>(s)]; }
const char* to_string(SubtaskStatus s) { return kSubtaskStatusNames[static_cast<int>(s)]; }
const char* to_string(Topology t) { return kTopologyNames[static_cast<int>(t)]; }
const char* to_string(TaskFamily f) { return kFamilyNames[static_cast<int>(f)]; }

std::optional<EventType> parse_event_type(const std::string& s) { return lookup<EventType>(s, kEventNames); }
std::optional<ClaimStatus> parse_claim_status(const std::string& s) {
    return lookup<ClaimStatus>(s, kClaimStatusNames);
}
std::optional<SubtaskStatus> parse_subtask_status(const std::string& s) {
    return lookup<SubtaskStatus>(s, kSubtaskStatusNames);
}
std::optional<Topology> parse_topology(const std::string& s) { return lookup<Topology>(s, kTopologyNames); }
std::optional<TaskFamily> parse_task_family(const std::string& s) { return lookup<TaskFamily>(s, kFamilyNames); }

bool creates_claim(EventType t) {
    return t == EventType::propose_claim || t == EventType::revise_claim || t == EventType::contradict_claim ||
           t == EventType::merge_claims;
}

bool EventRecord::same_fields(const EventRecord& o) const {
    return run_id == o.run_id && step_id == o.step_id && agent_id == o.agent_id && event_type == o.event_type &&
           target_claim_id == o.target_claim_id && target_subtask_id == o.target_subtask_id &&
           timestamp == o.timestamp && message_length == o.message_length && claim == o.claim &&
           subtask == o.subtask && extra == o.extra;
}

std::vector<std::string> TraceBundle::run_ids() const {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& r : records)
        if (seen.insert(r.run_id).second) out.push_back(r.run_id);
    for (const auto& [run, m] : run_meta)
        if (seen.insert(run).second) out.push_back(run);
    return out;
}

std::vector<std::size_t> TraceBundle::run_records(const std::string& run_id) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].run_id == run_id) out.push_back(i);
    return out;
}

TraceBundle parse_trace(std::istream& in) {
    TraceBundle b;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) {
            b.diagnostics.push_back({lineno, "BlankLine", "blank line skipped"});
            continue;
        }
        json o;
        try {
            o = json::parse(line);
        } catch (const json::parse_error& e) {
            b.diagnostics.push_back({lineno, "SchemaError", std::string("malformed JSON: ") + e.what()});
            continue;
        }
        if (!o.is_object()) {
            b.diagnostics.push_back({lineno, "SchemaError", "line is not a JSON object"});
            continue;
        }
        try {
            auto rt = o.find("record_type");
            if (rt != o.end() && rt->is_string() && rt->get<std::string>() == "run_meta") {
                auto [run, meta] = parse_run_meta(o);
                if (b.run_meta.count(run) && !(b.run_meta[run] == meta))
                    b.diagnostics.push_back({lineno, "SchemaError", "conflicting run_meta for run '" + run + "'"});
                else
                    b.run_meta[run] = meta;
                continue;
            }
            auto r = parse_record(o);
            r.line = lineno;
            b.records.push_back(std::move(r));
        } catch (const LineError& e) {
            b.diagnostics.push_back({lineno, "SchemaError", e.msg});
        } catch (const json::exception& e) {
            b.diagnostics.push_back({lineno, "SchemaError", e.what()});
        }
    }
    if (lineno == 0) throw EmptyInput();
    finish_bundle(b);
    return b;
}

TraceBundle parse_trace_text(const std::string& text) {
    std::istringstream in(text);
    return parse_trace(in);
}

TraceBundle load_trace(const std::string& path) {
    // gzread passes uncompressed files through unchanged.
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open '" + path + "'");
    std::string data;
    char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) data.append(buf, static_cast<std::size_t>(n));
    int err = 0;
    const char* msg = gzerror(f, &err);
    std::string emsg = msg ? msg : "";
    gzclose(f);
    if (n < 0 || (err != Z_OK && err != Z_STREAM_END)) throw IoError("read error on '" + path + "': " + emsg);
    return parse_trace_text(data);
}

ojson record_to_json(const EventRecord& r) {
    ojson o;
    o["run_id"] = r.run_id;
    o["step_id"] = r.step_id;
    o["agent_id"] = r.agent_id;
    o["event_type"] = to_string(r.event_type);
    if (r.target_claim_id) o["target_claim_id"] = *r.target_claim_id;
    if (r.target_subtask_id) o["target_subtask_id"] = *r.target_subtask_id;
    if (std::holds_alternative<std::int64_t>(r.timestamp))
        o["timestamp"] = std::get<std::int64_t>(r.timestamp);
    else
        o["timestamp"] = std::get<std::string>(r.timestamp);
    o["message_length"] = r.message_length;
    if (r.claim) {
        ojson c;
        c["claim_id"] = r.claim->claim_id;
        c["parent_claim_ids"] = r.claim->parent_claim_ids;
        c["claim_status"] = to_string(r.claim->claim_status);
        o["claim"] = c;
    }
    if (r.subtask) {
        ojson s;
        s["subtask_id"] = r.subtask->subtask_id;
        if (r.subtask->parent_subtask_id)
            s["parent_subtask_id"] = *r.subtask->parent_subtask_id;
        else
            s["parent_subtask_id"] = nullptr;
        s["assigned_agent"] = r.subtask->assigned_agent;
        s["subtask_status"] = to_string(r.subtask->subtask_status);
        o["subtask"] = s;
    }
    for (auto it = r.extra.begin(); it != r.extra.end(); ++it) o[it.key()] = ojson::parse(it.value().dump());
    return o;
}

ojson run_meta_to_json(const std::string& run_id, const RunMeta& m) {
    ojson o;
    o["record_type"] = "run_meta";
    o["run_id"] = run_id;
    o["agent_count"] = m.agent_count;
    o["topology"] = to_string(m.topology);
    o["task_family"] = to_string(m.task_family);
    o["seed"] = m.seed;
    return o;
}

std::string serialize_trace(const TraceBundle& b, bool include_synthesized_meta) {
    std::string out;
    for (const auto& run : b.run_ids()) {
        auto it = b.run_meta.find(run);
        if (it == b.run_meta.end()) continue;
        if (it->second.synthesized && !include_synthesized_meta) continue;
        out += run_meta_to_json(run, it->second).dump();
        out += '\n';
    }
    for (const auto& r : b.records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

void write_trace(const TraceBundle& b, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path + "'");
    f << serialize_trace(b);
    if (!f) throw IoError("write failed for '" + path + "'");
}

ojson ValidationReport::to_json() const {
    ojson o;
    o["ok"] = ok;
    o["records_checked"] = records_checked;
    o["violation_count"] = violations.size();
    ojson vs = ojson::array();
    for (const auto& v : violations) {
        ojson j;
        j["record_index"] = v.record_index;
        j["line"] = v.line;
        j["run_id"] = v.run_id;
        j["kind"] = v.kind;
        j["message"] = v.message;
        vs.push_back(j);
    }
    o["violations"] = vs;
    ojson ds = ojson::array();
    for (const auto& d : parse_diagnostics) {
        ojson j;
        j["line"] = d.line;
        j["kind"] = d.kind;
        j["message"] = d.message;
        ds.push_back(j);
    }
    o["parse_diagnostics"] = ds;
    return o;
}

ValidationReport validate_bundle(const TraceBundle& bundle) {
    ValidationReport rep;
    rep.records_checked = bundle.records.size();
    rep.parse_diagnostics = bundle.diagnostics;
    auto flag = [&](std::size_t idx, const std::string& kind, const std::string& msg) {
        const auto& r = bundle.records[idx];
        rep.violations.push_back({idx, r.line, r.run_id, kind, msg});
    };

    for (const auto& run : bundle.run_ids()) {
        auto idxs = bundle.run_records(run);
        if (idxs.empty()) continue;
        if (!bundle.run_meta.count(run)) flag(idxs.front(), "missing_run_meta", "run '" + run + "' has no run_meta");

        // claim id -> step of the defining record
        std::unordered_map<std::string, std::int64_t> defined;
        std::unordered_set<std::string> all_claims;
        std::unordered_map<std::string, std::optional<std::string>> subtasks;
        for (auto i : idxs) {
            const auto& r = bundle.records[i];
            if (r.claim && creates_claim(r.event_type)) all_claims.insert(r.claim->claim_id);
            if (r.subtask && r.event_type == EventType::delegate_subtask)
                subtasks.emplace(r.subtask->subtask_id, r.subtask->parent_subtask_id);
        }

        std::optional<std::int64_t> prev_step;
        for (auto i : idxs) {
            const auto& r = bundle.records[i];
            if (prev_step && r.step_id <= *prev_step)
                flag(i, "non_monotone_step",
                     "step_id " + std::to_string(r.step_id) + " does not exceed previous " +
                         std::to_string(*prev_step));
            prev_step = r.step_id;

            auto check_ref = [&](const std::string& id, const char* what) {
                if (defined.count(id)) return;
                if (all_claims.count(id))
                    flag(i, "forward_reference", std::string(what) + " '" + id + "' is defined later in the run");
                else
                    flag(i, "dangling_reference", std::string(what) + " '" + id + "' is not defined");
            };

            const bool needs_target = r.event_type == EventType::revise_claim ||
                                      r.event_type == EventType::contradict_claim ||
                                      r.event_type == EventType::endorse_claim;
            if (needs_target) {
                if (!r.target_claim_id || r.target_claim_id->empty())
                    flag(i, "missing_target", std::string(to_string(r.event_type)) + " needs target_claim_id");
                else
                    check_ref(*r.target_claim_id, "target_claim_id");
            } else if (r.target_claim_id && !r.target_claim_id->empty() &&
                       r.event_type != EventType::propose_claim) {
                check_ref(*r.target_claim_id, "target_claim_id");
            }

            if (creates_claim(r.event_type)) {
                if (!r.claim) {
                    flag(i, "missing_claim", std::string(to_string(r.event_type)) + " needs a claim payload");
                } else {
                    const auto& c = *r.claim;
                    const auto np = c.parent_claim_ids.size();
                    if (c.claim_id.empty()) flag(i, "empty_claim_id", "claim_id is empty");
                    if (std::find(c.parent_claim_ids.begin(), c.parent_claim_ids.end(), c.claim_id) !=
                        c.parent_claim_ids.end())
                        flag(i, "self_parent", "claim '" + c.claim_id + "' lists itself as parent");
                    std::set<std::string> uniq(c.parent_claim_ids.begin(), c.parent_claim_ids.end());
                    if (uniq.size() != np) flag(i, "duplicate_parent", "claim '" + c.claim_id + "' repeats a parent");
                    ClaimStatus expect = ClaimStatus::proposed;
                    switch (r.event_type) {
                        case EventType::revise_claim: expect = ClaimStatus::revised; break;
                        case EventType::contradict_claim: expect = ClaimStatus::contradictory; break;
                        case EventType::merge_claims: expect = ClaimStatus::merged; break;
                        default: break;
                    }
                    if (c.claim_status != expect)
                        flag(i, "status_mismatch",
                             std::string(to_string(r.event_type)) + " carries status " + to_string(c.claim_status));
                    switch (c.claim_status) {
                        case ClaimStatus::merged:
                            if (np < 2) flag(i, "parent_count", "merged claim needs at least 2 parents");
                            break;
                        case ClaimStatus::revised:
                        case ClaimStatus::contradictory:
                            if (np != 1) flag(i, "parent_count", "revised/contradictory claim needs exactly 1 parent");
                            break;
                        case ClaimStatus::proposed:
                            if (np != 0) flag(i, "parent_count", "proposed claim must have no parents");
                            break;
                    }
                    if (needs_target && r.target_claim_id && np == 1 && c.parent_claim_ids[0] != *r.target_claim_id)
                        flag(i, "target_mismatch", "target_claim_id differs from the parent claim");
                    for (const auto& p : c.parent_claim_ids)
                        if (p != c.claim_id) check_ref(p, "parent claim");
                    if (defined.count(c.claim_id) || (c.claim_id.empty()))
                        flag(i, "duplicate_claim_id", "claim_id '" + c.claim_id + "' already defined in run");
                    else
                        defined.emplace(c.claim_id, r.step_id);
                }
            } else if (r.claim) {
                flag(i, "unexpected_claim", std::string(to_string(r.event_type)) + " must not carry a claim payload");
            }

            if (r.event_type == EventType::delegate_subtask) {
                if (!r.subtask) {
                    flag(i, "missing_subtask", "delegate_subtask needs a subtask payload");
                } else {
                    const auto& s = *r.subtask;
                    if (s.subtask_id.empty()) flag(i, "empty_subtask_id", "subtask_id is empty");
                    if (s.parent_subtask_id && *s.parent_subtask_id == s.subtask_id)
                        flag(i, "self_parent", "subtask '" + s.subtask_id + "' is its own parent");
                    else if (s.parent_subtask_id && !subtasks.count(*s.parent_subtask_id))
                        flag(i, "dangling_reference", "parent_subtask_id '" + *s.parent_subtask_id + "' is not defined");
                    auto it = subtasks.find(s.subtask_id);
                    if (it != subtasks.end() && it->second != s.parent_subtask_id)
                        flag(i, "conflicting_subtask", "subtask '" + s.subtask_id + "' redeclared with another parent");
                }
            }
        }
    }
    rep.ok = rep.violations.empty();
    return rep;
}

}  // namespace cascade
