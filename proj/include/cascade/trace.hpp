#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace cascade {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

enum class EventType {
    propose_claim,
    revise_claim,
    contradict_claim,
    merge_claims,
    delegate_subtask,
    endorse_claim
};

enum class ClaimStatus { proposed, revised, contradictory, merged };
enum class SubtaskStatus { active, completed };

enum class Topology {
    chain,
    star,
    tree,
    hierarchical,
    fully_connected,
    sparse_mesh,
    dynamic_reputation
};

enum class TaskFamily { qa, coding, planning, reasoning };

const char* to_string(EventType t);
const char* to_string(ClaimStatus s);
const char* to_string(SubtaskStatus s);
const char* to_string(Topology t);
const char* to_string(TaskFamily f);

std::optional<EventType> parse_event_type(const std::string& s);
std::optional<ClaimStatus> parse_claim_status(const std::string& s);
std::optional<SubtaskStatus> parse_subtask_status(const std::string& s);
std::optional<Topology> parse_topology(const std::string& s);
std::optional<TaskFamily> parse_task_family(const std::string& s);

// Event types that create a claim node.
bool creates_claim(EventType t);

struct ClaimPayload {
    std::string claim_id;
    std::vector<std::string> parent_claim_ids;
    ClaimStatus claim_status = ClaimStatus::proposed;

    bool operator==(const ClaimPayload&) const = default;
};

struct SubtaskPayload {
    std::string subtask_id;
    std::optional<std::string> parent_subtask_id;
    std::string assigned_agent;
    SubtaskStatus subtask_status = SubtaskStatus::active;

    bool operator==(const SubtaskPayload&) const = default;
};

using Timestamp = std::variant<std::int64_t, std::string>;

struct EventRecord {
    std::string run_id;
    std::int64_t step_id = 0;
    std::string agent_id;
    EventType event_type = EventType::propose_claim;
    std::optional<std::string> target_claim_id;
    std::optional<std::string> target_subtask_id;
    Timestamp timestamp = std::int64_t{0};
    std::int64_t message_length = 0;
    std::optional<ClaimPayload> claim;
    std::optional<SubtaskPayload> subtask;
    // Fields outside the schema, kept verbatim so they survive a round trip.
    json extra = json::object();
    // 1-based source line, 0 for records built in memory.
    std::size_t line = 0;

    bool same_fields(const EventRecord& o) const;
};

struct RunMeta {
    int agent_count = 1;
    Topology topology = Topology::fully_connected;
    TaskFamily task_family = TaskFamily::qa;
    std::int64_t seed = 0;
    // True when the stream had no run_meta line for this run.
    bool synthesized = false;

    bool operator==(const RunMeta&) const = default;
};

struct Diagnostic {
    std::size_t line = 0;
    std::string kind;
    std::string message;
};

struct TraceBundle {
    std::vector<EventRecord> records;
    std::map<std::string, RunMeta> run_meta;
    std::vector<Diagnostic> diagnostics;

    // Run ids in order of first appearance.
    std::vector<std::string> run_ids() const;
    // Record indices belonging to one run, in input order.
    std::vector<std::size_t> run_records(const std::string& run_id) const;
};

class EmptyInput : public std::runtime_error {
public:
    EmptyInput() : std::runtime_error("empty input: no lines to parse") {}
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One JSON object per line. A line of the form {"record_type":"run_meta",...}
// carries per-run condition labels; every other line is an event record.
TraceBundle parse_trace(std::istream& in);
TraceBundle parse_trace_text(const std::string& text);
// Reads plain or gzip-compressed files.
TraceBundle load_trace(const std::string& path);

ojson record_to_json(const EventRecord& r);
ojson run_meta_to_json(const std::string& run_id, const RunMeta& m);
// Writes run_meta lines (non-synthesized only unless include_synth) followed by records.
std::string serialize_trace(const TraceBundle& b, bool include_synthesized_meta = false);
void write_trace(const TraceBundle& b, const std::string& path);

struct Violation {
    std::size_t record_index = 0;
    std::size_t line = 0;
    std::string run_id;
    std::string kind;
    std::string message;
};

struct ValidationReport {
    bool ok = true;
    std::size_t records_checked = 0;
    std::vector<Violation> violations;
    std::vector<Diagnostic> parse_diagnostics;

    ojson to_json() const;
};

ValidationReport validate_bundle(const TraceBundle& bundle);

}  // namespace cascade
