#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cascade/trace.hpp"

#ifndef CASCADE_DATA_DIR
#define CASCADE_DATA_DIR "data"
#endif

namespace testing {

using namespace cascade;

inline std::string data_path(const std::string& name) { return std::string(CASCADE_DATA_DIR) + "/" + name; }

inline ClaimStatus status_for(EventType t) {
    switch (t) {
        case EventType::revise_claim: return ClaimStatus::revised;
        case EventType::contradict_claim: return ClaimStatus::contradictory;
        case EventType::merge_claims: return ClaimStatus::merged;
        default: return ClaimStatus::proposed;
    }
}

// Builds one run in memory; step ids count up from 1 unless set explicitly.
class Trace {
public:
    explicit Trace(std::string run = "r0", int N = 4) : run_(std::move(run)), N_(N) {}

    Trace& propose(const std::string& id, const std::string& agent = "a0") {
        return claim(EventType::propose_claim, id, {}, agent);
    }
    Trace& revise(const std::string& id, const std::string& parent, const std::string& agent = "a0") {
        return claim(EventType::revise_claim, id, {parent}, agent);
    }
    Trace& contradict(const std::string& id, const std::string& parent, const std::string& agent = "a0") {
        return claim(EventType::contradict_claim, id, {parent}, agent);
    }
    Trace& merge(const std::string& id, std::vector<std::string> parents, const std::string& agent = "a0") {
        return claim(EventType::merge_claims, id, std::move(parents), agent);
    }
    Trace& endorse(const std::string& target, const std::string& agent = "a0") {
        EventRecord r = base(EventType::endorse_claim, agent);
        r.target_claim_id = target;
        recs_.push_back(std::move(r));
        return *this;
    }
    Trace& delegate(const std::string& id, std::optional<std::string> parent, const std::string& agent = "a0") {
        EventRecord r = base(EventType::delegate_subtask, agent);
        SubtaskPayload s;
        s.subtask_id = id;
        s.parent_subtask_id = std::move(parent);
        s.assigned_agent = agent;
        r.subtask = s;
        recs_.push_back(std::move(r));
        return *this;
    }
    Trace& claim(EventType t, const std::string& id, std::vector<std::string> parents, const std::string& agent) {
        EventRecord r = base(t, agent);
        if (!parents.empty()) r.target_claim_id = parents.front();
        ClaimPayload c;
        c.claim_id = id;
        c.parent_claim_ids = std::move(parents);
        c.claim_status = status_for(t);
        r.claim = c;
        recs_.push_back(std::move(r));
        return *this;
    }
    // next record gets this step id
    Trace& at(std::int64_t step) {
        step_ = step - 1;
        return *this;
    }

    std::string text() const {
        RunMeta m;
        m.agent_count = N_;
        std::ostringstream os;
        os << run_meta_to_json(run_, m).dump() << '\n';
        for (const auto& r : recs_) os << record_to_json(r).dump() << '\n';
        return os.str();
    }
    TraceBundle bundle() const { return parse_trace_text(text()); }
    const std::vector<EventRecord>& records() const { return recs_; }

private:
    EventRecord base(EventType t, const std::string& agent) {
        EventRecord r;
        r.run_id = run_;
        r.step_id = ++step_;
        r.agent_id = agent;
        r.event_type = t;
        r.timestamp = r.step_id;
        r.message_length = 10;
        return r;
    }

    std::string run_;
    int N_;
    std::int64_t step_ = 0;
    std::vector<EventRecord> recs_;
};

inline Trace worked_example() {
    Trace t("gaia-n16", 16);
    t.propose("c1", "a2")
        .revise("c2", "c1", "a3")
        .contradict("c3", "c1", "a6")
        .revise("c4", "c2", "a4")
        .merge("c5", {"c2", "c3", "c4"}, "a5");
    return t;
}

}  // namespace testing
