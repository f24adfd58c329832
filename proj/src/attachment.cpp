#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "cascade/tailstats.hpp"

namespace cascade {

namespace {

constexpr int kBins = 48;
constexpr double kMinBinCount = 100.0;

int bin_of(long x) {
    int b = 0;
    while (x > 1 && b < kBins - 1) {
        x >>= 1;
        ++b;
    }
    return b;
}

struct Accum {
    std::array<double, kBins> observed{};
    std::array<double, kBins> expected{};
    std::array<double, kBins> logx_w{};  // null-weighted sum of log x
    long decisions = 0;
};

struct RunState {
    std::unordered_map<std::string, long> activity;  // claim -> prior references
    std::array<long, kBins> alive{};
    long alive_total = 0;
    std::array<double, kBins> logx_sum{};  // sum of log x over alive claims per bin

    void add_claim(const std::string& id) {
        if (!activity.emplace(id, 0).second) return;
        ++alive[0];
        ++alive_total;
    }
    void bump(const std::string& id) {
        auto it = activity.find(id);
        if (it == activity.end()) return;
        long x = 1 + it->second;
        int b0 = bin_of(x);
        --alive[b0];
        logx_sum[b0] -= std::log(static_cast<double>(x));
        ++it->second;
        int b1 = bin_of(x + 1);
        ++alive[b1];
        logx_sum[b1] += std::log(static_cast<double>(x + 1));
    }
};

void record_decision(Accum& acc, const RunState& st, long x) {
    ++acc.decisions;
    acc.observed[bin_of(x)] += 1.0;
    const double n = static_cast<double>(st.alive_total);
    for (int b = 0; b < kBins; ++b) {
        if (st.alive[b] == 0) continue;
        acc.expected[b] += static_cast<double>(st.alive[b]) / n;
        acc.logx_w[b] += st.logx_sum[b] / n;
    }
}

AttachmentCurve curve_of(const Accum& acc) {
    AttachmentCurve c;
    c.decisions = acc.decisions;
    std::vector<double> lx, lr;
    for (int b = 0; b < kBins; ++b) {
        if (acc.expected[b] <= 0) continue;
        AttachmentBin bin;
        bin.x_lo = std::ldexp(1.0, b);
        bin.x_hi = std::ldexp(1.0, b + 1);
        bin.log_x_center = acc.logx_w[b] / acc.expected[b];
        bin.observed = acc.observed[b];
        bin.expected = acc.expected[b];
        bin.ratio = acc.observed[b] / acc.expected[b];
        c.bins.push_back(bin);
        if (bin.observed >= kMinBinCount) {
            lx.push_back(bin.log_x_center);
            lr.push_back(std::log(bin.ratio));
        }
    }
    if (lx.size() >= 2) c.beta_hat = ols(lx, lr).slope;
    return c;
}

ojson curve_json(const AttachmentCurve& c) {
    ojson o;
    o["decisions"] = c.decisions;
    o["beta_hat"] = c.beta_hat ? ojson(*c.beta_hat) : ojson(nullptr);
    ojson bins = ojson::array();
    for (const auto& b : c.bins) {
        ojson j;
        j["x_lo"] = b.x_lo;
        j["x_hi"] = b.x_hi;
        j["log_x_center"] = b.log_x_center;
        j["observed"] = b.observed;
        j["expected"] = b.expected;
        j["R"] = b.ratio;
        bins.push_back(j);
    }
    o["bins"] = bins;
    return o;
}

struct Continuation {
    long events = 0;
    long continued = 0;
};

}  // namespace

ojson AttachmentEstimate::to_json() const {
    ojson o;
    o["beta_hat"] = beta_hat;
    o["decisions"] = decisions;
    o["pooled"] = curve_json(pooled);
    ojson per = ojson::object();
    for (const auto& [t, c] : per_type) {
        ojson j = curve_json(c);
        auto pc = p_cont.find(t);
        j["p_cont"] = pc != p_cont.end() ? ojson(pc->second) : ojson(nullptr);
        auto am = amplification.find(t);
        j["amplification"] = am != amplification.end() ? ojson(am->second) : ojson(nullptr);
        per[to_string(t)] = j;
    }
    o["per_type"] = per;
    return o;
}

AttachmentEstimate estimate_attachment(const TraceBundle& bundle, const std::vector<const ClaimGraph*>& graphs) {
    Accum pooled;
    std::map<EventType, Accum> by_type;
    std::map<EventType, Continuation> cont;

    for (const ClaimGraph* g : graphs) {
        RunState st;
        const auto idx = bundle.run_records(g->run_id);
        // continuation: was the thing this record produced referenced later?
        std::unordered_set<std::string> referenced_claims, referenced_subtasks;
        for (std::size_t i : idx) {
            const auto& r = bundle.records[i];
            if (r.target_claim_id) referenced_claims.insert(*r.target_claim_id);
            if (r.claim)
                for (const auto& p : r.claim->parent_claim_ids) referenced_claims.insert(p);
            if (r.target_subtask_id) referenced_subtasks.insert(*r.target_subtask_id);
            if (r.subtask && r.subtask->parent_subtask_id) referenced_subtasks.insert(*r.subtask->parent_subtask_id);
        }
        for (std::size_t i : idx) {
            const auto& r = bundle.records[i];
            auto& c = cont[r.event_type];
            ++c.events;
            bool produced = false;
            if (r.claim && creates_claim(r.event_type))
                produced = referenced_claims.count(r.claim->claim_id) > 0;
            else if (r.event_type == EventType::delegate_subtask && r.subtask)
                produced = referenced_subtasks.count(r.subtask->subtask_id) > 0;
            if (produced) ++c.continued;
        }

        std::size_t k = 0;
        while (k < idx.size()) {
            const auto& head = bundle.records[idx[k]];
            // a run of records by one agent, of one type, on one target is one decision
            std::size_t end = k + 1;
            if (head.target_claim_id) {
                while (end < idx.size()) {
                    const auto& r = bundle.records[idx[end]];
                    if (r.agent_id != head.agent_id || r.event_type != head.event_type ||
                        r.target_claim_id != head.target_claim_id)
                        break;
                    ++end;
                }
                auto it = st.activity.find(*head.target_claim_id);
                if (it != st.activity.end() && st.alive_total > 0) {
                    long x = 1 + it->second;
                    record_decision(pooled, st, x);
                    record_decision(by_type[head.event_type], st, x);
                }
            }
            for (std::size_t j = k; j < end; ++j) {
                const auto& r = bundle.records[idx[j]];
                std::unordered_set<std::string> touched;
                if (r.target_claim_id) touched.insert(*r.target_claim_id);
                if (r.claim)
                    for (const auto& p : r.claim->parent_claim_ids) touched.insert(p);
                for (const auto& id : touched) st.bump(id);
                if (r.claim && creates_claim(r.event_type)) st.add_claim(r.claim->claim_id);
            }
            k = end;
        }
    }

    if (pooled.decisions < kMinDecisions)
        throw InsufficientDecisions("only " + std::to_string(pooled.decisions) + " routing decisions, need " +
                                    std::to_string(kMinDecisions));
    AttachmentEstimate est;
    est.decisions = pooled.decisions;
    est.pooled = curve_of(pooled);
    if (!est.pooled.beta_hat) throw InsufficientDecisions("fewer than two populated activity bins");
    est.beta_hat = *est.pooled.beta_hat;
    for (const auto& [t, acc] : by_type) est.per_type[t] = curve_of(acc);
    for (const auto& [t, c] : cont) {
        if (c.events == 0) continue;
        double p = static_cast<double>(c.continued) / static_cast<double>(c.events);
        est.p_cont[t] = p;
        auto pt = est.per_type.find(t);
        if (pt != est.per_type.end() && pt->second.beta_hat) est.amplification[t] = *pt->second.beta_hat * p;
    }
    return est;
}

AttachmentEstimate estimate_attachment(const TraceBundle& bundle, const ClaimGraph& graph) {
    return estimate_attachment(bundle, std::vector<const ClaimGraph*>{&graph});
}

}  // namespace cascade
