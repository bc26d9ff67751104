#include "mann/agents.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace mann {

int RsrqHistogram::total() const {
    int n = 0;
    for (int c : counts) n += c;
    return n;
}

RsrqHistogram extract_features(std::span<const RsrqReport> reports) {
    RsrqHistogram h;
    for (const RsrqReport& r : reports) {
        const int v = std::clamp(r.report_value, 0, kMaxRsrqReport);
        int bin;
        if (v < kMinThreshold)
            bin = 0;
        else if (v >= kMaxThreshold)
            bin = kRsrqBins - 1;
        else
            bin = 1 + (v - kMinThreshold);
        ++h.counts[static_cast<std::size_t>(bin)];
    }
    return h;
}

ActionEvaluations evaluate_actions(const RsrqHistogram& hist, const Predictor& predict, const NormalizationSpec& spec) {
    ActionEvaluations out;
    for (int a = 0; a < kNumActions; ++a) {
        const PfrConfig cfg = PfrConfig::from_action_index(a);
        out.gains[static_cast<std::size_t>(a)] =
            predict(make_features(hist.counts, cfg.center_rbs, cfg.rsrq_threshold, spec));
    }
    return out;
}

Predictor predictor_of(const RegressorModel& model) {
    return [&model](const FeatureVector& f) { return model.predict(f); };
}

ActionEvaluations evaluate_actions(const RsrqHistogram& hist, const RegressorModel& model) {
    return evaluate_actions(hist, predictor_of(model), model.normalization);
}

ThresholdChoice best_threshold_for_bw(const ActionEvaluations& evaluations, int center_rbs) {
    ThresholdChoice best{kMinThreshold, evaluations.at({center_rbs, kMinThreshold})};
    for (int thr = kMinThreshold + 1; thr <= kMaxThreshold; ++thr) {
        const double g = evaluations.at({center_rbs, thr});
        if (g > best.gain) best = {thr, g};
    }
    return best;
}

GainVector make_gain_vector(const ActionEvaluations& evaluations, int cell_id) {
    GainVector v;
    v.cell_id = cell_id;
    for (std::size_t k = 0; k < kCenterBandwidths.size(); ++k) {
        const ThresholdChoice c = best_threshold_for_bw(evaluations, kCenterBandwidths[k]);
        v.gains[k] = c.gain;
        v.best_threshold_per_bw[k] = c.threshold;
    }
    return v;
}

CoordinatorDecision coordinate(std::span<const GainVector> gain_vectors, int epoch_id) {
    std::set<int> seen;
    CoordinatorDecision d;
    d.epoch_id = epoch_id;
    for (const GainVector& v : gain_vectors) {
        if (!seen.insert(v.cell_id).second) throw Error("duplicate gain vector from cell " + std::to_string(v.cell_id));
        for (std::size_t k = 0; k < 3; ++k) d.per_bw_totals[k] += v.gains[k];
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < 3; ++k)
        if (d.per_bw_totals[k] > d.per_bw_totals[best]) best = k;
    d.winning_bw = kCenterBandwidths[best];
    return d;
}

std::string to_json_line(const ProtocolMessage& message) {
    nlohmann::json j;
    j["epoch"] = message.epoch;
    j["from"] = message.from;
    j["to"] = message.to;
    if (message.kind == MessageKind::gains) {
        j["kind"] = "gains";
        j["payload"] = {{"cell_id", message.gains.cell_id},
                        {"gains", message.gains.gains},
                        {"best_thresholds", message.gains.best_threshold_per_bw}};
    } else {
        j["kind"] = "broadcast";
        j["payload"] = {{"winning_bw", message.bandwidth}};
    }
    return j.dump();
}

void Coordinator::receive(const ProtocolMessage& upload) {
    if (upload.kind != MessageKind::gains) throw Error("coordinator only accepts gain uploads");
    for (const GainVector& v : uploads_)
        if (v.cell_id == upload.gains.cell_id)
            throw Error("duplicate gain vector from cell " + std::to_string(v.cell_id));
    uploads_.push_back(upload.gains);
}

ProtocolMessage Coordinator::broadcast(int epoch_id, CoordinatorDecision* decision) {
    const CoordinatorDecision d = coordinate(uploads_, epoch_id);
    uploads_.clear();
    if (decision) *decision = d;
    ProtocolMessage msg;
    msg.epoch = epoch_id;
    msg.from = "coordinator";
    msg.to = "*";
    msg.kind = MessageKind::broadcast;
    msg.bandwidth = d.winning_bw;
    return msg;
}

const ActionEvaluations& CellAgent::observe(std::span<const RsrqReport> cell_reports) {
    hist_ = extract_features(cell_reports);
    evaluations_ = evaluate_actions(hist_, predict_, spec_);
    return evaluations_;
}

ProtocolMessage CellAgent::upload(int epoch_id) const {
    ProtocolMessage msg;
    msg.epoch = epoch_id;
    msg.from = "cell" + std::to_string(cell_id_);
    msg.to = "coordinator";
    msg.kind = MessageKind::gains;
    msg.gains = make_gain_vector(evaluations_, cell_id_);
    return msg;
}

PfrConfig CellAgent::adopt(const ProtocolMessage& broadcast) const {
    if (broadcast.kind != MessageKind::broadcast) throw Error("agent expected a bandwidth broadcast");
    return {broadcast.bandwidth, best_threshold_for_bw(evaluations_, broadcast.bandwidth).threshold};
}

RoundOutcome decision_round(const UeDrop& drop, std::span<const int> agent_cells, std::span<const RsrqReport> reports,
                            const Predictor& predict, const NormalizationSpec& spec, int epoch_id) {
    RoundOutcome out;
    std::vector<CellAgent> agents;
    agents.reserve(agent_cells.size());
    for (int c : agent_cells) agents.emplace_back(c, predict, spec);

    Coordinator coordinator;
    for (CellAgent& agent : agents) {
        out.evaluations[agent.cell_id()] = agent.observe(reports_of_cell(drop, reports, agent.cell_id()));
        ProtocolMessage up = agent.upload(epoch_id);
        coordinator.receive(up);
        out.messages.push_back(std::move(up));
    }
    // barrier: nobody adopts before the broadcast
    const ProtocolMessage bc = coordinator.broadcast(epoch_id, &out.decision);
    out.messages.push_back(bc);
    for (const CellAgent& agent : agents) out.configs[agent.cell_id()] = agent.adopt(bc);
    return out;
}

RoundOutcome decision_round(const UeDrop& drop, std::span<const int> agent_cells, std::span<const RsrqReport> reports,
                            const RegressorModel& model, int epoch_id) {
    return decision_round(drop, agent_cells, reports, predictor_of(model), model.normalization, epoch_id);
}

}  // namespace mann
