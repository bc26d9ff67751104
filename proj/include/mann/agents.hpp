#pragma once

#include <array>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mann/linklevel.hpp"
#include "mann/neuralnet.hpp"
#include "mann/pfr_sim.hpp"
#include "mann/topology.hpp"

namespace mann {

/// UE counts per RSRQ bin: [<25], [25], [26], ..., [32], [>=33].
struct RsrqHistogram {
    std::array<int, kRsrqBins> counts{};

    int total() const;
    friend bool operator==(const RsrqHistogram&, const RsrqHistogram&) = default;
};

RsrqHistogram extract_features(std::span<const RsrqReport> reports);

/// Predicted normalized metric for each of the 27 actions, bandwidth-major.
struct ActionEvaluations {
    std::array<double, kNumActions> gains{};

    double at(const PfrConfig& config) const { return gains[static_cast<std::size_t>(config.action_index())]; }
};

/// Maps a normalized feature vector to a predicted gain.
using Predictor = std::function<double(const FeatureVector&)>;

ActionEvaluations evaluate_actions(const RsrqHistogram& hist, const Predictor& predict, const NormalizationSpec& spec);
ActionEvaluations evaluate_actions(const RsrqHistogram& hist, const RegressorModel& model);

struct ThresholdChoice {
    int threshold = kMinThreshold;
    double gain = 0.0;
};

/// Best threshold for one bandwidth; the lowest threshold wins ties.
ThresholdChoice best_threshold_for_bw(const ActionEvaluations& evaluations, int center_rbs);

struct GainVector {
    int cell_id = 0;
    std::array<double, 3> gains{};
    std::array<int, 3> best_threshold_per_bw{};
};

GainVector make_gain_vector(const ActionEvaluations& evaluations, int cell_id);

struct CoordinatorDecision {
    int winning_bw = kCenterBandwidths[0];
    std::array<double, 3> per_bw_totals{};
    int epoch_id = 0;
};

/// Sums gain vectors per bandwidth and picks the largest total (smallest
/// bandwidth on ties). Throws on duplicate cell ids.
CoordinatorDecision coordinate(std::span<const GainVector> gain_vectors, int epoch_id = 0);

enum class MessageKind { gains, broadcast };

struct ProtocolMessage {
    int epoch = 0;
    std::string from;
    std::string to;
    MessageKind kind = MessageKind::gains;
    GainVector gains;   // kind == gains
    int bandwidth = 0;  // kind == broadcast
};

std::string to_json_line(const ProtocolMessage& message);

/// Collects gain-vector uploads for one round and answers with a broadcast.
class Coordinator {
public:
    void receive(const ProtocolMessage& upload);
    std::size_t pending() const { return uploads_.size(); }
    /// Decides, clears the round and returns the broadcast record.
    ProtocolMessage broadcast(int epoch_id, CoordinatorDecision* decision = nullptr);

private:
    std::vector<GainVector> uploads_;
};

class CellAgent {
public:
    CellAgent(int cell_id, Predictor predict, NormalizationSpec spec)
        : cell_id_(cell_id), predict_(std::move(predict)), spec_(spec) {}

    int cell_id() const { return cell_id_; }

    /// Builds features from the cell's own UE reports and scores all actions.
    const ActionEvaluations& observe(std::span<const RsrqReport> cell_reports);
    ProtocolMessage upload(int epoch_id) const;
    /// Adopts the broadcast bandwidth with this cell's best threshold for it.
    PfrConfig adopt(const ProtocolMessage& broadcast) const;

    const RsrqHistogram& histogram() const { return hist_; }
    const ActionEvaluations& evaluations() const { return evaluations_; }

private:
    int cell_id_;
    Predictor predict_;
    NormalizationSpec spec_;
    RsrqHistogram hist_;
    ActionEvaluations evaluations_;
};

struct RoundOutcome {
    std::map<int, PfrConfig> configs;
    CoordinatorDecision decision;
    std::map<int, ActionEvaluations> evaluations;
    std::vector<ProtocolMessage> messages;
};

/// One coordination round over `agent_cells`, given RSRQ reports for every UE
/// of the drop (indexed by UE id).
RoundOutcome decision_round(const UeDrop& drop, std::span<const int> agent_cells, std::span<const RsrqReport> reports,
                            const Predictor& predict, const NormalizationSpec& spec, int epoch_id);
RoundOutcome decision_round(const UeDrop& drop, std::span<const int> agent_cells, std::span<const RsrqReport> reports,
                            const RegressorModel& model, int epoch_id);

Predictor predictor_of(const RegressorModel& model);

}  // namespace mann
