#include "mann/neuralnet.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "mann/rng.hpp"

namespace mann {

using nlohmann::json;

std::string_view to_string(Activation a) { return a == Activation::tanh ? "tanh" : "sigmoid"; }

Activation activation_from_string(std::string_view s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "sigmoid") return Activation::sigmoid;
    throw Error("unknown activation '" + std::string(s) + "'");
}

namespace {

double activate(Activation a, double z) {
    return a == Activation::tanh ? std::tanh(z) : 1.0 / (1.0 + std::exp(-z));
}

// derivative expressed through the activation output y
double activate_grad(Activation a, double y) { return a == Activation::tanh ? 1.0 - y * y : y * (1.0 - y); }

// Activations of every layer for one input; acts[0] is the input itself.
void forward_trace(const MlpWeights& net, std::span<const double> input, std::vector<std::vector<double>>& acts) {
    acts.resize(net.layers.size() + 1);
    acts[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const DenseLayer& layer = net.layers[l];
        const std::vector<double>& x = acts[l];
        std::vector<double>& y = acts[l + 1];
        y.resize(static_cast<std::size_t>(layer.out));
        for (int o = 0; o < layer.out; ++o) {
            const double* row = layer.weights.data() + static_cast<std::size_t>(o * layer.in);
            double z = layer.biases[static_cast<std::size_t>(o)];
            for (int i = 0; i < layer.in; ++i) z += row[i] * x[static_cast<std::size_t>(i)];
            y[static_cast<std::size_t>(o)] = activate(layer.activation, z);
        }
    }
}

}  // namespace

std::vector<int> MlpWeights::layer_dims() const {
    std::vector<int> dims;
    if (layers.empty()) return dims;
    dims.push_back(layers.front().in);
    for (const DenseLayer& l : layers) dims.push_back(l.out);
    return dims;
}

std::size_t MlpWeights::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers) n += l.weights.size() + l.biases.size();
    return n;
}

MlpWeights MlpWeights::zeros_like() const {
    MlpWeights z = *this;
    for (DenseLayer& l : z.layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.biases.begin(), l.biases.end(), 0.0);
    }
    return z;
}

void MlpWeights::validate() const {
    if (layers.empty()) throw Error("network has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DenseLayer& layer = layers[l];
        if (layer.in <= 0 || layer.out <= 0) throw Error("layer " + std::to_string(l) + " has a zero dimension");
        if (l > 0 && layers[l - 1].out != layer.in)
            throw Error("layer " + std::to_string(l) + " input width does not match previous output");
        if (layer.weights.size() != static_cast<std::size_t>(layer.in * layer.out) ||
            layer.biases.size() != static_cast<std::size_t>(layer.out))
            throw Error("layer " + std::to_string(l) + " parameter count mismatch");
        auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
            !std::all_of(layer.biases.begin(), layer.biases.end(), finite))
            throw Error("layer " + std::to_string(l) + " has non-finite parameters");
    }
}

MlpWeights MlpWeights::initialized(std::span<const int> dims, std::uint64_t seed) {
    if (dims.size() < 2) throw Error("need at least input and output dimensions");
    Rng rng(seed);
    MlpWeights net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer layer;
        layer.in = dims[l];
        layer.out = dims[l + 1];
        layer.activation = (l + 2 == dims.size()) ? Activation::sigmoid : Activation::tanh;
        const double limit = std::sqrt(6.0 / (layer.in + layer.out));
        layer.weights.resize(static_cast<std::size_t>(layer.in * layer.out));
        for (double& w : layer.weights) w = rng.uniform(-limit, limit);
        layer.biases.assign(static_cast<std::size_t>(layer.out), 0.0);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

MlpWeights MlpWeights::standard(std::uint64_t seed) {
    std::vector<int> dims{kInputWidth};
    for (int i = 0; i < kHiddenLayers; ++i) dims.push_back(kHiddenWidth);
    dims.push_back(1);
    return initialized(dims, seed);
}

double forward(const MlpWeights& weights, std::span<const double> input) {
    if (weights.layers.empty()) throw Error("network has no layers");
    if (static_cast<int>(input.size()) != weights.layers.front().in)
        throw Error("input has " + std::to_string(input.size()) + " values, network expects " +
                    std::to_string(weights.layers.front().in));
    if (weights.layers.back().out != 1) throw Error("network must have a single output");
    thread_local std::vector<std::vector<double>> acts;
    forward_trace(weights, input, acts);
    return acts.back()[0];
}

LossGradient loss_and_gradient(const MlpWeights& weights, std::span<const Example> batch) {
    if (batch.empty()) throw Error("empty batch");
    LossGradient out;
    out.gradient = weights.zeros_like();
    std::vector<std::vector<double>> acts;
    std::vector<double> delta;
    std::vector<double> prev_delta;
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    for (const Example& ex : batch) {
        if (static_cast<int>(ex.input.size()) != weights.layers.front().in)
            throw Error("example input width does not match the network");
        forward_trace(weights, ex.input, acts);
        const double pred = acts.back()[0];
        const double err = pred - ex.target;
        out.loss += err * err * inv_n;

        // dL/dy at the output, then through each layer's activation
        delta.assign(1, 2.0 * err * inv_n);
        for (std::size_t l = weights.layers.size(); l-- > 0;) {
            const DenseLayer& layer = weights.layers[l];
            DenseLayer& grad = out.gradient.layers[l];
            const std::vector<double>& x = acts[l];
            const std::vector<double>& y = acts[l + 1];
            for (int o = 0; o < layer.out; ++o) delta[static_cast<std::size_t>(o)] *= activate_grad(layer.activation, y[static_cast<std::size_t>(o)]);

            prev_delta.assign(static_cast<std::size_t>(layer.in), 0.0);
            for (int o = 0; o < layer.out; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                grad.biases[static_cast<std::size_t>(o)] += d;
                double* grow = grad.weights.data() + static_cast<std::size_t>(o * layer.in);
                const double* wrow = layer.weights.data() + static_cast<std::size_t>(o * layer.in);
                for (int i = 0; i < layer.in; ++i) {
                    grow[i] += d * x[static_cast<std::size_t>(i)];
                    prev_delta[static_cast<std::size_t>(i)] += d * wrow[i];
                }
            }
            delta.swap(prev_delta);
        }
    }
    return out;
}

double mean_squared_error(const MlpWeights& weights, std::span<const Example> data) {
    if (data.empty()) return 0.0;
    double sum = 0.0;
    for (const Example& ex : data) {
        const double e = forward(weights, ex.input) - ex.target;
        sum += e * e;
    }
    return sum / static_cast<double>(data.size());
}

void adamax_update(double& w, double& m, double& u, double g, long t, const AdamaxParams& p) {
    m = p.beta1 * m + (1.0 - p.beta1) * g;
    u = std::max(p.beta2 * u, std::abs(g));
    const double lr = p.alpha / (1.0 - std::pow(p.beta1, static_cast<double>(t)));
    w -= lr * m / std::max(u, p.epsilon);
}

AdamaxOptimizer::AdamaxOptimizer(const MlpWeights& shape, AdamaxParams params)
    : params_(params), m_(shape.zeros_like()), u_(shape.zeros_like()) {}

void AdamaxOptimizer::step(MlpWeights& weights, const MlpWeights& gradient) {
    ++t_;
    for (std::size_t l = 0; l < weights.layers.size(); ++l) {
        DenseLayer& w = weights.layers[l];
        const DenseLayer& g = gradient.layers[l];
        DenseLayer& m = m_.layers[l];
        DenseLayer& u = u_.layers[l];
        for (std::size_t i = 0; i < w.weights.size(); ++i)
            adamax_update(w.weights[i], m.weights[i], u.weights[i], g.weights[i], t_, params_);
        for (std::size_t i = 0; i < w.biases.size(); ++i)
            adamax_update(w.biases[i], m.biases[i], u.biases[i], g.biases[i], t_, params_);
    }
}

void NormalizationSpec::validate() const {
    if (!(bin_count_cap > 0.0) || !std::isfinite(bin_count_cap)) throw Error("bin_count_cap must be positive");
    if (!(output_max > 0.0) || !std::isfinite(output_max)) throw Error("output_max must be positive");
}

FeatureVector make_features(std::span<const int, kRsrqBins> bins, int center_rbs, int rsrq_threshold,
                            const NormalizationSpec& spec) {
    FeatureVector f{};
    for (int i = 0; i < kRsrqBins; ++i)
        f[static_cast<std::size_t>(i)] = std::clamp(bins[static_cast<std::size_t>(i)] / spec.bin_count_cap, 0.0, 1.0);
    const auto bw = std::find(kCenterBandwidths.begin(), kCenterBandwidths.end(), center_rbs);
    if (bw == kCenterBandwidths.end()) throw Error("unknown center bandwidth " + std::to_string(center_rbs));
    f[kRsrqBins] = static_cast<double>(bw - kCenterBandwidths.begin()) / (kCenterBandwidths.size() - 1);
    f[kRsrqBins + 1] = std::clamp(static_cast<double>(rsrq_threshold - kMinThreshold) / (kMaxThreshold - kMinThreshold), 0.0, 1.0);
    return f;
}

NormalizedSample normalize(const SampleRecord& sample, const NormalizationSpec& spec) {
    return {make_features(sample.bins, sample.center_rbs, sample.rsrq_threshold, spec),
            std::min(sample.raw_metric / spec.output_max, 1.0)};
}

NormalizationSpec fit_normalization(std::span<const SampleRecord> samples) {
    NormalizationSpec spec{0.0, 0.0};
    for (const SampleRecord& s : samples) {
        for (int b : s.bins) spec.bin_count_cap = std::max(spec.bin_count_cap, static_cast<double>(b));
        spec.output_max = std::max(spec.output_max, s.raw_metric);
    }
    // degenerate all-zero data still needs a usable divisor
    if (spec.bin_count_cap <= 0.0) spec.bin_count_cap = 1.0;
    if (spec.output_max <= 0.0) spec.output_max = 1.0;
    return spec;
}

void TrainingConfig::validate() const {
    if (batch_size < 1) throw Error("batch_size must be >= 1");
    if (epochs < 1) throw Error("epochs must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw Error("validation_fraction must be in (0, 1)");
}

TrainResult train(std::span<const SampleRecord> samples, const TrainingConfig& config) {
    config.validate();
    if (samples.size() < kMinTrainingSamples)
        throw Error("need at least " + std::to_string(kMinTrainingSamples) + " samples, got " +
                    std::to_string(samples.size()));

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng(derive_seed(config.seed, "train.split")).shuffle(order.begin(), order.end());

    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(samples.size()))));
    const std::size_t n_train = samples.size() - n_val;

    std::vector<SampleRecord> train_records;
    train_records.reserve(n_train);
    for (std::size_t i = 0; i < n_train; ++i) train_records.push_back(samples[order[i]]);
    const NormalizationSpec spec = fit_normalization(train_records);

    auto to_example = [&](const SampleRecord& s) {
        const NormalizedSample ns = normalize(s, spec);
        return Example{{ns.input.begin(), ns.input.end()}, ns.target};
    };
    std::vector<Example> train_set;
    std::vector<Example> val_set;
    train_set.reserve(n_train);
    val_set.reserve(n_val);
    for (const SampleRecord& s : train_records) train_set.push_back(to_example(s));
    for (std::size_t i = n_train; i < samples.size(); ++i) val_set.push_back(to_example(samples[order[i]]));

    MlpWeights weights = MlpWeights::standard(derive_seed(config.seed, "train.init"));
    AdamaxOptimizer optimizer(weights, config.adamax);

    TrainResult result;
    result.model.normalization = spec;
    result.model.metric_kind = config.metric_kind;
    result.model.training_seed = config.seed;
    result.model.weights = weights;
    double best_val = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> batch_order(train_set.size());
    std::iota(batch_order.begin(), batch_order.end(), 0);
    std::vector<Example> batch;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng(derive_seed(config.seed, "train.epoch", static_cast<std::uint64_t>(epoch)))
            .shuffle(batch_order.begin(), batch_order.end());
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < batch_order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(batch_order.size(), start + static_cast<std::size_t>(config.batch_size));
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[batch_order[i]]);
            const LossGradient lg = loss_and_gradient(weights, batch);
            loss_sum += lg.loss * static_cast<double>(batch.size());
            optimizer.step(weights, lg.gradient);
        }
        const double val_loss = mean_squared_error(weights, val_set);
        result.history.push_back({epoch, loss_sum / static_cast<double>(train_set.size()), val_loss});
        if (val_loss < best_val) {
            best_val = val_loss;
            result.best_epoch = epoch;
            result.model.weights = weights;
        }
    }
    return result;
}

namespace {

std::vector<int> standard_dims() {
    std::vector<int> dims{kInputWidth};
    for (int i = 0; i < kHiddenLayers; ++i) dims.push_back(kHiddenWidth);
    dims.push_back(1);
    return dims;
}

template <class T>
T require(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw Error(where + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(where + "/" + key + ": " + e.what());
    }
}

}  // namespace

void save_weights(const RegressorModel& model, const std::filesystem::path& path) {
    model.weights.validate();
    model.normalization.validate();
    json j;
    j["format"] = "mann-mlp-v1";
    j["layer_dims"] = model.weights.layer_dims();
    json acts = json::array();
    json ws = json::array();
    json bs = json::array();
    for (const DenseLayer& l : model.weights.layers) {
        acts.push_back(std::string(to_string(l.activation)));
        ws.push_back(l.weights);
        bs.push_back(l.biases);
    }
    j["activations"] = acts;
    j["weights"] = ws;
    j["biases"] = bs;
    j["normalization"] = {{"bin_count_cap", model.normalization.bin_count_cap},
                          {"output_max", model.normalization.output_max},
                          {"bw_levels", kCenterBandwidths},
                          {"thr_range", {kMinThreshold, kMaxThreshold}}};
    j["metric_kind"] = std::string(to_string(model.metric_kind));
    j["training_seed"] = model.training_seed;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    os << j.dump(1) << '\n';
    if (!os) throw Error("write failed for " + path.string());
}

RegressorModel load_weights(const std::filesystem::path& path, std::optional<MetricKind> expected_metric) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw Error(path.string() + ": " + e.what());
    }
    const std::string where = path.string();
    if (!j.is_object()) throw Error(where + ": top level must be an object");

    const auto dims = require<std::vector<int>>(j, "layer_dims", where);
    if (dims != standard_dims()) throw Error(where + "/layer_dims: expected [12,32,32,32,32,32,1]");
    const auto acts = require<std::vector<std::string>>(j, "activations", where);
    const auto ws = require<std::vector<std::vector<double>>>(j, "weights", where);
    const auto bs = require<std::vector<std::vector<double>>>(j, "biases", where);
    const std::size_t n_layers = dims.size() - 1;
    if (acts.size() != n_layers || ws.size() != n_layers || bs.size() != n_layers)
        throw Error(where + ": expected " + std::to_string(n_layers) + " layers in activations/weights/biases");

    RegressorModel model;
    for (std::size_t l = 0; l < n_layers; ++l) {
        DenseLayer layer;
        layer.in = dims[l];
        layer.out = dims[l + 1];
        try {
            layer.activation = activation_from_string(acts[l]);
        } catch (const Error& e) {
            throw Error(where + "/activations/" + std::to_string(l) + ": " + e.what());
        }
        if (ws[l].size() != static_cast<std::size_t>(layer.in * layer.out))
            throw Error(where + "/weights/" + std::to_string(l) + ": expected " + std::to_string(layer.in * layer.out) +
                        " values, got " + std::to_string(ws[l].size()));
        if (bs[l].size() != static_cast<std::size_t>(layer.out))
            throw Error(where + "/biases/" + std::to_string(l) + ": expected " + std::to_string(layer.out) +
                        " values, got " + std::to_string(bs[l].size()));
        layer.weights = ws[l];
        layer.biases = bs[l];
        model.weights.layers.push_back(std::move(layer));
    }
    model.weights.validate();

    if (!j.contains("normalization") || !j["normalization"].is_object())
        throw Error(where + ": missing object 'normalization'");
    model.normalization.bin_count_cap = require<double>(j["normalization"], "bin_count_cap", where + "/normalization");
    model.normalization.output_max = require<double>(j["normalization"], "output_max", where + "/normalization");
    model.normalization.validate();

    try {
        model.metric_kind = metric_kind_from_string(require<std::string>(j, "metric_kind", where));
    } catch (const Error& e) {
        throw Error(where + "/metric_kind: " + e.what());
    }
    model.training_seed = require<std::uint64_t>(j, "training_seed", where);

    if (expected_metric && *expected_metric != model.metric_kind)
        throw Error(where + ": model was trained for metric '" + std::string(to_string(model.metric_kind)) +
                    "', expected '" + std::string(to_string(*expected_metric)) + "'");
    return model;
}

}  // namespace mann
