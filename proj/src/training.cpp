#include "corrnet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "corrnet/kernels.hpp"
#include "corrnet/ops.hpp"

namespace corrnet {

LossMode loss_mode_from_string(const std::string& name) {
    if (name == "softmax_ce") return LossMode::softmax_ce;
    if (name == "sigmoid_bce") return LossMode::sigmoid_bce;
    throw ConfigError("unknown loss mode: " + name);
}

std::string to_string(LossMode mode) {
    return mode == LossMode::softmax_ce ? "softmax_ce" : "sigmoid_bce";
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
    if (segments < 1) throw ConfigError("segments must be >= 1");
    if (eps < 0.0) throw ConfigError("eps must be >= 0");
}

OptimizerState zero_state(const CorrnetParams& p) {
    OptimizerState s;
    s.w1 = Matrix(p.hidden, p.n * p.m);
    s.b1.assign(p.hidden, 0.0);
    s.w2 = Matrix(p.hidden, p.hidden);
    s.b2.assign(p.hidden, 0.0);
    s.w3 = Matrix(p.b, p.hidden);
    s.b3.assign(p.b, 0.0);
    return s;
}

std::pair<double, Vector> corrnet_loss(const Vector& z_logits,
                                       const std::vector<int>& labels,
                                       LossMode mode) {
    const std::size_t b = z_logits.size();
    if (labels.empty()) throw DataError("corrnet_loss: no labels");
    for (int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= b) {
            throw IndexError("corrnet_loss: label " + std::to_string(label) +
                             " out of range for " + std::to_string(b) + " classes");
        }
    }

    if (mode == LossMode::softmax_ce) {
        if (labels.size() != 1) {
            throw DataError("corrnet_loss: softmax_ce needs exactly one label, got " +
                            std::to_string(labels.size()));
        }
        const std::size_t target = static_cast<std::size_t>(labels[0]);
        Vector probs = softmax(z_logits);
        double loss = cross_entropy(probs, target);
        Vector dlogits = probs;
        dlogits[target] -= 1.0;
        return {loss, std::move(dlogits)};
    }

    // sigmoid_bce, averaged over classes
    Vector target(b, 0.0);
    for (int label : labels) target[static_cast<std::size_t>(label)] = 1.0;
    double loss = 0.0;
    Vector dlogits(b);
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
        const double s = 1.0 / (1.0 + std::exp(-z_logits[i]));
        double p = target[i] > 0.5 ? s : 1.0 - s;
        if (p < kProbFloor) p = kProbFloor;
        loss -= std::log(p) * inv_b;
        dlogits[i] = (s - target[i]) * inv_b;
    }
    return {loss, std::move(dlogits)};
}

std::pair<Vector, Vector> sample_training_pair(const ClipRecord& spatial,
                                               const ClipRecord& temporal, Rng& rng) {
    if (spatial.frames.empty() || temporal.frames.empty()) {
        throw DataError("sample_training_pair: clip " + spatial.clip_id +
                        " has an empty modality");
    }
    const Vector& u = spatial.frames[rng.index(spatial.frames.size())];
    const Vector& v = temporal.frames[rng.index(temporal.frames.size())];
    return {u, v};
}

void sgd_momentum_step(CorrnetParams& params, const CorrnetGradients& grads,
                       OptimizerState& state, double lr, double momentum) {
    if (!params.w1.same_shape(grads.w1) || !params.w2.same_shape(grads.w2) ||
        !params.w3.same_shape(grads.w3) || params.b1.size() != grads.b1.size() ||
        params.b2.size() != grads.b2.size() || params.b3.size() != grads.b3.size()) {
        throw DimensionError("sgd_momentum_step: gradient shapes do not match params");
    }
    auto step = [&](double* p, double* vel, const double* g, std::size_t count) {
        kernels::momentum_step(p, vel, g, momentum, lr, count);
    };
    step(params.w1.data.data(), state.w1.data.data(), grads.w1.data.data(), params.w1.size());
    step(params.b1.data(), state.b1.data(), grads.b1.data(), params.b1.size());
    step(params.w2.data.data(), state.w2.data.data(), grads.w2.data.data(), params.w2.size());
    step(params.b2.data(), state.b2.data(), grads.b2.data(), params.b2.size());
    step(params.w3.data.data(), state.w3.data.data(), grads.w3.data.data(), params.w3.size());
    step(params.b3.data(), state.b3.data(), grads.b3.data(), params.b3.size());
}

namespace {

// Segment-aware draw: one random frame per segment, scores averaged.
Vector sample_segment_scores(const ClipRecord& clip, std::size_t k, Rng& rng) {
    auto indices = segment_sample(clip.frames.size(), 24, k, &rng,
                                  SamplingMode::train_random);
    return average_frames(clip, indices);
}

}  // namespace

std::pair<CorrnetParams, TrainReport> train(const PairedDataset& dataset,
                                            CorrnetParams params,
                                            const TrainConfig& config) {
    config.validate();
    if (dataset.clip_count() == 0) throw ConfigError("train: dataset is empty");
    if (dataset.spatial.class_count != params.n ||
        dataset.temporal.class_count != params.m) {
        throw ConfigError("train: stream class counts " +
                          std::to_string(dataset.spatial.class_count) + "x" +
                          std::to_string(dataset.temporal.class_count) +
                          " do not match model input dims " + std::to_string(params.n) +
                          "x" + std::to_string(params.m));
    }
    for (const ClipRecord& clip : dataset.spatial.clips) {
        for (int label : clip.labels) {
            if (label < 0 || static_cast<std::size_t>(label) >= params.b) {
                throw ConfigError("train: clip " + clip.clip_id + " label " +
                                  std::to_string(label) + " outside model classes");
            }
        }
        if (config.loss_mode == LossMode::softmax_ce && clip.labels.size() != 1) {
            throw ConfigError("train: clip " + clip.clip_id +
                              " is multi-label; use sigmoid_bce");
        }
    }

    Rng rng(config.seed);
    OptimizerState state = zero_state(params);
    TrainReport report;
    report.epochs.reserve(config.epochs);

    std::vector<std::size_t> order(dataset.clip_count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    // Per-clip stats are written by original index and reduced in index order,
    // so the epoch shuffle cannot perturb the reported means.
    std::vector<double> clip_loss(dataset.clip_count(), 0.0);
    std::vector<char> clip_correct(dataset.clip_count(), 0);

    const auto t_start = std::chrono::steady_clock::now();
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto t_epoch = std::chrono::steady_clock::now();
        rng.shuffle(order);

        std::size_t cursor = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end = std::min(cursor + config.batch_size, order.size());
            const std::size_t batch_count = batch_end - cursor;
            CorrnetGradients batch_grads = zero_gradients(params);
            for (std::size_t pos = cursor; pos < batch_end; ++pos) {
                const std::size_t idx = order[pos];
                const ClipRecord& sclip = dataset.spatial.clips[idx];
                const ClipRecord& tclip = dataset.temporal.clips[idx];
                Vector u, v;
                if (config.segment_sampling) {
                    u = sample_segment_scores(sclip, config.segments, rng);
                    v = sample_segment_scores(tclip, config.segments, rng);
                } else {
                    std::tie(u, v) = sample_training_pair(sclip, tclip, rng);
                }
                ForwardCache cache = forward(params, u, v, config.eps, config.row_normalize);
                auto [loss, dlogits] = corrnet_loss(cache.logits, sclip.labels,
                                                    config.loss_mode);
                clip_loss[idx] = loss;
                const std::size_t predicted = argmax(cache.logits);
                clip_correct[idx] =
                    std::find(sclip.labels.begin(), sclip.labels.end(),
                              static_cast<int>(predicted)) != sclip.labels.end();
                CorrnetGradients g = backward(params, cache, dlogits);
                accumulate_gradients(batch_grads, g);
            }
            scale_gradients(batch_grads, 1.0 / static_cast<double>(batch_count));
            sgd_momentum_step(params, batch_grads, state, config.learning_rate,
                              config.momentum);
            cursor = batch_end;
        }

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < dataset.clip_count(); ++i) {
            loss_sum += clip_loss[i];
            correct += clip_correct[i];
        }
        EpochStats stats;
        stats.mean_loss = loss_sum / static_cast<double>(order.size());
        stats.train_accuracy =
            static_cast<double>(correct) / static_cast<double>(order.size());
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_epoch)
                .count();
        report.epochs.push_back(stats);
    }
    report.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(params), std::move(report)};
}

void TrainReport::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "epoch,loss,accuracy,seconds\n";
    char buf[96];
    for (std::size_t i = 0; i < epochs.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.6f", i + 1,
                      epochs[i].mean_loss, epochs[i].train_accuracy, epochs[i].seconds);
        out << buf << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

namespace {

std::map<std::string, std::string> load_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto pos = line.find('=');
        if (pos == std::string::npos) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected key=value, got '" + line + "'");
        }
        kv[line.substr(0, pos)] = line.substr(pos + 1);
    }
    return kv;
}

}  // namespace

void save_train_config(const TrainConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    char buf[64];
    out << "batch_size=" << config.batch_size << "\n";
    out << "epochs=" << config.epochs << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", config.learning_rate);
    out << "learning_rate=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", config.momentum);
    out << "momentum=" << buf << "\n";
    out << "seed=" << config.seed << "\n";
    out << "segments=" << config.segments << "\n";
    out << "loss_mode=" << to_string(config.loss_mode) << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", config.eps);
    out << "eps=" << buf << "\n";
    out << "row_normalize=" << (config.row_normalize ? "true" : "false") << "\n";
    out << "segment_sampling=" << (config.segment_sampling ? "true" : "false") << "\n";
    if (!out) throw IoError("write failed: " + path);
}

TrainConfig load_train_config(const std::string& path) {
    auto kv = load_kv_file(path);
    TrainConfig config;
    auto get = [&](const char* key) {
        auto it = kv.find(key);
        return it == kv.end() ? std::string() : it->second;
    };
    try {
        if (!get("batch_size").empty()) config.batch_size = std::stoul(get("batch_size"));
        if (!get("epochs").empty()) config.epochs = std::stoul(get("epochs"));
        if (!get("learning_rate").empty()) config.learning_rate = std::stod(get("learning_rate"));
        if (!get("momentum").empty()) config.momentum = std::stod(get("momentum"));
        if (!get("seed").empty()) config.seed = std::stoull(get("seed"));
        if (!get("segments").empty()) config.segments = std::stoul(get("segments"));
        if (!get("eps").empty()) config.eps = std::stod(get("eps"));
    } catch (const std::exception&) {
        throw ParseError(path + ": bad numeric value in train config");
    }
    if (!get("loss_mode").empty()) config.loss_mode = loss_mode_from_string(get("loss_mode"));
    if (!get("row_normalize").empty()) config.row_normalize = get("row_normalize") == "true";
    if (!get("segment_sampling").empty()) {
        config.segment_sampling = get("segment_sampling") == "true";
    }
    config.validate();
    return config;
}

}  // namespace corrnet
