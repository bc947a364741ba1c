#include "corrnet/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "corrnet/kernels.hpp"

namespace corrnet {

FusionStrategy fusion_strategy_from_string(const std::string& name) {
    if (name == "sum") return FusionStrategy::sum;
    if (name == "avg") return FusionStrategy::avg;
    if (name == "max") return FusionStrategy::max;
    if (name == "multiply") return FusionStrategy::multiply;
    if (name == "corrnet") return FusionStrategy::corrnet;
    if (name == "corrnet_shannon") return FusionStrategy::corrnet_shannon;
    throw ConfigError("unknown fusion strategy: " + name);
}

std::string to_string(FusionStrategy strategy) {
    switch (strategy) {
        case FusionStrategy::sum: return "sum";
        case FusionStrategy::avg: return "avg";
        case FusionStrategy::max: return "max";
        case FusionStrategy::multiply: return "multiply";
        case FusionStrategy::corrnet: return "corrnet";
        case FusionStrategy::corrnet_shannon: return "corrnet_shannon";
    }
    return "?";
}

Vector fuse_baseline(const Vector& u, const Vector& v, FusionStrategy strategy) {
    if (u.size() != v.size() || u.empty()) {
        throw DimensionError("fuse_baseline: score vectors must match and be non-empty");
    }
    Vector out(u.size());
    switch (strategy) {
        case FusionStrategy::sum:
            kernels::add(u.data(), v.data(), out.data(), u.size());
            break;
        case FusionStrategy::avg:
            kernels::add(u.data(), v.data(), out.data(), u.size());
            kernels::scale(0.5, out.data(), out.data(), out.size());
            break;
        case FusionStrategy::max:
            kernels::elementwise_max(u.data(), v.data(), out.data(), u.size());
            break;
        case FusionStrategy::multiply:
            kernels::hadamard(u.data(), v.data(), out.data(), u.size());
            break;
        default:
            throw ConfigError("fuse_baseline: strategy " + to_string(strategy) +
                              " is not a baseline");
    }
    return out;
}

Vector fuse_corrnet(const Vector& z_logits, const Vector& u, const Vector& v,
                    double stream_weight, double corrnet_weight) {
    if (z_logits.size() != u.size() || u.size() != v.size() || u.empty()) {
        throw DimensionError("fuse_corrnet: vector sizes must match");
    }
    Vector combined(u.size());
    for (std::size_t i = 0; i < combined.size(); ++i) {
        combined[i] = corrnet_weight * z_logits[i] + stream_weight * (u[i] + v[i]);
    }
    return softmax(combined);
}

double gate_entropy(const Vector& z_logits, const Vector& u, const Vector& v,
                    const FusionConfig& config) {
    if (z_logits.size() != u.size() || u.size() != v.size() || u.empty()) {
        throw DimensionError("gate_entropy: vector sizes must match");
    }
    const double zw = config.gate_scaled_corrnet ? config.corrnet_weight : 1.0;
    Vector stream_sum(u.size());
    kernels::add(u.data(), v.data(), stream_sum.data(), u.size());
    Vector z_scaled(z_logits.size());
    kernels::scale(zw, z_logits.data(), z_scaled.data(), z_logits.size());
    double z_min = z_scaled[0];
    for (double z : z_scaled) z_min = std::min(z_min, z);
    double stream_min = stream_sum[0];
    for (double s : stream_sum) stream_min = std::min(stream_min, s);
    Vector combined(u.size());
    for (std::size_t i = 0; i < combined.size(); ++i) {
        combined[i] = z_scaled[i] + stream_sum[i] - z_min - stream_min;
    }
    return shannon_entropy(softmax(combined));
}

FusionDecision shannon_gate(const Vector& z_logits, const Vector& u, const Vector& v,
                            const FusionConfig& config) {
    FusionDecision decision;
    decision.gate_entropy = gate_entropy(z_logits, u, v, config);
    if (decision.gate_entropy >= config.th) {
        Vector weighted(u.size());
        for (std::size_t i = 0; i < weighted.size(); ++i) {
            weighted[i] = config.stream_weight * (u[i] + v[i]);
        }
        decision.fused_probs = softmax(weighted);
        decision.corrnet_included = false;
    } else {
        decision.fused_probs = fuse_corrnet(z_logits, u, v, config.stream_weight,
                                            config.corrnet_weight);
        decision.corrnet_included = true;
    }
    return decision;
}

double gated_accuracy(const CorrnetParams& params, const PairedDataset& dataset,
                      const FusionConfig& config) {
    if (dataset.clip_count() == 0) throw ConfigError("gated_accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < dataset.clip_count(); ++i) {
        const ClipRecord& sclip = dataset.spatial.clips[i];
        const ClipRecord& tclip = dataset.temporal.clips[i];
        Vector u = clip_mean_scores(sclip);
        Vector v = clip_mean_scores(tclip);
        ForwardCache cache = forward(params, u, v, config.eps, config.row_normalize);
        FusionDecision d = shannon_gate(cache.logits, u, v, config);
        std::size_t predicted = argmax(d.fused_probs);
        const std::vector<int>& labels = sclip.labels;
        if (std::find(labels.begin(), labels.end(), static_cast<int>(predicted)) !=
            labels.end()) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.clip_count());
}

double search_threshold(const CorrnetParams& params, const PairedDataset& sub_train,
                        const PairedDataset& sub_val, std::size_t grid_steps,
                        const FusionConfig& config,
                        std::vector<std::pair<double, double>>* grid_out) {
    if (sub_train.clip_count() == 0 || sub_val.clip_count() == 0) {
        throw ConfigError("search_threshold: sub-train and sub-val must be non-empty");
    }
    if (grid_steps < 2) throw ConfigError("search_threshold: grid_steps must be >= 2");
    const double range = std::log2(static_cast<double>(params.b));
    if (grid_out) grid_out->clear();

    double best_th = 0.0;
    double best_acc = -1.0;
    for (std::size_t k = 0; k < grid_steps; ++k) {
        const double th =
            (static_cast<double>(k) * range) / static_cast<double>(grid_steps - 1);
        FusionConfig trial = config;
        trial.th = th;
        const double acc = gated_accuracy(params, sub_val, trial);
        if (grid_out) grid_out->emplace_back(th, acc);
        if (acc > best_acc) {  // strict: ties keep the smaller threshold
            best_acc = acc;
            best_th = th;
        }
    }
    return best_th;
}

namespace {

std::map<std::string, std::string> load_kv(const std::string& path) {
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

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key,
                 double fallback, const std::string& path) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ParseError(path + ": bad numeric value for " + key);
    }
}

bool kv_bool(const std::map<std::string, std::string>& kv, const std::string& key,
             bool fallback, const std::string& path) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ParseError(path + ": bad boolean value for " + key);
}

}  // namespace

void save_fusion_config(const FusionConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    char buf[64];
    out << "strategy=" << to_string(config.strategy) << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", config.stream_weight);
    out << "stream_weight=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", config.corrnet_weight);
    out << "corrnet_weight=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", config.th);
    out << "th=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", config.eps);
    out << "eps=" << buf << "\n";
    out << "row_normalize=" << (config.row_normalize ? "true" : "false") << "\n";
    out << "gate_scaled_corrnet=" << (config.gate_scaled_corrnet ? "true" : "false")
        << "\n";
    if (!out) throw IoError("write failed: " + path);
}

FusionConfig load_fusion_config(const std::string& path) {
    auto kv = load_kv(path);
    FusionConfig config;
    if (auto it = kv.find("strategy"); it != kv.end()) {
        config.strategy = fusion_strategy_from_string(it->second);
    }
    config.stream_weight = kv_double(kv, "stream_weight", config.stream_weight, path);
    config.corrnet_weight = kv_double(kv, "corrnet_weight", config.corrnet_weight, path);
    config.th = kv_double(kv, "th", config.th, path);
    config.eps = kv_double(kv, "eps", config.eps, path);
    config.row_normalize = kv_bool(kv, "row_normalize", config.row_normalize, path);
    config.gate_scaled_corrnet =
        kv_bool(kv, "gate_scaled_corrnet", config.gate_scaled_corrnet, path);
    return config;
}

}  // namespace corrnet
