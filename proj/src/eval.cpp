#include "corrnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace corrnet {

namespace {

struct ClipOutcome {
    std::size_t predicted = 0;
    bool correct = false;
    bool corrnet_included = false;
    double gate_entropy = 0.0;
    Vector fused;
};

bool is_single_label(const PairedDataset& dataset) {
    for (const ClipRecord& clip : dataset.spatial.clips) {
        if (clip.labels.size() != 1) return false;
    }
    return true;
}

ClipOutcome evaluate_clip(const PairedDataset& dataset, std::size_t idx,
                          const CorrnetParams* params, const FusionConfig& config) {
    const ClipRecord& sclip = dataset.spatial.clips[idx];
    const ClipRecord& tclip = dataset.temporal.clips[idx];
    Vector u = clip_mean_scores(sclip);
    Vector v = clip_mean_scores(tclip);

    ClipOutcome out;
    switch (config.strategy) {
        case FusionStrategy::sum:
        case FusionStrategy::avg:
        case FusionStrategy::max:
        case FusionStrategy::multiply:
            out.fused = fuse_baseline(u, v, config.strategy);
            break;
        case FusionStrategy::corrnet: {
            if (!params) throw ConfigError("evaluate: corrnet strategy needs params");
            ForwardCache cache = forward(*params, u, v, config.eps, config.row_normalize);
            out.fused = fuse_corrnet(cache.logits, u, v, config.stream_weight,
                                     config.corrnet_weight);
            out.corrnet_included = true;
            break;
        }
        case FusionStrategy::corrnet_shannon: {
            if (!params) throw ConfigError("evaluate: corrnet_shannon strategy needs params");
            ForwardCache cache = forward(*params, u, v, config.eps, config.row_normalize);
            FusionDecision d = shannon_gate(cache.logits, u, v, config);
            out.fused = std::move(d.fused_probs);
            out.corrnet_included = d.corrnet_included;
            out.gate_entropy = d.gate_entropy;
            break;
        }
    }
    out.predicted = argmax(out.fused);
    out.correct = std::find(sclip.labels.begin(), sclip.labels.end(),
                            static_cast<int>(out.predicted)) != sclip.labels.end();
    return out;
}

}  // namespace

EvalResult evaluate(const PairedDataset& dataset, const CorrnetParams* params,
                    const FusionConfig& config, int threads,
                    std::vector<ClipFusionRecord>* records) {
    const std::size_t count = dataset.clip_count();
    if (count == 0) throw ConfigError("evaluate: empty dataset");
    if (threads < 1) throw ConfigError("evaluate: threads must be >= 1");

    std::vector<ClipOutcome> outcomes(count);
    if (threads == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) {
            outcomes[i] = evaluate_clip(dataset, i, params, config);
        }
    } else {
        // Static partition; every clip's outcome is computed by exactly one
        // worker and the aggregation below runs in index order, so thread
        // count cannot change the result.
        const std::size_t workers = std::min<std::size_t>(threads, count);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        std::exception_ptr first_error;
        std::mutex error_mutex;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                try {
                    for (std::size_t i = w; i < count; i += workers) {
                        outcomes[i] = evaluate_clip(dataset, i, params, config);
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
        for (std::thread& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    EvalResult result;
    result.strategy = to_string(config.strategy);
    result.clip_count = count;

    const bool single = is_single_label(dataset);
    const std::size_t classes = dataset.class_names.size();
    std::vector<std::size_t> class_total(classes, 0), class_correct(classes, 0);

    std::size_t correct = 0, included = 0;
    double entropy_sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const ClipOutcome& out = outcomes[i];
        if (out.correct) ++correct;
        if (out.corrnet_included) ++included;
        entropy_sum += out.gate_entropy;
        if (single) {
            const std::size_t label =
                static_cast<std::size_t>(dataset.spatial.clips[i].labels[0]);
            ++class_total[label];
            if (out.correct) ++class_correct[label];
        }
        if (records) {
            records->push_back({dataset.spatial.clips[i].clip_id,
                                dataset.spatial.clips[i].labels, out.predicted,
                                out.correct, out.corrnet_included, out.gate_entropy,
                                outcomes[i].fused});
        }
    }
    result.top1 = static_cast<double>(correct) / static_cast<double>(count);
    if (config.strategy == FusionStrategy::corrnet_shannon) {
        result.corrnet_inclusion_rate =
            static_cast<double>(included) / static_cast<double>(count);
        result.mean_gate_entropy = entropy_sum / static_cast<double>(count);
    }
    if (single) {
        result.per_class_accuracy.assign(classes, 0.0);
        for (std::size_t c = 0; c < classes; ++c) {
            if (class_total[c] > 0) {
                result.per_class_accuracy[c] = static_cast<double>(class_correct[c]) /
                                               static_cast<double>(class_total[c]);
            }
        }
    }
    return result;
}

double mean_average_precision(const std::vector<Vector>& clip_scores,
                              const std::vector<std::vector<int>>& clip_labels,
                              std::size_t class_count) {
    if (clip_scores.size() != clip_labels.size() || clip_scores.empty()) {
        throw DimensionError("mean_average_precision: scores/labels size mismatch");
    }
    for (const Vector& s : clip_scores) {
        if (s.size() != class_count) {
            throw DimensionError("mean_average_precision: score vector length mismatch");
        }
    }

    const std::size_t clips = clip_scores.size();
    std::vector<std::size_t> order(clips);
    double ap_sum = 0.0;
    std::size_t classes_with_positives = 0;

    for (std::size_t c = 0; c < class_count; ++c) {
        std::size_t positives = 0;
        for (const auto& labels : clip_labels) {
            if (std::find(labels.begin(), labels.end(), static_cast<int>(c)) != labels.end()) {
                ++positives;
            }
        }
        if (positives == 0) continue;
        ++classes_with_positives;

        for (std::size_t i = 0; i < clips; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return clip_scores[a][c] > clip_scores[b][c];
        });

        double ap = 0.0;
        std::size_t hits = 0;
        for (std::size_t rank = 0; rank < clips; ++rank) {
            const auto& labels = clip_labels[order[rank]];
            if (std::find(labels.begin(), labels.end(), static_cast<int>(c)) != labels.end()) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
            }
        }
        ap_sum += ap / static_cast<double>(positives);
    }
    if (classes_with_positives == 0) {
        throw MetricError("mean_average_precision: no positive labels in any class");
    }
    return ap_sum / static_cast<double>(classes_with_positives);
}

Histogram entropy_histogram(const PairedDataset& dataset, const CorrnetParams& params,
                            const FusionConfig& config, std::size_t bins) {
    if (bins < 1) throw ConfigError("entropy_histogram: bins must be >= 1");
    const double range = std::log2(static_cast<double>(params.b));
    Histogram hist;
    hist.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        hist.edges[i] = (static_cast<double>(i) * range) / static_cast<double>(bins);
    }
    hist.counts.assign(bins, 0);
    for (std::size_t i = 0; i < dataset.clip_count(); ++i) {
        Vector u = clip_mean_scores(dataset.spatial.clips[i]);
        Vector v = clip_mean_scores(dataset.temporal.clips[i]);
        ForwardCache cache = forward(params, u, v, config.eps, config.row_normalize);
        const double e = gate_entropy(cache.logits, u, v, config);
        std::size_t bin = static_cast<std::size_t>(e / range * static_cast<double>(bins));
        if (bin >= bins) bin = bins - 1;  // entropy == log2 B lands in the last bin
        ++hist.counts[bin];
    }
    return hist;
}

void write_histogram_csv(const Histogram& hist, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "bin_low,bin_high,count\n";
    char buf[96];
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%zu", hist.edges[i],
                      hist.edges[i + 1], hist.counts[i]);
        out << buf << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

ComparisonTable comparison_table(const PairedDataset& dataset,
                                 const CorrnetParams* params,
                                 const std::vector<FusionConfig>& strategies,
                                 int threads) {
    if (strategies.empty()) throw ConfigError("comparison_table: no strategies");
    ComparisonTable table;
    table.rows.reserve(strategies.size());
    for (const FusionConfig& config : strategies) {
        table.rows.push_back(evaluate(dataset, params, config, threads));
    }
    return table;
}

std::string render_table_text(const ComparisonTable& table) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-18s %8s %10s %12s %8s\n", "strategy", "top1",
                  "included", "mean_entropy", "clips");
    out << buf;
    for (const EvalResult& row : table.rows) {
        const bool shannon = row.strategy == "corrnet_shannon";
        char included[16], entropy[16];
        if (shannon) {
            std::snprintf(included, sizeof(included), "%.1f%%",
                          100.0 * row.corrnet_inclusion_rate);
            std::snprintf(entropy, sizeof(entropy), "%.3f", row.mean_gate_entropy);
        } else {
            std::snprintf(included, sizeof(included), "-");
            std::snprintf(entropy, sizeof(entropy), "-");
        }
        std::snprintf(buf, sizeof(buf), "%-18s %7.1f%% %10s %12s %8zu\n",
                      row.strategy.c_str(), 100.0 * row.top1, included, entropy,
                      row.clip_count);
        out << buf;
    }
    return out.str();
}

void write_table_csv(const ComparisonTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "strategy,top1,corrnet_inclusion_rate,mean_gate_entropy,clips\n";
    char buf[160];
    for (const EvalResult& row : table.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%zu",
                      row.strategy.c_str(), row.top1, row.corrnet_inclusion_rate,
                      row.mean_gate_entropy, row.clip_count);
        out << buf << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_per_class_csv(const EvalResult& result,
                         const std::vector<std::string>& class_names,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "class,accuracy\n";
    char buf[96];
    for (std::size_t c = 0; c < result.per_class_accuracy.size(); ++c) {
        const std::string& name =
            c < class_names.size() ? class_names[c] : ("class_" + std::to_string(c));
        std::snprintf(buf, sizeof(buf), "%s,%.17g", name.c_str(),
                      result.per_class_accuracy[c]);
        out << buf << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

namespace {

std::vector<RankedEntry> ranked(const Vector& scores, std::size_t k) {
    std::vector<RankedEntry> entries(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        entries[i] = {static_cast<int>(i), scores[i]};
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const RankedEntry& a, const RankedEntry& b) {
                         return a.score > b.score;
                     });
    entries.resize(k);
    return entries;
}

}  // namespace

TopKListing topk_listing(const PairedDataset& dataset, const CorrnetParams& params,
                         const std::string& clip_id, std::size_t k,
                         const FusionConfig& config) {
    std::size_t idx = dataset.clip_count();
    for (std::size_t i = 0; i < dataset.clip_count(); ++i) {
        if (dataset.spatial.clips[i].clip_id == clip_id) {
            idx = i;
            break;
        }
    }
    if (idx == dataset.clip_count()) throw IndexError("unknown clip id: " + clip_id);
    Vector u = clip_mean_scores(dataset.spatial.clips[idx]);
    Vector v = clip_mean_scores(dataset.temporal.clips[idx]);
    if (k < 1 || k > u.size() || k > params.b) {
        throw ConfigError("topk_listing: k must be in [1, class count]");
    }
    ForwardCache cache = forward(params, u, v, config.eps, config.row_normalize);
    TopKListing listing;
    listing.clip_id = clip_id;
    listing.spatial = ranked(u, k);
    listing.temporal = ranked(v, k);
    listing.sum = ranked(fuse_baseline(u, v, FusionStrategy::sum), k);
    listing.corrnet = ranked(cache.logits, k);
    return listing;
}

}  // namespace corrnet
