#ifndef CORRNET_EVAL_HPP_
#define CORRNET_EVAL_HPP_

#include <string>
#include <vector>

#include "corrnet/dataio.hpp"
#include "corrnet/fusion.hpp"
#include "corrnet/model.hpp"

namespace corrnet {

struct EvalResult {
    std::string strategy;
    double top1 = 0.0;
    Vector per_class_accuracy;           // empty for multi-label datasets
    double corrnet_inclusion_rate = 0.0; // meaningful for corrnet_shannon only
    double mean_gate_entropy = 0.0;      // bits, corrnet_shannon only
    std::size_t clip_count = 0;
};

// Per-clip outcome, exported by the CLI fuse command.
struct ClipFusionRecord {
    std::string clip_id;
    std::vector<int> labels;
    std::size_t predicted = 0;
    bool correct = false;
    bool corrnet_included = false;
    double gate_entropy = 0.0;
    Vector fused;  // scores or probabilities, depending on strategy
};

// Evaluate one fusion strategy over the dataset. Test-time u and v are the
// mean raw scores over 24 equally spaced frames per modality. params may be
// null for the four baseline strategies. threads parallelizes over clips
// without changing results.
EvalResult evaluate(const PairedDataset& dataset, const CorrnetParams* params,
                    const FusionConfig& config, int threads = 1,
                    std::vector<ClipFusionRecord>* records = nullptr);

// Macro-averaged all-points average precision over classes with at least one
// positive label.
double mean_average_precision(const std::vector<Vector>& clip_scores,
                              const std::vector<std::vector<int>>& clip_labels,
                              std::size_t class_count);

struct Histogram {
    std::vector<double> edges;   // bins+1 edges over [0, log2 B]
    std::vector<std::size_t> counts;
};

// Distribution of the gate entropy over the dataset's clips.
Histogram entropy_histogram(const PairedDataset& dataset, const CorrnetParams& params,
                            const FusionConfig& config, std::size_t bins);

void write_histogram_csv(const Histogram& hist, const std::string& path);

struct ComparisonTable {
    std::vector<EvalResult> rows;
};

ComparisonTable comparison_table(const PairedDataset& dataset,
                                 const CorrnetParams* params,
                                 const std::vector<FusionConfig>& strategies,
                                 int threads = 1);

// Human-readable aligned table (percentages, one decimal).
std::string render_table_text(const ComparisonTable& table);
void write_table_csv(const ComparisonTable& table, const std::string& path);

void write_per_class_csv(const EvalResult& result,
                         const std::vector<std::string>& class_names,
                         const std::string& path);

struct RankedEntry {
    int class_id = 0;
    double score = 0.0;
};

struct TopKListing {
    std::string clip_id;
    std::vector<RankedEntry> spatial;
    std::vector<RankedEntry> temporal;
    std::vector<RankedEntry> sum;
    std::vector<RankedEntry> corrnet;
};

// Ranked (class, score) lists for the four sources of one clip.
TopKListing topk_listing(const PairedDataset& dataset, const CorrnetParams& params,
                         const std::string& clip_id, std::size_t k,
                         const FusionConfig& config);

}  // namespace corrnet

#endif  // CORRNET_EVAL_HPP_
