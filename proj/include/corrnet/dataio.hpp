#ifndef CORRNET_DATAIO_HPP_
#define CORRNET_DATAIO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "corrnet/rng.hpp"
#include "corrnet/tensor.hpp"

namespace corrnet {

// One clip's per-frame raw class scores for a single modality.
struct ClipRecord {
    std::string clip_id;
    std::vector<int> labels;      // one entry for single-label, several for multi-label
    std::vector<Vector> frames;   // each of length class_count

    int single_label() const {
        if (labels.size() != 1) {
            throw DataError("clip " + clip_id + " is multi-label where a single label is required");
        }
        return labels[0];
    }
};

struct StreamScoreSet {
    std::string modality;
    std::size_t class_count = 0;
    std::vector<ClipRecord> clips;
};

// Two modalities over the same clips. Clip order and labels are aligned;
// per-clip frame counts may differ between modalities.
struct PairedDataset {
    StreamScoreSet spatial;
    StreamScoreSet temporal;
    std::vector<std::string> class_names;

    std::size_t clip_count() const { return spatial.clips.size(); }
};

enum class SyntheticMode { independent, correlated, correlation_only, gate_mix };

struct SyntheticSpec {
    std::size_t class_count = 10;
    std::size_t clips_per_class = 20;
    std::size_t frames_per_clip = 24;
    double noise_scale = 0.1;
    SyntheticMode mode = SyntheticMode::independent;
    std::uint64_t seed = 1;
};

// Margin of the true-class logit in independent/correlated templates.
inline constexpr double kTemplateMargin = 4.0;
// Anchor magnitude of the correlation_only sign pattern. Deliberately smaller
// than the template margin: row normalization makes the correlation signal
// scale-free, while a large anchor would let the raw stream sum drown the
// head's logits at fusion time.
inline constexpr double kCorrelationAnchor = 1.5;

StreamScoreSet load_stream(const std::string& path);
void write_dataset(const StreamScoreSet& set, const std::string& path);

// Load both modalities and align them: clips are intersected by id (with a
// stderr warning when the sets differ), labels must agree, and an empty
// intersection is an error.
PairedDataset load_dataset(const std::string& spatial_path,
                           const std::string& temporal_path);

PairedDataset generate_synthetic(const SyntheticSpec& spec);

SyntheticMode synthetic_mode_from_string(const std::string& name);
std::string to_string(SyntheticMode mode);

enum class SamplingMode { train_random, test_all };

// Pick total_frames equally spaced frame indices (floor(i*len/total)), then
// either return all of them (test_all) or one uniformly random index per one
// of the k equal segments (train_random).
std::vector<std::size_t> segment_sample(std::size_t frame_count,
                                        std::size_t total_frames, std::size_t k,
                                        Rng* rng, SamplingMode mode);

// Mean of the given frames' score vectors.
Vector average_frames(const ClipRecord& clip, const std::vector<std::size_t>& indices);

// Test-time clip representation: mean over the 24 equally spaced frames.
Vector clip_mean_scores(const ClipRecord& clip, std::size_t total_frames = 24);

// Deterministic clip-level split (second part gets round(frac * clips)).
std::pair<PairedDataset, PairedDataset> split_dataset(const PairedDataset& dataset,
                                                      double second_fraction,
                                                      std::uint64_t seed);

// Dataset with the selected clip indices, in the given order.
PairedDataset subset_dataset(const PairedDataset& dataset,
                             const std::vector<std::size_t>& indices);

}  // namespace corrnet

#endif  // CORRNET_DATAIO_HPP_
