#include "corrnet/dataio.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace corrnet {

namespace {

std::string format_score(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string::size_type start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(line.substr(start));
            break;
        }
        parts.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::vector<int> parse_labels(const std::string& field, const std::string& path,
                              std::size_t line_no) {
    std::vector<int> labels;
    for (const std::string& piece : split(field, '|')) {
        try {
            std::size_t used = 0;
            int value = std::stoi(piece, &used);
            if (used != piece.size() || value < 0) throw std::invalid_argument(piece);
            labels.push_back(value);
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": bad label field '" + field + "'");
        }
    }
    if (labels.empty()) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": empty label field");
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return labels;
}

double parse_score(const std::string& field, const std::string& path,
                   std::size_t line_no) {
    try {
        std::size_t used = 0;
        double value = std::stod(field, &used);
        if (used != field.size() || !std::isfinite(value)) {
            throw std::invalid_argument(field);
        }
        return value;
    } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(line_no) +
                         ": bad score field '" + field + "'");
    }
}

std::string label_field(const std::vector<int>& labels) {
    std::string field;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) field += '|';
        field += std::to_string(labels[i]);
    }
    return field;
}

}  // namespace

StreamScoreSet load_stream(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open score file: " + path);

    std::string header;
    if (!std::getline(in, header)) {
        throw ParseError(path + ":1: missing header line");
    }
    StreamScoreSet set;
    {
        std::istringstream hs(header);
        std::string tag, classes_kw;
        if (!(hs >> tag >> set.modality >> classes_kw >> set.class_count) ||
            tag != "#modality" || classes_kw != "classes" || set.class_count < 1) {
            throw ParseError(path + ":1: bad header '" + header +
                             "' (expected '#modality <name> classes <B>')");
        }
    }

    std::map<std::string, std::size_t> clip_index;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != 3 + set.class_count) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(3 + set.class_count) + " fields, got " +
                             std::to_string(fields.size()));
        }
        const std::string& clip_id = fields[0];
        if (clip_id.empty()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": empty clip id");
        }
        std::vector<int> labels = parse_labels(fields[1], path, line_no);
        parse_score(fields[2], path, line_no);  // frame index: parse-checked only
        Vector scores(set.class_count);
        for (std::size_t i = 0; i < set.class_count; ++i) {
            scores[i] = parse_score(fields[3 + i], path, line_no);
        }

        auto it = clip_index.find(clip_id);
        if (it == clip_index.end()) {
            clip_index.emplace(clip_id, set.clips.size());
            set.clips.push_back({clip_id, labels, {std::move(scores)}});
        } else {
            ClipRecord& clip = set.clips[it->second];
            if (clip.labels != labels) {
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": label differs from earlier rows of clip " + clip_id);
            }
            clip.frames.push_back(std::move(scores));
        }
    }
    return set;
}

void write_dataset(const StreamScoreSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "#modality " << set.modality << " classes " << set.class_count << "\n";
    for (const ClipRecord& clip : set.clips) {
        const std::string labels = label_field(clip.labels);
        for (std::size_t f = 0; f < clip.frames.size(); ++f) {
            if (clip.frames[f].size() != set.class_count) {
                throw DataError("clip " + clip.clip_id + " frame " + std::to_string(f) +
                                " has length " + std::to_string(clip.frames[f].size()) +
                                ", expected " + std::to_string(set.class_count));
            }
            out << clip.clip_id << ',' << labels << ',' << f;
            for (double s : clip.frames[f]) out << ',' << format_score(s);
            out << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

PairedDataset load_dataset(const std::string& spatial_path,
                           const std::string& temporal_path) {
    PairedDataset ds;
    ds.spatial = load_stream(spatial_path);
    ds.temporal = load_stream(temporal_path);

    std::map<std::string, std::size_t> temporal_index;
    for (std::size_t i = 0; i < ds.temporal.clips.size(); ++i) {
        temporal_index.emplace(ds.temporal.clips[i].clip_id, i);
    }

    std::vector<ClipRecord> spatial_clips, temporal_clips;
    std::size_t dropped = 0;
    for (ClipRecord& clip : ds.spatial.clips) {
        auto it = temporal_index.find(clip.clip_id);
        if (it == temporal_index.end()) {
            ++dropped;
            continue;
        }
        const ClipRecord& tclip = ds.temporal.clips[it->second];
        if (tclip.labels != clip.labels) {
            throw DataError("clip " + clip.clip_id +
                            " has different labels in the two modality files");
        }
        spatial_clips.push_back(std::move(clip));
        temporal_clips.push_back(tclip);
    }
    dropped += ds.temporal.clips.size() - temporal_clips.size();
    if (spatial_clips.empty()) {
        throw DataError("no clip ids shared between " + spatial_path + " and " +
                        temporal_path);
    }
    if (dropped > 0) {
        std::cerr << "warning: " << dropped
                  << " clip(s) present in only one modality were dropped\n";
    }
    ds.spatial.clips = std::move(spatial_clips);
    ds.temporal.clips = std::move(temporal_clips);

    const std::size_t label_space =
        std::max(ds.spatial.class_count, ds.temporal.class_count);
    for (const ClipRecord& clip : ds.spatial.clips) {
        if (clip.frames.empty()) throw DataError("clip " + clip.clip_id + " has no frames");
        for (int label : clip.labels) {
            if (static_cast<std::size_t>(label) >= label_space) {
                throw DataError("clip " + clip.clip_id + " label " +
                                std::to_string(label) + " out of range for " +
                                std::to_string(label_space) + " classes");
            }
        }
    }
    for (const ClipRecord& clip : ds.temporal.clips) {
        if (clip.frames.empty()) throw DataError("clip " + clip.clip_id + " has no frames");
    }

    ds.class_names.reserve(label_space);
    for (std::size_t i = 0; i < label_space; ++i) {
        ds.class_names.push_back("class_" + std::to_string(i));
    }
    return ds;
}

SyntheticMode synthetic_mode_from_string(const std::string& name) {
    if (name == "independent") return SyntheticMode::independent;
    if (name == "correlated") return SyntheticMode::correlated;
    if (name == "correlation_only") return SyntheticMode::correlation_only;
    if (name == "gate_mix") return SyntheticMode::gate_mix;
    throw ConfigError("unknown synthetic mode: " + name);
}

std::string to_string(SyntheticMode mode) {
    switch (mode) {
        case SyntheticMode::independent: return "independent";
        case SyntheticMode::correlated: return "correlated";
        case SyntheticMode::correlation_only: return "correlation_only";
        case SyntheticMode::gate_mix: return "gate_mix";
    }
    return "?";
}

namespace {

void add_noise(Vector& scores, double scale, Rng& rng) {
    for (double& s : scores) s += scale * rng.normal();
}

// Template patterns for the gate_mix mode. Group "lo" clips carry strong,
// low-entropy scores whose stream sum votes for the distractor class while
// the correlation map still favors the label; group "hi" clips are weak and
// diffuse, the stream sum barely right and the correlation map misleading.
struct GateMixPattern {
    double fill_u, fill_v;
    double u_label, u_distract;
    double v_label, v_distract;
};

constexpr GateMixPattern kGateLow = {0.0, 0.0, 6.0, 10.0, 6.0, 2.4};
constexpr GateMixPattern kGateHigh = {0.3, 0.3, 0.6, 0.15, 0.5, 0.9};

}  // namespace

PairedDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.class_count < 1 || spec.clips_per_class < 1 || spec.frames_per_clip < 1) {
        throw ConfigError("generate_synthetic: counts must be >= 1");
    }
    if (spec.noise_scale < 0.0) {
        throw ConfigError("generate_synthetic: noise_scale must be >= 0");
    }
    if (spec.mode == SyntheticMode::correlation_only && spec.class_count % 2 != 0) {
        throw ConfigError("correlation_only mode needs an even class count");
    }
    if (spec.mode == SyntheticMode::gate_mix && spec.class_count < 4) {
        throw ConfigError("gate_mix mode needs at least 4 classes");
    }

    const std::size_t b = spec.class_count;
    PairedDataset ds;
    ds.spatial.modality = "spatial";
    ds.temporal.modality = "temporal";
    ds.spatial.class_count = b;
    ds.temporal.class_count = b;
    ds.class_names.reserve(b);
    for (std::size_t i = 0; i < b; ++i) ds.class_names.push_back("class_" + std::to_string(i));

    Rng rng(spec.seed);
    std::size_t serial = 0;
    for (std::size_t y = 0; y < b; ++y) {
        for (std::size_t c = 0; c < spec.clips_per_class; ++c, ++serial) {
            Vector u_base(b, 0.0), v_base(b, 0.0);
            std::string prefix = "clip";
            switch (spec.mode) {
                case SyntheticMode::independent: {
                    u_base[y] = kTemplateMargin;
                    v_base[y] = kTemplateMargin;
                    break;
                }
                case SyntheticMode::correlated: {
                    // Both streams lean toward the same per-clip confusion class.
                    std::size_t confusion = (y + 1 + rng.index(b - 1)) % b;
                    u_base[y] = kTemplateMargin;
                    v_base[y] = kTemplateMargin;
                    u_base[confusion] += kTemplateMargin / 2.0;
                    v_base[confusion] += kTemplateMargin / 2.0;
                    break;
                }
                case SyntheticMode::correlation_only: {
                    // Pair (2k, 2k+1): u is anchored at dim 2k with a random
                    // per-clip sign, v at dim 2k+1 with the same sign for class
                    // 2k and the opposite sign for class 2k+1. Each modality's
                    // marginal is therefore identical across the pair; only the
                    // sign of the outer-product cell (2k, 2k+1) tells them apart.
                    const std::size_t k = y / 2;
                    const double sigma = rng.coin() ? 1.0 : -1.0;
                    const double tau = (y % 2 == 0) ? sigma : -sigma;
                    u_base[2 * k] = sigma * kCorrelationAnchor;
                    v_base[2 * k + 1] = tau * kCorrelationAnchor;
                    break;
                }
                case SyntheticMode::gate_mix: {
                    const bool low_entropy = rng.coin();
                    const GateMixPattern& pat = low_entropy ? kGateLow : kGateHigh;
                    std::size_t distract = (y + 1 + rng.index(b - 1)) % b;
                    u_base.assign(b, pat.fill_u);
                    v_base.assign(b, pat.fill_v);
                    u_base[y] = pat.u_label;
                    u_base[distract] = pat.u_distract;
                    v_base[y] = pat.v_label;
                    v_base[distract] = pat.v_distract;
                    prefix = low_entropy ? "lo" : "hi";
                    break;
                }
            }

            char id[32];
            std::snprintf(id, sizeof(id), "%s_%05zu", prefix.c_str(), serial);
            ClipRecord sclip{id, {static_cast<int>(y)}, {}};
            ClipRecord tclip{id, {static_cast<int>(y)}, {}};
            sclip.frames.reserve(spec.frames_per_clip);
            tclip.frames.reserve(spec.frames_per_clip);
            for (std::size_t f = 0; f < spec.frames_per_clip; ++f) {
                Vector uf = u_base;
                add_noise(uf, spec.noise_scale, rng);
                sclip.frames.push_back(std::move(uf));
                Vector vf = v_base;
                add_noise(vf, spec.noise_scale, rng);
                tclip.frames.push_back(std::move(vf));
            }
            ds.spatial.clips.push_back(std::move(sclip));
            ds.temporal.clips.push_back(std::move(tclip));
        }
    }
    return ds;
}

std::vector<std::size_t> segment_sample(std::size_t frame_count,
                                        std::size_t total_frames, std::size_t k,
                                        Rng* rng, SamplingMode mode) {
    if (frame_count < 1) throw DataError("segment_sample: clip has no frames");
    if (total_frames < 1) throw ConfigError("segment_sample: total_frames must be >= 1");
    if (k < 1 || total_frames % k != 0) {
        throw ConfigError("segment_sample: segment count " + std::to_string(k) +
                          " must divide " + std::to_string(total_frames));
    }
    std::vector<std::size_t> sampled(total_frames);
    for (std::size_t i = 0; i < total_frames; ++i) {
        sampled[i] = i * frame_count / total_frames;  // floor rule
    }
    if (mode == SamplingMode::test_all) return sampled;

    if (!rng) throw ConfigError("segment_sample: train_random needs an rng");
    const std::size_t seg_len = total_frames / k;
    std::vector<std::size_t> picks(k);
    for (std::size_t s = 0; s < k; ++s) {
        picks[s] = sampled[s * seg_len + rng->index(seg_len)];
    }
    return picks;
}

Vector average_frames(const ClipRecord& clip, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw DataError("average_frames: no indices");
    Vector mean(clip.frames[0].size(), 0.0);
    for (std::size_t idx : indices) {
        const Vector& frame = clip.frames[idx];
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += frame[i];
    }
    const double inv = 1.0 / static_cast<double>(indices.size());
    for (double& s : mean) s *= inv;
    return mean;
}

Vector clip_mean_scores(const ClipRecord& clip, std::size_t total_frames) {
    return average_frames(
        clip, segment_sample(clip.frames.size(), total_frames, 1, nullptr,
                             SamplingMode::test_all));
}

std::pair<PairedDataset, PairedDataset> split_dataset(const PairedDataset& dataset,
                                                      double second_fraction,
                                                      std::uint64_t seed) {
    if (second_fraction < 0.0 || second_fraction > 1.0) {
        throw ConfigError("split_dataset: fraction must be in [0, 1]");
    }
    std::vector<std::size_t> order(dataset.clip_count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    const std::size_t second =
        static_cast<std::size_t>(std::lround(second_fraction * order.size()));
    std::vector<std::size_t> first_idx(order.begin(), order.end() - second);
    std::vector<std::size_t> second_idx(order.end() - second, order.end());
    std::sort(first_idx.begin(), first_idx.end());
    std::sort(second_idx.begin(), second_idx.end());
    return {subset_dataset(dataset, first_idx), subset_dataset(dataset, second_idx)};
}

PairedDataset subset_dataset(const PairedDataset& dataset,
                             const std::vector<std::size_t>& indices) {
    PairedDataset out;
    out.spatial.modality = dataset.spatial.modality;
    out.temporal.modality = dataset.temporal.modality;
    out.spatial.class_count = dataset.spatial.class_count;
    out.temporal.class_count = dataset.temporal.class_count;
    out.class_names = dataset.class_names;
    for (std::size_t idx : indices) {
        if (idx >= dataset.clip_count()) throw IndexError("subset_dataset: index out of range");
        out.spatial.clips.push_back(dataset.spatial.clips[idx]);
        out.temporal.clips.push_back(dataset.temporal.clips[idx]);
    }
    return out;
}

}  // namespace corrnet
