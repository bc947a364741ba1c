// corrnet: train and evaluate correlation-map late fusion on per-frame
// class-score streams.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "corrnet/dataio.hpp"
#include "corrnet/errors.hpp"
#include "corrnet/eval.hpp"
#include "corrnet/fusion.hpp"
#include "corrnet/kernels.hpp"
#include "corrnet/model.hpp"
#include "corrnet/training.hpp"

namespace {

using namespace corrnet;

struct DataFlags {
    std::string spatial;
    std::string temporal;

    void attach(CLI::App* cmd) {
        cmd->add_option("--spatial", spatial, "spatial stream score file")->required();
        cmd->add_option("--temporal", temporal, "temporal stream score file")->required();
    }

    PairedDataset load() const { return load_dataset(spatial, temporal); }
};

struct FusionFlags {
    std::string strategy = "corrnet_shannon";
    std::string config_path;
    FusionConfig config;
    bool has_strategy_opt = false;

    void attach(CLI::App* cmd, bool with_strategy = true) {
        has_strategy_opt = with_strategy;
        if (with_strategy) {
            cmd->add_option("--strategy", strategy,
                            "fusion strategy: sum|avg|max|multiply|corrnet|corrnet_shannon");
        }
        cmd->add_option("--config", config_path, "fusion config file (key=value lines)");
        cmd->add_option("--th", config.th, "Shannon gate threshold in bits");
        cmd->add_option("--stream-weight", config.stream_weight,
                        "weight on the two-stream sum u+v");
        cmd->add_option("--corrnet-weight", config.corrnet_weight,
                        "weight on the correlation head logits");
        cmd->add_option("--eps", config.eps, "row-normalization epsilon");
        cmd->add_flag("--no-row-norm", "skip row L2 normalization of the correlation map");
        cmd->add_flag("--gate-scaled-corrnet",
                      "compute the gate entropy from weight-scaled head logits");
    }

    FusionConfig resolve(CLI::App* cmd) {
        FusionConfig resolved = config_path.empty() ? FusionConfig() : load_fusion_config(config_path);
        // Explicit flags override the config file.
        if (cmd->count("--th")) resolved.th = config.th;
        if (cmd->count("--stream-weight")) resolved.stream_weight = config.stream_weight;
        if (cmd->count("--corrnet-weight")) resolved.corrnet_weight = config.corrnet_weight;
        if (cmd->count("--eps")) resolved.eps = config.eps;
        if (cmd->count("--no-row-norm")) resolved.row_normalize = false;
        if (cmd->count("--gate-scaled-corrnet")) resolved.gate_scaled_corrnet = true;
        if (has_strategy_opt && (cmd->count("--strategy") || config_path.empty())) {
            resolved.strategy = fusion_strategy_from_string(strategy);
        }
        return resolved;
    }
};

bool strategy_needs_params(FusionStrategy s) {
    return s == FusionStrategy::corrnet || s == FusionStrategy::corrnet_shannon;
}

int run(int argc, char** argv) {
    CLI::App app{"correlation-map late fusion for two-stream class scores"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "write a synthetic two-stream score dataset");
    SyntheticSpec spec;
    std::string gen_mode = "independent";
    std::string out_dir = ".";
    std::string prefix = "synth";
    gen->add_option("--classes", spec.class_count, "number of classes")
        ->check(CLI::PositiveNumber);
    gen->add_option("--clips-per-class", spec.clips_per_class, "clips per class")
        ->check(CLI::PositiveNumber);
    gen->add_option("--frames", spec.frames_per_clip, "frames per clip")
        ->check(CLI::PositiveNumber);
    gen->add_option("--noise", spec.noise_scale, "Gaussian noise scale");
    gen->add_option("--mode", gen_mode,
                    "independent|correlated|correlation_only|gate_mix");
    gen->add_option("--seed", spec.seed, "generator seed");
    gen->add_option("--out-dir", out_dir, "output directory");
    gen->add_option("--prefix", prefix, "output file prefix");

    // train
    auto* tr = app.add_subcommand("train", "train the correlation head on fixed streams");
    DataFlags tr_data;
    tr_data.attach(tr);
    TrainConfig tconfig;
    std::string tr_config_path;
    std::string tr_out = "corrnet.params";
    std::string tr_report = "train_report.csv";
    std::size_t tr_hidden = 4096;
    std::string tr_loss = "softmax_ce";
    bool tr_segment_sampling = false;
    bool tr_no_row_norm = false;
    tr->add_option("--config", tr_config_path, "train config file (key=value lines)");
    tr->add_option("--out", tr_out, "output params file");
    tr->add_option("--report", tr_report, "output per-epoch CSV report");
    tr->add_option("--hidden", tr_hidden, "hidden layer width")->check(CLI::PositiveNumber);
    tr->add_option("--batch", tconfig.batch_size, "mini-batch size");
    tr->add_option("--epochs", tconfig.epochs, "training epochs");
    tr->add_option("--lr", tconfig.learning_rate, "learning rate");
    tr->add_option("--momentum", tconfig.momentum, "SGD momentum");
    tr->add_option("--seed", tconfig.seed, "seed for init and sampling");
    tr->add_option("--segments", tconfig.segments, "segment count K");
    tr->add_option("--eps", tconfig.eps, "row-normalization epsilon");
    tr->add_option("--loss", tr_loss, "softmax_ce|sigmoid_bce");
    tr->add_flag("--segment-sampling", tr_segment_sampling,
                 "sample one frame per segment and average scores");
    tr->add_flag("--no-row-norm", tr_no_row_norm,
                 "skip row L2 normalization of the correlation map");

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate fusion strategies on a dataset");
    DataFlags ev_data;
    ev_data.attach(ev);
    FusionFlags ev_fusion;
    std::vector<std::string> ev_strategies;
    std::string ev_params_path;
    std::string ev_out, ev_hist_out, ev_per_class_out;
    std::size_t ev_bins = 20;
    int ev_threads = 1;
    ev->add_option("--params", ev_params_path, "trained params file");
    ev->add_option("--strategy", ev_strategies,
                   "fusion strategies to evaluate (repeatable)");
    ev_fusion.attach(ev, false);
    ev->add_option("--out", ev_out, "write the comparison table as CSV");
    ev->add_option("--entropy-hist", ev_hist_out, "write a gate-entropy histogram CSV");
    ev->add_option("--bins", ev_bins, "histogram bin count");
    ev->add_option("--per-class", ev_per_class_out,
                   "write per-class accuracy CSV of the first strategy");
    ev->add_option("--threads", ev_threads, "worker threads (results are identical)");

    // fuse
    auto* fu = app.add_subcommand("fuse", "per-clip fused predictions to CSV");
    DataFlags fu_data;
    fu_data.attach(fu);
    FusionFlags fu_fusion;
    std::string fu_params_path, fu_out;
    int fu_threads = 1;
    fu->add_option("--params", fu_params_path, "trained params file");
    fu_fusion.attach(fu);
    fu->add_option("--out", fu_out, "output CSV path")->required();
    fu->add_option("--threads", fu_threads, "worker threads (results are identical)");

    // search-th
    auto* se = app.add_subcommand("search-th", "grid-search the Shannon gate threshold");
    DataFlags se_data;
    se_data.attach(se);
    FusionFlags se_fusion;
    std::string se_params_path, se_out;
    double se_val_frac = 0.25;
    std::size_t se_grid = 21;
    std::uint64_t se_seed = 1;
    se->add_option("--params", se_params_path, "trained params file")->required();
    se_fusion.attach(se, false);
    se->add_option("--val-frac", se_val_frac, "fraction of clips held out as sub-val");
    se->add_option("--grid-steps", se_grid, "grid resolution over [0, log2 B]");
    se->add_option("--seed", se_seed, "split seed");
    se->add_option("--out", se_out, "write per-threshold accuracies as CSV");

    // inspect
    auto* in = app.add_subcommand("inspect", "top-k listings for one clip");
    DataFlags in_data;
    in_data.attach(in);
    FusionFlags in_fusion;
    std::string in_params_path, in_clip;
    std::size_t in_topk = 5;
    in->add_option("--params", in_params_path, "trained params file")->required();
    in_fusion.attach(in, false);
    in->add_option("--clip", in_clip, "clip id to inspect")->required();
    in->add_option("--topk", in_topk, "entries per ranked list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // command-line misuse is a domain error
    }

    if (gen->parsed()) {
        spec.mode = synthetic_mode_from_string(gen_mode);
        PairedDataset ds = generate_synthetic(spec);
        const std::string spath = out_dir + "/" + prefix + "_spatial.csv";
        const std::string tpath = out_dir + "/" + prefix + "_temporal.csv";
        write_dataset(ds.spatial, spath);
        write_dataset(ds.temporal, tpath);
        std::cout << "wrote " << spath << " and " << tpath << "\n"
                  << "mode " << to_string(spec.mode) << ", classes " << spec.class_count
                  << ", clips " << ds.clip_count() << ", frames/clip "
                  << spec.frames_per_clip << ", noise " << spec.noise_scale << ", seed "
                  << spec.seed << "\n";
        return 0;
    }

    if (tr->parsed()) {
        if (!tr_config_path.empty()) {
            TrainConfig from_file = load_train_config(tr_config_path);
            // Flags given on the command line still win.
            if (!tr->count("--batch")) tconfig.batch_size = from_file.batch_size;
            if (!tr->count("--epochs")) tconfig.epochs = from_file.epochs;
            if (!tr->count("--lr")) tconfig.learning_rate = from_file.learning_rate;
            if (!tr->count("--momentum")) tconfig.momentum = from_file.momentum;
            if (!tr->count("--seed")) tconfig.seed = from_file.seed;
            if (!tr->count("--segments")) tconfig.segments = from_file.segments;
            if (!tr->count("--eps")) tconfig.eps = from_file.eps;
            if (!tr->count("--loss")) tconfig.loss_mode = from_file.loss_mode;
            if (!tr->count("--segment-sampling")) tconfig.segment_sampling = from_file.segment_sampling;
            if (!tr->count("--no-row-norm")) tconfig.row_normalize = from_file.row_normalize;
        }
        if (tr->count("--loss")) tconfig.loss_mode = loss_mode_from_string(tr_loss);
        if (tr->count("--segment-sampling")) tconfig.segment_sampling = tr_segment_sampling;
        if (tr->count("--no-row-norm")) tconfig.row_normalize = !tr_no_row_norm;
        tconfig.validate();

        PairedDataset ds = tr_data.load();
        const std::size_t classes =
            std::max(ds.spatial.class_count, ds.temporal.class_count);
        CorrnetParams params = init_params(ds.spatial.class_count,
                                           ds.temporal.class_count, tr_hidden, classes,
                                           tconfig.seed);
        auto [trained, report] = train(ds, std::move(params), tconfig);
        save_params(trained, tr_out);
        report.params_path = tr_out;
        report.write_csv(tr_report);
        std::printf("trained %zu epochs on %zu clips in %.2fs\n", tconfig.epochs,
                    ds.clip_count(), report.total_seconds);
        if (!report.epochs.empty()) {
            std::printf("final loss %.6f, train accuracy %.1f%%\n",
                        report.epochs.back().mean_loss,
                        100.0 * report.epochs.back().train_accuracy);
        }
        std::printf("params -> %s\nreport -> %s\n", tr_out.c_str(), tr_report.c_str());
        return 0;
    }

    if (ev->parsed()) {
        PairedDataset ds = ev_data.load();
        FusionConfig base = ev_fusion.resolve(ev);
        if (ev_strategies.empty()) ev_strategies.push_back("corrnet_shannon");

        CorrnetParams params;
        bool have_params = false;
        std::vector<FusionConfig> configs;
        for (const std::string& name : ev_strategies) {
            FusionConfig c = base;
            c.strategy = fusion_strategy_from_string(name);
            if (strategy_needs_params(c.strategy)) {
                if (ev_params_path.empty()) {
                    throw ConfigError("strategy " + name + " requires --params");
                }
                if (!have_params) {
                    params = load_params(ev_params_path);
                    have_params = true;
                }
            }
            configs.push_back(c);
        }
        const bool multi_label = [&ds]() {
            for (const ClipRecord& clip : ds.spatial.clips) {
                if (clip.labels.size() != 1) return true;
            }
            return false;
        }();

        ComparisonTable table;
        std::vector<double> map_per_strategy;
        for (const FusionConfig& c : configs) {
            std::vector<ClipFusionRecord> records;
            table.rows.push_back(evaluate(ds, have_params ? &params : nullptr, c,
                                          ev_threads, multi_label ? &records : nullptr));
            if (multi_label) {
                std::vector<Vector> scores;
                std::vector<std::vector<int>> labels;
                for (ClipFusionRecord& r : records) {
                    scores.push_back(std::move(r.fused));
                    labels.push_back(std::move(r.labels));
                }
                map_per_strategy.push_back(
                    mean_average_precision(scores, labels, ds.class_names.size()));
            }
        }
        std::cout << render_table_text(table);
        for (std::size_t i = 0; i < map_per_strategy.size(); ++i) {
            std::printf("mAP %-18s %.1f%%\n", table.rows[i].strategy.c_str(),
                        100.0 * map_per_strategy[i]);
        }
        if (!ev_out.empty()) write_table_csv(table, ev_out);
        if (!ev_per_class_out.empty()) {
            write_per_class_csv(table.rows.front(), ds.class_names, ev_per_class_out);
        }
        if (!ev_hist_out.empty()) {
            if (!have_params) throw ConfigError("--entropy-hist requires --params");
            Histogram hist = entropy_histogram(ds, params, base, ev_bins);
            write_histogram_csv(hist, ev_hist_out);
        }
        return 0;
    }

    if (fu->parsed()) {
        PairedDataset ds = fu_data.load();
        FusionConfig config = fu_fusion.resolve(fu);
        CorrnetParams params;
        const CorrnetParams* params_ptr = nullptr;
        if (strategy_needs_params(config.strategy)) {
            if (fu_params_path.empty()) {
                throw ConfigError("strategy " + to_string(config.strategy) +
                                  " requires --params");
            }
            params = load_params(fu_params_path);
            params_ptr = &params;
        }
        std::vector<ClipFusionRecord> records;
        EvalResult result = evaluate(ds, params_ptr, config, fu_threads, &records);
        std::ofstream out(fu_out);
        if (!out) throw IoError("cannot open for writing: " + fu_out);
        out << "clip_id,label,predicted,correct,corrnet_included,gate_entropy\n";
        for (const ClipFusionRecord& r : records) {
            std::string labels;
            for (std::size_t i = 0; i < r.labels.size(); ++i) {
                if (i) labels += '|';
                labels += std::to_string(r.labels[i]);
            }
            char buf[64];
            std::snprintf(buf, sizeof(buf), ",%zu,%d,%d,%.17g", r.predicted,
                          r.correct ? 1 : 0, r.corrnet_included ? 1 : 0, r.gate_entropy);
            out << r.clip_id << ',' << labels << buf << "\n";
        }
        if (!out) throw IoError("write failed: " + fu_out);
        std::printf("%s accuracy %.1f%% over %zu clips -> %s\n",
                    to_string(config.strategy).c_str(), 100.0 * result.top1,
                    result.clip_count, fu_out.c_str());
        return 0;
    }

    if (se->parsed()) {
        PairedDataset ds = se_data.load();
        FusionConfig config = se_fusion.resolve(se);
        config.strategy = FusionStrategy::corrnet_shannon;
        CorrnetParams params = load_params(se_params_path);
        auto [sub_train, sub_val] = split_dataset(ds, se_val_frac, se_seed);
        std::vector<std::pair<double, double>> grid;
        const double best =
            search_threshold(params, sub_train, sub_val, se_grid, config, &grid);
        std::printf("best th = %.6f bits (grid of %zu over [0, %.4f])\n", best, se_grid,
                    grid.back().first);
        for (const auto& [th, acc] : grid) {
            std::printf("  th %.4f -> sub-val accuracy %.1f%%\n", th, 100.0 * acc);
        }
        if (!se_out.empty()) {
            std::ofstream out(se_out);
            if (!out) throw IoError("cannot open for writing: " + se_out);
            out << "th,accuracy\n";
            char buf[80];
            for (const auto& [th, acc] : grid) {
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g", th, acc);
                out << buf << "\n";
            }
            if (!out) throw IoError("write failed: " + se_out);
        }
        return 0;
    }

    if (in->parsed()) {
        PairedDataset ds = in_data.load();
        FusionConfig config = in_fusion.resolve(in);
        CorrnetParams params = load_params(in_params_path);
        TopKListing listing = topk_listing(ds, params, in_clip, in_topk, config);
        auto print_list = [&](const char* name, const std::vector<RankedEntry>& list) {
            std::printf("%s:\n", name);
            for (const RankedEntry& e : list) {
                const std::string& cname =
                    static_cast<std::size_t>(e.class_id) < ds.class_names.size()
                        ? ds.class_names[e.class_id]
                        : std::to_string(e.class_id);
                std::printf("  %-16s %10.4f\n", cname.c_str(), e.score);
            }
        };
        std::printf("clip %s\n", listing.clip_id.c_str());
        print_list("spatial", listing.spatial);
        print_list("temporal", listing.temporal);
        print_list("sum", listing.sum);
        print_list("corrnet", listing.corrnet);
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const corrnet::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const corrnet::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const corrnet::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
