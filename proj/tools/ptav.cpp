// Command-line front end: track sequences, evaluate results, generate
// synthetic data and compare configurations.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ptav/bench.hpp"
#include "ptav/config.hpp"
#include "ptav/synth.hpp"

namespace fs = std::filesystem;
using namespace ptav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSequenceError = 2;
constexpr int kExitConfigError = 3;

struct CommonFlags {
    std::string config_path;
    std::string mode;
    int n_int = -1;
    double alpha = -1.0;
    double tau0 = -1.0, tau1 = -1.0, tau2 = -1.0;
    double gamma = -1.0;
    std::string score_mode;
    std::string verifier;
    long seed = -1;

    void attach(CLI::App* cmd, bool with_config_file = true) {
        if (with_config_file)
            cmd->add_option("--config", config_path, "flat section.key = value config file");
        cmd->add_option("--mode", mode, "async|lockstep")
            ->check(CLI::IsMember({"async", "lockstep"}));
        cmd->add_option("--n-int", n_int, "verification interval");
        cmd->add_option("--alpha", alpha, "template/histogram merge weight");
        cmd->add_option("--tau0", tau0, "template admission threshold");
        cmd->add_option("--tau1", tau1, "verification failure threshold");
        cmd->add_option("--tau2", tau2, "detection reliability threshold");
        cmd->add_option("--gamma", gamma, "initial search-region factor");
        cmd->add_option("--score-mode", score_mode, "cluster-mean|literal-sum")
            ->check(CLI::IsMember({"cluster-mean", "literal-sum"}));
        cmd->add_option("--verifier", verifier, "hogcolor|none")
            ->check(CLI::IsMember({"hogcolor", "none"}));
        cmd->add_option("--seed", seed, "deterministic seed");
    }

    ConfigMap overrides() const {
        ConfigMap m;
        const auto put = [&](const char* key, double v, double unset) {
            if (v != unset) {
                char buf[48];
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                m[key] = buf;
            }
        };
        if (!mode.empty()) m["runtime.mode"] = mode;
        if (n_int >= 0) m["runtime.n_int"] = std::to_string(n_int);
        put("tracker.alpha", alpha, -1.0);
        put("verifier.tau0", tau0, -1.0);
        put("verifier.tau1", tau1, -1.0);
        put("verifier.tau2", tau2, -1.0);
        put("verifier.gamma_init", gamma, -1.0);
        if (!score_mode.empty()) m["verifier.score_mode"] = score_mode;
        if (!verifier.empty()) m["verifier.embedder"] = verifier;
        if (seed >= 0) m["seed"] = std::to_string(seed);
        return m;
    }

    PtavOptions build() const {
        ConfigMap base;
        if (!config_path.empty()) base = parse_config_file(config_path);
        return build_options(merge_configs(std::move(base), overrides()));
    }
};

int cmd_track(const std::string& seq_dir, const std::string& gt_override,
              const CommonFlags& flags, const std::string& out_dir, bool trace, bool annotate) {
    PtavOptions options;
    try {
        options = flags.build();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    Sequence seq;
    Box init;
    try {
        seq = load_sequence(seq_dir);
        std::vector<Box> gt;
        if (!gt_override.empty()) {
            gt = load_ground_truth(gt_override);
        } else if (seq.has_ground_truth()) {
            gt = seq.ground_truth();
        } else {
            std::cerr << "sequence error: no ground truth to initialize from\n";
            return kExitSequenceError;
        }
        if (gt.empty()) {
            std::cerr << "sequence error: empty ground truth\n";
            return kExitSequenceError;
        }
        init = gt.front();
    } catch (const std::exception& e) {
        std::cerr << "sequence error: " << e.what() << "\n";
        return kExitSequenceError;
    }

    try {
        const TrackRun result = run(seq, init, options);
        fs::create_directories(out_dir);
        save_results((fs::path(out_dir) / "results.txt").string(), result.boxes);
        if (trace) {
            std::ofstream tf(fs::path(out_dir) / "trace.log");
            tf << result.trace_text();
        }
        if (annotate) {
            const fs::path adir = fs::path(out_dir) / "annotated";
            fs::create_directories(adir);
            char name[32];
            for (size_t f = 0; f < result.boxes.size(); ++f) {
                std::snprintf(name, sizeof(name), "%04zu.png", f + 1);
                save_png(annotate_frame(*seq.frame(f), result.boxes[f]), (adir / name).string());
            }
        }
        std::printf("frames = %zu\nfps = %.2f\nrollbacks = %ld\n", result.boxes.size(),
                    result.fps, result.stats.rollbacks);
        if (result.aborted) {
            std::cerr << "sequence error: aborted: " << result.abort_reason << "\n";
            return kExitSequenceError;
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "sequence error: " << e.what() << "\n";
        return kExitSequenceError;
    }
}

int cmd_eval(const std::vector<std::string>& results_paths, const std::string& seq_dir,
             const std::string& gt_path, const std::string& out_dir) {
    try {
        std::vector<Box> gt;
        if (!gt_path.empty()) {
            gt = load_ground_truth(gt_path);
        } else if (!seq_dir.empty()) {
            const Sequence seq = load_sequence(seq_dir);
            gt = seq.ground_truth();
        } else {
            std::cerr << "sequence error: need --gt or --seq for ground truth\n";
            return kExitSequenceError;
        }

        struct Run {
            std::string name;
            MetricsReport metrics;
        };
        std::vector<Run> runs;
        for (const std::string& path : results_paths) {
            const std::vector<Box> boxes = load_results(path);
            runs.push_back(Run{fs::path(path).stem().string(), compute_metrics(boxes, gt)});
        }

        fs::create_directories(out_dir);
        std::ofstream report(fs::path(out_dir) / "metrics.txt");
        for (const Run& r : runs) {
            std::printf("[%s]\n%s", r.name.c_str(), metrics_to_text(r.metrics).c_str());
            report << "[" << r.name << "]\n" << metrics_to_text(r.metrics);
        }

        std::vector<std::pair<std::string, const std::vector<double>*>> precision, success;
        for (const Run& r : runs) {
            precision.push_back({r.name, &r.metrics.precision_curve});
            success.push_back({r.name, &r.metrics.success_curve});
        }
        write_curves_csv((fs::path(out_dir) / "precision.csv").string(), precision,
                         "threshold_px", 1.0);
        write_curves_csv((fs::path(out_dir) / "success.csv").string(), success, "iou_threshold",
                         0.01);
        write_curves_svg((fs::path(out_dir) / "precision.svg").string(), "precision",
                         "center error threshold (px)", precision, 50.0);
        write_curves_svg((fs::path(out_dir) / "success.svg").string(), "success",
                         "overlap threshold", success, 1.0);
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "sequence error: " << e.what() << "\n";
        return kExitSequenceError;
    }
}

int cmd_synth(const std::string& script_path, long seed, const std::string& out_dir) {
    SynthScript script;
    try {
        script = parse_synth_script_file(script_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }
    try {
        const Sequence seq = synth_generate(script, uint64_t(seed));
        save_sequence(seq, out_dir);
        std::printf("frames = %zu\nout = %s\n", seq.size(), out_dir.c_str());
        return kExitOk;
    } catch (const std::invalid_argument& e) {
        // script semantics errors (e.g. the target leaving the frame)
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "sequence error: " << e.what() << "\n";
        return kExitSequenceError;
    }
}

int cmd_compare(const std::vector<std::string>& config_paths,
                const std::vector<std::string>& seq_dirs, const CommonFlags& flags,
                const std::string& out_dir) {
    std::vector<std::pair<std::string, PtavOptions>> configs;
    try {
        for (const std::string& path : config_paths) {
            ConfigMap base = parse_config_file(path);
            configs.push_back({fs::path(path).stem().string(),
                               build_options(merge_configs(std::move(base), flags.overrides()))});
        }
        if (configs.empty()) configs.push_back({"default", flags.build()});
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    }

    try {
        std::vector<Sequence> sequences;
        for (const std::string& dir : seq_dirs) sequences.push_back(load_sequence(dir));
        std::sort(sequences.begin(), sequences.end(),
                  [](const Sequence& a, const Sequence& b) { return a.name() < b.name(); });
        std::vector<const Sequence*> seq_ptrs;
        for (const Sequence& s : sequences) seq_ptrs.push_back(&s);

        fs::create_directories(out_dir);
        std::ofstream csv(fs::path(out_dir) / "compare.csv");
        csv << "config,sequence,dpr20,osr50,mean_cle,fps\n";
        std::printf("%-20s %-16s %8s %8s %10s %8s\n", "config", "sequence", "dpr20", "osr50",
                    "mean_cle", "fps");
        char buf[256];
        for (const auto& [name, options] : configs) {
            const OpeSummary summary = run_ope(seq_ptrs, options);
            for (const OpeResult& r : summary.per_sequence) {
                std::printf("%-20s %-16s %8.4f %8.4f %10.3f %8.2f\n", name.c_str(),
                            r.sequence.c_str(), r.metrics.dpr20, r.metrics.osr50,
                            r.metrics.mean_cle, r.metrics.fps);
                std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%.6f,%.2f\n", name.c_str(),
                              r.sequence.c_str(), r.metrics.dpr20, r.metrics.osr50,
                              r.metrics.mean_cle, r.metrics.fps);
                csv << buf;
            }
            if (summary.per_sequence.size() > 1) {
                std::printf("%-20s %-16s %8.4f %8.4f %10.3f %8.2f\n", name.c_str(), "(mean)",
                            summary.aggregate.dpr20, summary.aggregate.osr50,
                            summary.aggregate.mean_cle, summary.aggregate.fps);
                std::snprintf(buf, sizeof(buf), "%s,(mean),%.6f,%.6f,%.6f,%.2f\n", name.c_str(),
                              summary.aggregate.dpr20, summary.aggregate.osr50,
                              summary.aggregate.mean_cle, summary.aggregate.fps);
                csv << buf;
            }
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "sequence error: " << e.what() << "\n";
        return kExitSequenceError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"parallel tracking-and-verifying runtime"};
    app.require_subcommand(1);

    auto* track = app.add_subcommand("track", "track a sequence");
    std::string track_seq, track_gt, track_out = ".";
    bool track_trace = false, track_annotate = false;
    CommonFlags track_flags;
    track->add_option("--seq", track_seq, "sequence directory")->required();
    track->add_option("--gt", track_gt, "ground-truth file override");
    track->add_option("--out", track_out, "output directory");
    track->add_flag("--trace", track_trace, "write trace.log");
    track->add_flag("--annotate", track_annotate, "write annotated frames");
    track_flags.attach(track);

    auto* eval = app.add_subcommand("eval", "evaluate results against ground truth");
    std::vector<std::string> eval_results;
    std::string eval_seq, eval_gt, eval_out = ".";
    eval->add_option("--results", eval_results, "results file(s)")->required();
    eval->add_option("--seq", eval_seq, "sequence directory holding ground truth");
    eval->add_option("--gt", eval_gt, "ground-truth file");
    eval->add_option("--out", eval_out, "output directory");

    auto* synth = app.add_subcommand("synth", "generate a synthetic sequence");
    std::string synth_script, synth_out;
    long synth_seed = 1;
    synth->add_option("--script", synth_script, "synthetic scene script")->required();
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--out", synth_out, "output directory")->required();

    auto* compare = app.add_subcommand("compare", "compare configurations across sequences");
    std::vector<std::string> compare_configs, compare_seqs;
    std::string compare_out = ".";
    CommonFlags compare_flags;
    compare->add_option("--config", compare_configs, "config file per table row");
    compare->add_option("--seq", compare_seqs, "sequence directories")->required();
    compare->add_option("--out", compare_out, "output directory");
    compare_flags.attach(compare, /*with_config_file=*/false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    }

    if (track->parsed())
        return cmd_track(track_seq, track_gt, track_flags, track_out, track_trace, track_annotate);
    if (eval->parsed()) return cmd_eval(eval_results, eval_seq, eval_gt, eval_out);
    if (synth->parsed()) return cmd_synth(synth_script, synth_seed, synth_out);
    if (compare->parsed())
        return cmd_compare(compare_configs, compare_seqs, compare_flags, compare_out);
    return kExitConfigError;
}
