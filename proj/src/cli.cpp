#include "fieldrec/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "fieldrec/checkpoint.hpp"
#include "fieldrec/data.hpp"
#include "fieldrec/experiment.hpp"
#include "fieldrec/metrics.hpp"
#include "fieldrec/render.hpp"

namespace fieldrec {

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t next = s.find(sep, pos);
        out.push_back(s.substr(pos, next - pos));
        if (next == std::string::npos) return out;
        pos = next + 1;
    }
}

// Dedicated flags mapping onto spec keys; only flags the user passed apply,
// after the config file, so the command line always wins.
struct SpecFlags {
    CLI::App* cmd = nullptr;
    std::vector<std::tuple<std::string, std::string, std::shared_ptr<std::string>>> rows;
    std::vector<std::pair<std::string, std::string>> forced;
    std::string config_path;
    std::vector<std::string> sets;

    explicit SpecFlags(CLI::App* app) : cmd(app) {
        cmd->add_option("--config", config_path,
                        "flat JSON config with dotted keys; see --keys for the key table");
        cmd->add_option("--set", sets, "extra key=value override, repeatable");
    }

    void add(const std::string& flag, const std::string& key, const std::string& help) {
        auto storage = std::make_shared<std::string>();
        cmd->add_option(flag, *storage, help + " [" + key + "]");
        rows.emplace_back(flag, key, storage);
    }

    void force(const std::string& key, const std::string& value) {
        forced.emplace_back(key, value);
    }

    // config file, then --set pairs, then dedicated flags
    std::pair<ExperimentSpec, std::set<std::string>> assemble() const {
        ExperimentSpec spec;
        std::set<std::string> provided;
        if (!config_path.empty()) {
            ConfigFile cf = parse_config(read_file(config_path), config_path);
            spec = cf.spec;
            provided = cf.provided;
        }
        for (const std::string& kv : sets) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("--set wants key=value, got '" + kv + "'");
            apply_spec_key(spec, kv.substr(0, eq), kv.substr(eq + 1));
            provided.insert(kv.substr(0, eq));
        }
        for (const auto& [flag, key, storage] : rows)
            if (cmd->count(flag) > 0) {
                apply_spec_key(spec, key, *storage);
                provided.insert(key);
            }
        for (const auto& [key, value] : forced) {
            apply_spec_key(spec, key, value);
            provided.insert(key);
        }
        return {spec, provided};
    }
};

ExperimentSpec finish_spec(const SpecFlags& flags) {
    auto [spec, provided] = flags.assemble();
    ExperimentSpec resolved = resolve_spec(std::move(spec), provided);
    for (const std::string& w : range_warnings(resolved))
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    return resolved;
}

void write_manifest_file(const std::string& command, const ExperimentSpec& resolved,
                         const std::vector<std::pair<std::string, std::string>>& io) {
    // train and gen-data own the canonical run.json; derived commands keep
    // their own name so they never clobber the experiment record
    const std::string name =
        command == "train" || command == "gen-data" ? "run.json" : command + ".run.json";
    write_file_atomic(join_path(resolved.outdir, name), manifest_json(command, resolved, io));
}

void print_key_table() {
    std::printf("config keys (flat JSON, dotted):\n");
    for (const std::string& line : spec_key_help()) std::printf("  %s\n", line.c_str());
}

std::vector<double> parse_times(const std::string& csv) {
    std::vector<double> out;
    for (const std::string& tok : split(csv, ',')) {
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::runtime_error("bad time value '" + tok + "'");
    }
    return out;
}

std::pair<std::size_t, std::size_t> parse_hw(const std::string& dims) {
    const auto parts = split(dims, 'x');
    if (parts.size() != 2) throw std::runtime_error("--dims wants HxW, got '" + dims + "'");
    return {std::stoull(parts[0]), std::stoull(parts[1])};
}

int run_gen_data(const SpecFlags& flags, const std::string& out_flag) {
    ExperimentSpec resolved = finish_spec(flags);
    const std::string out =
        out_flag.empty() ? join_path(resolved.outdir, "data.fgrd") : out_flag;
    const GridField cube = generate_synthetic(resolved.synth);
    write_field(cube, out);
    write_manifest_file("gen-data", resolved, {{"out", out}});
    std::printf("wrote %s (%zu x %zu x %zu, %s)\n", out.c_str(), cube.n_t, cube.n_h, cube.n_w,
                synthetic_kind_name(resolved.synth.kind).c_str());
    return 0;
}

int run_train(const SpecFlags& flags) {
    ExperimentSpec resolved = finish_spec(flags);
    TrainArtifacts art = run_training(resolved);

    Checkpoint ckpt;
    ckpt.spec = resolved.model;
    ckpt.model = std::move(art.result.model);
    ckpt.latents = art.result.latents;
    ckpt.n_h = art.truth.n_h;
    ckpt.n_w = art.truth.n_w;
    ckpt.coord_range = art.truth.coord_range;
    const std::string ckpt_path = join_path(resolved.outdir, "checkpoint.frcp");
    const std::string loss_path = join_path(resolved.outdir, "loss.csv");
    save_checkpoint(ckpt, ckpt_path);
    write_loss_history(art.result.loss_history, resolved.train, loss_path);
    write_manifest_file("train", resolved, {{"checkpoint", ckpt_path}, {"loss", loss_path}});
    std::printf("trained %s for %d epochs, final mean loss %.6g -> %s\n",
                arch_name(resolved.model.arch).c_str(), resolved.train.epochs,
                art.result.loss_history.back(), ckpt_path.c_str());
    return 0;
}

int run_reconstruct(const SpecFlags& flags, const std::string& ckpt_path,
                    const std::string& out_flag, const std::string& times_csv,
                    const std::string& obs_path, const std::string& dims) {
    ExperimentSpec resolved = finish_spec(flags);
    if (!times_csv.empty() && !obs_path.empty())
        throw std::runtime_error("--times and --obs are mutually exclusive");

    Checkpoint ckpt = load_checkpoint(ckpt_path);
    std::size_t n_h = ckpt.n_h, n_w = ckpt.n_w;
    if (!dims.empty()) std::tie(n_h, n_w) = parse_hw(dims);
    if (n_h == 0 || n_w == 0)
        throw std::runtime_error("checkpoint stores no lattice; pass --dims HxW");

    GridField cube;
    if (!obs_path.empty()) {
        cube = nowcast(*ckpt.model, read_observations(obs_path), resolved.infer, ckpt.latents,
                       n_h, n_w, ckpt.coord_range);
    } else {
        std::vector<double> times = ckpt.latents.stamps;
        if (!times_csv.empty()) times = parse_times(times_csv);
        cube = reconstruct_at(*ckpt.model, ckpt.latents, times, n_h, n_w, ckpt.coord_range);
    }
    const std::string out =
        out_flag.empty() ? join_path(resolved.outdir, "reconstruction.fgrd") : out_flag;
    write_field(cube, out);
    write_manifest_file("reconstruct", resolved,
                        {{"checkpoint", ckpt_path},
                         {"out", out},
                         {"times", times_csv},
                         {"obs", obs_path},
                         {"dims", dims}});
    std::printf("wrote %s (%zu x %zu x %zu)\n", out.c_str(), cube.n_t, cube.n_h, cube.n_w);
    return 0;
}

std::pair<std::string, std::string> pred_name_path(const std::string& arg) {
    const std::size_t eq = arg.find('=');
    if (eq != std::string::npos) return {arg.substr(0, eq), arg.substr(eq + 1)};
    return {std::filesystem::path(arg).stem().string(), arg};
}

int run_evaluate(const SpecFlags& flags, const std::string& truth_path,
                 const std::vector<std::string>& preds, bool want_promotion, int render_frame) {
    ExperimentSpec resolved = finish_spec(flags);
    if (preds.empty()) throw std::runtime_error("evaluate needs at least one --pred cube");
    if (want_promotion && preds.size() < 2)
        throw std::runtime_error("promotion compares models, give at least 2 --pred cubes (got " +
                                 std::to_string(preds.size()) + ")");

    const GridField truth = read_field(truth_path);
    if (render_frame >= 0 && std::size_t(render_frame) >= truth.n_t)
        throw std::runtime_error("--render-frame " + std::to_string(render_frame) +
                                 " is outside the cube (n_t " + std::to_string(truth.n_t) + ")");

    std::vector<std::pair<std::string, double>> errors;
    std::vector<std::pair<std::string, std::string>> io = {{"truth", truth_path}};
    for (const std::string& arg : preds) {
        const auto [name, path] = pred_name_path(arg);
        const GridField pred = read_field(path);
        const MetricReport report = compute_metrics(truth, pred);
        const std::string metrics_path = join_path(resolved.outdir, "metrics_" + name + ".csv");
        write_metric_report(report, metrics_path);
        errors.emplace_back(name, report.mse);
        io.emplace_back("pred." + name, path);
        std::printf("%-12s mse %.6g  psnr %.4g  ssim %.4g -> %s\n", name.c_str(), report.mse,
                    report.psnr, report.ssim, metrics_path.c_str());

        if (render_frame >= 0) {
            const std::size_t t = std::size_t(render_frame);
            Tensor value(Shape{truth.n_h, truth.n_w});
            Tensor abs_err(Shape{truth.n_h, truth.n_w});
            for (std::size_t i = 0; i < truth.frame_size(); ++i) {
                value.at(i) = pred.values[t * truth.frame_size() + i];
                abs_err.at(i) = std::fabs(value.at(i) - truth.values[t * truth.frame_size() + i]);
            }
            render_heatmap(value, HeatmapMode::value,
                           join_path(resolved.outdir, name + "_frame.pgm"));
            render_heatmap(abs_err, HeatmapMode::abs_error,
                           join_path(resolved.outdir, name + "_error.pgm"));
        }
    }
    if (render_frame >= 0) {
        Tensor truth_slice(Shape{truth.n_h, truth.n_w});
        for (std::size_t i = 0; i < truth.frame_size(); ++i)
            truth_slice.at(i) = truth.values[std::size_t(render_frame) * truth.frame_size() + i];
        render_heatmap(truth_slice, HeatmapMode::value,
                       join_path(resolved.outdir, "truth_frame.pgm"));
    }

    if (want_promotion) {
        const PromotionReport prom = promotion(errors);
        std::string buf = "section,key,value\n";
        char line[160];
        for (const auto& [name, mse] : errors) {
            std::snprintf(line, sizeof line, "mse,%s,%.17g\n", name.c_str(), mse);
            buf += line;
        }
        buf += "summary,best," + prom.best_name + "\n";
        buf += "summary,second," + prom.second_name + "\n";
        std::snprintf(line, sizeof line, "summary,promotion_pct,%.17g\n", prom.promotion_pct);
        buf += line;
        const std::string prom_path = join_path(resolved.outdir, "promotion.csv");
        write_file_atomic(prom_path, buf);
        io.emplace_back("promotion", prom_path);
        std::printf("promotion: best=%s second=%s promotion_pct=%.2f%%\n", prom.best_name.c_str(),
                    prom.second_name.c_str(), prom.promotion_pct);
    }
    write_manifest_file("evaluate", resolved, io);
    return 0;
}

int run_analyze(const SpecFlags& flags, const std::string& ckpt_path,
                const std::string& truth_path) {
    ExperimentSpec resolved = finish_spec(flags);
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ckpt.model->latent_dim() == 0)
        throw std::runtime_error("analysis needs a latent-conditioned checkpoint, " +
                                 arch_name(ckpt.spec.arch) + " has no codes");

    std::vector<std::pair<std::string, std::string>> io = {{"checkpoint", ckpt_path}};
    std::string stats = "metric,value,degenerate_pairs\n";
    char line[128];
    const CorrelationStat dis = latent_dissimilarity(ckpt.latents);
    std::snprintf(line, sizeof line, "latent_dissimilarity,%.17g,%zu\n", dis.value,
                  dis.degenerate);
    stats += line;
    std::printf("latent_dissimilarity %.6g (%zu degenerate pairs)\n", dis.value, dis.degenerate);

    if (!truth_path.empty()) {
        const GridField truth = read_field(truth_path);
        const CorrelationStat diag = autodecoder_diagnosis(ckpt.latents, truth);
        std::snprintf(line, sizeof line, "autodecoder_diagnosis,%.17g,%zu\n", diag.value,
                      diag.degenerate);
        stats += line;
        std::printf("autodecoder_diagnosis %.6g (%zu degenerate entries)\n", diag.value,
                    diag.degenerate);

        const std::vector<double> nmse = ablation_nmse(*ckpt.model, ckpt.latents, truth);
        std::string abl = "dim,nmse_pct\n";
        for (std::size_t j = 0; j < nmse.size(); ++j) {
            std::snprintf(line, sizeof line, "%zu,%.17g\n", j, nmse[j]);
            abl += line;
        }
        const std::string abl_path = join_path(resolved.outdir, "ablation.csv");
        write_file_atomic(abl_path, abl);
        io.emplace_back("truth", truth_path);
        io.emplace_back("ablation", abl_path);
        const double mean = std::accumulate(nmse.begin(), nmse.end(), 0.0) / double(nmse.size());
        std::printf("ablation over %zu latent variables, mean nmse %.4g%% -> %s\n", nmse.size(),
                    mean, abl_path.c_str());
    }

    const std::string stats_path = join_path(resolved.outdir, "latent_stats.csv");
    write_file_atomic(stats_path, stats);
    io.emplace_back("latent_stats", stats_path);
    write_manifest_file("analyze", resolved, io);
    return 0;
}

int run_pod(const SpecFlags& flags, const std::string& data_path, double threshold) {
    ExperimentSpec resolved = finish_spec(flags);
    const GridField cube = read_field(data_path);
    const PodResult pod = snapshot_pod(cube);
    const std::string pod_path = join_path(resolved.outdir, "pod.csv");
    write_pod_spectrum(pod, pod_path);
    write_manifest_file("pod", resolved, {{"data", data_path}, {"spectrum", pod_path}});
    std::printf("%zu modes, modes_for(%.4g) = %zu -> %s\n", pod.eigenvalues.size(), threshold,
                pod.modes_for(threshold), pod_path.c_str());
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"field reconstruction toolkit: implicit models trained on sparse observations"};
    app.require_subcommand(0, 1);
    bool show_keys = false;
    app.add_flag("--keys", show_keys, "print the config key table and exit");

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic FGRD cube");
    SpecFlags gen_flags(gen);
    gen_flags.add("--kind", "synth.kind", "traveling-blobs or spectral-grf");
    gen_flags.add("--seed", "seed", "master seed");
    gen_flags.add("--drift", "synth.drift", "time drift factor");
    gen_flags.add("--components", "synth.components", "blob or mode count");
    gen_flags.add("--outdir", "outdir", "output directory");
    std::string gen_dims, gen_out;
    gen->add_option("--dims", gen_dims, "cube extents TxHxW, e.g. 50x64x64");
    gen->add_option("--out", gen_out, "output path, default <outdir>/data.fgrd");

    auto* train = app.add_subcommand("train", "fit a model to sparse observations of a cube");
    SpecFlags train_flags(train);
    train_flags.add("--dataset", "dataset", "FGRD cube to fit; empty generates synthetic data");
    train_flags.add("--model", "model.arch", "mmgn, resmlp, siren, ffn_p or ffn_g");
    train_flags.add("--task", "sampling.task", "observation task 1-4");
    train_flags.add("--ratio", "sampling.ratio", "observed site fraction");
    train_flags.add("--noise", "noise.ratio", "noise std as a fraction of the field std");
    train_flags.add("--epochs", "train.epochs", "training epochs");
    train_flags.add("--lr", "train.lr0", "initial learning rate");
    train_flags.add("--batch", "train.batch_size", "instances per optimizer step");
    train_flags.add("--width", "model.width", "hidden width");
    train_flags.add("--depth", "model.depth", "layer count, 0 for the published default");
    train_flags.add("--latent", "model.d_z", "latent code size");
    train_flags.add("--seed", "seed", "master seed");
    train_flags.add("--outdir", "outdir", "output directory");

    auto* rec = app.add_subcommand("reconstruct", "regenerate a cube from a checkpoint");
    SpecFlags rec_flags(rec);
    rec_flags.add("--steps", "infer.steps", "latent inference steps");
    rec_flags.add("--infer-lr", "infer.lr", "latent inference learning rate");
    rec_flags.add("--infer-init", "infer.init", "zeros or nearest");
    rec_flags.add("--outdir", "outdir", "output directory");
    std::string rec_ckpt, rec_out, rec_times, rec_obs, rec_dims;
    rec->add_option("--checkpoint", rec_ckpt, "trained checkpoint")->required();
    rec->add_option("--out", rec_out, "output path, default <outdir>/reconstruction.fgrd");
    rec->add_option("--times", rec_times,
                    "comma-separated stamps; unseen times interpolate the latent table");
    rec->add_option("--obs", rec_obs, "observation CSV for nowcasting with the frozen decoder");
    rec->add_option("--dims", rec_dims, "lattice HxW, default the training lattice");

    auto* eval = app.add_subcommand("evaluate", "score prediction cubes against the truth");
    SpecFlags eval_flags(eval);
    eval_flags.add("--outdir", "outdir", "output directory");
    std::string eval_truth;
    std::vector<std::string> eval_preds;
    bool eval_promotion = false;
    int eval_render_frame = -1;
    eval->add_option("--truth", eval_truth, "ground-truth FGRD cube")->required();
    eval->add_option("--pred", eval_preds, "prediction cube, optionally name=path; repeatable");
    eval->add_flag("--promotion", eval_promotion,
                   "also rank the models and report the error reduction of the best");
    eval->add_option("--render-frame", eval_render_frame,
                     "write PGM heatmaps (value and abs error) for this frame index");

    auto* ana = app.add_subcommand("analyze", "latent-space diagnostics for a checkpoint");
    SpecFlags ana_flags(ana);
    ana_flags.add("--outdir", "outdir", "output directory");
    std::string ana_ckpt, ana_truth;
    ana->add_option("--checkpoint", ana_ckpt, "trained checkpoint")->required();
    ana->add_option("--truth", ana_truth, "truth cube; enables diagnosis and ablation");

    auto* pod = app.add_subcommand("pod", "snapshot POD spectrum of a cube");
    SpecFlags pod_flags(pod);
    pod_flags.add("--outdir", "outdir", "output directory");
    std::string pod_data;
    double pod_threshold = 0.9;
    pod->add_option("--data", pod_data, "FGRD cube")->required();
    pod->add_option("--threshold", pod_threshold, "energy fraction for the mode count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (show_keys) {
            print_key_table();
            return 0;
        }
        if (gen->parsed()) {
            if (!gen_dims.empty()) {
                const auto parts = split(gen_dims, 'x');
                if (parts.size() != 3)
                    throw std::runtime_error("--dims wants TxHxW, got '" + gen_dims + "'");
                gen_flags.force("synth.n_t", parts[0]);
                gen_flags.force("synth.n_h", parts[1]);
                gen_flags.force("synth.n_w", parts[2]);
            }
            return run_gen_data(gen_flags, gen_out);
        }
        if (train->parsed()) return run_train(train_flags);
        if (rec->parsed())
            return run_reconstruct(rec_flags, rec_ckpt, rec_out, rec_times, rec_obs, rec_dims);
        if (eval->parsed())
            return run_evaluate(eval_flags, eval_truth, eval_preds, eval_promotion,
                                eval_render_frame);
        if (ana->parsed()) return run_analyze(ana_flags, ana_ckpt, ana_truth);
        if (pod->parsed()) return run_pod(pod_flags, pod_data, pod_threshold);
        std::fprintf(stderr, "error: give a subcommand, see --help\n");
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace fieldrec
