#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "fieldrec/cli.hpp"
#include "fieldrec/data.hpp"

using namespace fieldrec;

namespace {

std::filesystem::path case_dir(const std::string& slug) {
    auto dir = std::filesystem::temp_directory_path() / "fieldrec_cli_tests" / slug;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

struct CliRun {
    int status = 0;
    std::string err;
};

// In-process invocation with stdout muted and stderr captured, so assertions
// can look at diagnostics without polluting the test log.
CliRun run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "fieldrec");
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());

    const std::string err_path =
        (std::filesystem::temp_directory_path() / "fieldrec_cli_tests" / "stderr.txt").string();
    std::filesystem::create_directories(std::filesystem::path(err_path).parent_path());
    std::fflush(stdout);
    std::fflush(stderr);
    const int out_save = dup(1);
    const int err_save = dup(2);
    const int devnull = open("/dev/null", O_WRONLY);
    const int err_fd = open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    dup2(devnull, 1);
    dup2(err_fd, 2);

    CliRun run;
    run.status = cli_main(int(argv.size()), argv.data());

    std::fflush(stdout);
    std::fflush(stderr);
    dup2(out_save, 1);
    dup2(err_save, 2);
    close(devnull);
    close(err_fd);
    close(out_save);
    close(err_save);
    run.err = read_file(err_path);
    return run;
}

std::string slurp(const std::filesystem::path& p) { return read_file(p.string()); }

// Small enough to train in well under a second.
std::vector<std::string> tiny_train_args(const std::string& dataset, const std::string& outdir) {
    return {"train",           "--dataset", dataset,
            "--model",         "mmgn",      "--task",
            "1",               "--ratio",   "0.3",
            "--epochs",        "20",        "--seed",
            "7",               "--latent",  "4",
            "--width",         "16",        "--depth",
            "3",               "--set",     "model.input_scale=8",
            "--set",           "model.gamma_alpha=1",
            "--outdir",        outdir};
}

}  // namespace

TEST_CASE("gen-data is deterministic in the seed") {
    const auto dir = case_dir("gen_det");
    const std::vector<std::string> base = {"gen-data", "--kind", "traveling-blobs",
                                           "--dims",   "6x12x12", "--seed"};
    auto args_a = base;
    args_a.insert(args_a.end(), {"42", "--outdir", (dir / "a").string()});
    auto args_b = base;
    args_b.insert(args_b.end(), {"42", "--outdir", (dir / "b").string()});
    auto args_c = base;
    args_c.insert(args_c.end(), {"43", "--outdir", (dir / "c").string()});
    std::filesystem::create_directories(dir / "a");
    std::filesystem::create_directories(dir / "b");
    std::filesystem::create_directories(dir / "c");

    CHECK(run_cli(args_a).status == 0);
    CHECK(run_cli(args_b).status == 0);
    CHECK(run_cli(args_c).status == 0);

    CHECK(slurp(dir / "a/data.fgrd") == slurp(dir / "b/data.fgrd"));
    CHECK(slurp(dir / "a/data.fgrd") != slurp(dir / "c/data.fgrd"));

    // manifests agree once the output directory is scrubbed out
    auto scrub = [](std::string s, const std::string& d) {
        for (std::size_t pos = s.find(d); pos != std::string::npos; pos = s.find(d))
            s.erase(pos, d.size());
        return s;
    };
    CHECK(scrub(slurp(dir / "a/run.json"), (dir / "a").string()) ==
          scrub(slurp(dir / "b/run.json"), (dir / "b").string()));

    const GridField cube = read_field((dir / "a/data.fgrd").string());
    CHECK(cube.n_t == 6);
    CHECK(cube.n_h == 12);
    CHECK(cube.n_w == 12);
}

TEST_CASE("train, reconstruct, evaluate round-trip") {
    const auto dir = case_dir("round_trip");
    REQUIRE(run_cli({"gen-data", "--dims", "6x12x12", "--seed", "11", "--outdir", dir.string()})
                .status == 0);
    REQUIRE(run_cli(tiny_train_args((dir / "data.fgrd").string(), dir.string())).status == 0);
    CHECK(std::filesystem::exists(dir / "checkpoint.frcp"));
    CHECK(std::filesystem::exists(dir / "loss.csv"));
    CHECK(slurp(dir / "run.json").find("\"command\": \"train\"") != std::string::npos);

    REQUIRE(run_cli({"reconstruct", "--checkpoint", (dir / "checkpoint.frcp").string(), "--out",
                     (dir / "recon.fgrd").string(), "--outdir", dir.string()})
                .status == 0);
    const GridField recon = read_field((dir / "recon.fgrd").string());
    CHECK(recon.n_t == 6);
    CHECK(recon.n_h == 12);
    CHECK(recon.n_w == 12);

    REQUIRE(run_cli({"evaluate", "--truth", (dir / "data.fgrd").string(), "--pred",
                     "mmgn=" + (dir / "recon.fgrd").string(), "--pred",
                     "again=" + (dir / "recon.fgrd").string(), "--promotion", "--render-frame",
                     "2", "--outdir", dir.string()})
                .status == 0);
    const std::string metrics = slurp(dir / "metrics_mmgn.csv");
    CHECK(metrics.rfind("frame,mse,psnr,ssim\n", 0) == 0);
    CHECK(metrics.find("\nall,") != std::string::npos);

    // identical predictions tie, so the headline reduction is exactly zero
    const std::string prom = slurp(dir / "promotion.csv");
    CHECK(prom.rfind("section,key,value\n", 0) == 0);
    CHECK(prom.find("summary,promotion_pct,0\n") != std::string::npos);

    for (const char* name : {"truth_frame.pgm", "mmgn_frame.pgm", "mmgn_error.pgm"})
        CHECK(slurp(dir / name).rfind("P5\n12 12\n255\n", 0) == 0);
}

TEST_CASE("evaluate guards its inputs") {
    const auto dir = case_dir("eval_guards");
    REQUIRE(run_cli({"gen-data", "--dims", "4x8x8", "--seed", "3", "--outdir", dir.string()})
                .status == 0);
    const std::string truth = (dir / "data.fgrd").string();

    CliRun one = run_cli({"evaluate", "--truth", truth, "--pred", truth, "--promotion",
                          "--outdir", dir.string()});
    CHECK(one.status != 0);
    CHECK(one.err.find("at least 2") != std::string::npos);

    CliRun frame = run_cli({"evaluate", "--truth", truth, "--pred", truth, "--render-frame",
                            "99", "--outdir", dir.string()});
    CHECK(frame.status != 0);
    CHECK(frame.err.find("outside the cube") != std::string::npos);

    CHECK(run_cli({"evaluate", "--pred", truth, "--outdir", dir.string()}).status != 0);
}

TEST_CASE("bad invocations exit nonzero with a diagnostic") {
    CHECK(run_cli({"definitely-not-a-command"}).status != 0);
    CHECK(run_cli({"train", "--bogus-flag", "1"}).status != 0);
    CHECK(run_cli({}).status != 0);
    CHECK(run_cli({"reconstruct"}).status != 0);  // missing --checkpoint

    CliRun missing = run_cli({"pod", "--data", "/nonexistent/cube.fgrd"});
    CHECK(missing.status != 0);
    CHECK(missing.err.rfind("error:", 0) == 0);

    CHECK(run_cli({"--help"}).status == 0);
    CHECK(run_cli({"--keys"}).status == 0);
    CHECK(run_cli({"train", "--help"}).status == 0);
}

TEST_CASE("flags beat --set pairs which beat the config file") {
    const auto dir = case_dir("precedence");
    write_file_atomic((dir / "cfg.json").string(),
                      "{\"seed\": 3, \"synth.n_t\": 4, \"synth.n_h\": 8, \"synth.n_w\": 8}\n");

    REQUIRE(run_cli({"gen-data", "--config", (dir / "cfg.json").string(), "--set", "seed=5",
                     "--seed", "9", "--outdir", dir.string()})
                .status == 0);
    const std::string manifest = slurp(dir / "run.json");
    CHECK(manifest.find("\"seed\": 9") != std::string::npos);
    CHECK(manifest.find("\"synth.n_t\": 4") != std::string::npos);

    REQUIRE(run_cli({"gen-data", "--config", (dir / "cfg.json").string(), "--set", "seed=5",
                     "--outdir", dir.string()})
                .status == 0);
    CHECK(slurp(dir / "run.json").find("\"seed\": 5") != std::string::npos);

    CliRun bad_set = run_cli({"gen-data", "--set", "seed", "--outdir", dir.string()});
    CHECK(bad_set.status != 0);
    CHECK(bad_set.err.find("key=value") != std::string::npos);
}

TEST_CASE("a training manifest reruns bit for bit") {
    const auto dir = case_dir("rerun");
    REQUIRE(run_cli({"gen-data", "--dims", "6x12x12", "--seed", "21", "--outdir", dir.string()})
                .status == 0);
    REQUIRE(run_cli(tiny_train_args((dir / "data.fgrd").string(), dir.string())).status == 0);

    // the manifest pins every derived seed, so replaying it is exact
    std::filesystem::create_directories(dir / "replay");
    REQUIRE(run_cli({"train", "--config", (dir / "run.json").string(), "--outdir",
                     (dir / "replay").string()})
                .status == 0);
    CHECK(slurp(dir / "checkpoint.frcp") == slurp(dir / "replay/checkpoint.frcp"));
    CHECK(slurp(dir / "loss.csv") == slurp(dir / "replay/loss.csv"));
}

TEST_CASE("analyze reports latent statistics and ablation") {
    const auto dir = case_dir("analyze");
    REQUIRE(run_cli({"gen-data", "--dims", "6x12x12", "--seed", "31", "--outdir", dir.string()})
                .status == 0);
    REQUIRE(run_cli(tiny_train_args((dir / "data.fgrd").string(), dir.string())).status == 0);

    REQUIRE(run_cli({"analyze", "--checkpoint", (dir / "checkpoint.frcp").string(), "--truth",
                     (dir / "data.fgrd").string(), "--outdir", dir.string()})
                .status == 0);
    const std::string stats = slurp(dir / "latent_stats.csv");
    CHECK(stats.rfind("metric,value,degenerate_pairs\n", 0) == 0);
    CHECK(stats.find("latent_dissimilarity,") != std::string::npos);
    CHECK(stats.find("autodecoder_diagnosis,") != std::string::npos);

    // header plus the full model and one row per zeroed latent variable
    const std::string ablation = slurp(dir / "ablation.csv");
    CHECK(std::count(ablation.begin(), ablation.end(), '\n') == 1 + 4);
    CHECK(ablation.rfind("dim,nmse_pct\n", 0) == 0);

    // without the truth cube only the latent statistics appear
    std::filesystem::create_directories(dir / "solo");
    REQUIRE(run_cli({"analyze", "--checkpoint", (dir / "checkpoint.frcp").string(), "--outdir",
                     (dir / "solo").string()})
                .status == 0);
    CHECK(std::filesystem::exists(dir / "solo/latent_stats.csv"));
    CHECK(!std::filesystem::exists(dir / "solo/ablation.csv"));
}

TEST_CASE("analyze rejects latent-free checkpoints") {
    const auto dir = case_dir("analyze_baseline");
    REQUIRE(run_cli({"gen-data", "--dims", "4x8x8", "--seed", "5", "--outdir", dir.string()})
                .status == 0);
    REQUIRE(run_cli({"train", "--dataset", (dir / "data.fgrd").string(), "--model", "resmlp",
                     "--epochs", "2", "--width", "16", "--depth", "3", "--seed", "1", "--ratio",
                     "0.3", "--outdir", dir.string()})
                .status == 0);
    CliRun run = run_cli({"analyze", "--checkpoint", (dir / "checkpoint.frcp").string(),
                          "--outdir", dir.string()});
    CHECK(run.status != 0);
    CHECK(run.err.find("latent") != std::string::npos);
}

TEST_CASE("pod writes the spectrum") {
    const auto dir = case_dir("pod");
    REQUIRE(run_cli({"gen-data", "--dims", "6x12x12", "--seed", "13", "--outdir", dir.string()})
                .status == 0);
    REQUIRE(run_cli({"pod", "--data", (dir / "data.fgrd").string(), "--threshold", "0.9",
                     "--outdir", dir.string()})
                .status == 0);
    const std::string pod = slurp(dir / "pod.csv");
    CHECK(pod.rfind("k,lambda,cumulative_energy\n", 0) == 0);
    CHECK(std::count(pod.begin(), pod.end(), '\n') == 1 + 6);
    CHECK(std::filesystem::exists(dir / "pod.run.json"));
}

TEST_CASE("range warnings go to stderr without failing the run") {
    const auto dir = case_dir("warnings");
    REQUIRE(run_cli({"gen-data", "--dims", "4x8x8", "--seed", "2", "--outdir", dir.string()})
                .status == 0);
    CliRun run = run_cli(tiny_train_args((dir / "data.fgrd").string(), dir.string()));
    CHECK(run.status == 0);
    CHECK(run.err.find("warning: model.width 16 is outside the published search range") !=
          std::string::npos);
}

TEST_CASE("reconstruct handles explicit times and nowcasting") {
    const auto dir = case_dir("recon_modes");
    REQUIRE(run_cli({"gen-data", "--dims", "6x12x12", "--seed", "17", "--outdir", dir.string()})
                .status == 0);
    REQUIRE(run_cli(tiny_train_args((dir / "data.fgrd").string(), dir.string())).status == 0);
    const std::string ckpt = (dir / "checkpoint.frcp").string();

    // synthetic stamps span [0, 1]; 0.5 sits between frames and interpolates
    REQUIRE(run_cli({"reconstruct", "--checkpoint", ckpt, "--times", "0,0.5", "--out",
                     (dir / "times.fgrd").string(), "--outdir", dir.string()})
                .status == 0);
    const GridField timed = read_field((dir / "times.fgrd").string());
    CHECK(timed.n_t == 2);
    CHECK(timed.stamps == std::vector<double>{0.0, 0.5});

    CliRun extrap = run_cli({"reconstruct", "--checkpoint", ckpt, "--times", "7", "--outdir",
                             dir.string()});
    CHECK(extrap.status != 0);
    CHECK(extrap.err.find("extrapolation") != std::string::npos);

    // a custom lattice resamples the same field at finer resolution
    REQUIRE(run_cli({"reconstruct", "--checkpoint", ckpt, "--times", "1", "--dims", "24x24",
                     "--out", (dir / "fine.fgrd").string(), "--outdir", dir.string()})
                .status == 0);
    const GridField fine = read_field((dir / "fine.fgrd").string());
    CHECK(fine.n_h == 24);
    CHECK(fine.n_w == 24);

    const GridField truth = read_field((dir / "data.fgrd").string());
    std::vector<ObservationSet> groups(2);
    for (std::size_t g = 0; g < 2; ++g) {
        groups[g].time_index = g;
        for (std::size_t i = 0; i < 20; ++i) {
            const std::size_t h = (i * 5) % truth.n_h, w = (i * 7) % truth.n_w;
            groups[g].points.push_back(
                {norm_coord_x(truth, w), norm_coord_y(truth, h), truth.at(g, h, w)});
        }
    }
    write_observations(groups, (dir / "obs.csv").string());
    REQUIRE(run_cli({"reconstruct", "--checkpoint", ckpt, "--obs", (dir / "obs.csv").string(),
                     "--out", (dir / "nowcast.fgrd").string(), "--outdir", dir.string()})
                .status == 0);
    const GridField cast = read_field((dir / "nowcast.fgrd").string());
    CHECK(cast.n_t == 2);
    CHECK(cast.n_h == 12);

    CHECK(run_cli({"reconstruct", "--checkpoint", ckpt, "--times", "1", "--obs",
                   (dir / "obs.csv").string(), "--outdir", dir.string()})
              .status != 0);
}
