#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fieldrec/data.hpp"
#include "fieldrec/inference.hpp"
#include "fieldrec/models.hpp"
#include "fieldrec/training.hpp"

namespace fieldrec {

// One self-contained run recipe: where the data comes from, how it is
// observed, which model fits it, and how. Every field maps onto a flat
// dotted config key ("model.arch", "train.epochs", ...).
struct ExperimentSpec {
    std::string dataset;  // FGRD path; empty generates the synthetic cube below
    SyntheticSpec synth;
    SamplingSpec sampling;
    NoiseSpec noise;
    ModelSpec model;
    TrainConfig train;
    InferConfig infer;
    std::string outdir;  // empty resolves to $FIELDREC_OUTDIR, then "."
    std::uint64_t seed = 0;
};

// Parsed flat JSON config. Unknown keys and ill-typed values are errors;
// "command" and "io.*" entries pass through untouched so a run manifest can
// be fed straight back in as a config file.
struct ConfigFile {
    ExperimentSpec spec;
    std::set<std::string> provided;         // spec keys present in the file
    std::map<std::string, std::string> io;  // command-scoped extras, key minus "io."
    std::string command;
};

ConfigFile parse_config(const std::string& json_text, const std::string& origin);

// Sets one key from its command-line string form, with the same typing rules.
void apply_spec_key(ExperimentSpec& spec, const std::string& key, const std::string& value);

// "key  type  default" lines for --help.
std::vector<std::string> spec_key_help();

// Materializes every default: sub-seeds the user did not pin derive from the
// master seed, an empty outdir falls back to $FIELDREC_OUTDIR then ".", and
// depth 0 becomes the architecture's published default.
ExperimentSpec resolve_spec(ExperimentSpec spec, const std::set<std::string>& provided);

// Hyperparameters outside the published search ranges still run; each one is
// reported so deliberate overrides stay visible.
std::vector<std::string> range_warnings(const ExperimentSpec& spec);

// The run.json text: command, io extras, then every spec key in table order.
std::string manifest_json(const std::string& command, const ExperimentSpec& resolved,
                          const std::vector<std::pair<std::string, std::string>>& io);

struct TrainArtifacts {
    GridField truth;
    std::vector<ObservationSet> observations;  // what the model actually saw
    TrainResult result;
};

// generate/load -> sample -> corrupt -> fit, the whole supervised path.
TrainArtifacts run_training(const ExperimentSpec& resolved);

// Renders the cube at the requested times on an n_h x n_w lattice: exact
// latent rows at training stamps, linear latent interpolation in between,
// the normalized stamp as the time input for latent-free baselines.
GridField reconstruct_at(FieldModel& model, const LatentTable& table,
                         const std::vector<double>& times, std::size_t n_h, std::size_t n_w,
                         const std::array<double, 4>& coord_range);

// MAP-infers one code per observation group against the frozen decoder and
// renders it (nowcasting). The group's time index acts as its output stamp.
GridField nowcast(FieldModel& model, const std::vector<ObservationSet>& groups,
                  const InferConfig& cfg, const LatentTable& table, std::size_t n_h,
                  std::size_t n_w, const std::array<double, 4>& coord_range);

}  // namespace fieldrec
