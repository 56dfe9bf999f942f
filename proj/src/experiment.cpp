#include "fieldrec/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <initializer_list>
#include <stdexcept>

namespace fieldrec {

namespace {

using nlohmann::json;

std::uint64_t require_count(const json& j) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return j.get<std::uint64_t>();
    throw std::invalid_argument("expects a nonnegative integer, got " + j.dump());
}

int require_int(const json& j) {
    if (!j.is_number_integer())  // true for unsigned storage as well
        throw std::invalid_argument("expects an integer, got " + j.dump());
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > std::uint64_t(INT_MAX))
        throw std::invalid_argument("integer out of range: " + j.dump());
    const std::int64_t v = j.get<std::int64_t>();
    if (v < INT_MIN || v > INT_MAX) throw std::invalid_argument("integer out of range: " + j.dump());
    return int(v);
}

double require_number(const json& j) {
    if (!j.is_number()) throw std::invalid_argument("expects a number, got " + j.dump());
    return j.get<double>();
}

std::string require_string(const json& j) {
    if (!j.is_string()) throw std::invalid_argument("expects a string, got " + j.dump());
    return j.get<std::string>();
}

struct KeyDef {
    std::string key;
    std::string type_name;  // count | int | float | string | name
    std::function<void(ExperimentSpec&, const json&)> set;
    std::function<json(ExperimentSpec&)> get;
};

const std::vector<KeyDef>& key_table() {
    // ref lambdas return a mutable field reference; get() reads through them
    auto count = [](const char* key, auto ref) {
        return KeyDef{key, "count",
                      [ref](ExperimentSpec& s, const json& j) { ref(s) = require_count(j); },
                      [ref](ExperimentSpec& s) { return json(std::uint64_t(ref(s))); }};
    };
    auto integer = [](const char* key, auto ref) {
        return KeyDef{key, "int",
                      [ref](ExperimentSpec& s, const json& j) { ref(s) = require_int(j); },
                      [ref](ExperimentSpec& s) { return json(ref(s)); }};
    };
    auto number = [](const char* key, auto ref) {
        return KeyDef{key, "float",
                      [ref](ExperimentSpec& s, const json& j) { ref(s) = require_number(j); },
                      [ref](ExperimentSpec& s) { return json(ref(s)); }};
    };
    auto text = [](const char* key, auto ref) {
        return KeyDef{key, "string",
                      [ref](ExperimentSpec& s, const json& j) { ref(s) = require_string(j); },
                      [ref](ExperimentSpec& s) { return json(ref(s)); }};
    };
    auto named = [](const char* key, auto ref, auto from_name, auto to_name) {
        return KeyDef{key, "name",
                      [ref, from_name](ExperimentSpec& s, const json& j) {
                          ref(s) = from_name(require_string(j));
                      },
                      [ref, to_name](ExperimentSpec& s) { return json(to_name(ref(s))); }};
    };

    static const std::vector<KeyDef> table = {
        text("dataset", [](ExperimentSpec& s) -> auto& { return s.dataset; }),
        text("outdir", [](ExperimentSpec& s) -> auto& { return s.outdir; }),
        count("seed", [](ExperimentSpec& s) -> auto& { return s.seed; }),
        named(
            "synth.kind", [](ExperimentSpec& s) -> auto& { return s.synth.kind; },
            synthetic_kind_from_name, synthetic_kind_name),
        count("synth.n_t", [](ExperimentSpec& s) -> auto& { return s.synth.n_t; }),
        count("synth.n_h", [](ExperimentSpec& s) -> auto& { return s.synth.n_h; }),
        count("synth.n_w", [](ExperimentSpec& s) -> auto& { return s.synth.n_w; }),
        count("synth.seed", [](ExperimentSpec& s) -> auto& { return s.synth.seed; }),
        number("synth.drift", [](ExperimentSpec& s) -> auto& { return s.synth.drift; }),
        count("synth.components", [](ExperimentSpec& s) -> auto& { return s.synth.components; }),
        integer("sampling.task", [](ExperimentSpec& s) -> auto& { return s.sampling.task; }),
        number("sampling.ratio", [](ExperimentSpec& s) -> auto& { return s.sampling.ratio; }),
        count("sampling.seed", [](ExperimentSpec& s) -> auto& { return s.sampling.seed; }),
        number("sampling.count_multiplier_max",
               [](ExperimentSpec& s) -> auto& { return s.sampling.count_multiplier_max; }),
        number("noise.ratio", [](ExperimentSpec& s) -> auto& { return s.noise.ratio; }),
        count("noise.seed", [](ExperimentSpec& s) -> auto& { return s.noise.seed; }),
        named(
            "model.arch", [](ExperimentSpec& s) -> auto& { return s.model.arch; }, arch_from_name,
            arch_name),
        count("model.d_z", [](ExperimentSpec& s) -> auto& { return s.model.d_z; }),
        count("model.width", [](ExperimentSpec& s) -> auto& { return s.model.width; }),
        count("model.depth", [](ExperimentSpec& s) -> auto& { return s.model.depth; }),
        number("model.input_scale", [](ExperimentSpec& s) -> auto& { return s.model.input_scale; }),
        named(
            "model.filter_kind", [](ExperimentSpec& s) -> auto& { return s.model.filter_kind; },
            filter_kind_from_name, filter_kind_name),
        number("model.gamma_alpha", [](ExperimentSpec& s) -> auto& { return s.model.gamma_alpha; }),
        number("model.gamma_beta", [](ExperimentSpec& s) -> auto& { return s.model.gamma_beta; }),
        number("model.w0", [](ExperimentSpec& s) -> auto& { return s.model.w0; }),
        count("model.ffn_freq_number",
              [](ExperimentSpec& s) -> auto& { return s.model.ffn_freq_number; }),
        number("model.ffn_freq_constant",
               [](ExperimentSpec& s) -> auto& { return s.model.ffn_freq_constant; }),
        count("model.ffn_encode_size",
              [](ExperimentSpec& s) -> auto& { return s.model.ffn_encode_size; }),
        number("model.ffn_sigma", [](ExperimentSpec& s) -> auto& { return s.model.ffn_sigma; }),
        integer("train.epochs", [](ExperimentSpec& s) -> auto& { return s.train.epochs; }),
        number("train.lr0", [](ExperimentSpec& s) -> auto& { return s.train.lr0; }),
        number("train.lr_decay", [](ExperimentSpec& s) -> auto& { return s.train.lr_decay; }),
        integer("train.batch_size", [](ExperimentSpec& s) -> auto& { return s.train.batch_size; }),
        number("train.latent_reg", [](ExperimentSpec& s) -> auto& { return s.train.latent_reg; }),
        number("train.weight_decay",
               [](ExperimentSpec& s) -> auto& { return s.train.weight_decay; }),
        count("train.seed", [](ExperimentSpec& s) -> auto& { return s.train.seed; }),
        named(
            "train.latent_init", [](ExperimentSpec& s) -> auto& { return s.train.latent_init; },
            latent_init_from_name, latent_init_name),
        number("train.latent_init_sigma",
               [](ExperimentSpec& s) -> auto& { return s.train.latent_init_sigma; }),
        integer("infer.steps", [](ExperimentSpec& s) -> auto& { return s.infer.steps; }),
        number("infer.lr", [](ExperimentSpec& s) -> auto& { return s.infer.lr; }),
        number("infer.latent_reg", [](ExperimentSpec& s) -> auto& { return s.infer.latent_reg; }),
        named(
            "infer.init", [](ExperimentSpec& s) -> auto& { return s.infer.init; },
            infer_init_from_name, infer_init_name),
    };
    return table;
}

const KeyDef* find_key(const std::string& key) {
    for (const auto& def : key_table())
        if (def.key == key) return &def;
    return nullptr;
}

json value_from_string(const KeyDef& def, const std::string& raw) {
    std::size_t used = 0;
    try {
        if (def.type_name == "count") {
            if (!raw.empty() && raw[0] == '-') throw std::invalid_argument("negative");
            const std::uint64_t v = std::stoull(raw, &used);
            if (used != raw.size()) throw std::invalid_argument("trailing characters");
            return json(v);
        }
        if (def.type_name == "int") {
            const long long v = std::stoll(raw, &used);
            if (used != raw.size()) throw std::invalid_argument("trailing characters");
            return json(v);
        }
        if (def.type_name == "float") {
            const double v = std::stod(raw, &used);
            if (used != raw.size()) throw std::invalid_argument("trailing characters");
            return json(v);
        }
    } catch (const std::exception&) {
        const std::string phrase = def.type_name == "count" ? "a nonnegative integer"
                                   : def.type_name == "int" ? "an integer"
                                                            : "a number";
        throw std::invalid_argument("expects " + phrase + ", got '" + raw + "'");
    }
    return json(raw);
}

bool in_set(double v, std::initializer_list<double> allowed) {
    return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
}

bool in_set(std::size_t v, std::initializer_list<std::size_t> allowed) {
    return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
}

}  // namespace

ConfigFile parse_config(const std::string& json_text, const std::string& origin) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config '" + origin + "' is not valid JSON: " + e.what());
    }
    if (!root.is_object())
        throw std::runtime_error("config '" + origin + "' must be a JSON object");

    ConfigFile out;
    for (const auto& [key, value] : root.items()) {
        if (key == "command") {
            out.command = require_string(value);
            continue;
        }
        if (key.rfind("io.", 0) == 0) {
            out.io[key.substr(3)] = value.is_string() ? value.get<std::string>() : value.dump();
            continue;
        }
        const KeyDef* def = find_key(key);
        if (def == nullptr)
            throw std::runtime_error("config '" + origin + "' has an unknown key '" + key + "'");
        try {
            def->set(out.spec, value);
        } catch (const std::exception& e) {
            throw std::runtime_error("config '" + origin + "', key '" + key + "': " + e.what());
        }
        out.provided.insert(key);
    }
    return out;
}

void apply_spec_key(ExperimentSpec& spec, const std::string& key, const std::string& value) {
    const KeyDef* def = find_key(key);
    if (def == nullptr) throw std::runtime_error("unknown config key '" + key + "'");
    try {
        def->set(spec, value_from_string(*def, value));
    } catch (const std::exception& e) {
        throw std::runtime_error("key '" + key + "': " + e.what());
    }
}

std::vector<std::string> spec_key_help() {
    std::vector<std::string> lines;
    ExperimentSpec defaults;
    for (const auto& def : key_table())
        lines.push_back(def.key + "  (" + def.type_name + ", default " + def.get(defaults).dump() +
                        ")");
    return lines;
}

ExperimentSpec resolve_spec(ExperimentSpec spec, const std::set<std::string>& provided) {
    if (!provided.count("synth.seed")) spec.synth.seed = derive_seed(spec.seed, 10);
    if (!provided.count("sampling.seed")) spec.sampling.seed = derive_seed(spec.seed, 11);
    if (!provided.count("noise.seed")) spec.noise.seed = derive_seed(spec.seed, 12);
    if (!provided.count("train.seed")) spec.train.seed = derive_seed(spec.seed, 13);
    if (spec.outdir.empty()) {
        const char* env = std::getenv("FIELDREC_OUTDIR");
        spec.outdir = env != nullptr && *env != '\0' ? env : ".";
    }
    spec.model.depth = resolved_depth(spec.model);
    return spec;
}

std::vector<std::string> range_warnings(const ExperimentSpec& spec) {
    std::vector<std::string> out;
    const ModelSpec& m = spec.model;
    const std::string arch = arch_name(m.arch);
    auto warn = [&](const std::string& key, const std::string& value) {
        out.push_back("model." + key + " " + value + " is outside the published search range for " +
                      arch);
    };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return std::string(buf);
    };

    if (m.arch == Arch::resmlp) {
        if (m.width < 128 || m.width > 512 || m.width % 32 != 0)
            warn("width", std::to_string(m.width));
    } else if (!in_set(m.width, {std::size_t(128), 192, 256, 384, 512})) {
        warn("width", std::to_string(m.width));
    }
    const std::size_t depth = resolved_depth(m);
    if (depth < 3 || depth > 7) warn("depth", std::to_string(depth));

    switch (m.arch) {
        case Arch::mmgn:
            if (!in_set(m.input_scale, {128.0, 256.0, 512.0})) warn("input_scale", num(m.input_scale));
            if (m.d_z == 0 || m.d_z > 512 || (m.d_z & (m.d_z - 1)) != 0)
                warn("d_z", std::to_string(m.d_z));
            break;
        case Arch::siren:
            if (!in_set(m.w0, {1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 100.0}))
                warn("w0", num(m.w0));
            break;
        case Arch::ffn_p:
            if (!in_set(m.ffn_freq_constant,
                        {30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 110.0, 120.0}))
                warn("ffn_freq_constant", num(m.ffn_freq_constant));
            if (m.ffn_freq_number < 150 || m.ffn_freq_number > 250 || m.ffn_freq_number % 10 != 0)
                warn("ffn_freq_number", std::to_string(m.ffn_freq_number));
            break;
        case Arch::ffn_g:
            if (!in_set(m.ffn_sigma, {1.0, 3.0, 5.0, 7.0, 10.0, 20.0, 30.0, 40.0, 50.0}))
                warn("ffn_sigma", num(m.ffn_sigma));
            if (!in_set(m.ffn_encode_size, {std::size_t(64), 128, 256, 512}))
                warn("ffn_encode_size", std::to_string(m.ffn_encode_size));
            break;
        case Arch::resmlp: break;
    }
    return out;
}

std::string manifest_json(const std::string& command, const ExperimentSpec& resolved,
                          const std::vector<std::pair<std::string, std::string>>& io) {
    nlohmann::ordered_json out;
    out["command"] = command;
    for (const auto& [k, v] : io) out["io." + k] = v;
    ExperimentSpec s = resolved;
    for (const auto& def : key_table()) out[def.key] = def.get(s);
    return out.dump(2) + "\n";
}

TrainArtifacts run_training(const ExperimentSpec& spec) {
    TrainArtifacts art;
    art.truth = spec.dataset.empty() ? generate_synthetic(spec.synth) : read_field(spec.dataset);
    art.observations = sample_task(art.truth, spec.sampling);
    if (spec.noise.ratio != 0.0) {
        const double field_std = std::sqrt(compute_field_stats(art.truth).variance);
        art.observations = add_noise(art.observations, field_std, spec.noise);
    }
    art.result = train_joint(art.observations, art.truth.stamps, spec.model, spec.train);
    return art;
}

namespace {

Tensor latent_at(const LatentTable& table, double t) {
    for (std::size_t k = 0; k < table.size(); ++k)
        if (table.stamps[k] == t) return table.row(k);
    return interpolate_latent(table, t);
}

GridField empty_cube(std::size_t n_t, std::size_t n_h, std::size_t n_w,
                     const std::array<double, 4>& coord_range) {
    if (n_t == 0) throw std::invalid_argument("no reconstruction times given");
    if (n_h == 0 || n_w == 0) throw std::invalid_argument("reconstruction lattice is empty");
    GridField out;
    out.n_t = n_t;
    out.n_h = n_h;
    out.n_w = n_w;
    out.coord_range = coord_range;
    out.stamps.resize(n_t);
    out.values.resize(n_t * n_h * n_w);
    return out;
}

}  // namespace

GridField reconstruct_at(FieldModel& model, const LatentTable& table,
                         const std::vector<double>& times, std::size_t n_h, std::size_t n_w,
                         const std::array<double, 4>& coord_range) {
    GridField out = empty_cube(times.size(), n_h, n_w, coord_range);
    out.stamps = times;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const Tensor z =
            model.latent_dim() > 0 ? latent_at(table, times[k]) : Tensor(Shape{0});
        const Tensor frame = evaluate_field(model, z, n_h, n_w, table.t_norm(times[k]));
        std::copy(frame.values().begin(), frame.values().end(),
                  out.values.begin() + std::ptrdiff_t(k * out.frame_size()));
    }
    return out;
}

GridField nowcast(FieldModel& model, const std::vector<ObservationSet>& groups,
                  const InferConfig& cfg, const LatentTable& table, std::size_t n_h,
                  std::size_t n_w, const std::array<double, 4>& coord_range) {
    if (model.latent_dim() == 0) throw std::invalid_argument("nowcasting needs a latent model");
    GridField out = empty_cube(groups.size(), n_h, n_w, coord_range);
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const double stamp = double(groups[k].time_index);
        const Tensor z = infer_latent(model, groups[k], cfg, table, stamp);
        const Tensor frame = evaluate_field(model, z, n_h, n_w);
        std::copy(frame.values().begin(), frame.values().end(),
                  out.values.begin() + std::ptrdiff_t(k * out.frame_size()));
        out.stamps[k] = stamp;
    }
    return out;
}

}  // namespace fieldrec
