#include "emu/cli/run_config.hpp"

#include <functional>
#include <map>

#include "emu/core/error.hpp"
#include "emu/core/text.hpp"
#include "emu/io/atomic_file.hpp"

namespace emu::cli {

namespace {
std::size_t to_size(const std::string& v, const std::string& key) {
    const long long n = parse_int(v, key);
    if (n < 0) throw ConfigError(key + " must be non-negative, got " + v);
    return static_cast<std::size_t>(n);
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
    const long long n = parse_int(v, key);
    if (n < 0) throw ConfigError(key + " must be non-negative, got " + v);
    return static_cast<std::uint64_t>(n);
}
}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const Error& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    const auto kv = parse_kv_block(text, "config " + path.string());
    RunConfig rc;
    rc.config_crc32 = io::crc32_of(text);
    const std::filesystem::path base = path.parent_path();

    // Handlers keyed by config name; anything absent keeps its default.
    const std::map<std::string, std::function<void(const std::string&, const std::string&)>>
        handlers{
            {"paths.dataset_dir", [&](const std::string& v, const std::string&) {
                 rc.dataset_dir = v;
             }},
            {"paths.model_dir", [&](const std::string& v, const std::string&) {
                 rc.model_dir = v;
             }},
            {"paths.output_dir", [&](const std::string& v, const std::string&) {
                 rc.output_dir = v;
             }},

            {"scene.height", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.height = to_size(v, k);
             }},
            {"scene.width", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.width = to_size(v, k);
             }},
            {"scene.cell", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.cell = to_size(v, k);
             }},
            {"scene.blur", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.blur = to_size(v, k);
             }},
            {"scene.classes", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.classes = to_size(v, k);
             }},
            {"scene.cloud_fraction", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.cloud_fraction = parse_double(v, k);
             }},
            {"scene.aod_min", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.aod_min = parse_double(v, k);
             }},
            {"scene.aod_max", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.aod_max = parse_double(v, k);
             }},
            {"scene.sza_min_deg", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.sza_min_deg = parse_double(v, k);
             }},
            {"scene.sza_max_deg", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.sza_max_deg = parse_double(v, k);
             }},
            {"scene.view_zenith_deg", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.view_zenith_deg = parse_double(v, k);
             }},
            {"scene.albedo_min", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.albedo_min = parse_double(v, k);
             }},
            {"scene.albedo_max", [&](const std::string& v, const std::string& k) {
                 rc.dataset.scene.albedo_max = parse_double(v, k);
             }},

            {"dataset.train_tiles", [&](const std::string& v, const std::string& k) {
                 rc.dataset.train_tiles = to_size(v, k);
             }},
            {"dataset.val_tiles", [&](const std::string& v, const std::string& k) {
                 rc.dataset.val_tiles = to_size(v, k);
             }},
            {"dataset.test_tiles", [&](const std::string& v, const std::string& k) {
                 rc.dataset.test_tiles = to_size(v, k);
             }},
            {"dataset.seed", [&](const std::string& v, const std::string& k) {
                 rc.dataset.seed = to_u64(v, k);
             }},

            {"patch.size", [&](const std::string& v, const std::string& k) {
                 rc.patch.size = to_size(v, k);
             }},
            {"patch.stride", [&](const std::string& v, const std::string& k) {
                 rc.patch.stride = to_size(v, k);
             }},

            {"model.arch", [&](const std::string& v, const std::string&) {
                 rc.model.arch = model::arch_from_name(v);
             }},
            {"model.hidden_layers", [&](const std::string& v, const std::string& k) {
                 rc.model.hidden_layers = to_size(v, k);
             }},
            {"model.hidden_units", [&](const std::string& v, const std::string& k) {
                 rc.model.hidden_units = to_size(v, k);
             }},
            {"model.variance_mode", [&](const std::string& v, const std::string&) {
                 rc.model.variance_mode = model::variance_mode_from_name(v);
             }},
            {"model.dropout_on_head", [&](const std::string& v, const std::string& k) {
                 rc.model.dropout_on_head = parse_bool(v, k);
             }},
            {"model.dropout_temperature", [&](const std::string& v, const std::string& k) {
                 rc.model.dropout_temperature = parse_double(v, k);
             }},
            {"model.initial_dropout_rate", [&](const std::string& v, const std::string& k) {
                 rc.model.initial_dropout_rate = parse_double(v, k);
             }},
            {"model.length_scale_sq", [&](const std::string& v, const std::string& k) {
                 rc.model.length_scale_sq = parse_double(v, k);
             }},
            {"model.model_precision", [&](const std::string& v, const std::string& k) {
                 rc.model.model_precision = parse_double(v, k);
             }},

            {"train.epochs", [&](const std::string& v, const std::string& k) {
                 rc.train.epochs = to_size(v, k);
             }},
            {"train.batch_size", [&](const std::string& v, const std::string& k) {
                 rc.train.batch_size = to_size(v, k);
             }},
            {"train.learning_rate", [&](const std::string& v, const std::string& k) {
                 rc.train.learning_rate = parse_double(v, k);
             }},
            {"train.seed", [&](const std::string& v, const std::string& k) {
                 rc.train.seed = to_u64(v, k);
             }},
            {"train.use_regularizer", [&](const std::string& v, const std::string& k) {
                 rc.train.use_regularizer = parse_bool(v, k);
             }},

            {"infer.split", [&](const std::string& v, const std::string&) {
                 rc.infer_split = v;
             }},
            {"infer.mode", [&](const std::string& v, const std::string&) {
                 rc.infer_mode = v;
             }},
            {"infer.samples", [&](const std::string& v, const std::string& k) {
                 rc.infer_samples = to_size(v, k);
             }},
            {"infer.seed", [&](const std::string& v, const std::string& k) {
                 rc.infer_seed = to_u64(v, k);
             }},

            {"eval.cloud_threshold", [&](const std::string& v, const std::string& k) {
                 rc.eval.cloud_threshold = parse_double(v, k);
             }},
            {"eval.strata_min_pixels", [&](const std::string& v, const std::string& k) {
                 rc.eval.strata_min_pixels = to_size(v, k);
             }},

            {"bench.warmup", [&](const std::string& v, const std::string& k) {
                 rc.bench_warmup = to_size(v, k);
             }},
            {"bench.trials", [&](const std::string& v, const std::string& k) {
                 rc.bench_trials = to_size(v, k);
             }},
            {"bench.samples", [&](const std::string& v, const std::string& k) {
                 rc.bench_samples = to_size(v, k);
             }},
        };

    for (const auto& [key, value] : kv) {
        const auto it = handlers.find(key);
        if (it == handlers.end()) {
            throw ConfigError("config " + path.string() + ": unknown key '" + key + "'");
        }
        it->second(value, key);
    }
    // Default (and explicitly relative) directories live beside the config.
    const auto resolve = [&base](std::filesystem::path& p) {
        if (p.is_relative()) p = base / p;
    };
    resolve(rc.dataset_dir);
    resolve(rc.model_dir);
    resolve(rc.output_dir);
    rc.validate();
    return rc;
}

void RunConfig::validate() const {
    dataset.scene.validate();
    model.validate();
    if (infer_mode != "bayes" && infer_mode != "static") {
        throw ConfigError("infer.mode must be 'bayes' or 'static', got '" + infer_mode + "'");
    }
    if (infer_split != "train" && infer_split != "val" && infer_split != "test") {
        throw ConfigError("infer.split must be one of train/val/test");
    }
    if (infer_samples == 0) throw ConfigError("infer.samples must be at least 1");
    if (!(eval.cloud_threshold >= 0.0 && eval.cloud_threshold <= 1.0)) {
        throw ConfigError("eval.cloud_threshold must lie in [0, 1]");
    }
    if (patch.size == 0) throw ConfigError("patch.size must be positive");
    if (patch.stride == 0) throw ConfigError("patch.stride must be positive");
    if (bench_trials == 0) throw ConfigError("bench.trials must be at least 1");
    if (bench_samples == 0) throw ConfigError("bench.samples must be at least 1");
    if (train.epochs == 0) throw ConfigError("train.epochs must be at least 1");
    if (train.batch_size == 0) throw ConfigError("train.batch_size must be at least 1");
    if (!(train.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
}

void RunConfig::apply_seed_override(std::uint64_t seed) {
    dataset.seed = seed;
    train.seed = seed;
    infer_seed = seed;
}

}  // namespace emu::cli
