#include "emu/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "emu/core/error.hpp"
#include "emu/core/rng.hpp"
#include "emu/core/text.hpp"
#include "emu/io/atomic_file.hpp"
#include "emu/io/gtil.hpp"
#include "emu/model/checkpoint.hpp"
#include "emu/model/predict.hpp"
#include "emu/synth/normalize.hpp"
#include "emu/synth/scene.hpp"

namespace emu::cli {

namespace fs = std::filesystem;

namespace {
constexpr const char* kManifestFile = "manifest.txt";
constexpr const char* kCheckpointFile = "model.dcem";
constexpr const char* kNormalizeFile = "normalize.txt";

void require_absent(const fs::path& path, bool force, const std::string& what) {
    if (!force && fs::exists(path)) {
        throw ConfigError(what + " already exists at " + path.string() +
                          "; pass --force to overwrite");
    }
}

std::uint32_t file_crc(const fs::path& path) { return io::crc32_of(io::read_file(path)); }

std::string pred_file(const std::string& id) { return "pred_" + id + ".gtil"; }

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

void cmd_generate(const RunConfig& rc, bool force, std::ostream& log) {
    require_absent(rc.dataset_dir / kManifestFile, force, "dataset");
    const synth::DatasetManifest m = synth::build_dataset(rc.dataset, rc.dataset_dir);

    std::map<std::string, std::string> run;
    run["command"] = "generate";
    run["config_crc32"] = std::to_string(rc.config_crc32);
    run["seed"] = std::to_string(rc.dataset.seed);
    run["tiles"] = std::to_string(m.entries.size());
    for (const auto& e : m.entries) {
        run["crc32." + e.file] = std::to_string(file_crc(m.path_of(e)));
    }
    io::atomic_write_file(rc.dataset_dir / "run_generate.txt", write_kv_block(run));
    log << "generated " << m.entries.size() << " tiles of " << rc.dataset.scene.height << "x"
        << rc.dataset.scene.width << " into " << rc.dataset_dir.string() << "\n";
}

void cmd_train(const RunConfig& rc, bool force, std::ostream& log) {
    const fs::path ckpt_path = rc.model_dir / kCheckpointFile;
    require_absent(ckpt_path, force, "checkpoint");

    const synth::DatasetManifest m = synth::load_manifest(rc.dataset_dir / kManifestFile);
    const synth::ChannelRoles roles = synth::ChannelRoles::defaults();

    std::vector<io::Tile> train_tiles;
    for (const auto* e : m.split("train")) train_tiles.push_back(io::load_tile(m.path_of(*e)));
    if (train_tiles.empty()) throw DataError("dataset has no training tiles");
    std::vector<const io::Tile*> tile_ptrs;
    for (const auto& t : train_tiles) tile_ptrs.push_back(&t);
    const synth::ChannelStats stats = synth::ChannelStats::fit(tile_ptrs, roles.inputs);

    std::vector<model::Batch> patches;
    for (const auto& t : train_tiles) {
        auto ps = synth::extract_patches(t, rc.patch, roles, &stats);
        std::move(ps.begin(), ps.end(), std::back_inserter(patches));
    }
    log << "training on " << patches.size() << " patches from " << train_tiles.size()
        << " tiles\n";

    model::ModelConfig mc = rc.model;
    mc.input_channels = roles.inputs.size();
    mc.bands = roles.targets.size();
    mc.validate();
    model::DcModel net(mc, rc.train.seed);

    std::vector<io::Tile> val_tiles;
    for (const auto* e : m.split("val")) val_tiles.push_back(io::load_tile(m.path_of(*e)));
    std::size_t epoch_no = 0;
    model::Validator validator;
    if (!val_tiles.empty()) {
        validator = [&](model::DcModel& net_now) {
            double ss = 0.0;
            std::size_t terms = 0;
            for (const auto& t : val_tiles) {
                const model::Batch b = synth::tile_batch(t, roles, &stats);
                const model::PredictiveDistribution pd = model::static_predict(net_now, b.x);
                const std::size_t n = t.pixels();
                for (std::size_t i = 0; i < n; ++i) {
                    if (b.clear[i] != 1.0) continue;
                    for (std::size_t band = 0; band < mc.bands; ++band) {
                        const double err = pd.mean[i * mc.bands + band] -
                                           b.target[i * mc.bands + band];
                        ss += err * err;
                        ++terms;
                    }
                }
            }
            const double rmse =
                terms == 0 ? 0.0 : std::sqrt(ss / static_cast<double>(terms));
            ++epoch_no;
            log << "epoch " << epoch_no << ": val_rmse=" << format_double(rmse) << "\n";
            return rmse;
        };
    }

    const model::TrainResult result = model::train(net, patches, rc.train, validator);

    fs::create_directories(rc.model_dir);
    model::save_checkpoint(ckpt_path, net);
    stats.save(rc.model_dir / kNormalizeFile);

    std::ostringstream csv;
    csv << "epoch,total,bce,regression,regularizer,val_rmse";
    const std::size_t gates = net.dropout_layer_count();
    for (std::size_t g = 0; g < gates; ++g) csv << ",dropout_p" << g;
    csv << "\n";
    for (const auto& ep : result.epochs) {
        csv << ep.epoch << "," << format_double(ep.total) << "," << format_double(ep.bce) << ","
            << format_double(ep.regression) << "," << format_double(ep.regularizer) << ","
            << (ep.val_metric ? format_double(*ep.val_metric) : "undefined");
        for (double p : ep.dropout_rates) csv << "," << format_double(p);
        csv << "\n";
    }
    io::atomic_write_file(rc.model_dir / "train_log.csv", csv.str());

    std::map<std::string, std::string> run;
    run["command"] = "train";
    run["config_crc32"] = std::to_string(rc.config_crc32);
    for (const auto& [k, v] : mc.to_kv()) run["model." + k] = v;
    run["train.epochs"] = std::to_string(rc.train.epochs);
    run["train.batch_size"] = std::to_string(rc.train.batch_size);
    run["train.learning_rate"] = format_double(rc.train.learning_rate);
    run["train.seed"] = std::to_string(rc.train.seed);
    run["train.steps"] = std::to_string(result.steps);
    run["train.patches"] = std::to_string(patches.size());
    if (!result.epochs.empty() && result.epochs.back().val_metric) {
        run["final.val_rmse"] = format_double(*result.epochs.back().val_metric);
    }
    const auto rates = net.dropout_rates();
    for (std::size_t g = 0; g < rates.size(); ++g) {
        run["final.dropout_p" + std::to_string(g)] = format_double(rates[g]);
    }
    run["crc32." + std::string(kCheckpointFile)] = std::to_string(file_crc(ckpt_path));
    run["crc32." + std::string(kNormalizeFile)] =
        std::to_string(file_crc(rc.model_dir / kNormalizeFile));
    io::atomic_write_file(rc.model_dir / "run_train.txt", write_kv_block(run));

    log << "trained " << model::arch_name(mc.arch) << " for " << result.epochs.size()
        << " epochs (" << result.steps << " steps); checkpoint at " << ckpt_path.string()
        << "\n";
}

void cmd_infer(const RunConfig& rc, bool force, std::ostream& log) {
    model::DcModel net = model::load_checkpoint(rc.model_dir / kCheckpointFile);
    const synth::ChannelStats stats = synth::ChannelStats::load(rc.model_dir / kNormalizeFile);
    const synth::DatasetManifest m = synth::load_manifest(rc.dataset_dir / kManifestFile);
    const synth::ChannelRoles roles = synth::ChannelRoles::defaults();
    if (net.config().input_channels != roles.inputs.size()) {
        throw DataError("checkpoint expects " + std::to_string(net.config().input_channels) +
                        " input channels but the dataset provides " +
                        std::to_string(roles.inputs.size()));
    }

    fs::create_directories(rc.output_dir);
    std::map<std::string, std::string> run;
    run["command"] = "infer";
    run["config_crc32"] = std::to_string(rc.config_crc32);
    run["mode"] = rc.infer_mode;
    run["samples"] = std::to_string(rc.infer_mode == "bayes" ? rc.infer_samples : 1);
    run["seed"] = std::to_string(rc.infer_seed);
    run["split"] = rc.infer_split;

    const auto entries = m.split(rc.infer_split);
    if (entries.empty()) throw DataError("split '" + rc.infer_split + "' has no tiles");
    for (const auto* e : entries) {
        const fs::path out_path = rc.output_dir / pred_file(e->id);
        require_absent(out_path, force, "prediction for tile " + e->id);

        const io::Tile tile = io::load_tile(m.path_of(*e));
        const model::Batch b = synth::tile_batch(tile, roles, &stats);
        const model::PredictiveDistribution pd =
            rc.infer_mode == "bayes"
                ? model::mc_predict(net, b.x, rc.infer_samples,
                                    split_seed(rc.infer_seed, e->seed))
                : model::static_predict(net, b.x);

        io::Tile out;
        out.height = tile.height;
        out.width = tile.width;
        const std::size_t n = out.pixels();
        const std::size_t bands = pd.bands;
        for (std::size_t band = 0; band < bands; ++band) {
            auto& mean_ch = out.add_channel("mean_b" + std::to_string(band));
            for (std::size_t i = 0; i < n; ++i) mean_ch[i] = pd.mean[i * bands + band];
        }
        for (std::size_t band = 0; band < bands; ++band) {
            auto& var_ch = out.add_channel("var_b" + std::to_string(band));
            for (std::size_t i = 0; i < n; ++i) var_ch[i] = pd.variance[i * bands + band];
        }
        auto& prob_ch = out.add_channel("p_clear");
        for (std::size_t i = 0; i < n; ++i) prob_ch[i] = pd.clear_prob[i];

        io::save_tile(out_path, out);
        run["crc32." + pred_file(e->id)] = std::to_string(file_crc(out_path));
        log << "predicted tile " << e->id << " (" << rc.infer_mode << ")\n";
    }
    io::atomic_write_file(rc.output_dir / "run_infer.txt", write_kv_block(run));
}

void cmd_evaluate(const RunConfig& rc, bool force, std::ostream& log) {
    const fs::path report_path = rc.output_dir / "eval_report.txt";
    require_absent(report_path, force, "evaluation report");

    const synth::DatasetManifest m = synth::load_manifest(rc.dataset_dir / kManifestFile);
    metrics::EvalConfig ec = rc.eval;
    ec.bands = synth::kBands;
    metrics::EvalAccumulator acc(ec);

    const auto entries = m.split(rc.infer_split);
    if (entries.empty()) throw DataError("split '" + rc.infer_split + "' has no tiles");
    for (const auto* e : entries) {
        const io::Tile truth = io::load_tile(m.path_of(*e));
        const io::Tile pred = io::load_tile(rc.output_dir / pred_file(e->id));
        if (pred.height != truth.height || pred.width != truth.width) {
            throw DataError("prediction grid for tile " + e->id +
                            " does not match the truth tile");
        }
        metrics::TilePrediction tp;
        tp.height = truth.height;
        tp.width = truth.width;
        for (std::size_t band = 0; band < synth::kBands; ++band) {
            tp.truth_sr.push_back(truth.channel("sr_b" + std::to_string(band)));
            tp.pred_sr.push_back(pred.channel("mean_b" + std::to_string(band)));
        }
        const bool have_var = pred.find("var_b0") >= 0;
        if (have_var) {
            for (std::size_t band = 0; band < synth::kBands; ++band) {
                tp.pred_var.push_back(pred.channel("var_b" + std::to_string(band)));
            }
        }
        tp.truth_clear = truth.channel("clear");
        if (truth.find("class") >= 0) tp.class_map = truth.channel("class");
        tp.p_clear = pred.channel("p_clear");
        acc.add_tile(tp);
    }

    const metrics::EvalReport report = acc.report();
    report.save(report_path);
    log << "evaluated " << entries.size() << " tiles:"
        << " rmse=" << report.text("sr.rmse.all")
        << " cloud_accuracy=" << report.text("cloud.accuracy")
        << " auc=" << report.text("cloud.auc")
        << " coverage90=" << report.text("calibration.q90") << "\n";
    log << "report written to " << report_path.string() << "\n";
}

void cmd_bench(const RunConfig& rc, std::ostream& log) {
    model::DcModel net = model::load_checkpoint(rc.model_dir / kCheckpointFile);
    const synth::ChannelStats stats = synth::ChannelStats::load(rc.model_dir / kNormalizeFile);
    const synth::DatasetManifest m = synth::load_manifest(rc.dataset_dir / kManifestFile);
    const synth::ChannelRoles roles = synth::ChannelRoles::defaults();

    const auto entries = m.split(rc.infer_split);
    if (entries.empty()) throw DataError("split '" + rc.infer_split + "' has no tiles");
    const io::Tile tile = io::load_tile(m.path_of(*entries.front()));
    const model::Batch b = synth::tile_batch(tile, roles, &stats);

    const auto time_ms = [](auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::milli>(t1 - t0).count();
    };
    const auto run_static = [&] { (void)model::static_predict(net, b.x); };
    const auto run_bayes = [&] {
        (void)model::mc_predict(net, b.x, rc.bench_samples, split_seed(rc.infer_seed, 0xbe9c));
    };
    // Reference model row: the synth-atmos teacher's forward pass on the same
    // pixels, reading geometry/atmosphere straight from the tile.
    const std::size_t n_px = tile.pixels();
    const std::vector<double>& aod = tile.channel("aod");
    const std::vector<double>& mu_s = tile.channel("cos_sza");
    const std::vector<double>& mu_v = tile.channel("cos_vza");
    volatile double sink = 0.0;
    const auto run_teacher = [&] {
        double acc = 0.0;
        for (std::size_t band = 0; band < synth::kBands; ++band) {
            const auto& sr = tile.channel("sr_b" + std::to_string(band));
            for (std::size_t i = 0; i < n_px; ++i) {
                acc += synth::toa_forward_pixel(band, sr[i], aod[i], mu_s[i], mu_v[i]);
            }
        }
        sink = acc;
    };

    for (std::size_t i = 0; i < rc.bench_warmup; ++i) {
        run_static();
        run_bayes();
        run_teacher();
    }
    std::vector<double> static_ms, bayes_ms, teacher_ms;
    std::ostringstream csv;
    csv << "mode,trial,ms,examples_per_s\n";
    // One "example" is a 50x50 patch, the training granularity.
    const double examples = static_cast<double>(n_px) / 2500.0;
    const auto record = [&](const char* mode, std::vector<double>& out, auto&& fn,
                            std::size_t trial) {
        out.push_back(time_ms(fn));
        csv << mode << "," << trial << "," << format_double(out.back()) << ","
            << format_double(examples / (out.back() / 1000.0)) << "\n";
    };
    for (std::size_t trial = 0; trial < rc.bench_trials; ++trial) {
        record("static", static_ms, run_static, trial);
        record("bayes", bayes_ms, run_bayes, trial);
        record("teacher", teacher_ms, run_teacher, trial);
    }
    const double med_static = median_of(static_ms);
    const double med_bayes = median_of(bayes_ms);
    const double med_teacher = median_of(teacher_ms);
    const double ratio = med_bayes / med_static;

    fs::create_directories(rc.output_dir);
    io::atomic_write_file(rc.output_dir / "bench.csv", csv.str());
    std::map<std::string, std::string> run;
    run["command"] = "bench";
    run["config_crc32"] = std::to_string(rc.config_crc32);
    run["samples"] = std::to_string(rc.bench_samples);
    run["trials"] = std::to_string(rc.bench_trials);
    run["pixels"] = std::to_string(n_px);
    run["examples"] = format_double(examples);
    run["median_static_ms"] = format_double(med_static);
    run["median_bayes_ms"] = format_double(med_bayes);
    run["median_teacher_ms"] = format_double(med_teacher);
    run["eps_static"] = format_double(examples / (med_static / 1000.0));
    run["eps_bayes"] = format_double(examples / (med_bayes / 1000.0));
    run["eps_teacher"] = format_double(examples / (med_teacher / 1000.0));
    run["ratio_bayes_over_static"] = format_double(ratio);
    io::atomic_write_file(rc.output_dir / "run_bench.txt", write_kv_block(run));

    log << "bench on " << n_px << " pixels: static " << format_double(med_static)
        << " ms, bayes(" << rc.bench_samples << ") " << format_double(med_bayes)
        << " ms, teacher " << format_double(med_teacher) << " ms, ratio "
        << format_double(ratio) << "\n";
}

}  // namespace emu::cli
