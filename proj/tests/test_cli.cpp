#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include "doctest.h"
#include "emu/cli/commands.hpp"
#include "emu/cli/run_config.hpp"
#include "emu/core/error.hpp"
#include "emu/core/text.hpp"
#include "emu/io/atomic_file.hpp"
#include "emu/metrics/report.hpp"
#include "emu/model/checkpoint.hpp"

using namespace emu;
using namespace emu::cli;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir(const std::string& leaf) {
    fs::path p = fs::temp_directory_path() / "emu_cli_tests" / leaf;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// A pipeline small enough to train in well under a second.
const char* kTinyConfig = R"(# tiny smoke pipeline
scene.height = 24
scene.width = 24
scene.cell = 6
scene.blur = 1
dataset.train_tiles = 2
dataset.val_tiles = 1
dataset.test_tiles = 1
dataset.seed = 11
patch.size = 12
patch.stride = 12
model.arch = dcfc
model.hidden_layers = 2
model.hidden_units = 16
model.model_precision = 1.0
model.length_scale_sq = 0.01
train.epochs = 2
train.batch_size = 8
train.learning_rate = 0.001
train.seed = 5
infer.samples = 4
infer.seed = 9
bench.warmup = 1
bench.trials = 3
bench.samples = 4
)";

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "run.cfg";
    io::atomic_write_file(p, text);
    return p;
}

void run_pipeline(const RunConfig& rc, std::ostream& log) {
    cmd_generate(rc, false, log);
    cmd_train(rc, false, log);
    cmd_infer(rc, false, log);
    cmd_evaluate(rc, false, log);
}
}  // namespace

TEST_CASE("run configs parse, default, and reject unknown keys") {
    const fs::path dir = temp_dir("config");
    const fs::path p = write_config(dir, kTinyConfig);
    RunConfig rc = RunConfig::load(p);
    CHECK(rc.dataset.scene.height == 24);
    CHECK(rc.dataset.train_tiles == 2);
    CHECK(rc.model.hidden_units == 16);
    CHECK(rc.train.epochs == 2);
    CHECK(rc.infer_samples == 4);
    CHECK(rc.infer_mode == "bayes");           // default
    CHECK(rc.eval.cloud_threshold == 0.5);     // default
    CHECK(rc.dataset_dir == dir / "data");     // resolved against the config dir
    CHECK(rc.model_dir == dir / "model");

    rc.apply_seed_override(77);
    CHECK(rc.dataset.seed == 77);
    CHECK(rc.train.seed == 77);
    CHECK(rc.infer_seed == 77);

    SUBCASE("unknown keys fail loudly") {
        const fs::path bad = dir / "bad.cfg";
        io::atomic_write_file(bad, std::string(kTinyConfig) + "train.momentum = 0.9\n");
        CHECK_THROWS_AS(RunConfig::load(bad), ConfigError);
    }
    SUBCASE("invalid values are rejected") {
        const fs::path bad = dir / "bad2.cfg";
        io::atomic_write_file(bad, std::string(kTinyConfig) + "eval.cloud_threshold = 1.5\n");
        CHECK_THROWS_AS(RunConfig::load(bad), ConfigError);
        io::atomic_write_file(bad, std::string(kTinyConfig) + "infer.mode = maybe\n");
        CHECK_THROWS_AS(RunConfig::load(bad), ConfigError);
        io::atomic_write_file(bad, std::string(kTinyConfig) + "train.epochs = 0\n");
        CHECK_THROWS_AS(RunConfig::load(bad), ConfigError);
    }
    SUBCASE("missing config file is a configuration error") {
        CHECK_THROWS_AS(RunConfig::load(dir / "absent.cfg"), Error);
    }
}

TEST_CASE("the full pipeline produces every artifact and honors --force") {
    const fs::path dir = temp_dir("pipeline");
    const RunConfig rc = RunConfig::load(write_config(dir, kTinyConfig));
    std::ostringstream log;
    run_pipeline(rc, log);

    CHECK(fs::exists(rc.dataset_dir / "manifest.txt"));
    CHECK(fs::exists(rc.dataset_dir / "run_generate.txt"));
    CHECK(fs::exists(rc.model_dir / "model.dcem"));
    CHECK(fs::exists(rc.model_dir / "normalize.txt"));
    CHECK(fs::exists(rc.model_dir / "train_log.csv"));
    CHECK(fs::exists(rc.model_dir / "run_train.txt"));
    CHECK(fs::exists(rc.output_dir / "pred_tile_0003.gtil"));
    CHECK(fs::exists(rc.output_dir / "run_infer.txt"));
    CHECK(fs::exists(rc.output_dir / "eval_report.txt"));

    const metrics::EvalReport rep = metrics::EvalReport::load(rc.output_dir / "eval_report.txt");
    CHECK(rep.text("tiles") == "1");
    CHECK(rep.text("pixels.total") == "576");
    CHECK(rep.number("cloud.threshold") == 0.5);
    CHECK(rep.maybe_number("sr.rmse.all"));
    CHECK(rep.maybe_number("calibration.q90"));  // bayes mode carries variance

    // The checkpoint reloads into a usable model.
    const model::DcModel net = model::load_checkpoint(rc.model_dir / "model.dcem");
    CHECK(net.config().hidden_units == 16);
    CHECK(net.config().input_channels == 8);

    SUBCASE("a second run without --force refuses to clobber") {
        std::ostringstream sink;
        CHECK_THROWS_AS(cmd_generate(rc, false, sink), ConfigError);
        CHECK_THROWS_AS(cmd_train(rc, false, sink), ConfigError);
        CHECK_THROWS_AS(cmd_infer(rc, false, sink), ConfigError);
        CHECK_THROWS_AS(cmd_evaluate(rc, false, sink), ConfigError);
    }
    SUBCASE("--force regenerates in place") {
        std::ostringstream sink;
        cmd_evaluate(rc, true, sink);
        CHECK(fs::exists(rc.output_dir / "eval_report.txt"));
    }
    SUBCASE("bench reports a slowdown ratio above one") {
        std::ostringstream sink;
        cmd_bench(rc, sink);
        CHECK(fs::exists(rc.output_dir / "bench.csv"));
        const auto run = parse_kv_block(io::read_file(rc.output_dir / "run_bench.txt"),
                                        "bench run");
        CHECK(parse_double(run.at("ratio_bayes_over_static"), "ratio") > 1.0);
    }
}

TEST_CASE("identical seeds reproduce the evaluation byte for byte") {
    std::ostringstream log;
    const fs::path dir_a = temp_dir("repro_a");
    const fs::path dir_b = temp_dir("repro_b");
    const RunConfig rc_a = RunConfig::load(write_config(dir_a, kTinyConfig));
    const RunConfig rc_b = RunConfig::load(write_config(dir_b, kTinyConfig));
    run_pipeline(rc_a, log);
    run_pipeline(rc_b, log);

    const std::string rep_a = io::read_file(rc_a.output_dir / "eval_report.txt");
    const std::string rep_b = io::read_file(rc_b.output_dir / "eval_report.txt");
    CHECK(rep_a == rep_b);

    const std::string ckpt_a = io::read_file(rc_a.model_dir / "model.dcem");
    const std::string ckpt_b = io::read_file(rc_b.model_dir / "model.dcem");
    CHECK(ckpt_a == ckpt_b);

    // A different seed must actually change the run.
    const fs::path dir_c = temp_dir("repro_c");
    RunConfig rc_c = RunConfig::load(write_config(dir_c, kTinyConfig));
    rc_c.apply_seed_override(123456);
    run_pipeline(rc_c, log);
    CHECK(io::read_file(rc_c.output_dir / "eval_report.txt") != rep_a);
}

TEST_CASE("static inference omits sampling but still writes moments") {
    std::ostringstream log;
    const fs::path dir = temp_dir("static_mode");
    RunConfig rc = RunConfig::load(write_config(dir, kTinyConfig));
    rc.infer_mode = "static";
    cmd_generate(rc, false, log);
    cmd_train(rc, false, log);
    cmd_infer(rc, false, log);
    cmd_evaluate(rc, false, log);
    const metrics::EvalReport rep =
        metrics::EvalReport::load(rc.output_dir / "eval_report.txt");
    CHECK(rep.maybe_number("sr.rmse.all"));
    CHECK(rep.maybe_number("uncertainty.mean_var.b0"));  // aleatoric head output
}

TEST_CASE("missing inputs map to data errors, not crashes") {
    std::ostringstream sink;
    const fs::path dir = temp_dir("errors");
    const RunConfig rc = RunConfig::load(write_config(dir, kTinyConfig));
    CHECK_THROWS_AS(cmd_train(rc, false, sink), DataError);     // no dataset yet
    CHECK_THROWS_AS(cmd_infer(rc, false, sink), DataError);     // no checkpoint
    CHECK_THROWS_AS(cmd_evaluate(rc, false, sink), DataError);  // no predictions
    CHECK_THROWS_AS(cmd_bench(rc, sink), DataError);
}

#ifdef EMU_BINARY
TEST_CASE("the executable maps error kinds onto exit codes") {
    const fs::path dir = temp_dir("binary");
    const fs::path cfg = write_config(dir, kTinyConfig);
    const std::string bin = EMU_BINARY;
    const auto exit_code = [](int status) { return WEXITSTATUS(status); };

    const std::string quiet = " > /dev/null 2>&1";
    CHECK(exit_code(std::system((bin + " --help" + quiet).c_str())) == 0);
    CHECK(exit_code(std::system((bin + quiet).c_str())) == 2);  // missing subcommand
    CHECK(exit_code(std::system((bin + " explode --config x" + quiet).c_str())) == 2);
    CHECK(exit_code(std::system(
              (bin + " generate --config " + (dir / "absent.cfg").string() + quiet).c_str())) ==
          2);  // unreadable config file is a usage problem
    CHECK(exit_code(std::system(
              (bin + " train --config " + cfg.string() + quiet).c_str())) == 3);  // no dataset

    CHECK(exit_code(std::system(
              (bin + " generate --config " + cfg.string() + quiet).c_str())) == 0);
    CHECK(exit_code(std::system(
              (bin + " generate --config " + cfg.string() + quiet).c_str())) == 2);  // no --force
    CHECK(exit_code(std::system(
              (bin + " generate --config " + cfg.string() + " --force" + quiet).c_str())) == 0);

    CHECK(exit_code(std::system(
              (bin + " train --config " + cfg.string() + " --arch nosuch" + quiet).c_str())) ==
          2);
}
#endif
