#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "emu/metrics/report.hpp"
#include "emu/model/config.hpp"
#include "emu/model/train.hpp"
#include "emu/synth/dataset.hpp"

namespace emu::cli {

// One flat "key = value" file drives every subcommand; unknown keys are
// rejected so typos cannot silently fall back to defaults.
struct RunConfig {
    std::filesystem::path dataset_dir = "data";
    std::filesystem::path model_dir = "model";
    std::filesystem::path output_dir = "out";

    synth::DatasetConfig dataset;       // scene geometry, split sizes, seed
    synth::PatchSpec patch;             // training window grid
    model::ModelConfig model;           // architecture and prior scales
    model::TrainConfig train;           // optimizer schedule

    std::string infer_split = "test";
    std::string infer_mode = "bayes";   // bayes | static
    std::size_t infer_samples = 30;
    std::uint64_t infer_seed = 0;

    metrics::EvalConfig eval;

    std::size_t bench_warmup = 3;
    std::size_t bench_trials = 5;
    std::size_t bench_samples = 10;

    // CRC32 of the config file text; stamped into every run manifest.
    std::uint32_t config_crc32 = 0;

    // Relative paths in the file resolve against its parent directory.
    static RunConfig load(const std::filesystem::path& path);
    void validate() const;  // throws ConfigError

    // The --seed flag retargets every stochastic phase at once.
    void apply_seed_override(std::uint64_t seed);
};

}  // namespace emu::cli
