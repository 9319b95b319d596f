#pragma once

#include <cstddef>
#include <map>
#include <string>

namespace emu::model {

enum class Arch { dcfc, dccnn, dcvdsr };
enum class VarianceMode { per_band, scalar };

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& s);
const char* variance_mode_name(VarianceMode m);
VarianceMode variance_mode_from_name(const std::string& s);

struct ModelConfig {
    Arch arch = Arch::dcfc;
    std::size_t input_channels = 8;
    std::size_t bands = 6;
    std::size_t hidden_layers = 3;
    std::size_t hidden_units = 512;  // dense width or conv channel count
    VarianceMode variance_mode = VarianceMode::per_band;
    bool dropout_on_head = false;
    double dropout_temperature = 0.1;
    double initial_dropout_rate = 0.1;
    double length_scale_sq = 1e-14;  // squared prior length-scale
    double model_precision = 1e-5;   // tau

    // per_band: bands means + bands log-variances + 1 cloud logit.
    // scalar:   bands means + 1 shared log-variance + 1 cloud logit.
    std::size_t output_channels() const;

    void validate() const;
    std::map<std::string, std::string> to_kv() const;
    static ModelConfig from_kv(const std::map<std::string, std::string>& kv,
                               const std::string& context);
};

}  // namespace emu::model
