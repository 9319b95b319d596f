#include "emu/model/config.hpp"

#include "emu/core/error.hpp"
#include "emu/core/text.hpp"

namespace emu::model {

const char* arch_name(Arch a) {
    switch (a) {
        case Arch::dcfc: return "dcfc";
        case Arch::dccnn: return "dccnn";
        case Arch::dcvdsr: return "dcvdsr";
    }
    return "dcfc";
}

Arch arch_from_name(const std::string& s) {
    if (s == "dcfc") return Arch::dcfc;
    if (s == "dccnn") return Arch::dccnn;
    if (s == "dcvdsr") return Arch::dcvdsr;
    throw ConfigError("unknown architecture '" + s + "' (expected dcfc, dccnn or dcvdsr)");
}

const char* variance_mode_name(VarianceMode m) {
    return m == VarianceMode::per_band ? "per_band" : "scalar";
}

VarianceMode variance_mode_from_name(const std::string& s) {
    if (s == "per_band") return VarianceMode::per_band;
    if (s == "scalar") return VarianceMode::scalar;
    throw ConfigError("unknown variance mode '" + s + "' (expected per_band or scalar)");
}

std::size_t ModelConfig::output_channels() const {
    return variance_mode == VarianceMode::per_band ? 2 * bands + 1 : bands + 2;
}

void ModelConfig::validate() const {
    if (input_channels == 0) throw ConfigError("input_channels must be positive");
    if (bands == 0) throw ConfigError("bands must be positive");
    if (hidden_layers == 0) throw ConfigError("hidden_layers must be positive");
    if (hidden_units == 0) throw ConfigError("hidden_units must be positive");
    if (dropout_temperature <= 0.0) throw ConfigError("dropout_temperature must be positive");
    if (initial_dropout_rate <= 0.0 || initial_dropout_rate >= 1.0) {
        throw ConfigError("initial_dropout_rate must lie strictly inside (0, 1)");
    }
    if (length_scale_sq <= 0.0) throw ConfigError("length_scale_sq must be positive");
    if (model_precision <= 0.0) throw ConfigError("model_precision must be positive");
}

std::map<std::string, std::string> ModelConfig::to_kv() const {
    std::map<std::string, std::string> kv;
    kv["arch"] = arch_name(arch);
    kv["input_channels"] = std::to_string(input_channels);
    kv["bands"] = std::to_string(bands);
    kv["hidden_layers"] = std::to_string(hidden_layers);
    kv["hidden_units"] = std::to_string(hidden_units);
    kv["variance_mode"] = variance_mode_name(variance_mode);
    kv["dropout_on_head"] = dropout_on_head ? "true" : "false";
    kv["dropout_temperature"] = format_double(dropout_temperature);
    kv["initial_dropout_rate"] = format_double(initial_dropout_rate);
    kv["length_scale_sq"] = format_double(length_scale_sq);
    kv["model_precision"] = format_double(model_precision);
    return kv;
}

namespace {
const std::string& want(const std::map<std::string, std::string>& kv, const std::string& key,
                        const std::string& context) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(context + ": missing key '" + key + "'");
    return it->second;
}
}  // namespace

ModelConfig ModelConfig::from_kv(const std::map<std::string, std::string>& kv,
                                 const std::string& context) {
    ModelConfig c;
    c.arch = arch_from_name(want(kv, "arch", context));
    c.input_channels = static_cast<std::size_t>(parse_int(want(kv, "input_channels", context),
                                                          context + ".input_channels"));
    c.bands = static_cast<std::size_t>(parse_int(want(kv, "bands", context), context + ".bands"));
    c.hidden_layers = static_cast<std::size_t>(parse_int(want(kv, "hidden_layers", context),
                                                         context + ".hidden_layers"));
    c.hidden_units = static_cast<std::size_t>(parse_int(want(kv, "hidden_units", context),
                                                        context + ".hidden_units"));
    c.variance_mode = variance_mode_from_name(want(kv, "variance_mode", context));
    c.dropout_on_head = parse_bool(want(kv, "dropout_on_head", context), context + ".dropout_on_head");
    c.dropout_temperature = parse_double(want(kv, "dropout_temperature", context),
                                         context + ".dropout_temperature");
    c.initial_dropout_rate = parse_double(want(kv, "initial_dropout_rate", context),
                                          context + ".initial_dropout_rate");
    c.length_scale_sq = parse_double(want(kv, "length_scale_sq", context),
                                     context + ".length_scale_sq");
    c.model_precision = parse_double(want(kv, "model_precision", context),
                                     context + ".model_precision");
    c.validate();
    return c;
}

}  // namespace emu::model
