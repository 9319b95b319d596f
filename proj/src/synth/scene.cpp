#include "emu/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "emu/core/error.hpp"

namespace emu::synth {

const std::array<BandTable, kBands>& band_table() {
    // Blue, green, red, NIR, SWIR1, SWIR2.
    static const std::array<BandTable, kBands> kTable = {{
        {0.46, 0.16, 0.03, 0.28, 0.064},
        {0.51, 0.13, 0.03, 0.25, 0.084},
        {0.64, 0.09, 0.04, 0.20, 0.155},
        {0.86, 0.05, 0.04, 0.14, 0.307},
        {1.60, 0.02, 0.05, 0.08, 0.327},
        {2.30, 0.012, 0.06, 0.05, 0.231},
    }};
    return kTable;
}

AtmosphereCoeffs atmosphere_coeffs(std::size_t band, double aod, double mu_s, double mu_v) {
    if (band >= kBands) throw DomainError("atmosphere_coeffs: band out of range");
    if (!(aod >= 0.0) || aod > 5.0) throw DomainError("atmosphere_coeffs: aod outside [0, 5]");
    if (!(mu_s > 0.0) || mu_s > 1.0 || !(mu_v > 0.0) || mu_v > 1.0) {
        throw DomainError("atmosphere_coeffs: geometry cosines must lie in (0, 1]");
    }
    const BandTable& b = band_table()[band];
    // Angstrom-type spectral scaling of the 0.55um optical depth.
    const double tau = aod * std::pow(0.55 / b.wavelength_um, 1.3);
    const double airmass = 0.5 * (1.0 / mu_s + 1.0 / mu_v);
    const double direct = std::exp(-tau * airmass);
    AtmosphereCoeffs c;
    c.rho_path = b.path_coeff * (1.0 - direct);
    c.transmittance = direct * (1.0 - b.absorption * (1.0 - mu_s));
    c.spherical = b.smax * (1.0 - std::exp(-tau));
    return c;
}

double toa_forward_pixel(std::size_t band, double sr, double aod, double mu_s, double mu_v) {
    if (!(sr >= 0.0) || sr >= 1.0) throw DomainError("toa_forward_pixel: sr outside [0, 1)");
    const AtmosphereCoeffs c = atmosphere_coeffs(band, aod, mu_s, mu_v);
    const double toa = c.rho_path + c.transmittance * sr / (1.0 - c.spherical * sr);
    return std::clamp(toa, 0.0, 1.0);
}

void SceneConfig::validate() const {
    if (height == 0 || width == 0) throw ConfigError("scene dimensions must be positive");
    if (cloud_fraction < 0.0 || cloud_fraction > 1.0) {
        throw ConfigError("cloud_fraction must lie in [0, 1]");
    }
    if (classes == 0) throw ConfigError("classes must be positive");
    if (cell == 0) throw ConfigError("cell must be positive");
    if (aod_min < 0.0 || aod_max > 5.0 || aod_min > aod_max) {
        throw ConfigError("aod range must satisfy 0 <= min <= max <= 5");
    }
    if (sza_min_deg < 0.0 || sza_max_deg >= 90.0 || sza_min_deg > sza_max_deg) {
        throw ConfigError("solar zenith range must satisfy 0 <= min <= max < 90");
    }
    if (view_zenith_deg < 0.0 || view_zenith_deg >= 90.0) {
        throw ConfigError("view zenith must lie in [0, 90)");
    }
    if (albedo_min < 0.0 || albedo_max > 1.0 || albedo_min > albedo_max) {
        throw ConfigError("albedo range must satisfy 0 <= min <= max <= 1");
    }
}

std::vector<double> smooth_field(std::size_t h, std::size_t w, std::size_t cell,
                                 std::size_t blur, Rng& rng) {
    const std::size_t gh = h / cell + 2;
    const std::size_t gw = w / cell + 2;
    std::vector<double> lattice(gh * gw);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& v : lattice) v = gauss(rng);

    std::vector<double> field(h * w);
    const double inv_cell = 1.0 / static_cast<double>(cell);
    for (std::size_t y = 0; y < h; ++y) {
        const double fy = static_cast<double>(y) * inv_cell;
        const std::size_t iy = static_cast<std::size_t>(fy);
        const double ty = fy - static_cast<double>(iy);
        for (std::size_t x = 0; x < w; ++x) {
            const double fx = static_cast<double>(x) * inv_cell;
            const std::size_t ix = static_cast<std::size_t>(fx);
            const double tx = fx - static_cast<double>(ix);
            const double a = lattice[iy * gw + ix];
            const double b = lattice[iy * gw + ix + 1];
            const double c = lattice[(iy + 1) * gw + ix];
            const double d = lattice[(iy + 1) * gw + ix + 1];
            field[y * w + x] =
                a * (1 - ty) * (1 - tx) + b * (1 - ty) * tx + c * ty * (1 - tx) + d * ty * tx;
        }
    }

    if (blur > 0) {
        std::vector<double> tmp(h * w);
        const long r = static_cast<long>(blur);
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                double s = 0.0;
                long cnt = 0;
                for (long dx = -r; dx <= r; ++dx) {
                    const long xx = static_cast<long>(x) + dx;
                    if (xx < 0 || xx >= static_cast<long>(w)) continue;
                    s += field[y * w + static_cast<std::size_t>(xx)];
                    ++cnt;
                }
                tmp[y * w + x] = s / static_cast<double>(cnt);
            }
        }
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                double s = 0.0;
                long cnt = 0;
                for (long dy = -r; dy <= r; ++dy) {
                    const long yy = static_cast<long>(y) + dy;
                    if (yy < 0 || yy >= static_cast<long>(h)) continue;
                    s += tmp[static_cast<std::size_t>(yy) * w + x];
                    ++cnt;
                }
                field[y * w + x] = s / static_cast<double>(cnt);
            }
        }
    }

    double mean = 0.0;
    for (double v : field) mean += v;
    mean /= static_cast<double>(field.size());
    double var = 0.0;
    for (double v : field) var += (v - mean) * (v - mean);
    var /= static_cast<double>(field.size());
    const double sd = std::sqrt(std::max(var, 1e-24));
    for (double& v : field) v = (v - mean) / sd;
    return field;
}

namespace {

double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Value above which exactly k of the n entries sit (k largest). k = 0 yields
// an unreachable bound.
double kth_largest_threshold(const std::vector<double>& v, std::size_t k) {
    if (k == 0) return std::numeric_limits<double>::infinity();
    std::vector<double> sorted(v);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(k - 1), sorted.end(),
                     std::greater<double>());
    return sorted[k - 1];
}

}  // namespace

io::Tile generate_scene(const SceneConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const std::size_t h = cfg.height, w = cfg.width, n = h * w;
    const auto& bands = band_table();

    auto field_for = [&](std::uint64_t stream) {
        Rng rng(split_seed(seed, stream));
        return smooth_field(h, w, cfg.cell, cfg.blur, rng);
    };

    // Shared landscape structure plus per-band variation.
    const std::vector<double> common = field_for(0);
    std::array<std::vector<double>, kBands> sr;
    for (std::size_t b = 0; b < kBands; ++b) {
        const std::vector<double> own = field_for(1 + b);
        sr[b].resize(n);
        const double mean = bands[b].sr_mean;
        const double sigma = 0.3 * mean;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = 0.7 * common[i] + 0.3 * own[i];
            sr[b][i] = std::clamp(mean + sigma * f, 0.002, 0.8);
        }
    }

    // Exact cloud coverage via an order statistic of the cloud latent.
    const std::vector<double> cloud_latent = field_for(20);
    const std::size_t cloudy =
        static_cast<std::size_t>(std::llround(cfg.cloud_fraction * static_cast<double>(n)));
    const double cloud_thr = kth_largest_threshold(cloud_latent, cloudy);
    std::vector<double> clear(n);
    for (std::size_t i = 0; i < n; ++i) clear[i] = cloud_latent[i] >= cloud_thr ? 0.0 : 1.0;

    const std::vector<double> aod_field = field_for(21);
    const std::vector<double> sza_field = field_for(22);
    const std::vector<double> albedo_field = field_for(23);

    std::vector<double> aod(n), cos_sza(n), albedo(n);
    const double deg2rad = std::numbers::pi / 180.0;
    for (std::size_t i = 0; i < n; ++i) {
        aod[i] = cfg.aod_min + (cfg.aod_max - cfg.aod_min) * sigmoid_d(aod_field[i]);
        const double sza =
            cfg.sza_min_deg + (cfg.sza_max_deg - cfg.sza_min_deg) * sigmoid_d(sza_field[i]);
        cos_sza[i] = std::cos(sza * deg2rad);
        albedo[i] = cfg.albedo_min + (cfg.albedo_max - cfg.albedo_min) * sigmoid_d(albedo_field[i]);
    }
    const double mu_v = std::cos(cfg.view_zenith_deg * deg2rad);

    // Equal-count landcover classes from the shared landscape field.
    std::vector<double> sorted_common(common);
    std::sort(sorted_common.begin(), sorted_common.end());
    std::vector<double> thresholds;
    for (std::size_t c = 1; c < cfg.classes; ++c) {
        thresholds.push_back(sorted_common[c * n / cfg.classes]);
    }
    std::vector<double> class_map(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t id = 0;
        while (id < thresholds.size() && common[i] >= thresholds[id]) ++id;
        class_map[i] = static_cast<double>(id);
    }

    io::Tile tile;
    tile.height = h;
    tile.width = w;
    for (std::size_t b = 0; b < kBands; ++b) {
        auto& toa = tile.add_channel("toa_b" + std::to_string(b));
        for (std::size_t i = 0; i < n; ++i) {
            toa[i] = clear[i] == 1.0
                         ? toa_forward_pixel(b, sr[b][i], aod[i], cos_sza[i], mu_v)
                         : std::clamp(albedo[i], 0.0, 1.0);
        }
    }
    tile.add_channel("cos_sza") = cos_sza;
    tile.add_channel("aod") = aod;
    tile.add_channel("cos_vza").assign(n, mu_v);
    for (std::size_t b = 0; b < kBands; ++b) {
        tile.add_channel("sr_b" + std::to_string(b)) = sr[b];
    }
    tile.add_channel("clear") = clear;
    tile.add_channel("class") = class_map;
    return tile;
}

}  // namespace emu::synth
