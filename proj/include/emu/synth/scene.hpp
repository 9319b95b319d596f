#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "emu/core/rng.hpp"
#include "emu/io/gtil.hpp"

namespace emu::synth {

inline constexpr std::size_t kBands = 6;

// Per-band optical constants and the landscape reflectance prior.
struct BandTable {
    double wavelength_um;   // band center
    double path_coeff;      // saturating path-reflectance amplitude
    double absorption;      // gaseous absorption strength
    double smax;            // spherical albedo ceiling
    double sr_mean;         // mean surface reflectance of generated scenes
};

const std::array<BandTable, kBands>& band_table();

struct AtmosphereCoeffs {
    double rho_path;       // additive path reflectance
    double transmittance;  // two-way total transmittance
    double spherical;      // spherical albedo of the atmosphere
};

// Band-resolved coefficients for one viewing geometry. aod is at 0.55um and
// follows an Angstrom-type spectral slope; mu_s/mu_v are solar/view cosines.
AtmosphereCoeffs atmosphere_coeffs(std::size_t band, double aod, double mu_s, double mu_v);

// Clear-sky top-of-atmosphere reflectance:
//   toa = rho_path + t * sr / (1 - S * sr), clipped to [0, 1].
// All coefficients vanish appropriately at aod = 0, so with an overhead sun
// and nadir view the mapping degenerates to the identity toa = sr.
double toa_forward_pixel(std::size_t band, double sr, double aod, double mu_s, double mu_v);

struct SceneConfig {
    std::size_t height = 100;
    std::size_t width = 100;
    double cloud_fraction = 0.3;
    std::size_t classes = 4;
    std::size_t cell = 16;  // correlation length of the value-noise fields
    std::size_t blur = 2;
    double aod_min = 0.05;
    double aod_max = 0.8;
    double sza_min_deg = 15.0;
    double sza_max_deg = 65.0;
    double view_zenith_deg = 0.0;
    double albedo_min = 0.6;
    double albedo_max = 0.95;

    void validate() const;
};

// Smoothly varying standardized random field (coarse lattice, bilinear
// upsample, box blur, then normalized to zero mean and unit variance).
std::vector<double> smooth_field(std::size_t h, std::size_t w, std::size_t cell,
                                 std::size_t blur, Rng& rng);

// Renders one fully labeled scene. Channels, in order:
//   toa_b0..toa_b5, cos_sza, aod, cos_vza, sr_b0..sr_b5, clear, class
// clear is 1 on cloud-free pixels; class is a landcover id in [0, classes).
// Cloud cover is exact: round(cloud_fraction * pixels) pixels are cloudy.
io::Tile generate_scene(const SceneConfig& cfg, std::uint64_t seed);

}  // namespace emu::synth
