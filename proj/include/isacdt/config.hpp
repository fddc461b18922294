#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

namespace isacdt {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kPi = std::numbers::pi;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent per-purpose seed streams.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

/// Radio constants shared by the sensing and communication models.
///
/// Defaults reproduce the mmWave setup: 28 GHz carrier, 120 kHz spacing,
/// 512 subcarriers, 128 symbols, 25 dBm transmit power, 33 dB / 3 dBi
/// gains, 8 dB noise figure and a (6400, 5120) point periodogram. The RCS,
/// noise density and array size are not part of that table and are
/// configurable.
struct OfdmConfig {
  double carrier_hz = 28e9;
  double subcarrier_spacing_hz = 120e3;
  int num_subcarriers = 512;
  int num_symbols = 128;
  double symbol_duration_s = 8.92e-6;
  double tx_power_w = dbm_to_watt(25.0);
  double tx_gain = db_to_linear(33.0);
  double rx_gain = db_to_linear(3.0);
  double noise_figure = db_to_linear(8.0);
  double noise_density_w_per_hz = dbm_to_watt(-174.0);
  double rcs_m2 = 1.0;
  int periodogram_subcarriers = 6400;
  int periodogram_symbols = 5120;
  int array_rows = 8;
  int array_cols = 8;
  // Element spacings in wavelengths.
  double row_spacing_wl = 0.5;
  double col_spacing_wl = 0.5;

  double wavelength_m() const { return kSpeedOfLight / carrier_hz; }
  double row_spacing_m() const { return row_spacing_wl * wavelength_m(); }
  double col_spacing_m() const { return col_spacing_wl * wavelength_m(); }
  /// Per-subcarrier thermal noise power N0 * F * delta_f.
  double subcarrier_noise_w() const {
    return noise_density_w_per_hz * noise_figure * subcarrier_spacing_hz;
  }

  /// Throws std::invalid_argument when a field violates its invariant.
  void validate() const;
};

/// Uplink pilot parameters for the MMSE channel estimate.
struct PilotConfig {
  int pilot_length = 16;
  int coherence_length = 256;
  double pilot_power_w = dbm_to_watt(25.0);
  // Unset: pilot noise follows the data noise floor N0 * F * delta_f * n_c.
  std::optional<double> pilot_noise_w;
  // Large-scale fading grows linearly with n_c as in the reference model;
  // switch off for sensitivity studies.
  bool fading_scales_with_nc = true;

  double data_fraction() const {
    return static_cast<double>(coherence_length - pilot_length) / coherence_length;
  }
  void validate() const;
};

}  // namespace isacdt
