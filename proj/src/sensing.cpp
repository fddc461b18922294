#include "isacdt/sensing.hpp"

#include <cmath>
#include <string>

namespace isacdt {

namespace {
void require_positive_range(double range_m) {
  if (!(range_m > 0.0)) throw std::domain_error("range must be positive, got " + std::to_string(range_m));
}
}  // namespace

double received_power(const OfdmConfig& cfg, double range_m) {
  require_positive_range(range_m);
  const double c = kSpeedOfLight;
  const double four_pi_cubed = std::pow(4.0 * kPi, 3);
  const double b_sq = c * c * cfg.rcs_m2 /
                      (four_pi_cubed * std::pow(range_m, 4) * cfg.carrier_hz * cfg.carrier_hz);
  return cfg.tx_power_w * cfg.tx_gain * cfg.rx_gain * b_sq;
}

double sensing_snr(const OfdmConfig& cfg, double range_m) {
  require_positive_range(range_m);
  const double c = kSpeedOfLight;
  const double num = cfg.tx_power_w * cfg.tx_gain * cfg.rx_gain * cfg.rcs_m2 * c * c * cfg.num_symbols;
  const double den = std::pow(4.0 * kPi, 3) * std::pow(range_m, 4) * cfg.carrier_hz * cfg.carrier_hz *
                     cfg.noise_density_w_per_hz * cfg.noise_figure * cfg.subcarrier_spacing_hz;
  return num / den;
}

FrameMatrix synthesize_frame(const OfdmConfig& cfg, int n_s, double range_m, double velocity_mps,
                             std::uint64_t seed, double noise_scale) {
  if (n_s < 1 || n_s > cfg.num_subcarriers)
    throw std::domain_error("n_s out of range [1, N]: " + std::to_string(n_s));
  if (range_m < 0.0) throw std::domain_error("range must be non-negative");

  Rng rng(seed);
  std::uniform_real_distribution<double> uniform_phase(0.0, 2.0 * kPi);
  std::normal_distribution<double> n01(0.0, 1.0);

  FrameMatrix f;
  f.rows = n_s;
  f.cols = cfg.num_symbols;
  f.data.resize(static_cast<size_t>(f.rows) * f.cols);
  f.synthetic = true;
  f.delay_s = 2.0 * range_m / kSpeedOfLight;
  f.doppler_hz = 2.0 * velocity_mps * cfg.carrier_hz / kSpeedOfLight;
  // r = 0 is allowed here as the zero-delay limit; the amplitude then uses r = 1 m.
  f.amplitude = std::sqrt(received_power(cfg, range_m > 0.0 ? range_m : 1.0) / n_s);
  f.phase = uniform_phase(rng);

  const double noise_std = noise_scale * std::sqrt(cfg.subcarrier_noise_w() / 2.0);
  const double w_sym = 2.0 * kPi * cfg.symbol_duration_s * f.doppler_hz;
  const double w_sub = -2.0 * kPi * f.delay_s * cfg.subcarrier_spacing_hz;
  for (int n = 0; n < f.rows; ++n) {
    for (int m = 0; m < f.cols; ++m) {
      // Reduce phases modulo 2 pi in the index domain to limit rounding growth.
      const double ph = std::remainder(w_sym * m, 2.0 * kPi) + std::remainder(w_sub * n, 2.0 * kPi) + f.phase;
      std::complex<double> v = std::polar(f.amplitude, ph);
      if (noise_scale != 0.0) {
        const double re = n01(rng);
        const double im = n01(rng);
        v += std::complex<double>(noise_std * re, noise_std * im);
      }
      f(n, m) = v;
    }
  }
  return f;
}

double range_crb_std(const OfdmConfig& cfg, int n_s, double gamma_s) {
  if (n_s < 2) throw DegenerateCrbError("range CRB needs at least 2 subcarriers");
  if (!(gamma_s > 0.0)) throw std::domain_error("sensing SNR must be positive");
  const double nn = static_cast<double>(n_s);
  return kSpeedOfLight / (4.0 * kPi * cfg.subcarrier_spacing_hz) * std::sqrt(6.0 / ((nn * nn - 1.0) * gamma_s));
}

double velocity_crb_std(const OfdmConfig& cfg, double gamma_s) {
  if (!(gamma_s > 0.0)) throw std::domain_error("sensing SNR must be positive");
  if (cfg.num_symbols < 2) throw DegenerateCrbError("velocity CRB needs at least 2 symbols");
  const double mm = static_cast<double>(cfg.num_symbols);
  return kSpeedOfLight / (4.0 * kPi * cfg.carrier_hz * cfg.symbol_duration_s) *
         std::sqrt(6.0 / ((mm * mm - 1.0) * gamma_s));
}

double elevation_crb_std(const OfdmConfig& cfg, double gamma_s, double theta_mean, double phi_azimuth) {
  if (!(gamma_s > 0.0)) throw std::domain_error("sensing SNR must be positive");
  if (cfg.array_rows < 2) throw DegenerateCrbError("elevation CRB needs at least 2 array rows");
  const double cos_phi = std::cos(phi_azimuth);
  if (cos_phi == 0.0) throw std::domain_error("azimuth at +-pi/2 leaves the NAF undefined");
  const double rows = static_cast<double>(cfg.array_rows);
  const double sigma_fx = std::sqrt(6.0 / ((rows * rows - 1.0) * 4.0 * kPi * kPi * gamma_s));
  const double lambda = cfg.wavelength_m();
  const double dc = cfg.col_spacing_m();
  const double naf = dc * std::sin(theta_mean) / (lambda * cos_phi);
  const double arg = lambda / dc * cos_phi * (naf + sigma_fx);
  if (arg > 1.0 || arg < -1.0)
    throw AngleSaturatedError("elevation CRB arcsine argument outside [-1, 1]: " + std::to_string(arg));
  return std::asin(arg) - theta_mean;
}

CrbBundle crb_bundle(const OfdmConfig& cfg, int n_s, double gamma_s, double theta_mean, double phi_azimuth) {
  CrbBundle b;
  b.sigma_r = range_crb_std(cfg, n_s, gamma_s);
  b.sigma_v = velocity_crb_std(cfg, gamma_s);
  b.sigma_theta = elevation_crb_std(cfg, gamma_s, theta_mean, phi_azimuth);
  const double rows = static_cast<double>(cfg.array_rows);
  b.sigma_fx = std::sqrt(6.0 / ((rows * rows - 1.0) * 4.0 * kPi * kPi * gamma_s));
  return b;
}

}  // namespace isacdt
