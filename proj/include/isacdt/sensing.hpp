#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "isacdt/config.hpp"

namespace isacdt {

class DegenerateCrbError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The elevation-CRB arcsine argument left [-1, 1]; the caller should treat
/// sensing as infeasible for this QI.
class AngleSaturatedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NoPeakError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RadarMeasurement {
  double range_est = 0.0;     // m
  double velocity_est = 0.0;  // m/s, radial
  double sigma_r = 0.0;       // m
  double sigma_v = 0.0;       // m/s
  double sigma_theta = 0.0;   // rad
  double snr_linear = 0.0;
  int n_s_used = 0;
};

/// Received n_s x M frame, row-major (row = subcarrier, column = symbol).
struct FrameMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::complex<double>> data;

  // Ground truth of synthetic frames.
  bool synthetic = false;
  double delay_s = 0.0;
  double doppler_hz = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;

  std::complex<double>& operator()(int n, int m) { return data[static_cast<size_t>(n) * cols + m]; }
  const std::complex<double>& operator()(int n, int m) const {
    return data[static_cast<size_t>(n) * cols + m];
  }
};

/// Mono-static received power P_T G_T G_R b^2 with the point-scatterer
/// attenuation b^2 = c^2 Psi / ((4 pi)^3 r^4 f_c^2).
double received_power(const OfdmConfig& cfg, double range_m);

/// Frame-level sensing SNR; independent of the number of sensing
/// subcarriers and proportional to r^-4.
double sensing_snr(const OfdmConfig& cfg, double range_m);

/// Synthesizes a received frame for a single point target.
///
/// Element (n, m) is A e^{j2pi m T0 fD} e^{-j2pi n tau df} e^{j psi} + Z(n, m)
/// with tau = 2r/c, fD = 2 v f_c / c and psi uniform on [0, 2pi). The
/// amplitude A = sqrt(P_rx / n_s) spreads the received power over the sensing
/// subcarriers and Z has per-element variance N0 F df, so coherent processing
/// of the whole frame yields exactly sensing_snr(). `noise_scale` multiplies
/// the noise standard deviation (0 gives a noiseless frame).
FrameMatrix synthesize_frame(const OfdmConfig& cfg, int n_s, double range_m, double velocity_mps,
                             std::uint64_t seed, double noise_scale = 1.0);

struct PeriodogramPeak {
  double range_est = 0.0;
  double velocity_est = 0.0;
  int range_bin = 0;    // n-hat in [0, N_per)
  int doppler_bin = 0;  // m-hat in [0, M_per)
  double peak_power = 0.0;
};

/// Global argmax of the zero-padded 2-D periodogram
///   Per(n, m) = |sum_k (sum_l F(k,l) e^{-j2pi lm/M_per}) e^{j2pi kn/N_per}|^2 / (N M)
/// converted to range n c / (2 df N_per) and velocity m c / (2 f_c T0 M_per).
/// Doppler bins above M_per / 2 are read as negative velocities. Ties resolve
/// to the smallest (m, n).
PeriodogramPeak periodogram_peak_estimate(const FrameMatrix& frame, const OfdmConfig& cfg);

/// Reusable FFT plans and buffers for repeated periodogram evaluation. Not
/// thread-safe; use one engine per thread.
class PeriodogramEngine {
 public:
  PeriodogramEngine(int fft_subcarriers, int fft_symbols);
  ~PeriodogramEngine();
  PeriodogramEngine(const PeriodogramEngine&) = delete;
  PeriodogramEngine& operator=(const PeriodogramEngine&) = delete;

  PeriodogramPeak find_peak(const FrameMatrix& frame, const OfdmConfig& cfg);

  /// Number of Doppler columns whose range transform was evaluated by the
  /// last find_peak (the rest were pruned by a magnitude bound).
  int columns_evaluated() const { return columns_evaluated_; }

 private:
  struct Plans;
  std::unique_ptr<Plans> plans_;
  int columns_evaluated_ = 0;
};

struct CrbBundle {
  double sigma_r = 0.0;
  double sigma_v = 0.0;
  double sigma_theta = 0.0;
  double sigma_fx = 0.0;  // NAF standard deviation
};

/// Range CRB std (c / (4 pi df)) sqrt(6 / ((n_s^2 - 1) gamma)).
double range_crb_std(const OfdmConfig& cfg, int n_s, double gamma_s);
/// Velocity CRB std (c / (4 pi f_c T0)) sqrt(6 / ((M^2 - 1) gamma)).
double velocity_crb_std(const OfdmConfig& cfg, double gamma_s);
/// Elevation CRB deviation asin((lambda / dc) cos(phi) (l + sigma_fx)) - theta
/// with l = dc sin(theta) / (lambda cos(phi)); uses the "+" branch.
double elevation_crb_std(const OfdmConfig& cfg, double gamma_s, double theta_mean,
                         double phi_azimuth = 0.0);

CrbBundle crb_bundle(const OfdmConfig& cfg, int n_s, double gamma_s, double theta_mean,
                     double phi_azimuth = 0.0);

}  // namespace isacdt
