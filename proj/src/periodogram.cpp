#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "isacdt/sensing.hpp"

namespace isacdt {

namespace {
// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct PeriodogramEngine::Plans {
  int n_fft = 0;
  int m_fft = 0;
  fftw_complex* doppler_buf = nullptr;
  fftw_complex* range_buf = nullptr;
  fftw_plan doppler_plan = nullptr;
  fftw_plan range_plan = nullptr;
  std::vector<std::complex<double>> spectrum;  // column-major: [m * rows + k]
  std::vector<double> bound;
  std::vector<int> order;

  Plans(int n, int m) : n_fft(n), m_fft(m) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    doppler_buf = fftw_alloc_complex(static_cast<size_t>(m));
    range_buf = fftw_alloc_complex(static_cast<size_t>(n));
    // FFTW_ESTIMATE keeps the chosen algorithm, and therefore the rounding,
    // identical from run to run.
    doppler_plan = fftw_plan_dft_1d(m, doppler_buf, doppler_buf, FFTW_FORWARD, FFTW_ESTIMATE);
    range_plan = fftw_plan_dft_1d(n, range_buf, range_buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(doppler_plan);
    fftw_destroy_plan(range_plan);
    fftw_free(doppler_buf);
    fftw_free(range_buf);
  }
};

PeriodogramEngine::PeriodogramEngine(int fft_subcarriers, int fft_symbols)
    : plans_(std::make_unique<Plans>(fft_subcarriers, fft_symbols)) {}

PeriodogramEngine::~PeriodogramEngine() = default;

PeriodogramPeak PeriodogramEngine::find_peak(const FrameMatrix& frame, const OfdmConfig& cfg) {
  auto& p = *plans_;
  if (frame.rows <= 0 || frame.cols <= 0 || frame.data.empty()) throw NoPeakError("empty frame");
  if (frame.rows > p.n_fft || frame.cols > p.m_fft)
    throw std::invalid_argument("frame larger than the periodogram grid");
  const bool all_zero = std::all_of(frame.data.begin(), frame.data.end(),
                                    [](const std::complex<double>& z) { return z == std::complex<double>{}; });
  if (all_zero) throw NoPeakError("all-zero frame has no periodogram peak");

  const int rows = frame.rows;
  const int n_fft = p.n_fft;
  const int m_fft = p.m_fft;
  const double norm = 1.0 / (static_cast<double>(cfg.num_subcarriers) * cfg.num_symbols);

  // Symbol-axis FFT of every subcarrier row.
  p.spectrum.assign(static_cast<size_t>(rows) * m_fft, {});
  for (int k = 0; k < rows; ++k) {
    std::fill_n(reinterpret_cast<double*>(p.doppler_buf), 2 * static_cast<size_t>(m_fft), 0.0);
    for (int l = 0; l < frame.cols; ++l) {
      p.doppler_buf[l][0] = frame(k, l).real();
      p.doppler_buf[l][1] = frame(k, l).imag();
    }
    fftw_execute(p.doppler_plan);
    for (int m = 0; m < m_fft; ++m)
      p.spectrum[static_cast<size_t>(m) * rows + k] = {p.doppler_buf[m][0], p.doppler_buf[m][1]};
  }

  // |sum_k X_k e^{j..}|^2 <= (sum_k |X_k|)^2 bounds every range bin of a
  // Doppler column, so columns are visited by decreasing bound and the scan
  // stops once no remaining column can beat the current peak.
  p.bound.resize(m_fft);
  for (int m = 0; m < m_fft; ++m) {
    double s = 0.0;
    const auto* col = &p.spectrum[static_cast<size_t>(m) * rows];
    for (int k = 0; k < rows; ++k) s += std::abs(col[k]);
    p.bound[m] = s * s * norm;
  }
  p.order.resize(m_fft);
  std::iota(p.order.begin(), p.order.end(), 0);
  std::stable_sort(p.order.begin(), p.order.end(), [&](int a, int b) { return p.bound[a] > p.bound[b]; });

  double best = -1.0;
  int best_n = 0;
  int best_m = 0;
  columns_evaluated_ = 0;
  for (int m : p.order) {
    if (p.bound[m] * (1.0 + 1e-9) < best) break;
    ++columns_evaluated_;
    std::fill_n(reinterpret_cast<double*>(p.range_buf), 2 * static_cast<size_t>(n_fft), 0.0);
    const auto* col = &p.spectrum[static_cast<size_t>(m) * rows];
    for (int k = 0; k < rows; ++k) {
      p.range_buf[k][0] = col[k].real();
      p.range_buf[k][1] = col[k].imag();
    }
    fftw_execute(p.range_plan);
    for (int n = 0; n < n_fft; ++n) {
      const double re = p.range_buf[n][0];
      const double im = p.range_buf[n][1];
      const double pw = (re * re + im * im) * norm;
      if (pw > best || (pw == best && (m < best_m || (m == best_m && n < best_n)))) {
        best = pw;
        best_n = n;
        best_m = m;
      }
    }
  }

  PeriodogramPeak peak;
  peak.range_bin = best_n;
  peak.doppler_bin = best_m;
  peak.peak_power = best;
  const int signed_m = best_m > m_fft / 2 ? best_m - m_fft : best_m;
  peak.range_est = best_n * kSpeedOfLight / (2.0 * cfg.subcarrier_spacing_hz * n_fft);
  peak.velocity_est = signed_m * kSpeedOfLight / (2.0 * cfg.carrier_hz * cfg.symbol_duration_s * m_fft);
  return peak;
}

PeriodogramPeak periodogram_peak_estimate(const FrameMatrix& frame, const OfdmConfig& cfg) {
  thread_local std::unique_ptr<PeriodogramEngine> engine;
  thread_local int n_cached = 0;
  thread_local int m_cached = 0;
  if (!engine || n_cached != cfg.periodogram_subcarriers || m_cached != cfg.periodogram_symbols) {
    engine = std::make_unique<PeriodogramEngine>(cfg.periodogram_subcarriers, cfg.periodogram_symbols);
    n_cached = cfg.periodogram_subcarriers;
    m_cached = cfg.periodogram_symbols;
  }
  return engine->find_peak(frame, cfg);
}

}  // namespace isacdt
