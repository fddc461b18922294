#include "isacdt/config.hpp"

#include <stdexcept>
#include <string>

namespace isacdt {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("invalid configuration: ") + what);
}
}  // namespace

void OfdmConfig::validate() const {
  require(carrier_hz > 0, "carrier_hz must be positive");
  require(subcarrier_spacing_hz > 0, "subcarrier_spacing_hz must be positive");
  require(num_subcarriers > 0, "num_subcarriers must be positive");
  require(num_symbols > 0, "num_symbols must be positive");
  require(symbol_duration_s > 0, "symbol_duration_s must be positive");
  require(tx_power_w > 0 && tx_gain > 0 && rx_gain > 0, "power and gains must be positive");
  require(noise_figure > 0 && noise_density_w_per_hz > 0, "noise parameters must be positive");
  require(rcs_m2 > 0, "rcs_m2 must be positive");
  require(periodogram_subcarriers >= num_subcarriers,
          "periodogram_subcarriers must be >= num_subcarriers");
  require(periodogram_symbols >= num_symbols, "periodogram_symbols must be >= num_symbols");
  require(array_rows > 0 && array_cols > 0, "array dimensions must be positive");
  require(row_spacing_wl > 0 && col_spacing_wl > 0, "antenna spacings must be positive");
}

void PilotConfig::validate() const {
  require(pilot_length > 0 && pilot_length < coherence_length,
          "need 0 < pilot_length < coherence_length");
  require(pilot_power_w > 0, "pilot_power_w must be positive");
  require(!pilot_noise_w || *pilot_noise_w > 0, "pilot_noise_w must be positive");
}

}  // namespace isacdt
