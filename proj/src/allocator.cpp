#include "isacdt/allocator.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace isacdt {

std::string to_string(AllocMode mode) {
  switch (mode) {
    case AllocMode::CommPriority: return "cp";
    case AllocMode::SensingPriority: return "sp";
    case AllocMode::Equal: return "equal";
  }
  return "cp";
}

AllocMode parse_alloc_mode(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "cp") return AllocMode::CommPriority;
  if (s == "sp") return AllocMode::SensingPriority;
  if (s == "equal") return AllocMode::Equal;
  throw std::invalid_argument("unknown allocator mode '" + std::string(text) + "' (expected cp, sp or equal)");
}

namespace {
// Grants (first, second) with `first` served before `second`.
std::pair<int, int> prioritized(int total, int first, int second) {
  if (first > total) return {total, 0};
  if (first + second > total) return {first, total - first};
  return {first, second};
}
}  // namespace

AllocationDecision allocate(int total, int demand_c, int demand_s, AllocMode mode) {
  AllocationDecision d;
  d.mode = mode;
  d.demand_c = std::max(0, demand_c);
  d.demand_s = std::max(0, demand_s);
  switch (mode) {
    case AllocMode::CommPriority: {
      auto [c, s] = prioritized(total, d.demand_c, d.demand_s);
      d.n_c = c;
      d.n_s = s;
      break;
    }
    case AllocMode::SensingPriority: {
      auto [s, c] = prioritized(total, d.demand_s, d.demand_c);
      d.n_s = s;
      d.n_c = c;
      break;
    }
    case AllocMode::Equal:
      d.n_s = total / 2;
      d.n_c = total / 2;
      break;
  }
  d.feasible_c = d.demand_c <= total && d.n_c >= d.demand_c;
  d.feasible_s = d.demand_s <= total && d.n_s >= d.demand_s;
  return d;
}

double p1_objective(const P1Weights& w, double x_var, double xibar_sq, int n_s, int n_c, double rate_bps,
                    double rate_target_bps) {
  return w.alpha1 * std::max(x_var - xibar_sq, 0.0) + w.alpha2 * static_cast<double>(n_s + n_c) +
         w.alpha3 * std::max(rate_target_bps - rate_bps, 0.0);
}

}  // namespace isacdt
