#pragma once

#include <string>
#include <string_view>

namespace isacdt {

enum class AllocMode { CommPriority, SensingPriority, Equal };

std::string to_string(AllocMode mode);
/// Accepts "cp", "sp" and "equal" (case-insensitive).
AllocMode parse_alloc_mode(std::string_view text);

struct AllocationDecision {
  int n_s = 0;
  int n_c = 0;
  int demand_s = 0;  // > N encodes an infeasible sensing demand
  int demand_c = 0;  // > N encodes a communication overflow
  AllocMode mode = AllocMode::CommPriority;
  bool feasible_s = false;  // grant covers the sensing demand
  bool feasible_c = false;  // grant covers the communication demand
};

/// Splits N subcarriers between sensing and communication.
///
/// CommPriority: an unmeetable communication demand takes the whole band;
/// otherwise communication is served in full and sensing gets what fits.
/// SensingPriority mirrors this with sensing first. Equal always grants
/// N/2 to each.
AllocationDecision allocate(int total, int demand_c, int demand_s, AllocMode mode);

struct P1Weights {
  double alpha1 = 0.6;
  double alpha2 = 0.1;
  double alpha3 = 0.3;
};

/// alpha1 max(x_var - xibar^2, 0) + alpha2 (n_s + n_c) + alpha3 max(R_target - R, 0).
/// Reported per QI; allocation itself is rule-based.
double p1_objective(const P1Weights& w, double x_var, double xibar_sq, int n_s, int n_c, double rate_bps,
                    double rate_target_bps);

}  // namespace isacdt
