#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "macap/channel.hpp"

namespace macap {

struct QueueTrace {
  std::vector<double> occupancy;  // bits, recorded after burn-in
  double arrival = 0.0;           // bits/s/Hz
  long frames = 0;
  bool unstable = false;  // arrival at or above the mean service rate
  std::string warning;
};

struct DecayEstimate {
  double theta_hat = 0.0;
  double std_error = 0.0;
  int n_points = 0;  // thresholds used in the fit
};

struct TailHistogram {
  std::vector<double> q;        // thresholds, bits
  std::vector<double> ln_prob;  // ln Pr(Q >= q)
};

// Lindley recursion Q <- max(Q + (a - r)*T*B, 0); service rates are redrawn
// i.i.d. from the (rates, weights) table with a fresh stream seeded by
// `seed`. Burn-in: first 10% of frames dropped.
QueueTrace simulate_queue(const std::vector<double>& rates,
                          const std::vector<double>& weights, double arrival,
                          long frames, const SystemParams& params,
                          std::uint64_t seed);

// Least-squares slope of ln Pr(Q >= q) over thresholds spanning the 50th to
// 99th percentile of positive occupancy; needs >= 100 positive samples.
DecayEstimate estimate_decay(const QueueTrace& trace);

// Export view of the empirical tail on n_bins thresholds.
TailHistogram tail_histogram(const QueueTrace& trace, int n_bins);

}  // namespace macap
