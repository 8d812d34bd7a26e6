#include "macap/queue_sim.hpp"

#include <algorithm>
#include <cmath>

#include "macap/common.hpp"

namespace macap {
namespace {

double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double idx = p * (sorted.size() - 1);
  const std::size_t i = static_cast<std::size_t>(idx);
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = idx - static_cast<double>(i);
  return sorted[i] * (1.0 - frac) + sorted[i + 1] * frac;
}

}  // namespace

QueueTrace simulate_queue(const std::vector<double>& rates,
                          const std::vector<double>& weights, double arrival,
                          long frames, const SystemParams& params,
                          std::uint64_t seed) {
  if (rates.empty() || rates.size() != weights.size())
    throw std::invalid_argument("rate table and weights must match");
  if (!(arrival > 0.0)) throw std::invalid_argument("arrival must be > 0");
  if (frames < 10000) throw std::invalid_argument("frames must be >= 1e4");

  // cumulative weights for table resampling
  std::vector<double> cum(weights.size());
  double acc = 0.0, mean_rate = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0))
      throw std::invalid_argument("negative ensemble weight");
    acc += weights[i];
    cum[i] = acc;
    mean_rate += weights[i] * rates[i];
  }
  if (!(acc > 0.0)) throw std::invalid_argument("zero total weight");
  for (auto& c : cum) c /= acc;
  mean_rate /= acc;

  QueueTrace tr;
  tr.arrival = arrival;
  tr.frames = frames;
  if (arrival >= mean_rate) {
    tr.unstable = true;
    tr.warning = "arrival rate >= mean service rate; queue diverges";
  }

  const double tb = params.n();
  const double in_bits = arrival * tb;
  const long burn = frames / 10;
  tr.occupancy.reserve(static_cast<std::size_t>(frames - burn));
  Rng rng(seed);
  double q = 0.0;
  for (long t = 0; t < frames; ++t) {
    const double u = rng.next_unit();
    const std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    const double r = rates[std::min(idx, rates.size() - 1)];
    q = std::max(q + in_bits - r * tb, 0.0);
    if (t >= burn) tr.occupancy.push_back(q);
  }
  return tr;
}

DecayEstimate estimate_decay(const QueueTrace& trace) {
  std::vector<double> pos;
  pos.reserve(trace.occupancy.size());
  for (double v : trace.occupancy)
    if (v > 0.0) pos.push_back(v);
  if (pos.size() < 100)
    throw estimation_error("insufficient tail mass: " +
                           std::to_string(pos.size()) +
                           " positive occupancy samples (need >= 100)");
  std::sort(pos.begin(), pos.end());
  const double q_lo = sorted_quantile(pos, 0.50);
  const double q_hi = sorted_quantile(pos, 0.99);
  if (!(q_hi > q_lo))
    throw estimation_error("degenerate occupancy distribution");

  std::vector<double> all(trace.occupancy);
  std::sort(all.begin(), all.end());
  const double n_all = static_cast<double>(all.size());

  constexpr int kThresholds = 25;
  std::vector<double> xs, ys;
  for (int i = 0; i < kThresholds; ++i) {
    const double q = q_lo + (q_hi - q_lo) * i / (kThresholds - 1);
    const auto it = std::lower_bound(all.begin(), all.end(), q);
    const double tail = static_cast<double>(all.end() - it) / n_all;
    if (tail <= 0.0) break;
    xs.push_back(q);
    ys.push_back(std::log(tail));
  }
  if (xs.size() < 5)
    throw estimation_error("too few usable tail thresholds");

  // OLS slope and its standard error
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw estimation_error("zero threshold spread");
  const double slope = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double resid = ys[i] - my - slope * (xs[i] - mx);
    ss_res += resid * resid;
  }
  DecayEstimate est;
  est.theta_hat = -slope;
  est.std_error =
      xs.size() > 2 ? std::sqrt(ss_res / (n - 2.0) / sxx) : 0.0;
  est.n_points = static_cast<int>(xs.size());
  return est;
}

TailHistogram tail_histogram(const QueueTrace& trace, int n_bins) {
  if (n_bins < 2) throw std::invalid_argument("n_bins must be >= 2");
  if (trace.occupancy.empty())
    throw std::invalid_argument("empty occupancy trace");
  std::vector<double> all(trace.occupancy);
  std::sort(all.begin(), all.end());
  const double q_hi = sorted_quantile(all, 0.999);
  const double n_all = static_cast<double>(all.size());
  TailHistogram h;
  for (int i = 0; i < n_bins; ++i) {
    const double q = q_hi * i / (n_bins - 1);
    const auto it = std::lower_bound(all.begin(), all.end(), q);
    const double tail = static_cast<double>(all.end() - it) / n_all;
    if (tail <= 0.0) break;
    h.q.push_back(q);
    h.ln_prob.push_back(std::log(tail));
  }
  return h;
}

}  // namespace macap
