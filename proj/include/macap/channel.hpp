#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "macap/common.hpp"

namespace macap {

// Noise variance is fixed at 1, so pbar is the noise-normalized SNR budget.
struct SystemParams {
  double pbar = 1.0;
  double bandwidth_hz = 100.0;
  double frame_seconds = 1.0;
  double n() const { return bandwidth_hz * frame_seconds; }  // n = TB
};

struct RicianSpec {
  double k_factor_db = -300.0;  // -inf dB -> Rayleigh
  double mean_power = 1.0;      // E{z}
};

struct ChannelSample {
  cplx h1, h2;
  double z1, z2;  // |h1|^2, |h2|^2
  double weight;
};

struct FadingEnsemble {
  std::vector<ChannelSample> samples;
  std::uint64_t seed = 0;
  RicianSpec spec1, spec2;
};

// splitmix64-seeded xoshiro256**; portable and reproducible across platforms.
struct Rng {
  std::uint64_t s[4];
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  double next_unit();            // (0,1]
  double next_normal();          // N(0,1), Box-Muller (one value per call pair)
  cplx next_cnormal();           // CN(0,1)
  std::uint64_t next_below(std::uint64_t bound);
 private:
  bool have_spare_ = false;
  double spare_ = 0.0;
};

cplx draw_rician(Rng& rng, const RicianSpec& spec);

FadingEnsemble sample_ensemble(const RicianSpec& spec1, const RicianSpec& spec2,
                               int n, std::uint64_t seed);

// density of z = |h|^2 (noncentral chi-square with 2 dof)
double rician_pdf(double z, const RicianSpec& spec);

// log I0 with a large-argument asymptotic branch
double log_bessel_i0(double x);

template <class F>
double expect(const FadingEnsemble& e, F&& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < e.samples.size(); ++i) {
    double v = f(e.samples[i]);
    if (!std::isfinite(v))
      throw numeric_error("expect: non-finite value at sample " + std::to_string(i));
    acc += e.samples[i].weight * v;
  }
  return acc;
}

void write_ensemble_csv(const FadingEnsemble& e, const std::string& path,
                        const std::string& header_comment);

}  // namespace macap
