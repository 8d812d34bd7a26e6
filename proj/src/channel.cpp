#include "macap/channel.hpp"

#include <cmath>
#include <fstream>

namespace macap {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& v : s) v = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  std::uint64_t result = rotl(s[1] * 5, 7) * 9;
  std::uint64_t t = s[1] << 17;
  s[2] ^= s[0];
  s[3] ^= s[1];
  s[1] ^= s[2];
  s[0] ^= s[3];
  s[2] ^= t;
  s[3] = rotl(s[3], 45);
  return result;
}

double Rng::next_unit() {
  return ((next_u64() >> 11) + 1) * 0x1p-53;  // (0,1]
}

double Rng::next_normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = next_unit(), u2 = next_unit();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

cplx Rng::next_cnormal() {
  double u1 = next_unit(), u2 = next_unit();
  double r = std::sqrt(-std::log(u1));  // sqrt of Exp(1) = |CN(0,1)|
  double a = 2.0 * M_PI * u2;
  return cplx(r * std::cos(a), r * std::sin(a));
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
  // Lemire rejection-free-ish bounded draw
  unsigned __int128 m = (unsigned __int128)next_u64() * bound;
  std::uint64_t lo = (std::uint64_t)m;
  if (lo < bound) {
    std::uint64_t t = (0 - bound) % bound;
    while (lo < t) {
      m = (unsigned __int128)next_u64() * bound;
      lo = (std::uint64_t)m;
    }
  }
  return (std::uint64_t)(m >> 64);
}

cplx draw_rician(Rng& rng, const RicianSpec& spec) {
  double K = db_to_linear(spec.k_factor_db);
  double nu = K / (K + 1.0);  // LOS power fraction
  double los = std::sqrt(nu * spec.mean_power);
  double diff = std::sqrt((1.0 - nu) * spec.mean_power);
  return los + diff * rng.next_cnormal();
}

FadingEnsemble sample_ensemble(const RicianSpec& spec1, const RicianSpec& spec2,
                               int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_ensemble: n must be >= 1");
  if (!(spec1.mean_power > 0.0) || !(spec2.mean_power > 0.0))
    throw std::invalid_argument("sample_ensemble: mean_power must be positive");
  FadingEnsemble e;
  e.seed = seed;
  e.spec1 = spec1;
  e.spec2 = spec2;
  e.samples.resize(n);
  Rng rng(seed);
  double w = 1.0 / n;
  for (auto& s : e.samples) {
    s.h1 = draw_rician(rng, spec1);
    s.h2 = draw_rician(rng, spec2);
    s.z1 = std::norm(s.h1);
    s.z2 = std::norm(s.h2);
    s.weight = w;
  }
  return e;
}

double log_bessel_i0(double x) {
  x = std::abs(x);
  if (x < 600.0) return std::log(std::cyl_bessel_i(0.0, x));
  // I0(x) ~ e^x / sqrt(2 pi x) * (1 + 1/(8x) + 9/(128 x^2) + ...)
  double inv = 1.0 / x;
  double series = 1.0 + inv / 8.0 + 9.0 * inv * inv / 128.0;
  return x - 0.5 * std::log(2.0 * M_PI * x) + std::log(series);
}

double rician_pdf(double z, const RicianSpec& spec) {
  if (z < 0.0) throw std::invalid_argument("rician_pdf: z must be >= 0");
  double K = db_to_linear(spec.k_factor_db);
  double om = spec.mean_power;
  // f(z) = ((K+1)/om) exp(-K - (K+1) z/om) I0(2 sqrt(K (K+1) z/om))
  double a = (K + 1.0) / om;
  double logf = std::log(a) - K - a * z + log_bessel_i0(2.0 * std::sqrt(K * a * z));
  return std::exp(logf);
}

void write_ensemble_csv(const FadingEnsemble& e, const std::string& path,
                        const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "index,re_h1,im_h1,re_h2,im_h2,weight\n";
  for (std::size_t i = 0; i < e.samples.size(); ++i) {
    const auto& s = e.samples[i];
    out << i << ',' << fmt_double(s.h1.real()) << ',' << fmt_double(s.h1.imag())
        << ',' << fmt_double(s.h2.real()) << ',' << fmt_double(s.h2.imag())
        << ',' << fmt_double(s.weight) << '\n';
  }
}

}  // namespace macap
