#include "wmeval/latent_stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "wmeval/error.hpp"

namespace wmeval {

LatentSample::LatentSample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < kMinSize) {
    throw Error(ErrorKind::kSample, "latent sample needs at least " + std::to_string(kMinSize) +
                                        " values, got " + std::to_string(values_.size()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(ErrorKind::kSample, "latent value at index " + std::to_string(i) + " is not finite");
    }
  }
}

const char* to_string(NormalityTest test) noexcept {
  switch (test) {
    case NormalityTest::kCramerVonMises: return "cramer_von_mises";
    case NormalityTest::kJarqueBera: return "jarque_bera";
    case NormalityTest::kDagostinoK2: return "dagostino_k2";
  }
  return "unknown";
}

namespace stats {

namespace {

constexpr int kGaussNodes = 64;

struct GaussLegendre {
  std::array<double, kGaussNodes> nodes{};  // on [-1, 1]
  std::array<double, kGaussNodes> weights{};

  GaussLegendre() {
    for (int i = 0; i < kGaussNodes; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (kGaussNodes + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= kGaussNodes; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = kGaussNodes * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

const GaussLegendre& gauss_legendre() {
  static const GaussLegendre rule;
  return rule;
}

// Smirnov: P(W^2 > x) = (1/pi) sum_k (-1)^{k+1} int_{(2k-1)pi}^{2k pi}
//   2 sqrt(-s / sin s) exp(-x s^2 / 2) / s ds.
// The cosine substitution s = a + (b-a)(1-cos t)/2 cancels the inverse
// square-root endpoint singularities, leaving a smooth integrand in t.
double smirnov_tail(double x) {
  const auto& rule = gauss_legendre();
  double total = 0.0;
  for (int k = 1; k <= 64; ++k) {
    const double a = (2.0 * k - 1.0) * std::numbers::pi;
    const double b = 2.0 * k * std::numbers::pi;
    double integral = 0.0;
    for (int i = 0; i < kGaussNodes; ++i) {
      const double t = std::numbers::pi * (rule.nodes[i] + 1.0) / 2.0;
      const double s = a + (b - a) * (1.0 - std::cos(t)) / 2.0;
      const double jac = (b - a) * std::sin(t) / 2.0;
      const double f = 2.0 * std::sqrt(-s / std::sin(s)) * std::exp(-x * s * s / 2.0) / s;
      integral += rule.weights[i] * f * jac;
    }
    integral *= std::numbers::pi / 2.0;
    total += (k % 2 == 1 ? integral : -integral);
    if (std::abs(integral) <= 1e-18 * std::abs(total) || integral == 0.0) break;
  }
  return total / std::numbers::pi;
}

}  // namespace

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double cvm_statistic(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::kSample, "Cramer-von Mises statistic of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double w2 = 1.0 / (12.0 * n);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double d = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n) - normal_cdf(sorted[i]);
    w2 += d * d;
  }
  return w2;
}

double cvm_asymptotic_cdf(double w2) {
  if (!(w2 > 0.0)) return 0.0;
  if (std::isinf(w2)) return 1.0;
  double total = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double y = 4.0 * k + 1.0;
    const double q = y * y / (16.0 * w2);
    if (q > 700.0) break;  // exp(-q) K(q) underflows
    const double coef = std::exp(std::lgamma(k + 0.5) - std::lgamma(k + 1.0)) /
                        (std::pow(std::numbers::pi, 1.5) * std::sqrt(w2));
    const double term = coef * std::sqrt(y) * std::exp(-q) * std::cyl_bessel_k(0.25, q);
    total += term;
    if (k >= 5 && std::abs(term) < 1e-17) break;
  }
  return std::clamp(total, 0.0, 1.0);
}

double cvm_asymptotic_sf(double w2) {
  if (!(w2 > 0.0)) return 1.0;
  if (std::isinf(w2)) return 0.0;
  // Below 0.2 the tail probability exceeds 0.26, so 1 - CDF loses nothing.
  if (w2 < 0.2) return std::clamp(1.0 - cvm_asymptotic_cdf(w2), 0.0, 1.0);
  return std::clamp(smirnov_tail(w2), 0.0, 1.0);
}

double Moments::skewness() const {
  if (!(m2 > 0.0)) throw Error(ErrorKind::kDegenerate, "sample variance is zero");
  return m3 / std::pow(m2, 1.5);
}

double Moments::excess_kurtosis() const {
  if (!(m2 > 0.0)) throw Error(ErrorKind::kDegenerate, "sample variance is zero");
  return m4 / (m2 * m2) - 3.0;
}

Moments central_moments(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::kSample, "moments of an empty sample");
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  return {mean, m2 / n, m3 / n, m4 / n};
}

double jarque_bera_statistic(double n, double skewness, double excess_kurtosis) noexcept {
  return n / 6.0 * (skewness * skewness + excess_kurtosis * excess_kurtosis / 4.0);
}

double chi2_df2_sf(double x) noexcept {
  if (!(x > 0.0)) return 1.0;
  return std::exp(-x / 2.0);
}

double skewness_z(double skewness, double n) {
  if (n < 8) throw Error(ErrorKind::kSample, "skewness transform needs n >= 8");
  const double y = skewness * std::sqrt((n + 1.0) * (n + 3.0) / (6.0 * (n - 2.0)));
  const double beta2 = 3.0 * (n * n + 27.0 * n - 70.0) * (n + 1.0) * (n + 3.0) /
                       ((n - 2.0) * (n + 5.0) * (n + 7.0) * (n + 9.0));
  const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
  const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
  const double alpha = std::sqrt(2.0 / (w2 - 1.0));
  return delta * std::asinh(y / alpha);
}

double kurtosis_z(double kurtosis, double n) {
  if (n < 8) throw Error(ErrorKind::kSample, "kurtosis transform needs n >= 8");
  const double expected = 3.0 * (n - 1.0) / (n + 1.0);
  const double variance = 24.0 * n * (n - 2.0) * (n - 3.0) / ((n + 1.0) * (n + 1.0) * (n + 3.0) * (n + 5.0));
  const double x = (kurtosis - expected) / std::sqrt(variance);
  const double sqrt_beta1 = 6.0 * (n * n - 5.0 * n + 2.0) / ((n + 7.0) * (n + 9.0)) *
                            std::sqrt(6.0 * (n + 3.0) * (n + 5.0) / (n * (n - 2.0) * (n - 3.0)));
  const double a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + std::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
  const double term1 = 1.0 - 2.0 / (9.0 * a);
  const double denom = 1.0 + x * std::sqrt(2.0 / (a - 4.0));
  if (denom == 0.0) throw Error(ErrorKind::kDegenerate, "kurtosis transform undefined (zero denominator)");
  const double term2 = std::copysign(std::cbrt((1.0 - 2.0 / a) / std::abs(denom)), denom);
  return (term1 - term2) / std::sqrt(2.0 / (9.0 * a));
}

}  // namespace stats

namespace {

double clamp_p(double p) { return std::clamp(p, kPValueFloor, 1.0); }

}  // namespace

TestResult cramer_von_mises(const LatentSample& sample) {
  const double w2 = stats::cvm_statistic(sample.values());
  return {NormalityTest::kCramerVonMises, w2, clamp_p(stats::cvm_asymptotic_sf(w2))};
}

TestResult jarque_bera(const LatentSample& sample) {
  const auto m = stats::central_moments(sample.values());
  const double jb = stats::jarque_bera_statistic(static_cast<double>(sample.size()), m.skewness(),
                                                 m.excess_kurtosis());
  return {NormalityTest::kJarqueBera, jb, clamp_p(stats::chi2_df2_sf(jb))};
}

TestResult dagostino_k2(const LatentSample& sample) {
  const auto m = stats::central_moments(sample.values());
  const auto n = static_cast<double>(sample.size());
  const double zs = stats::skewness_z(m.skewness(), n);
  const double zk = stats::kurtosis_z(m.excess_kurtosis() + 3.0, n);
  const double k2 = zs * zs + zk * zk;
  return {NormalityTest::kDagostinoK2, k2, clamp_p(stats::chi2_df2_sf(k2))};
}

std::array<TestResult, 3> run_all_tests(const LatentSample& sample) {
  return {cramer_von_mises(sample), jarque_bera(sample), dagostino_k2(sample)};
}

LatentKind latent_kind_from_string(const std::string& name) {
  if (name == "standard_normal") return LatentKind::kStandardNormal;
  if (name == "mixture_pm2") return LatentKind::kMixturePm2;
  if (name == "student_t5") return LatentKind::kStudentT5;
  if (name == "quantized_pm1") return LatentKind::kQuantizedPm1;
  throw Error(ErrorKind::kParameter, "unknown latent kind '" + name + "'");
}

const char* to_string(LatentKind kind) noexcept {
  switch (kind) {
    case LatentKind::kStandardNormal: return "standard_normal";
    case LatentKind::kMixturePm2: return "mixture_pm2";
    case LatentKind::kStudentT5: return "student_t5";
    case LatentKind::kQuantizedPm1: return "quantized_pm1";
  }
  return "unknown";
}

LatentSample synth_latents(LatentKind kind, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(n);
  switch (kind) {
    case LatentKind::kStandardNormal:
      for (auto& x : v) x = gauss(rng);
      break;
    case LatentKind::kMixturePm2: {
      std::bernoulli_distribution side(0.5);
      for (auto& x : v) x = (side(rng) ? 2.0 : -2.0) + gauss(rng);
      break;
    }
    case LatentKind::kStudentT5: {
      // Var(t_5) = 5/3
      std::student_t_distribution<double> t(5.0);
      const double scale = std::sqrt(3.0 / 5.0);
      for (auto& x : v) x = scale * t(rng);
      break;
    }
    case LatentKind::kQuantizedPm1:
      for (auto& x : v) x = gauss(rng) < 0.0 ? -1.0 : 1.0;
      break;
  }
  return LatentSample(std::move(v));
}

LatentSample read_latents_f32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open latent file '" + path + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) {
    throw Error(ErrorKind::kFormat, "latent file '" + path + "' size is not a multiple of 4 bytes");
  }
  std::vector<double> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t raw = 0;
    for (int b = 3; b >= 0; --b) raw = (raw << 8) | static_cast<unsigned char>(bytes[4 * i + b]);
    values[i] = static_cast<double>(std::bit_cast<float>(raw));
  }
  return LatentSample(std::move(values));
}

LatentSample read_latents_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open latent file '" + path + "'");
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r,");
    const std::string cell = line.substr(first, last - first + 1);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) {
      if (values.empty() && line_no == 1) continue;  // header
      throw Error(ErrorKind::kFormat, path + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
    }
    values.push_back(v);
  }
  return LatentSample(std::move(values));
}

}  // namespace wmeval
