#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wmeval {

// One-dimensional concatenation of latent values. Holds n >= 8 finite values.
class LatentSample {
 public:
  static constexpr std::size_t kMinSize = 8;

  explicit LatentSample(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
};

enum class NormalityTest { kCramerVonMises, kJarqueBera, kDagostinoK2 };

const char* to_string(NormalityTest test) noexcept;

struct TestResult {
  NormalityTest test;
  double statistic;  // >= 0
  double p_value;    // in [kPValueFloor, 1]
};

// p-values are never reported below this, so tiny tail probabilities stay ordered.
inline constexpr double kPValueFloor = 1e-300;

TestResult cramer_von_mises(const LatentSample& sample);
TestResult jarque_bera(const LatentSample& sample);
TestResult dagostino_k2(const LatentSample& sample);

// Fixed order: Cramer-von Mises, Jarque-Bera, D'Agostino K^2.
std::array<TestResult, 3> run_all_tests(const LatentSample& sample);

enum class LatentKind { kStandardNormal, kMixturePm2, kStudentT5, kQuantizedPm1 };

LatentKind latent_kind_from_string(const std::string& name);
const char* to_string(LatentKind kind) noexcept;

LatentSample synth_latents(LatentKind kind, std::size_t n, std::uint64_t seed);

// Flat little-endian float32 file, or a single-column CSV (blank lines and a
// non-numeric header line are skipped).
LatentSample read_latents_f32(const std::string& path);
LatentSample read_latents_csv(const std::string& path);

// Building blocks, exposed for closed-form checks.
namespace stats {

double normal_cdf(double x) noexcept;

// W^2 against a fully specified N(0,1); defined for any n >= 1.
double cvm_statistic(std::span<const double> values);

// Limiting distribution of W^2. The CDF uses the Bessel-K series; the upper
// tail integrates Smirnov's representation so small p-values keep precision.
double cvm_asymptotic_cdf(double w2);
double cvm_asymptotic_sf(double w2);

struct Moments {
  double mean;
  double m2;  // biased central moments
  double m3;
  double m4;
  double skewness() const;         // m3 / m2^{3/2}
  double excess_kurtosis() const;  // m4 / m2^2 - 3
};

Moments central_moments(std::span<const double> values);

double jarque_bera_statistic(double n, double skewness, double excess_kurtosis) noexcept;
double chi2_df2_sf(double x) noexcept;

// D'Agostino's skewness transform and the Anscombe-Glynn kurtosis transform.
double skewness_z(double skewness, double n);
double kurtosis_z(double kurtosis, double n);  // kurtosis is m4/m2^2 (not excess)

}  // namespace stats

}  // namespace wmeval
