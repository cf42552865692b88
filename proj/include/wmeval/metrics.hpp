#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wmeval/reward.hpp"

namespace wmeval {

double plcc(std::span<const double> predicted, std::span<const double> actual);
double srcc(std::span<const double> predicted, std::span<const double> actual);
double accuracy(std::span<const int> predicted, std::span<const int> actual);

// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// One evaluated item: ground truth plus the model's response (parsed or not).
struct EvalRecord {
  std::string id;
  std::string method;
  GroundTruth gt;
  std::optional<ParsedResponse> prediction;  // empty on format failure
};

struct MethodReport {
  std::string method;
  bool residual = true;
  std::size_t n_items = 0;
  double format_failure_rate = 0.0;
  // Residual rows. Empty when undefined (constant vectors or fewer than two usable pairs).
  std::optional<double> plcc;
  std::optional<double> srcc;
  std::optional<double> security_acc;  // mean of the three per-flag accuracies
  // Semantic rows.
  std::optional<double> quality_acc;
  std::optional<double> semantic_security_acc;
};

// Groups records by method (a method must not mix residual and semantic truths).
// Format failures are excluded from every metric and counted in the failure rate;
// wrong-category predictions count as misses for the accuracies and are left
// out of PLCC/SRCC.
std::vector<MethodReport> build_report(std::span<const EvalRecord> records);

// Canonical column order: DwtDct, RivaGAN, HiDDeN, RW, VINE, SS, RingID,
// Tree-Ring, Lossless. Other methods follow alphabetically.
std::vector<MethodReport> order_methods(std::vector<MethodReport> rows);

std::string report_csv(std::span<const MethodReport> rows);
// Fixed-width table: one column per method, "PLCC/SRCC/Acc" or "QAcc/SAcc" cells, "None" for undefined.
std::string report_text(std::span<const MethodReport> rows);

}  // namespace wmeval
