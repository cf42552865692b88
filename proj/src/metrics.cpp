#include "wmeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "wmeval/error.hpp"

namespace wmeval {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::kParameter, "paired scores must have equal lengths");
  if (a.size() < 2) throw Error(ErrorKind::kParameter, "correlation needs at least two pairs");
}

std::string fmt3(const std::optional<double>& v) {
  if (!v) return "None";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

std::string fmt6(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace

double plcc(std::span<const double> predicted, std::span<const double> actual) {
  check_pair(predicted, actual);
  const auto n = static_cast<double>(predicted.size());
  const double mp = std::accumulate(predicted.begin(), predicted.end(), 0.0) / n;
  const double ma = std::accumulate(actual.begin(), actual.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double dx = predicted[i] - mp;
    const double dy = actual[i] - ma;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::kDegenerate, "correlation of a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double srcc(std::span<const double> predicted, std::span<const double> actual) {
  check_pair(predicted, actual);
  const auto rp = average_ranks(predicted);
  const auto ra = average_ranks(actual);
  return plcc(rp, ra);
}

double accuracy(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) throw Error(ErrorKind::kParameter, "accuracy needs equal lengths");
  if (predicted.empty()) throw Error(ErrorKind::kParameter, "accuracy of an empty array");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == actual[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<MethodReport> build_report(std::span<const EvalRecord> records) {
  std::map<std::string, std::vector<const EvalRecord*>> groups;
  std::vector<std::string> first_seen;
  for (const auto& r : records) {
    auto [it, inserted] = groups.try_emplace(r.method);
    if (inserted) first_seen.push_back(r.method);
    it->second.push_back(&r);
  }

  std::vector<MethodReport> rows;
  for (const auto& method : first_seen) {
    const auto& items = groups[method];
    MethodReport row;
    row.method = method;
    row.residual = items.front()->gt.is_residual();
    row.n_items = items.size();

    std::size_t failures = 0;
    std::vector<double> pred_q;
    std::vector<double> true_q;
    std::size_t answered = 0;
    std::array<std::size_t, 3> flag_hits{};
    std::size_t sem_q_hits = 0;
    std::size_t sem_s_hits = 0;

    for (const auto* r : items) {
      if (r->gt.is_residual() != row.residual) {
        throw Error(ErrorKind::kCorpus, "method '" + method + "' mixes residual and semantic ground truths");
      }
      if (!r->prediction) {
        ++failures;
        continue;
      }
      ++answered;
      const auto& p = *r->prediction;
      if (p.category != r->gt.category()) continue;
      if (row.residual) {
        pred_q.push_back(*p.residual_quality);
        true_q.push_back(r->gt.residual().quality);
        const auto& t = r->gt.residual().security;
        flag_hits[0] += p.flags->jpeg == t.jpeg;
        flag_hits[1] += p.flags->gaussian == t.gaussian;
        flag_hits[2] += p.flags->filter == t.filter;
      } else {
        sem_q_hits += *p.semantic_quality == r->gt.semantic().quality;
        sem_s_hits += *p.semantic_security == r->gt.semantic().security;
      }
    }

    row.format_failure_rate = static_cast<double>(failures) / static_cast<double>(items.size());
    if (answered > 0) {
      const auto n = static_cast<double>(answered);
      if (row.residual) {
        row.security_acc = (flag_hits[0] + flag_hits[1] + flag_hits[2]) / (3.0 * n);
        try {
          row.plcc = plcc(pred_q, true_q);
          row.srcc = srcc(pred_q, true_q);
        } catch (const Error&) {
          // degenerate or too few pairs: reported as None
        }
      } else {
        row.quality_acc = static_cast<double>(sem_q_hits) / n;
        row.semantic_security_acc = static_cast<double>(sem_s_hits) / n;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<MethodReport> order_methods(std::vector<MethodReport> rows) {
  static const std::vector<std::string> kCanonical = {"DwtDct", "RivaGAN", "HiDDeN",    "RW",      "VINE",
                                                      "SS",     "RingID",  "Tree-Ring", "Lossless"};
  auto key = [](const MethodReport& r) {
    const auto it = std::find(kCanonical.begin(), kCanonical.end(), r.method);
    return std::make_pair(static_cast<std::size_t>(it - kCanonical.begin()), r.method);
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  return rows;
}

std::string report_csv(std::span<const MethodReport> rows) {
  std::ostringstream out;
  out << "method,type,n,format_failure_rate,plcc,srcc,security_acc,quality_acc,semantic_security_acc\n";
  for (const auto& r : rows) {
    out << r.method << ',' << (r.residual ? "residual" : "semantic") << ',' << r.n_items << ','
        << fmt6(r.format_failure_rate) << ',' << fmt6(r.plcc) << ',' << fmt6(r.srcc) << ','
        << fmt6(r.security_acc) << ',' << fmt6(r.quality_acc) << ',' << fmt6(r.semantic_security_acc) << '\n';
  }
  return out.str();
}

std::string report_text(std::span<const MethodReport> rows) {
  std::vector<std::string> headers;
  std::vector<std::string> cells;
  std::vector<std::string> failure_cells;
  for (const auto& r : rows) {
    headers.push_back(r.method);
    if (r.residual) {
      cells.push_back(fmt3(r.plcc) + "/" + fmt3(r.srcc) + "/" + fmt3(r.security_acc));
    } else {
      cells.push_back(fmt3(r.quality_acc) + "/" + fmt3(r.semantic_security_acc));
    }
    failure_cells.push_back(fmt3(r.format_failure_rate));
  }
  std::vector<std::size_t> widths(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    widths[i] = std::max({headers[i].size(), cells[i].size(), failure_cells[i].size()});
  }
  constexpr std::size_t kLabelWidth = 14;
  auto line = [&](const std::string& label, const std::vector<std::string>& values) {
    std::string s = label + std::string(kLabelWidth - label.size(), ' ');
    for (std::size_t i = 0; i < values.size(); ++i) {
      s += " | " + values[i] + std::string(widths[i] - values[i].size(), ' ');
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  return line("method", headers) + line("score", cells) + line("format_fail", failure_cells);
}

}  // namespace wmeval
