#include "wmeval/json_io.hpp"

#include <fstream>
#include <set>

#include "wmeval/error.hpp"

namespace wmeval {

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw Error(ErrorKind::kFormat, std::string(where) + " must be a JSON object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : j.items()) {
    if (!allowed.contains(item.key())) {
      throw Error(ErrorKind::kFormat, std::string("unknown key '") + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("bad value for '") + key + "': " + e.what());
  }
}

int read_int(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number_integer()) throw Error(ErrorKind::kFormat, std::string("'") + key + "' must be an integer");
  return v.get<int>();
}

double read_number(const json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_number()) throw Error(ErrorKind::kFormat, std::string("'") + key + "' must be a number");
  return v.get<double>();
}

std::uint8_t read_flag(const json& j, const char* key) {
  const int v = read_int(j, key);
  if (v != 0 && v != 1) throw Error(ErrorKind::kInvariant, std::string("'") + key + "' must be 0 or 1");
  return static_cast<std::uint8_t>(v);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

DistortionSpec distortion_from_json(const json& j, DistortionSpec base) {
  reject_unknown(j, {"kind", "jpeg_quality", "noise_sigma", "kernel_size"}, "distortion");
  if (j.contains("kind")) base.kind = distortion_kind_from_string(j.at("kind").get<std::string>());
  read_opt(j, "jpeg_quality", base.jpeg_quality);
  read_opt(j, "noise_sigma", base.noise_sigma);
  read_opt(j, "kernel_size", base.kernel_size);
  return base;
}

}  // namespace

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::kFormat, std::string("missing key '") + key + "'");
  return j.at(key);
}

void PipelineConfig::validate() const {
  thresholds.validate();
  psnr_norm.validate();
  reward.validate();
  grpo.validate();
  for (const auto& d : distortions) d.validate();
  watermark.validate();
}

RewardConfig reward_config_from_json(const json& j, RewardConfig base) {
  reject_unknown(j, {"format_penalty", "target_length", "length_tolerance", "quality_tolerance", "length_unit"},
                 "reward config");
  read_opt(j, "format_penalty", base.format_penalty);
  read_opt(j, "target_length", base.target_length);
  read_opt(j, "length_tolerance", base.length_tolerance);
  read_opt(j, "quality_tolerance", base.quality_tolerance);
  if (j.contains("length_unit")) {
    const auto unit = j.at("length_unit").get<std::string>();
    if (unit == "characters" || unit == "chars") {
      base.length_unit = LengthUnit::kCharacters;
    } else if (unit == "words") {
      base.length_unit = LengthUnit::kWords;
    } else {
      throw Error(ErrorKind::kParameter, "length_unit must be 'characters' or 'words'");
    }
  }
  base.validate();
  return base;
}

PipelineConfig config_from_json(const json& j) {
  reject_unknown(j, {"thresholds", "psnr_norm", "reward", "grpo", "distortions", "watermark", "seed", "items", "warm_start"},
                 "config");
  PipelineConfig cfg;
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    reject_unknown(t, {"robust_threshold", "alpha_low", "alpha_mid"}, "thresholds");
    read_opt(t, "robust_threshold", cfg.thresholds.robust_threshold);
    read_opt(t, "alpha_low", cfg.thresholds.alpha_low);
    read_opt(t, "alpha_mid", cfg.thresholds.alpha_mid);
  }
  if (j.contains("psnr_norm")) {
    const auto& p = j.at("psnr_norm");
    reject_unknown(p, {"psnr_low", "psnr_high"}, "psnr_norm");
    read_opt(p, "psnr_low", cfg.psnr_norm.psnr_low);
    read_opt(p, "psnr_high", cfg.psnr_norm.psnr_high);
  }
  if (j.contains("reward")) cfg.reward = reward_config_from_json(j.at("reward"));
  if (j.contains("grpo")) {
    const auto& g = j.at("grpo");
    reject_unknown(g, {"group_size", "clip_eps", "kl_coeff", "learning_rate", "iterations", "seed", "max_grad_norm"},
                   "grpo");
    read_opt(g, "group_size", cfg.grpo.group_size);
    read_opt(g, "clip_eps", cfg.grpo.clip_eps);
    read_opt(g, "kl_coeff", cfg.grpo.kl_coeff);
    read_opt(g, "learning_rate", cfg.grpo.learning_rate);
    read_opt(g, "iterations", cfg.grpo.iterations);
    read_opt(g, "seed", cfg.grpo.seed);
    read_opt(g, "max_grad_norm", cfg.grpo.max_grad_norm);
  }
  if (j.contains("distortions")) {
    const auto& d = j.at("distortions");
    reject_unknown(d, {"jpeg", "gaussian_noise", "median_filter"}, "distortions");
    if (d.contains("jpeg")) cfg.distortions[0] = distortion_from_json(d.at("jpeg"), cfg.distortions[0]);
    if (d.contains("gaussian_noise")) cfg.distortions[1] = distortion_from_json(d.at("gaussian_noise"), cfg.distortions[1]);
    if (d.contains("median_filter")) cfg.distortions[2] = distortion_from_json(d.at("median_filter"), cfg.distortions[2]);
    if (cfg.distortions[0].kind != DistortionKind::kJpeg ||
        cfg.distortions[1].kind != DistortionKind::kGaussianNoise ||
        cfg.distortions[2].kind != DistortionKind::kMedianFilter) {
      throw Error(ErrorKind::kParameter, "distortion kinds cannot be reassigned between attack slots");
    }
  }
  if (j.contains("watermark")) {
    const auto& w = j.at("watermark");
    reject_unknown(w, {"strength", "coeff_index"}, "watermark");
    read_opt(w, "strength", cfg.watermark.strength);
    read_opt(w, "coeff_index", cfg.watermark.coeff_index);
  }
  read_opt(j, "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

json config_to_json(const PipelineConfig& cfg) {
  const char* unit = cfg.reward.length_unit == LengthUnit::kWords ? "words" : "characters";
  return {
      {"thresholds",
       {{"robust_threshold", cfg.thresholds.robust_threshold},
        {"alpha_low", cfg.thresholds.alpha_low},
        {"alpha_mid", cfg.thresholds.alpha_mid}}},
      {"psnr_norm", {{"psnr_low", cfg.psnr_norm.psnr_low}, {"psnr_high", cfg.psnr_norm.psnr_high}}},
      {"reward",
       {{"format_penalty", cfg.reward.format_penalty},
        {"target_length", cfg.reward.target_length},
        {"length_tolerance", cfg.reward.length_tolerance},
        {"quality_tolerance", cfg.reward.quality_tolerance},
        {"length_unit", unit}}},
      {"grpo",
       {{"group_size", cfg.grpo.group_size},
        {"clip_eps", cfg.grpo.clip_eps},
        {"kl_coeff", cfg.grpo.kl_coeff},
        {"learning_rate", cfg.grpo.learning_rate},
        {"iterations", cfg.grpo.iterations},
        {"seed", cfg.grpo.seed},
        {"max_grad_norm", cfg.grpo.max_grad_norm}}},
      {"distortions",
       {{"jpeg", {{"jpeg_quality", cfg.distortions[0].jpeg_quality}}},
        {"gaussian_noise", {{"noise_sigma", cfg.distortions[1].noise_sigma}}},
        {"median_filter", {{"kernel_size", cfg.distortions[2].kernel_size}}}}},
      {"watermark", {{"strength", cfg.watermark.strength}, {"coeff_index", cfg.watermark.coeff_index}}},
      {"seed", cfg.seed},
  };
}

GroundTruth ground_truth_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kFormat, "label must be a JSON object");
  const auto type = require(j, "type").get<std::string>();
  std::optional<Category> category;
  if (j.contains("category")) {
    category = category_from_id(j.at("category").get<std::string>());
    if (!category) throw Error(ErrorKind::kFormat, "unknown category '" + j.at("category").get<std::string>() + "'");
  }
  if (type == "residual") {
    ResidualLabel label;
    label.quality = read_number(j, "quality");
    label.security = {read_flag(j, "jpeg"), read_flag(j, "gaussian"), read_flag(j, "filter")};
    return GroundTruth(category.value_or(Category::kResidual), label);
  }
  if (type == "semantic") {
    SemanticLabel label{read_int(j, "quality"), read_int(j, "security")};
    const Category fallback = label.quality == 3 ? Category::kLosslessSemantic : Category::kRingSemantic;
    return GroundTruth(category.value_or(fallback), label);
  }
  throw Error(ErrorKind::kFormat, "label type must be 'residual' or 'semantic', got '" + type + "'");
}

json residual_label_json(const ResidualLabel& label) {
  return {{"type", "residual"},
          {"quality", label.quality},
          {"jpeg", label.security.jpeg},
          {"gaussian", label.security.gaussian},
          {"filter", label.security.filter}};
}

json semantic_label_json(const SemanticLabel& label) {
  return {{"type", "semantic"}, {"quality", label.quality}, {"security", label.security}};
}

json ground_truth_to_json(const GroundTruth& gt) {
  json j = gt.is_residual() ? residual_label_json(gt.residual()) : semantic_label_json(gt.semantic());
  j["category"] = std::string(category_id(gt.category()));
  return j;
}

json breakdown_to_json(const RewardBreakdown& b) {
  json j = {{"total", b.total},
            {"format_ok", b.format_ok},
            {"category_ok", b.category_ok ? json(*b.category_ok) : json(nullptr)},
            {"r_len", optional_number(b.r_len)},
            {"r_qual", optional_number(b.r_qual)},
            {"r_sec", optional_number(b.r_sec)}};
  if (b.format_failure) j["format_failure"] = to_string(*b.format_failure);
  return j;
}

json parsed_to_json(const ParsedResponse& r) {
  json j = {{"category", std::string(category_id(r.category))}, {"raw_length", r.raw_length}};
  if (r.category == Category::kResidual) {
    j["quality"] = *r.residual_quality;
    j["jpeg"] = r.flags->jpeg;
    j["gaussian"] = r.flags->gaussian;
    j["filter"] = r.flags->filter;
  } else {
    j["quality"] = *r.semantic_quality;
    j["security"] = *r.semantic_security;
  }
  j["think"] = r.think;
  return j;
}

json test_result_to_json(const TestResult& r) {
  return {{"test", to_string(r.test)}, {"statistic", r.statistic}, {"p_value", r.p_value}};
}

std::optional<ParsedResponse> prediction_from_json(const json& record) {
  if (record.contains("response")) {
    auto parsed = parse_response(record.at("response").get<std::string>());
    if (auto* resp = std::get_if<ParsedResponse>(&parsed)) return std::move(*resp);
    return std::nullopt;
  }
  const auto& p = require(record, "prediction");
  if (p.is_null()) return std::nullopt;
  ParsedResponse resp;
  resp.think = p.value("think", std::string("(not recorded)"));
  const auto category = category_from_id(require(p, "category").get<std::string>());
  if (!category) throw Error(ErrorKind::kFormat, "unknown prediction category");
  resp.category = *category;
  if (resp.category == Category::kResidual) {
    resp.residual_quality = read_number(p, "quality");
    resp.flags = SecurityFlags{read_flag(p, "jpeg"), read_flag(p, "gaussian"), read_flag(p, "filter")};
  } else {
    resp.semantic_quality = read_int(p, "quality");
    resp.semantic_security = read_int(p, "security");
  }
  return resp;
}

json policy_to_json(const SyntheticPolicy& policy) {
  json factors = json::object();
  for (int f = 0; f < kFactorCount; ++f) {
    factors[factor_name(f)] = {{"logits", std::vector<double>(policy.logits(f).begin(), policy.logits(f).end())},
                               {"probabilities", policy.probabilities(f)}};
  }
  return {{"quality_grid", policy.grid().quality}, {"length_grid", policy.grid().length}, {"factors", factors}};
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  std::vector<json> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::kFormat, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kFormat, path + ": " + e.what());
  }
}

}  // namespace wmeval
