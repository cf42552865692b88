#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wmeval/error.hpp"
#include "wmeval/grpo.hpp"
#include "wmeval/json_io.hpp"
#include "wmeval/labeler.hpp"
#include "wmeval/latent_stats.hpp"
#include "wmeval/metrics.hpp"
#include "wmeval/parallel.hpp"
#include "wmeval/reward.hpp"
#include "wmeval/watermark.hpp"

using namespace wmeval;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
};

PipelineConfig load(const Globals& g, json* raw = nullptr) {
  json j = g.config_path.empty() ? json::object() : read_json_file(g.config_path);
  if (raw) *raw = j;
  auto cfg = config_from_json(j);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

// Writes to --out when given, else stdout.
void emit(const Globals& g, const std::string& text) {
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(g.out, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + g.out + "'");
  out << text;
}

std::string jsonl(const std::vector<json>& rows) {
  std::string s;
  for (const auto& r : rows) s += r.dump() + "\n";
  return s;
}

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  return v.dump();
}

// Flat objects to CSV with the given column order.
std::string to_csv(const std::vector<json>& rows, const std::vector<std::string>& columns) {
  std::string s;
  for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
  s += "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      s += (i ? "," : "") + csv_cell(r.contains(columns[i]) ? r.at(columns[i]) : json(nullptr));
    }
    s += "\n";
  }
  return s;
}

void emit_rows(const Globals& g, const std::vector<json>& rows, const std::vector<std::string>& columns) {
  if (g.format == "csv") {
    emit(g, to_csv(rows, columns));
  } else {
    emit(g, jsonl(rows));
  }
}

json psnr_json(double db) { return std::isinf(db) ? json("inf") : json(db); }

std::vector<json> as_rows(const json& j) {
  if (j.is_array()) return j.get<std::vector<json>>();
  return {j};
}

std::string id_of(const json& row, std::size_t index) {
  if (row.contains("id")) {
    const auto& v = row.at("id");
    return v.is_string() ? v.get<std::string>() : v.dump();
  }
  return std::to_string(index);
}

// ---- subcommands ----

void cmd_distort(const Globals& g, const std::string& in, const std::string& kind, std::optional<int> quality,
                 std::optional<double> sigma, std::optional<int> kernel) {
  const auto cfg = load(g);
  const auto k = distortion_kind_from_string(kind);
  DistortionSpec spec = cfg.distortions[static_cast<int>(k)];
  if (quality) spec.jpeg_quality = *quality;
  if (sigma) spec.noise_sigma = *sigma;
  if (kernel) spec.kernel_size = *kernel;
  if (g.out.empty()) throw Error(ErrorKind::kParameter, "distort needs --out PATH for the output PNG");
  const auto img = read_png(in);
  const auto out = apply_distortion(img, spec, cfg.seed);
  write_png(out, g.out);
  std::cerr << json{{"kind", to_string(k)}, {"psnr", psnr_json(psnr(img, out))}}.dump() << "\n";
}

void cmd_synth_image(const Globals& g, int width, int height, int channels) {
  const auto cfg = load(g);
  if (g.out.empty()) throw Error(ErrorKind::kParameter, "synth-image needs --out PATH");
  write_png(synth_texture(width, height, channels, cfg.seed), g.out);
}

void cmd_psnr(const Globals& g, const std::string& a, const std::string& b) {
  const auto cfg = load(g);
  const double db = psnr(read_png(a), read_png(b));
  emit(g, json{{"psnr", psnr_json(db)}, {"quality", normalize_psnr(db, cfg.psnr_norm)}}.dump() + "\n");
}

void cmd_wm_embed(const Globals& g, const std::string& in, std::string hex, std::size_t bits,
                  std::optional<double> strength) {
  auto cfg = load(g);
  if (strength) cfg.watermark.strength = *strength;
  if (g.out.empty()) throw Error(ErrorKind::kParameter, "wm embed needs --out PATH for the output PNG");
  const auto img = read_png(in);
  const auto msg = hex.empty() ? WatermarkMessage::random(bits, cfg.seed) : WatermarkMessage::from_hex(hex, bits);
  const auto marked = embed_watermark(img, msg, cfg.watermark);
  write_png(marked, g.out);
  std::cout << json{{"message", msg.to_hex()},
                    {"bits", msg.size()},
                    {"psnr", psnr_json(psnr(img, marked))},
                    {"quality", residual_quality_label(img, marked, cfg.psnr_norm)}}
                   .dump()
            << "\n";
}

void cmd_wm_extract(const Globals& g, const std::string& in, std::size_t bits, const std::string& expect,
                    std::optional<double> strength) {
  auto cfg = load(g);
  if (strength) cfg.watermark.strength = *strength;
  const auto msg = extract_watermark(read_png(in), bits, cfg.watermark);
  json out = {{"message", msg.to_hex()}, {"bits", bits}};
  if (!expect.empty()) out["bit_accuracy"] = bit_accuracy(msg, WatermarkMessage::from_hex(expect, bits));
  emit(g, out.dump() + "\n");
}

void cmd_wm_robustness(const Globals& g, const std::vector<std::string>& inputs, int synth, int size,
                       std::size_t bits, const std::string& method) {
  const auto cfg = load(g);
  std::vector<RasterImage> images;
  for (const auto& path : inputs) {
    if (std::filesystem::is_directory(path)) {
      std::vector<std::filesystem::path> files;
      for (const auto& e : std::filesystem::directory_iterator(path)) {
        if (e.path().extension() == ".png") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) images.push_back(read_png(f.string()));
    } else {
      images.push_back(read_png(path));
    }
  }
  for (int i = 0; i < synth; ++i) images.push_back(synth_texture(size, size, 3, derive_seed(cfg.seed, i)));
  std::vector<WatermarkMessage> messages;
  for (std::size_t i = 0; i < images.size(); ++i) {
    messages.push_back(WatermarkMessage::random(bits, derive_seed(cfg.seed ^ 0x5eedULL, i)));
  }
  const auto report = measure_robustness(images, messages, cfg.watermark, cfg.distortions, cfg.seed, false, method);
  const auto flags = residual_security_labels(report, cfg.thresholds);
  emit(g, json{{"method", report.method},
               {"n_images", report.n_images},
               {"jpeg_acc", report.jpeg_acc},
               {"gaussian_acc", report.gaussian_acc},
               {"filter_acc", report.filter_acc},
               {"jpeg", flags.jpeg},
               {"gaussian", flags.gaussian},
               {"filter", flags.filter}}
                  .dump() +
              "\n");
}

LatentSample load_latents(const std::string& path, const std::string& input_format) {
  std::string fmt = input_format;
  if (fmt.empty()) fmt = std::filesystem::path(path).extension() == ".csv" ? "csv" : "f32";
  if (fmt == "csv") return read_latents_csv(path);
  if (fmt == "f32") return read_latents_f32(path);
  throw Error(ErrorKind::kParameter, "--input-format must be f32 or csv");
}

std::array<TestResult, 3> latent_results(const Globals& g, const std::string& input, const std::string& input_format,
                                         const std::string& synth, std::size_t n) {
  if (!input.empty()) return run_all_tests(load_latents(input, input_format));
  if (synth.empty()) throw Error(ErrorKind::kParameter, "give --input FILE or --synth KIND");
  const auto cfg = load(g);
  return run_all_tests(synth_latents(latent_kind_from_string(synth), n, cfg.seed));
}

void cmd_latent_test(const Globals& g, const std::string& input, const std::string& input_format,
                     const std::string& synth, std::size_t n) {
  const auto cfg = load(g);
  const auto results = latent_results(g, input, input_format, synth, n);
  std::vector<json> rows;
  for (const auto& r : results) rows.push_back(test_result_to_json(r));
  if (g.format == "csv") {
    emit(g, to_csv(rows, {"test", "statistic", "p_value"}));
    return;
  }
  const auto label = semantic_label(results[0].p_value, results[1].p_value, results[2].p_value, cfg.thresholds);
  emit(g, json{{"tests", rows}, {"label", semantic_label_json(label)}}.dump() + "\n");
}

void cmd_label_residual(const Globals& g, const std::string& robustness, std::optional<double> quality,
                        const std::string& original, const std::string& marked) {
  const auto cfg = load(g);
  std::optional<double> q = quality;
  if (!original.empty() || !marked.empty()) {
    if (original.empty() || marked.empty()) throw Error(ErrorKind::kParameter, "--original and --watermarked go together");
    q = residual_quality_label(read_png(original), read_png(marked), cfg.psnr_norm);
  }
  std::vector<json> out;
  const auto rows = as_rows(read_json_file(robustness));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    RobustnessReport report{row.value("method", std::string("unknown")),
                            require(row, "jpeg_acc").get<double>(), require(row, "gaussian_acc").get<double>(),
                            require(row, "filter_acc").get<double>(), row.value("n_images", std::size_t{0})};
    const auto flags = residual_security_labels(report, cfg.thresholds);
    const double label_q = q ? *q : row.value("quality", 5.0);
    json j = residual_label_json(ResidualLabel{label_q, flags});
    j["id"] = id_of(row, i);
    j["method"] = report.method;
    out.push_back(j);
  }
  emit_rows(g, out, {"id", "method", "type", "quality", "jpeg", "gaussian", "filter"});
}

void cmd_label_semantic(const Globals& g, const std::string& pvalues, const std::string& latents,
                        const std::string& input_format) {
  const auto cfg = load(g);
  std::vector<json> out;
  if (!latents.empty()) {
    const auto r = run_all_tests(load_latents(latents, input_format));
    out.push_back(semantic_label_json(semantic_label(r[0].p_value, r[1].p_value, r[2].p_value, cfg.thresholds)));
  } else if (!pvalues.empty()) {
    const auto rows = as_rows(read_json_file(pvalues));
    for (const auto& row : rows) {
      const auto label = semantic_label(require(row, "p_cvm").get<double>(), require(row, "p_jb").get<double>(),
                                        require(row, "p_k2").get<double>(), cfg.thresholds);
      json j = {{"quality", label.quality}, {"security", label.security}};
      if (rows.size() > 1 || row.contains("method")) j["method"] = row.value("method", std::string());
      out.push_back(j);
    }
  } else {
    throw Error(ErrorKind::kParameter, "give --pvalues FILE or --latents FILE");
  }
  emit_rows(g, out, {"method", "quality", "security"});
}

void cmd_parse(const Globals& g, const std::string& in, const std::string& text_file) {
  const auto cfg = load(g);
  std::vector<json> texts;
  if (!text_file.empty()) {
    std::ifstream f(text_file, std::ios::binary);
    if (!f) throw Error(ErrorKind::kIo, "cannot open '" + text_file + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    texts.push_back({{"id", std::filesystem::path(text_file).filename().string()}, {"response", ss.str()}});
  } else {
    texts = read_jsonl(in);
  }
  std::vector<json> out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto parsed = parse_response(require(texts[i], "response").get<std::string>(), cfg.reward.length_unit);
    json j;
    if (const auto* r = std::get_if<ParsedResponse>(&parsed)) {
      j = parsed_to_json(*r);
      j["ok"] = true;
    } else {
      const auto& v = std::get<FormatVerdict>(parsed);
      j = {{"ok", false}, {"failure", to_string(v.reason)}, {"detail", v.detail}};
    }
    j["id"] = id_of(texts[i], i);
    out.push_back(j);
  }
  emit_rows(g, out, {"id", "ok", "category", "quality", "jpeg", "gaussian", "filter", "security", "raw_length", "failure"});
}

void cmd_reward(const Globals& g, const std::string& gt_path, const std::string& responses_path) {
  const auto cfg = load(g);
  std::map<std::string, json> gts;
  if (!gt_path.empty()) {
    const auto rows = read_jsonl(gt_path);
    for (std::size_t i = 0; i < rows.size(); ++i) gts[id_of(rows[i], i)] = rows[i].contains("gt") ? rows[i]["gt"] : rows[i];
  }
  const auto rows = read_jsonl(responses_path);
  std::vector<json> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto id = id_of(rows[i], i);
    json label;
    if (rows[i].contains("gt")) {
      label = rows[i]["gt"];
    } else if (const auto it = gts.find(id); it != gts.end()) {
      label = it->second;
    } else {
      throw Error(ErrorKind::kFormat, "no ground truth for response id '" + id + "'");
    }
    const auto gt = ground_truth_from_json(label);
    auto b = breakdown_to_json(total_reward(require(rows[i], "response").get<std::string>(), gt, cfg.reward));
    b["id"] = id;
    out.push_back(b);
  }
  emit_rows(g, out, {"id", "total", "format_ok", "category_ok", "r_len", "r_qual", "r_sec", "format_failure"});
}

void cmd_grpo_sim(const Globals& g, const std::string& policy_out, std::optional<int> iterations) {
  json raw;
  auto cfg = load(g, &raw);
  if (iterations) cfg.grpo.iterations = *iterations;
  if (g.seed) cfg.grpo.seed = *g.seed;
  std::vector<GroundTruth> items;
  if (raw.contains("items")) {
    for (const auto& item : raw.at("items")) items.push_back(ground_truth_from_json(item));
  } else {
    items.emplace_back(Category::kResidual, ResidualLabel{3.4, {1, 0, 1}});
  }
  const auto grid = PolicyGrid::standard();
  SyntheticPolicy start(grid);
  json ws = raw.value("warm_start", json{{"size", 30}, {"format_ok_rate", 0.9}});
  if (!ws.is_null() && ws != false) {
    if (ws.contains("dataset")) {
      std::vector<std::string> data;
      for (const auto& row : read_jsonl(ws.at("dataset").get<std::string>())) {
        data.push_back(require(row, "response").get<std::string>());
      }
      start = mle_warm_start(data, grid);
    } else {
      start = mle_warm_start(synthetic_dataset(ws.value("size", std::size_t{30}), ws.value("format_ok_rate", 0.9),
                                               ws.value("seed", cfg.grpo.seed), grid),
                             grid);
    }
  }
  const auto result = train(items, start, cfg.grpo, cfg.reward);
  std::string csv = "iteration,mean_reward,kl,format_rate,category_rate\n";
  char buf[160];
  for (const auto& p : result.curve) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", p.iteration, p.mean_reward, p.kl, p.format_rate,
                  p.category_rate);
    csv += buf;
  }
  emit(g, csv);
  const std::size_t n = result.curve.size();
  const std::size_t k = std::max<std::size_t>(1, n / 10);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < k && n > 0; ++i) {
    first += result.curve[i].mean_reward / static_cast<double>(k);
    last += result.curve[n - k + i].mean_reward / static_cast<double>(k);
  }
  std::cerr << json{{"iterations", n}, {"first_decile_reward", first}, {"last_decile_reward", last},
                    {"improved", last > first}}
                   .dump()
            << "\n";
  if (!policy_out.empty()) {
    std::ofstream out(policy_out);
    if (!out) throw Error(ErrorKind::kIo, "cannot write '" + policy_out + "'");
    auto pj = policy_to_json(result.policy);
    pj["config"] = config_to_json(cfg);
    out << pj.dump(2) << "\n";
  }
}

void cmd_report(const Globals& g, const std::string& in) {
  std::vector<EvalRecord> records;
  const auto rows = read_jsonl(in);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    records.push_back({id_of(row, i), require(row, "method").get<std::string>(), ground_truth_from_json(require(row, "gt")),
                       prediction_from_json(row)});
  }
  const auto report = order_methods(build_report(records));
  if (g.format == "csv") {
    emit(g, report_csv(report));
  } else if (g.format == "text") {
    emit(g, report_text(report));
  } else {
    json arr = json::array();
    for (const auto& r : report) {
      auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
      arr.push_back({{"method", r.method},
                     {"type", r.residual ? "residual" : "semantic"},
                     {"n", r.n_items},
                     {"format_failure_rate", r.format_failure_rate},
                     {"plcc", opt(r.plcc)},
                     {"srcc", opt(r.srcc)},
                     {"security_acc", opt(r.security_acc)},
                     {"quality_acc", opt(r.quality_acc)},
                     {"semantic_security_acc", opt(r.semantic_security_acc)}});
    }
    emit(g, arr.dump(2) + "\n");
  }
}

int exit_code_for(ErrorKind kind) { return kind == ErrorKind::kInvariant ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Watermark evaluation toolkit: labels, rewards, GRPO simulation and reports"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON pipeline config");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out", g.out, "output file (default stdout)");
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"json", "csv", "text"}));

  std::function<void()> action;

  auto* distort = app.add_subcommand("distort", "apply one distortion to a PNG");
  std::string d_in, d_kind;
  std::optional<int> d_quality, d_kernel;
  std::optional<double> d_sigma;
  distort->add_option("--in", d_in, "input PNG")->required();
  distort->add_option("--kind", d_kind, "jpeg | gaussian_noise | median_filter")->required();
  distort->add_option("--quality", d_quality, "JPEG quality 1-100");
  distort->add_option("--sigma", d_sigma, "noise sigma on [0,1]");
  distort->add_option("--kernel", d_kernel, "odd median kernel size");
  distort->callback([&] { action = [&] { cmd_distort(g, d_in, d_kind, d_quality, d_sigma, d_kernel); }; });

  auto* synth = app.add_subcommand("synth-image", "write a deterministic synthetic texture PNG");
  int si_w = 256, si_h = 256, si_c = 3;
  synth->add_option("--width", si_w);
  synth->add_option("--height", si_h);
  synth->add_option("--channels", si_c, "1 or 3");
  synth->callback([&] { action = [&] { cmd_synth_image(g, si_w, si_h, si_c); }; });

  auto* psnr_cmd = app.add_subcommand("psnr", "PSNR and normalized quality of two PNGs");
  std::string p_a, p_b;
  psnr_cmd->add_option("a", p_a)->required();
  psnr_cmd->add_option("b", p_b)->required();
  psnr_cmd->callback([&] { action = [&] { cmd_psnr(g, p_a, p_b); }; });

  auto* wm = app.add_subcommand("wm", "reference DWT-DCT watermark");
  wm->require_subcommand(1);
  std::string w_in, w_hex, w_expect, w_method = "DwtDct";
  std::size_t w_bits = 32;
  std::optional<double> w_strength;
  std::vector<std::string> w_inputs;
  int w_synth = 0, w_size = 128;
  auto* embed = wm->add_subcommand("embed", "embed a message");
  embed->add_option("--in", w_in)->required();
  embed->add_option("--message", w_hex, "hex message (random from --seed when omitted)");
  embed->add_option("--bits", w_bits, "message length in bits");
  embed->add_option("--strength", w_strength, "quantization step");
  embed->callback([&] { action = [&] { cmd_wm_embed(g, w_in, w_hex, w_bits, w_strength); }; });
  auto* extract = wm->add_subcommand("extract", "extract a message");
  extract->add_option("--in", w_in)->required();
  extract->add_option("--bits", w_bits, "message length in bits");
  extract->add_option("--expect", w_expect, "hex message to score against");
  extract->add_option("--strength", w_strength, "quantization step");
  extract->callback([&] { action = [&] { cmd_wm_extract(g, w_in, w_bits, w_expect, w_strength); }; });
  auto* robust = wm->add_subcommand("robustness", "bit accuracy under the three attacks, with labels");
  robust->add_option("--images", w_inputs, "PNG files or directories");
  robust->add_option("--synth", w_synth, "number of synthetic textures to add");
  robust->add_option("--size", w_size, "synthetic texture size");
  robust->add_option("--bits", w_bits, "message length in bits");
  robust->add_option("--method", w_method, "method name for the report");
  robust->callback([&] { action = [&] { cmd_wm_robustness(g, w_inputs, w_synth, w_size, w_bits, w_method); }; });

  auto* latent = app.add_subcommand("latent-test", "normality tests on a latent sample");
  std::string l_input, l_input_format, l_synth;
  std::size_t l_n = 10000;
  latent->add_option("--input", l_input, "float32 or CSV latent file");
  latent->add_option("--input-format", l_input_format, "f32 | csv (default by extension)");
  latent->add_option("--synth", l_synth, "standard_normal | mixture_pm2 | student_t5 | quantized_pm1");
  latent->add_option("--n", l_n, "synthetic sample size");
  latent->callback([&] { action = [&] { cmd_latent_test(g, l_input, l_input_format, l_synth, l_n); }; });

  auto* label = app.add_subcommand("label", "derive ground-truth labels");
  label->require_subcommand(1);
  std::string lr_rob, lr_orig, lr_marked, ls_p, ls_latents, ls_fmt;
  std::optional<double> lr_quality;
  auto* lres = label->add_subcommand("residual", "security flags from robustness accuracies");
  lres->add_option("--robustness", lr_rob, "JSON object or array with jpeg_acc, gaussian_acc, filter_acc")->required();
  lres->add_option("--quality", lr_quality, "quality score to attach");
  lres->add_option("--original", lr_orig, "original PNG (quality from PSNR)");
  lres->add_option("--watermarked", lr_marked, "watermarked PNG");
  lres->callback([&] { action = [&] { cmd_label_residual(g, lr_rob, lr_quality, lr_orig, lr_marked); }; });
  auto* lsem = label->add_subcommand("semantic", "levels from normality p-values");
  lsem->add_option("--pvalues", ls_p, "JSON object or array with p_cvm, p_jb, p_k2");
  lsem->add_option("--latents", ls_latents, "latent file to test");
  lsem->add_option("--input-format", ls_fmt, "f32 | csv");
  lsem->callback([&] { action = [&] { cmd_label_semantic(g, ls_p, ls_latents, ls_fmt); }; });

  auto* parse = app.add_subcommand("parse", "parse tagged responses");
  std::string pr_in, pr_text;
  parse->add_option("--in", pr_in, "JSONL with id and response");
  parse->add_option("--text", pr_text, "single raw response file");
  parse->callback([&] {
    action = [&] {
      if (pr_in.empty() == pr_text.empty()) throw Error(ErrorKind::kParameter, "give exactly one of --in or --text");
      cmd_parse(g, pr_in, pr_text);
    };
  });

  auto* reward = app.add_subcommand("reward", "score responses against ground truth");
  std::string rw_gt, rw_resp;
  reward->add_option("--gt", rw_gt, "label JSONL keyed by id");
  reward->add_option("--responses", rw_resp, "response JSONL (id, response, optional gt)")->required();
  reward->callback([&] { action = [&] { cmd_reward(g, rw_gt, rw_resp); }; });

  auto* grpo = app.add_subcommand("grpo-sim", "GRPO on the synthetic response policy");
  std::string gs_policy;
  std::optional<int> gs_iter;
  grpo->add_option("--policy-out", gs_policy, "final policy JSON");
  grpo->add_option("--iterations", gs_iter, "override the configured iteration count");
  grpo->callback([&] { action = [&] { cmd_grpo_sim(g, gs_policy, gs_iter); }; });

  auto* report = app.add_subcommand("report", "PLCC / SRCC / accuracy report from evaluation JSONL");
  std::string rp_in;
  report->add_option("--in", rp_in, "evaluation JSONL (id, method, gt, prediction or response)")->required();
  report->callback([&] { action = [&] { cmd_report(g, rp_in); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "error (format): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
