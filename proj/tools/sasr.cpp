/*
 * Copyright 2026 The sasr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sasr/checkpoint.hpp"
#include "sasr/config.hpp"
#include "sasr/edge_maps.hpp"
#include "sasr/gradcheck.hpp"
#include "sasr/io.hpp"
#include "sasr/losses.hpp"
#include "sasr/metrics.hpp"
#include "sasr/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace sasr::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json read_json(const std::string& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw config::ConfigError(path + ": " + e.what());
  }
}

double parse_scale(const std::string& text) {
  try {
    std::size_t pos = 0;
    const auto slash = text.find('/');
    if (slash == std::string::npos) {
      const double v = std::stod(text, &pos);
      if (pos != text.size()) throw std::invalid_argument("");
      return v;
    }
    const double num = std::stod(text.substr(0, slash));
    const double den = std::stod(text.substr(slash + 1));
    if (den == 0.0) throw std::invalid_argument("");
    return num / den;
  } catch (const std::logic_error&) {
    throw config::ConfigError("--scale: expected a positive number or ratio like 1/4");
  }
}

struct EdgeOpts {
  std::string method = "lv";
  std::optional<Index> window;
  std::optional<std::string> padding;
  std::optional<double> delta, sigma, low, high;
  std::string in, out, preview;
};

int edge_map(const EdgeOpts& o) {
  json j = {{"method", o.method}};
  if (o.window) j["window"] = *o.window;
  if (o.padding) j["padding"] = *o.padding;
  if (o.delta) j["delta"] = *o.delta;
  if (o.sigma) j["sigma"] = *o.sigma;
  if (o.low) j["low"] = *o.low;
  if (o.high) j["high"] = *o.high;
  const EdgeMapConfig cfg = config::parse_edge(j);
  const WeightMatrix w = extract_edge_map(io::load_image(o.in), cfg);
  io::save_nt1(o.out, w);
  if (!o.preview.empty()) io::save_png(o.preview, w);
  std::cout << json{{"edge", config::to_json(cfg)}, {"out", o.out}}.dump(2) << "\n";
  return kExitOk;
}

struct LossOpts {
  std::string mode, hr, sr, edge_cfg, coeffs, model;
  double d_fake = 0.5;
  std::uint64_t feature_seed = kDefaultFeatureSeed;
};

int loss(const LossOpts& o) {
  const LossMode mode = [&] {
    try {
      return parse_loss_mode(o.mode);
    } catch (const PreconditionError& e) {
      throw config::ConfigError(e.what());
    }
  }();
  const EdgeMapConfig ecfg = o.edge_cfg.empty() ? EdgeMapConfig{} : config::parse_edge(read_json(o.edge_cfg));
  LossCoefficients base = is_video(mode) ? LossCoefficients::vsr_plain() : LossCoefficients::esrgan_plain();
  if (is_sa(mode)) base = is_video(mode) ? LossCoefficients::vsr_sa_local_variance() : LossCoefficients::esrgan_sa();
  const LossCoefficients coeffs = o.coeffs.empty() ? base : config::parse_coeffs(read_json(o.coeffs), base);
  const Image hr = io::load_image(o.hr);
  const Image sr = io::load_image(o.sr);
  require_same_shape(hr, sr, "loss");
  double d = o.d_fake;
  if (!o.model.empty()) {
    const auto decoded = checkpoint::decode(io::read_file(o.model));
    const auto it = std::find_if(decoded.networks.begin(), decoded.networks.end(),
                                 [](const NetworkParams& p) { return p.kind == NetworkKind::discriminator; });
    if (it == decoded.networks.end()) throw io::FormatError(o.model + ": no discriminator in model");
    d = discriminator_forward(sr, *it);
  }
  const WeightMatrix w = extract_edge_map(hr, ecfg);
  const FeatureExtractor fx(hr.channels(), o.feature_seed);
  const LossBreakdown b = total_loss(hr, sr, w, std::span<const double>(&d, 1), fx, coeffs, mode);
  std::ostringstream os;
  os << "{\n  \"mode\": \"" << to_string(mode) << "\",\n  \"breakdown\": {\n"
     << "    \"gan_term\": " << g17(b.gan_term) << ",\n"
     << "    \"perceptual_term\": " << g17(b.perceptual_term) << ",\n"
     << "    \"pixel_uniform_term\": " << g17(b.pixel_uniform_term) << ",\n"
     << "    \"pixel_sa_term\": " << g17(b.pixel_sa_term) << ",\n"
     << "    \"total\": " << g17(b.total) << "\n  },\n"
     << "  \"d_fake\": " << g17(d) << ",\n"
     << "  \"edge\": " << config::to_json(ecfg).dump() << ",\n"
     << "  \"coeffs\": " << config::to_json(coeffs).dump() << "\n}\n";
  std::cout << os.str();
  return kExitOk;
}

int grad_check(std::uint64_t seed, int instances) {
  const gradcheck::Report r = gradcheck::run_gradient_audit(seed, instances);
  json cases = json::array();
  for (const auto& c : r.cases)
    cases.push_back({{"name", c.name},
                     {"instances", c.instances},
                     {"checked", c.checked},
                     {"excluded_kinks", c.excluded},
                     {"max_rel_error", c.max_rel_error}});
  const bool ok = r.passed();
  std::cout << json{{"seed", seed},
                    {"step", gradcheck::kStep},
                    {"tolerance", gradcheck::kTolerance},
                    {"max_rel_error", r.max_rel_error()},
                    {"passed", ok},
                    {"cases", cases}}
                   .dump(2)
            << "\n";
  return ok ? kExitOk : kExitNumeric;
}

config::RunConfig load_config(const std::string& path) { return config::load_run_config(path); }

CalibrationResult calibrate_into(config::RunConfig& rc, const std::vector<Sample>& train) {
  const CalibrationResult c = calibrate_beta2(train, rc.train);
  rc.coeffs.beta2 = c.beta2;
  rc.train.coeffs.beta2 = c.beta2;
  return c;
}

json calibration_json(const CalibrationResult& c) {
  return {{"beta2", c.beta2}, {"share", c.share}, {"sa_unit", c.sa_unit}, {"rest", c.rest}};
}

int calibrate(const std::string& cfg_path) {
  config::RunConfig rc = load_config(cfg_path);
  const Datasets data = make_datasets(rc.train, rc.data_seed);
  const CalibrationResult c = calibrate_into(rc, data.train);
  rc.calibrate = false;
  std::cout << json{{"calibration", calibration_json(c)}, {"config", config::to_json(rc)}}.dump(2) << "\n";
  return kExitOk;
}

int train(const std::string& cfg_path, std::string out, std::string history) {
  config::RunConfig rc = load_config(cfg_path);
  if (out.empty()) out = rc.io.model;
  if (history.empty()) history = rc.io.history;
  if (out.empty()) throw config::ConfigError("train: no model path (--out or io.model)");
  rc.io.model = out;
  rc.io.history = history;
  const Datasets data = make_datasets(rc.train, rc.data_seed);
  json report;
  if (rc.calibrate) report["calibration"] = calibration_json(calibrate_into(rc, data.train));
  const TrainResult result = train_gan(data.train, data.val, rc.train);
  const json effective = config::to_json(rc);
  json extra = {{"config", effective}, {"schema_hash", config::schema_hash()}};
  extra["best_iteration"] = result.history.best_iteration ? json(*result.history.best_iteration) : json(nullptr);
  io::write_file_atomic(out, checkpoint::encode({&result.generator, &result.discriminator}, extra));
  if (!history.empty()) io::write_file_atomic(history, checkpoint::history_to_json(result.history).dump(2) + "\n");
  report["config"] = effective;
  report["best_iteration"] = extra["best_iteration"];
  if (!result.history.validation.empty()) {
    double best = result.history.validation.front().loss;
    for (const auto& v : result.history.validation) best = std::min(best, v.loss);
    report["best_validation_loss"] = best;
  }
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

json report_json(const MetricReport& m) {
  return {{"psnr_db", m.psnr_db}, {"ssim", m.ssim}, {"edge_mae", m.edge_mae}, {"flat_mae", m.flat_mae}};
}

int eval(const std::string& hr_dir, const std::string& sr_dir, const std::string& edge_cfg, double tau,
         const std::string& csv) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw config::ConfigError("--tau must lie in [0, 1]");
  const EdgeMapConfig ecfg = edge_cfg.empty() ? EdgeMapConfig{} : config::parse_edge(read_json(edge_cfg));
  if (!fs::is_directory(hr_dir) || !fs::is_directory(sr_dir)) throw io::FormatError("eval: --hr and --sr must be directories");
  std::vector<fs::path> names;
  for (const auto& e : fs::directory_iterator(hr_dir)) {
    const std::string ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".png" || ext == ".nt1")) names.push_back(e.path().filename());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw io::FormatError("eval: no .png or .nt1 images in " + hr_dir);
  json images = json::array();
  MetricReport mean;
  double edge_sum = 0.0, flat_sum = 0.0;
  int edge_n = 0, flat_n = 0;
  std::ostringstream table;
  table << "image,psnr_db,ssim,edge_mae,flat_mae\n";
  for (const auto& name : names) {
    const fs::path sr_path = fs::path(sr_dir) / name;
    if (!fs::exists(sr_path)) throw io::FormatError("eval: missing " + sr_path.string());
    const Image hr = io::load_image(fs::path(hr_dir) / name);
    const Image sr = io::load_image(sr_path);
    const MetricReport m = evaluate(hr, sr, extract_edge_map(hr, ecfg), tau);
    json entry = report_json(m);
    entry["image"] = name.string();
    images.push_back(entry);
    mean.psnr_db += m.psnr_db;
    mean.ssim += m.ssim;
    if (m.edge_mae >= 0.0) edge_sum += m.edge_mae, ++edge_n;
    if (m.flat_mae >= 0.0) flat_sum += m.flat_mae, ++flat_n;
    table << name.string() << ',' << g17(m.psnr_db) << ',' << g17(m.ssim) << ',' << g17(m.edge_mae) << ','
          << g17(m.flat_mae) << "\n";
  }
  const double n = static_cast<double>(names.size());
  mean.psnr_db /= n;
  mean.ssim /= n;
  mean.edge_mae = edge_n ? edge_sum / edge_n : kEmptyRegion;
  mean.flat_mae = flat_n ? flat_sum / flat_n : kEmptyRegion;
  table << "mean," << g17(mean.psnr_db) << ',' << g17(mean.ssim) << ',' << g17(mean.edge_mae) << ','
        << g17(mean.flat_mae) << "\n";
  if (!csv.empty()) io::write_file_atomic(csv, table.str());
  std::cout << json{{"tau", tau}, {"edge", config::to_json(ecfg)}, {"images", images}, {"mean", report_json(mean)}}.dump(2)
            << "\n";
  return kExitOk;
}

int resize(const std::string& in, const std::string& out, const std::string& scale_text) {
  const double scale = parse_scale(scale_text);
  if (!(scale > 0.0)) throw config::ConfigError("--scale must be positive");
  const Image img = io::load_image(in);
  const Image r = bicubic_resize(img, scale);
  io::save_image(out, r);
  std::cout << json{{"in", {img.channels(), img.height(), img.width()}}, {"out", {r.channels(), r.height(), r.width()}}}.dump()
            << "\n";
  return kExitOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Spatially adaptive losses for super-resolution"};
  bool version = false;
  app.add_flag("--version", version, "Print version and config schema hash");
  app.require_subcommand(0, 1);

  EdgeOpts eo;
  auto* em = app.add_subcommand("edge-map", "Extract an edge map W");
  em->add_option("--method", eo.method)->check(CLI::IsMember({"lv", "local_variance", "canny"}));
  em->add_option("--in", eo.in)->required();
  em->add_option("--out", eo.out)->required();
  em->add_option("--window", eo.window);
  em->add_option("--padding", eo.padding);
  em->add_option("--delta", eo.delta);
  em->add_option("--sigma", eo.sigma);
  em->add_option("--low", eo.low);
  em->add_option("--high", eo.high);
  em->add_option("--png-preview", eo.preview);

  LossOpts lo;
  auto* ls = app.add_subcommand("loss", "Evaluate the composite loss");
  ls->add_option("--mode", lo.mode)->required();
  ls->add_option("--hr", lo.hr)->required();
  ls->add_option("--sr", lo.sr)->required();
  ls->add_option("--edge-cfg", lo.edge_cfg);
  ls->add_option("--coeffs", lo.coeffs);
  ls->add_option("--model", lo.model, "Model whose discriminator scores sr");
  ls->add_option("--d-fake", lo.d_fake, "Discriminator output used without --model");
  ls->add_option("--feature-seed", lo.feature_seed);

  std::uint64_t gc_seed = 0;
  int gc_instances = 20;
  auto* gc = app.add_subcommand("grad-check", "Finite-difference gradient audit");
  gc->add_option("--seed", gc_seed);
  gc->add_option("--instances", gc_instances)->check(CLI::PositiveNumber);

  std::string cfg_path, out, history;
  auto* cal = app.add_subcommand("calibrate", "Fit beta2 to the target SA share");
  cal->add_option("--config", cfg_path)->required();
  auto* tr = app.add_subcommand("train", "Adversarial training on synthetic patches");
  tr->add_option("--config", cfg_path)->required();
  tr->add_option("--out", out);
  tr->add_option("--history", history);

  std::string hr_dir, sr_dir, edge_cfg, csv;
  double tau = 0.5;
  auto* ev = app.add_subcommand("eval", "PSNR, SSIM and edge/flat MAE");
  ev->add_option("--hr", hr_dir)->required();
  ev->add_option("--sr", sr_dir)->required();
  ev->add_option("--edge-cfg", edge_cfg);
  ev->add_option("--tau", tau);
  ev->add_option("--csv", csv);

  std::string rin, rout, rscale;
  auto* rs = app.add_subcommand("resize", "Bicubic resize");
  rs->add_option("--in", rin)->required();
  rs->add_option("--out", rout)->required();
  rs->add_option("--scale", rscale)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (version) {
    std::cout << "sasr " << SASR_VERSION << " schema " << config::schema_hash() << "\n";
    return kExitOk;
  }
  try {
    if (em->parsed()) return edge_map(eo);
    if (ls->parsed()) return loss(lo);
    if (gc->parsed()) return grad_check(gc_seed, gc_instances);
    if (cal->parsed()) return calibrate(cfg_path);
    if (tr->parsed()) return train(cfg_path, out, history);
    if (ev->parsed()) return eval(hr_dir, sr_dir, edge_cfg, tau, csv);
    if (rs->parsed()) return resize(rin, rout, rscale);
    std::cerr << app.help();
    return kExitConfig;
  } catch (const config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace
}  // namespace sasr::cli

int main(int argc, char** argv) { return sasr::cli::run(argc, argv); }
