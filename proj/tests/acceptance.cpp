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
#include "sasr/networks.hpp"
#include "sasr/train.hpp"

#include "oracles.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace sasr;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kEdgeTol = 1e-12;
constexpr int kEdgeImages = 200;
constexpr double kEdgeBudget = 10.0;
constexpr double kLossTol = 1e-12;
constexpr int kLossCases = 500;
constexpr double kLossBudget = 10.0;
constexpr std::uint64_t kAuditSeed = 2026;
constexpr int kAuditInstances = 50;
constexpr double kAuditBudget = 60.0;
constexpr double kShareLo = 0.13;
constexpr double kShareHi = 0.17;
constexpr Index kCalibrationSamples = 32;
constexpr double kCalibrationBudget = 30.0;
constexpr int kSteeringSeeds = 5;
constexpr int kSteeringWinsNeeded = 4;
constexpr double kSteeringTau = 0.5;
constexpr double kSteeringBudget = 600.0;
constexpr double kPsnrTol = 1e-9;
constexpr double kSsimTol = 1e-9;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

Outcome edge_map_suite() {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<Index> dim(2, 8), chans(1, 3);
  double worst = 0.0;
  int monotone_fail = 0, canny_fail = 0;
  EdgeMapConfig canny;
  canny.method = EdgeMethod::canny;
  for (int n = 0; n < kEdgeImages; ++n) {
    const Index h = dim(rng), w = dim(rng);
    const Index k = chans(rng);
    const PadMode mode = n % 2 ? PadMode::replicate : PadMode::reflect;
    const Index rmax = mode == PadMode::reflect ? std::min<Index>(3, std::min(h, w) - 1) : 3;
    const Index r = std::uniform_int_distribution<Index>(1, rmax)(rng);
    const Image img = oracle::random_image(rng, k, h, w);
    const LocalStats s = local_stats(img, {r, mode});
    const auto [m, v] = oracle::local_stats(img, r, mode);
    worst = std::max({worst, (s.mean.data() - m.data()).cwiseAbs().maxCoeff(),
                      (s.variance.data() - v.data()).cwiseAbs().maxCoeff()});

    Image mu(1, 1, s.variance.size());
    std::vector<double> sorted(s.variance.data().data(), s.variance.data().data() + s.variance.size());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) mu(0, 0, static_cast<Index>(i)) = sorted[i];
    const Image wts = variance_to_weights(mu, 0.01);
    for (Index i = 0; i < wts.size(); ++i) {
      const double wi = wts(0, 0, i);
      if (!(wi >= 0.0 && wi < 1.0)) ++monotone_fail;
      if (i > 0 && (sorted[i] > sorted[i - 1] ? !(wi > wts(0, 0, i - 1)) : wi != wts(0, 0, i - 1))) ++monotone_fail;
    }

    const Image base = k == 2 ? oracle::random_image(rng, 1, h, w) : img;
    const Image e = canny_edges(base, canny);
    Image shifted = base;
    shifted.data().array() += 0.25;
    const bool binary = (e.data().array() == 0.0 || e.data().array() == 1.0).all();
    const bool invariant = e == canny_edges(shifted, canny);
    const bool empty_const =
        (canny_edges(Image::constant(base.channels(), h, w, base(0, 0, 0)), canny).data().array() == 0.0).all();
    if (!binary || !invariant || !empty_const) ++canny_fail;
  }
  std::ostringstream os;
  os << kEdgeImages << " images, max |stats - brute force| = " << fmt("%.3g", worst) << " (tol " << kEdgeTol
     << "), weight monotonicity/bound violations = " << monotone_fail << ", Canny property failures = " << canny_fail;
  return {worst < kEdgeTol && monotone_fail == 0 && canny_fail == 0, os.str()};
}

LossCoefficients coeffs_for(LossMode m) {
  switch (m) {
    case LossMode::esr_plain: return LossCoefficients::esrgan_plain();
    case LossMode::esr_sa: return LossCoefficients::esrgan_sa();
    case LossMode::vsr_plain: return LossCoefficients::vsr_plain();
    case LossMode::vsr_sa: return LossCoefficients::vsr_sa_local_variance();
  }
  return {};
}

Image oracle_features(const FeatureExtractor& fx, const Image& img) {
  Image x = img;
  for (const Layer& l : fx.params().layers) x = oracle::leaky(oracle::conv3x3(x, l.weight, l.bias, l.stride), kLeakySlope);
  return x;
}

Outcome loss_algebra_suite() {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<Index> dim(2, 8);
  std::uniform_real_distribution<double> coef(-2.0, 2.0), pos(0.0, 3.0), prob(0.05, 0.95);
  const FeatureExtractor fx1(1, kDefaultFeatureSeed), fx3(3, kDefaultFeatureSeed);
  int fail = 0;
  double worst = 0.0;
  auto check = [&](double a, double b) {
    const double rel = std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
    worst = std::max(worst, rel);
    if (!(rel <= kLossTol)) ++fail;
  };
  for (int n = 0; n < kLossCases; ++n) {
    const Index k = n % 2 ? 3 : 1;
    const Index h = dim(rng), w = dim(rng);
    const Image u = oracle::random_image(rng, k, h, w);
    const Image v = oracle::random_image(rng, k, h, w);
    const Image h1 = oracle::random_image(rng, k, h, w, 0.0, 2.0);
    const Image h2 = oracle::random_image(rng, k, h, w, 0.0, 2.0);
    const double a = coef(rng), b = coef(rng);
    Image mix = h1;
    mix.data() = a * h1.data() + b * h2.data();
    const double eps = 0.001;

    check(weighted_l1(u, v, mix), a * weighted_l1(u, v, h1) + b * weighted_l1(u, v, h2));
    check(weighted_charbonnier(u, v, mix, eps), a * weighted_charbonnier(u, v, h1, eps) + b * weighted_charbonnier(u, v, h2, eps));
    check(weighted_l1(u, v, h1), weighted_l1(v, u, h1));
    check(weighted_charbonnier(u, v, h1, eps), weighted_charbonnier(v, u, h1, eps));
    check(weighted_l1(u, v, h1), oracle::l1(u, v, h1));
    check(weighted_charbonnier(u, v, h1, eps), oracle::charbonnier(u, v, h1, eps));
    const double c = weighted_charbonnier(u, v, h1, eps);
    if (c < weighted_l1(u, v, h1) || c < eps * h1.data().sum()) ++fail;

    const Image wmap = extract_edge_map(u, EdgeMapConfig{});
    const Image ones(k, h, w, 1.0);
    LossCoefficients sc;
    sc.beta1 = pos(rng);
    sc.beta2 = pos(rng) * 10.0;
    for (Norm norm : {Norm::l1, Norm::charbonnier}) {
      sc.norm = norm;
      const auto dist = [&](const Image& hh) {
        return norm == Norm::l1 ? oracle::l1(u, v, hh) : oracle::charbonnier(u, v, hh, eps);
      };
      check(sa_pixel_loss(u, v, wmap, sc), sc.beta1 * dist(ones) + sc.beta2 * dist(wmap));
    }

    const FeatureExtractor& fx = k == 1 ? fx1 : fx3;
    const Image fu = oracle_features(fx, u), fv = oracle_features(fx, v);
    const double percep = oracle::charbonnier(fu, fv, Image(fu.channels(), fu.height(), fu.width(), 1.0), eps);
    const std::vector<double> d{prob(rng), prob(rng)};
    for (LossMode m : {LossMode::esr_plain, LossMode::esr_sa, LossMode::vsr_plain, LossMode::vsr_sa}) {
      const LossCoefficients lc = coeffs_for(m);
      const LossBreakdown br = total_loss(u, v, wmap, d, fx, lc, m);
      const bool video = is_video(m);
      const auto dist = [&](const Image& hh) { return video ? oracle::charbonnier(u, v, hh, eps) : oracle::l1(u, v, hh); };
      check(br.total, br.gan_term + br.perceptual_term + br.pixel_uniform_term + br.pixel_sa_term);
      check(br.gan_term, (video ? lc.alpha1 : lc.alpha) * oracle::mean_neg_log(d, false));
      check(br.perceptual_term, (video ? lc.alpha2 : 1.0) * percep);
      check(br.pixel_uniform_term, lc.beta1 * dist(ones));
      check(br.pixel_sa_term, is_sa(m) ? lc.beta2 * dist(wmap) : 0.0);
    }
  }
  std::ostringstream os;
  os << kLossCases << " cases, max relative deviation = " << fmt("%.3g", worst) << " (tol " << kLossTol
     << "), failed checks = " << fail;
  return {fail == 0, os.str()};
}

Outcome gradient_audit() {
  const gradcheck::Report r = gradcheck::run_gradient_audit(kAuditSeed, kAuditInstances);
  long checked = 0, excluded = 0;
  int min_instances = kAuditInstances;
  for (const auto& c : r.cases) {
    checked += c.checked;
    excluded += c.excluded;
    if (!c.name.starts_with("e2e.all_parameters")) min_instances = std::min(min_instances, c.instances);
  }
  std::ostringstream os;
  os << r.cases.size() << " cases, >= " << min_instances << " instances each, " << checked << " probes, "
     << excluded << " kink exclusions, max relative error = " << fmt("%.3g", r.max_rel_error()) << " (tol "
     << gradcheck::kTolerance << ")";
  return {r.passed() && min_instances >= 20, os.str()};
}

TrainConfig steering_config(InputMode mode, bool sa, int seed) {
  TrainConfig c;
  c.mode = mode;
  c.sa = sa;
  c.scale = 2;
  c.hr_size = 48;
  c.channels = 1;
  c.batch_size = 1;
  c.lr = 1e-4;
  c.lr_halving_points = {};
  c.max_iterations = 2000;
  c.warmup_iterations = 500;
  c.validate_every = 100;
  c.train_samples = 32;
  c.val_samples = 8;
  c.seed = static_cast<std::uint64_t>(seed);
  const bool video = mode == InputMode::multi_frame;
  c.coeffs = video ? (sa ? LossCoefficients::vsr_sa_local_variance() : LossCoefficients::vsr_plain())
                   : (sa ? LossCoefficients::esrgan_sa() : LossCoefficients::esrgan_plain());
  return c;
}

Outcome calibration() {
  std::ostringstream os;
  bool ok = true;
  for (LossMode m : {LossMode::esr_plain, LossMode::esr_sa, LossMode::vsr_plain, LossMode::vsr_sa}) {
    TrainConfig c = steering_config(is_video(m) ? InputMode::multi_frame : InputMode::single_image, is_sa(m), 0);
    c.warmup_iterations = 200;
    c.train_samples = kCalibrationSamples;
    const Datasets d = make_datasets(c, 77);
    const CalibrationResult r = calibrate_beta2(d.train, c);
    const bool in = r.share >= kShareLo && r.share <= kShareHi;
    ok = ok && in;
    os << to_string(m) << " share " << fmt("%.4f", r.share) << " (beta2 " << fmt("%.4g", r.beta2) << ") ";
  }
  os << "on " << kCalibrationSamples << " samples, band [" << kShareLo << ", " << kShareHi << "]";
  return {ok, os.str()};
}

double mean_edge_mae(const std::vector<Sample>& test, const NetworkParams& g) {
  double acc = 0.0;
  int n = 0;
  for (const auto& s : test) {
    const double e = edge_region_mae(s.hr, super_resolve(s, g), s.edge, kSteeringTau).edge_mae;
    if (e >= 0.0) acc += e, ++n;
  }
  return n ? acc / n : kEmptyRegion;
}

Outcome steering(InputMode mode) {
  int wins = 0;
  std::ostringstream os;
  for (int seed = 0; seed < kSteeringSeeds; ++seed) {
    const TrainConfig plain = steering_config(mode, false, seed);
    TrainConfig sa = steering_config(mode, true, seed);
    const Datasets d = make_datasets(plain, 1000 + static_cast<std::uint64_t>(seed));
    auto test = make_synthetic_dataset(16, 48, 2, 5000 + static_cast<std::uint64_t>(seed), mode, 1);
    attach_edge_maps(test, EdgeMapConfig{});
    sa.coeffs.beta2 = calibrate_beta2(d.train, sa).beta2;
    const double e_plain = mean_edge_mae(test, train_gan(d.train, d.val, plain).generator);
    const double e_sa = mean_edge_mae(test, train_gan(d.train, d.val, sa).generator);
    const bool win = e_sa >= 0.0 && e_plain >= 0.0 && e_sa < e_plain;
    wins += win;
    os << "seed " << seed << ": plain " << fmt("%.5f", e_plain) << " sa " << fmt("%.5f", e_sa) << (win ? " win; " : " loss; ");
    std::fflush(stdout);
  }
  os << "SA wins " << wins << "/" << kSteeringSeeds << " (need " << kSteeringWinsNeeded << ")";
  return {wins >= kSteeringWinsNeeded, os.str()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SASR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "sasr_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  io::write_file_atomic(dir / "cfg.json", R"({"train": {"max_iterations": 60, "warmup_iterations": 20, "validate_every": 10,
    "batch_size": 2, "lr_halving_points": [40], "scale": 2, "hr_size": 24, "train_samples": 8, "val_samples": 4,
    "mode": "multi_frame", "seed": 3, "calibrate": true}})");
  const std::string cmd = "train --config " + (dir / "cfg.json").string() + " --out " + (dir / "m.nt1d").string() +
                          " --history " + (dir / "h.json").string();
  std::string model[2], history[2];
  for (int run = 0; run < 2; ++run) {
    if (run_cli(cmd) != 0) return {false, "train invocation failed"};
    model[run] = io::read_file(dir / "m.nt1d");
    history[run] = io::read_file(dir / "h.json");
    fs::remove(dir / "m.nt1d");
    fs::remove(dir / "h.json");
  }
  const std::string &m0 = model[0], &m1 = model[1], &h0 = history[0], &h1 = history[1];
  fs::remove_all(dir);
  std::ostringstream os;
  os << "model " << m0.size() << " bytes " << (m0 == m1 ? "identical" : "DIFFER") << ", history " << h0.size()
     << " bytes " << (h0 == h1 ? "identical" : "DIFFER");
  return {m0 == m1 && h0 == h1 && !m0.empty() && !h0.empty(), os.str()};
}

Outcome metrics_suite() {
  std::mt19937_64 rng(9);
  const Image a = oracle::random_image(rng, 3, 16, 16, 0.1, 0.8);
  Image b = a;
  b.data().array() += 0.1;
  const double p_same = psnr(a, a);
  const double p_01 = psnr(a, b);
  const double s_same = ssim(a, a);
  const double s_const = ssim(Image::constant(1, 16, 16, 0.3), Image::constant(1, 16, 16, 0.5));
  const double closed = (2 * 0.3 * 0.5 + 1e-4) / (0.3 * 0.3 + 0.5 * 0.5 + 1e-4);
  const bool ok = p_same == kPsnrCap && std::fabs(p_01 - 20.0) <= kPsnrTol && s_same == 1.0 &&
                  std::fabs(s_const - closed) <= kSsimTol;
  std::ostringstream os;
  os << "psnr(a,a) = " << p_same << ", psnr(+0.1) = " << fmt("%.12f", p_01) << ", ssim(a,a) = " << fmt("%.17g", s_same)
     << ", const ssim = " << fmt("%.12f", s_const) << " vs " << fmt("%.12f", closed);
  return {ok, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::set<std::string> only(argv + 1, argv + argc);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"edge_map_oracles", edge_map_suite},
      {"loss_algebra", loss_algebra_suite},
      {"gradient_audit", gradient_audit},
      {"calibration", calibration},
      {"steering_single_image", [] { return steering(InputMode::single_image); }},
      {"steering_multi_frame", [] { return steering(InputMode::multi_frame); }},
      {"determinism", determinism},
      {"metrics", metrics_suite},
  };
  const std::map<std::string, double> budgets = {{"edge_map_oracles", kEdgeBudget},    {"loss_algebra", kLossBudget},
                                                 {"gradient_audit", kAuditBudget},     {"calibration", kCalibrationBudget},
                                                 {"steering_single_image", kSteeringBudget},
                                                 {"steering_multi_frame", kSteeringBudget}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && !only.contains(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    std::string budget;
    if (const auto it = budgets.find(name); it != budgets.end()) {
      budget = fmt(" / budget %.0f s", it->second);
      if (secs > it->second) o.pass = false;
    }
    std::printf("%s %s: %s [%.1f s%s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs, budget.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%s\n", failed ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED");
  return failed ? 1 : 0;
}
