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

#include "sasr/gradcheck.hpp"

#include "sasr/edge_maps.hpp"
#include "sasr/losses.hpp"
#include "sasr/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sasr::gradcheck {

double relative_error(double analytic, double numeric, double objective) {
  const double floor = kScaleFloor * std::max(1.0, std::abs(objective));
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

void CaseResult::merge(const CaseResult& other) {
  instances += other.instances;
  checked += other.checked;
  excluded += other.excluded;
  max_rel_error = std::max(max_rel_error, other.max_rel_error);
}

double Report::max_rel_error() const {
  double m = 0.0;
  for (const auto& c : cases) m = std::max(m, c.max_rel_error);
  return m;
}

namespace {

struct Probe {
  double* slot;
  double analytic;
};

std::vector<std::size_t> choose(std::size_t n, long max_probes, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (max_probes > 0 && static_cast<std::size_t>(max_probes) < n) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(max_probes));
  }
  return idx;
}

template <typename Eval>
CaseResult run_probes(const std::string& name, const std::vector<Probe>& probes, const Eval& eval) {
  CaseResult r;
  r.name = name;
  r.instances = 1;
  const double f0 = eval();
  const double h = kStep;
  for (const Probe& p : probes) {
    const double saved = *p.slot;
    *p.slot = saved + h;
    const double fp = eval();
    *p.slot = saved - h;
    const double fm = eval();
    *p.slot = saved;
    const double numeric = (fp - fm) / (2.0 * h);
    const double err = relative_error(p.analytic, numeric, f0);
    if (err >= kTolerance) {
      const double right = (fp - f0) / h, left = (f0 - fm) / h;
      const bool one_sided_disagree = std::abs(right - left) > 1e-4 * std::max(1.0, std::abs(p.analytic));
      const bool matches_a_side =
          std::min(relative_error(p.analytic, right, f0), relative_error(p.analytic, left, f0)) < 1e-4;
      bool kink_nearby = false;
      if (relative_error(right, left, f0) >= kTolerance) {
        const double hr = h * kRefineFactor;
        *p.slot = saved + hr;
        const double rp = eval();
        *p.slot = saved - hr;
        const double rm = eval();
        *p.slot = saved;
        kink_nearby = relative_error(p.analytic, (rp - rm) / (2.0 * hr), f0) < kTolerance;
      }
      if ((one_sided_disagree && matches_a_side) || kink_nearby) {
        ++r.excluded;
        continue;
      }
    }
    ++r.checked;
    r.max_rel_error = std::max(r.max_rel_error, err);
  }
  return r;
}

Image random_image(Index k, Index i, Index j, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(k, i, j);
  for (Index n = 0; n < img.data().size(); ++n) img.data().data()[n] = u(rng);
  return img;
}

// Elementwise inputs at least 1e-2 away from the origin.
Image away_from_zero(Image img, double margin) {
  for (Index n = 0; n < img.data().size(); ++n) {
    double& v = img.data().data()[n];
    if (std::abs(v) < margin) v = v < 0 ? -margin : margin;
  }
  return img;
}

Index uniform_index(std::mt19937_64& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

Matrix projection_like(const ad::Var& v, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix r(v.value().rows(), v.value().cols());
  for (Index n = 0; n < r.size(); ++n) r.data()[n] = u(rng);
  return r;
}

struct Audit {
  std::mt19937_64& rng;
  int instances;
  Report& report;

  void add(const CaseResult& c) {
    for (auto& existing : report.cases)
      if (existing.name == c.name) {
        existing.merge(c);
        return;
      }
    report.cases.push_back(c);
  }

  // Projects op(leaves) onto a random tensor drawn once per instance.
  template <typename Build, typename Leaves>
  void op_case(const std::string& name, const Leaves& make_leaves, const Build& build) {
    for (int n = 0; n < instances; ++n) {
      std::vector<Image> leaves = make_leaves();
      Matrix proj;
      auto f = [&](ad::Tape& t, const std::vector<ad::Var>& v) {
        const ad::Var y = build(t, v);
        if (proj.size() == 0) proj = projection_like(y, rng);
        return t.dot(y, proj);
      };
      add(check_leaves(name, std::move(leaves), f, 0, rng));
    }
  }
};

void operator_cases(Audit& a) {
  auto& rng = a.rng;
  a.op_case(
      "op.conv2d.stride1",
      [&] {
        const Index c = uniform_index(rng, 1, 3), o = uniform_index(rng, 1, 3);
        return std::vector<Image>{random_image(c, uniform_index(rng, 3, 6), uniform_index(rng, 3, 6), rng),
                                  random_image(o, 1, c * 9, rng), random_image(o, 1, 1, rng)};
      },
      [](ad::Tape& t, const std::vector<ad::Var>& v) { return t.conv2d(v[0], v[1], v[2], 1); });
  a.op_case(
      "op.conv2d.stride2",
      [&] {
        const Index c = uniform_index(rng, 1, 3), o = uniform_index(rng, 1, 3);
        return std::vector<Image>{random_image(c, uniform_index(rng, 3, 7), uniform_index(rng, 3, 7), rng),
                                  random_image(o, 1, c * 9, rng), random_image(o, 1, 1, rng)};
      },
      [](ad::Tape& t, const std::vector<ad::Var>& v) { return t.conv2d(v[0], v[1], v[2], 2); });
  auto pair = [&] {
    const Index c = uniform_index(rng, 1, 3), i = uniform_index(rng, 2, 5), j = uniform_index(rng, 2, 5);
    return std::vector<Image>{random_image(c, i, j, rng), random_image(c, i, j, rng)};
  };
  a.op_case("op.add", pair, [](ad::Tape& t, const std::vector<ad::Var>& v) { return t.add(v[0], v[1]); });
  a.op_case(
      "op.concat_channels",
      [&] {
        const Index i = uniform_index(rng, 2, 5), j = uniform_index(rng, 2, 5);
        return std::vector<Image>{random_image(uniform_index(rng, 1, 3), i, j, rng),
                                  random_image(uniform_index(rng, 1, 3), i, j, rng),
                                  random_image(uniform_index(rng, 1, 2), i, j, rng)};
      },
      [](ad::Tape& t, const std::vector<ad::Var>& v) { return t.concat_channels(v); });
  auto single = [&](double margin) {
    return [&rng, margin] {
      return std::vector<Image>{away_from_zero(
          random_image(uniform_index(rng, 1, 3), uniform_index(rng, 2, 5), uniform_index(rng, 2, 5), rng), margin)};
    };
  };
  a.op_case("op.relu", single(1e-2), [](ad::Tape& t, const std::vector<ad::Var>& v) { return t.relu(v[0]); });
  a.op_case("op.leaky_relu", single(1e-2),
            [](ad::Tape& t, const std::vector<ad::Var>& v) { return t.leaky_relu(v[0], kLeakySlope); });
  a.op_case("op.sigmoid", single(0.0), [](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sigmoid(v[0]); });
  a.op_case("op.scale", single(0.0), [](ad::Tape& t, const std::vector<ad::Var>& v) { return t.scale(v[0], -1.75); });
  a.op_case(
      "op.dense",
      [&] {
        const Index c = uniform_index(rng, 1, 3), i = uniform_index(rng, 1, 4), j = uniform_index(rng, 1, 4);
        const Index o = uniform_index(rng, 1, 3);
        return std::vector<Image>{random_image(c, i, j, rng), random_image(o, 1, c * i * j, rng),
                                  random_image(o, 1, 1, rng)};
      },
      [](ad::Tape& t, const std::vector<ad::Var>& v) { return t.dense(v[0], v[1], v[2]); });
  for (const char* dir : {"up", "down"}) {
    const bool up = dir[0] == 'u';
    Index ho = 0, wo = 0;
    a.op_case(
        std::string("op.resize.") + dir,
        [&] {
          const Index i = uniform_index(rng, 3, 6), j = uniform_index(rng, 3, 6);
          ho = up ? i * uniform_index(rng, 2, 3) : uniform_index(rng, 1, i - 1);
          wo = up ? j + uniform_index(rng, 1, 5) : uniform_index(rng, 1, j - 1);
          return std::vector<Image>{random_image(uniform_index(rng, 1, 3), i, j, rng)};
        },
        [&](ad::Tape& t, const std::vector<ad::Var>& v) { return t.resize(v[0], ho, wo); });
  }
  a.op_case(
      "op.sum",
      [&] {
        return std::vector<Image>{random_image(1, 1, 1, rng), random_image(1, 1, 1, rng), random_image(1, 1, 1, rng)};
      },
      [](ad::Tape& t, const std::vector<ad::Var>& v) { return t.sum(v); });
  // dot is exercised by every projection; this case checks it with its own weights.
  Matrix dot_weights;
  a.op_case("op.dot", single(0.0), [&](ad::Tape& t, const std::vector<ad::Var>& v) {
    if (dot_weights.rows() != v[0].value().rows() || dot_weights.cols() != v[0].value().cols())
      dot_weights = projection_like(v[0], rng);
    return t.scale(t.dot(v[0], dot_weights), 0.5);
  });
  auto probability = [&] { return std::vector<Image>{random_image(1, 1, 1, rng, -4.0, 4.0)}; };
  a.op_case("op.clamp_probability", probability, [](ad::Tape& t, const std::vector<ad::Var>& v) {
    return t.clamp_probability(t.sigmoid(v[0]), kMinProbability);
  });
  a.op_case("op.neg_log", probability, [](ad::Tape& t, const std::vector<ad::Var>& v) {
    return t.neg_log(t.sigmoid(v[0]), kMinProbability);
  });
  a.op_case("op.neg_log1m", probability, [](ad::Tape& t, const std::vector<ad::Var>& v) {
    return t.neg_log1m(t.sigmoid(v[0]), kMinProbability);
  });
}

void loss_cases(Audit& a) {
  auto& rng = a.rng;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int n = 0; n < a.instances; ++n) {
    const Index k = uniform_index(rng, 0, 1) == 0 ? 1 : 3, i = uniform_index(rng, 3, 7), j = uniform_index(rng, 3, 7);
    const Image hr = random_image(k, i, j, rng, 0.0, 1.0);
    const Image sr0 = random_image(k, i, j, rng, 0.0, 1.0);
    const Image hw = random_image(k, i, j, rng, 0.0, 2.0);
    const double eps = std::pow(10.0, -1.0 - 2.0 * u01(rng));
    a.add(check_leaves("loss.weighted_l1", {sr0},
                       [&](ad::Tape& t, const std::vector<ad::Var>& v) { return t.weighted_l1(v[0], hr, hw); }, 0, rng));
    a.add(check_leaves(
        "loss.weighted_charbonnier", {sr0},
        [&](ad::Tape& t, const std::vector<ad::Var>& v) { return t.weighted_charbonnier(v[0], hr, hw, eps); }, 0, rng));

    EdgeMapConfig ecfg;
    ecfg.method = n % 2 == 0 ? EdgeMethod::local_variance : EdgeMethod::canny;
    const WeightMatrix w = extract_edge_map(hr, ecfg);
    const double beta1 = 0.001 + 0.01 * u01(rng), beta2 = 20.0 * u01(rng);
    const Image sa_h = build_weight_matrix(w, beta1, beta2);
    a.add(check_leaves(
        "loss.sa_pixel", {sr0},
        [&](ad::Tape& t, const std::vector<ad::Var>& v) {
          return n % 4 < 2 ? t.weighted_l1(v[0], hr, sa_h) : t.weighted_charbonnier(v[0], hr, sa_h, eps);
        },
        0, rng));

    // Closed-form gradient of the pixel loss against differences of the plain evaluator.
    {
      CaseResult r;
      r.name = "loss.closed_form_gradient";
      r.instances = 1;
      const Norm norm = n % 2 == 0 ? Norm::l1 : Norm::charbonnier;
      Image sr = sr0;
      const Image g = grad_weighted_loss(hr, sr, hw, norm, eps);
      for (Index e = 0; e < sr.data().size(); ++e) {
        double& x = sr.data().data()[e];
        if (norm == Norm::l1 && std::abs(x - hr.data().data()[e]) < 1e-6) {
          ++r.excluded;
          continue;
        }
        const double saved = x;
        x = saved + kStep;
        const double fp = weighted_distance(hr, sr, hw, norm, eps);
        x = saved - kStep;
        const double fm = weighted_distance(hr, sr, hw, norm, eps);
        x = saved;
        ++r.checked;
        r.max_rel_error = std::max(r.max_rel_error, relative_error(g.data().data()[e], (fp - fm) / (2.0 * kStep),
                                                                   weighted_distance(hr, sr, hw, norm, eps)));
      }
      a.add(r);
    }

    const Index fk = uniform_index(rng, 1, 3);
    const FeatureExtractor fx(fk, rng());
    const Image fhr = random_image(fk, uniform_index(rng, 5, 9), uniform_index(rng, 5, 9), rng, 0.0, 1.0);
    const Image fsr = random_image(fk, fhr.height(), fhr.width(), rng, 0.0, 1.0);
    const Image target = fx(fhr);
    const Image ones = Image::constant(target.channels(), target.height(), target.width(), 1.0);
    a.add(check_leaves(
        "loss.perceptual", {fsr},
        [&](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.weighted_charbonnier(fx.graph(t, v[0]), target, ones, eps);
        },
        0, rng));

    const NetworkParams d = make_discriminator(fk, fhr.height(), fhr.width(), rng());
    a.add(check_leaves(
        "loss.gan_generator", {fsr},
        [&](ad::Tape& t, const std::vector<ad::Var>& v) {
          return t.neg_log(discriminator_graph(t, v[0], d, Binding::frozen), kMinProbability);
        },
        0, rng));
    NetworkParams dp = d;
    a.add(check_params(
        "loss.gan_discriminator", {&dp},
        [&] {
          dp.zero_grad();
          ad::Tape t;
          const ad::Var real = discriminator_graph(t, t.constant(fhr), dp, Binding::trainable);
          const ad::Var fake = discriminator_graph(t, t.constant(fsr), dp, Binding::trainable);
          const ad::Var loss = t.sum({t.neg_log(real, kMinProbability), t.neg_log1m(fake, kMinProbability)});
          const double value = loss.scalar();
          t.backward(loss);
          return value;
        },
        60, rng));
  }
}

struct EndToEnd {
  std::vector<Sample> samples;
  NetworkParams g, d;
  FeatureExtractor fx;
  TrainConfig cfg;
};

EndToEnd end_to_end_setup(LossMode mode, Index hr, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.mode = is_video(mode) ? InputMode::multi_frame : InputMode::single_image;
  cfg.sa = is_sa(mode);
  cfg.scale = 2;
  cfg.hr_size = hr;
  cfg.coeffs = is_video(mode) ? LossCoefficients::vsr_sa_local_variance() : LossCoefficients::esrgan_sa();
  std::vector<Sample> samples = make_synthetic_dataset(2, hr, cfg.scale, seed, cfg.mode, 1);
  attach_edge_maps(samples, cfg.edge_cfg);
  return EndToEnd{std::move(samples), make_generator(1, cfg.frames(), seed + 1),
                  make_discriminator(1, hr, hr, seed + 2), FeatureExtractor(1, seed + 3), cfg};
}

void end_to_end_cases(Audit& a) {
  auto& rng = a.rng;
  for (int n = 0; n < a.instances; ++n) {
    for (LossMode mode : {LossMode::esr_plain, LossMode::esr_sa, LossMode::vsr_plain, LossMode::vsr_sa}) {
      EndToEnd e = end_to_end_setup(mode, 6 + 2 * (n % 2), rng());
      const std::vector<const Sample*> batch = {&e.samples[0], &e.samples[1]};
      a.add(check_params(
          "e2e.generator." + std::string(to_string(mode)), {&e.g},
          [&] {
            e.g.zero_grad();
            return generator_step_loss(batch, e.g, e.d, e.fx, e.cfg, false).total;
          },
          40, rng));
    }
    EndToEnd e = end_to_end_setup(LossMode::esr_sa, 6 + 2 * (n % 2), rng());
    const std::vector<const Sample*> batch = {&e.samples[0], &e.samples[1]};
    a.add(check_params(
        "e2e.discriminator", {&e.d},
        [&] {
          e.d.zero_grad();
          return discriminator_step_loss(batch, e.g, e.d);
        },
        40, rng));
  }

  // Every parameter of both networks on one 1x6x6 instance.
  EndToEnd e = end_to_end_setup(LossMode::esr_sa, 6, rng());
  const std::vector<const Sample*> batch = {&e.samples[0]};
  a.add(check_params(
      "e2e.all_parameters.generator", {&e.g},
      [&] {
        e.g.zero_grad();
        return generator_step_loss(batch, e.g, e.d, e.fx, e.cfg, false).total;
      },
      0, rng));
  a.add(check_params(
      "e2e.all_parameters.discriminator", {&e.d},
      [&] {
        e.d.zero_grad();
        return discriminator_step_loss(batch, e.g, e.d);
      },
      0, rng));
}

}  // namespace

CaseResult check_leaves(const std::string& name, std::vector<Image> leaves, const LeafGraph& f, long max_probes,
                        std::mt19937_64& rng) {
  auto eval_tape = [&](bool with_grad, std::vector<Image>* grads) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& l : leaves) vars.push_back(tape.variable(l));
    const ad::Var y = f(tape, vars);
    const double value = y.scalar();
    if (with_grad) {
      tape.backward(y);
      for (const auto& v : vars) grads->push_back(tape.grad_image(v));
    }
    return value;
  };
  std::vector<Image> grads;
  eval_tape(true, &grads);
  std::vector<std::pair<std::size_t, Index>> all;
  for (std::size_t l = 0; l < leaves.size(); ++l)
    for (Index e = 0; e < leaves[l].data().size(); ++e) all.emplace_back(l, e);
  std::vector<Probe> probes;
  for (std::size_t p : choose(all.size(), max_probes, rng)) {
    const auto [l, e] = all[p];
    probes.push_back({leaves[l].data().data() + e, grads[l].data().data()[e]});
  }
  return run_probes(name, probes, [&] { return eval_tape(false, nullptr); });
}

CaseResult check_params(const std::string& name, const std::vector<NetworkParams*>& nets, const ParamObjective& f,
                        long max_probes, std::mt19937_64& rng) {
  f();
  std::vector<Probe> all;
  for (NetworkParams* net : nets)
    for (Layer& l : net->layers) {
      for (Index e = 0; e < l.weight.size(); ++e) all.push_back({l.weight.data() + e, l.weight_grad.data()[e]});
      for (Index e = 0; e < l.bias.size(); ++e) all.push_back({l.bias.data() + e, l.bias_grad.data()[e]});
    }
  std::vector<Probe> probes;
  for (std::size_t p : choose(all.size(), max_probes, rng)) probes.push_back(all[p]);
  return run_probes(name, probes, f);
}

Report run_gradient_audit(std::uint64_t seed, int instances) {
  if (instances < 1) throw PreconditionError("run_gradient_audit: instances must be positive");
  Report report;
  report.seed = seed;
  std::mt19937_64 rng(seed);
  Audit audit{rng, instances, report};
  operator_cases(audit);
  loss_cases(audit);
  end_to_end_cases(audit);
  return report;
}

}  // namespace sasr::gradcheck
