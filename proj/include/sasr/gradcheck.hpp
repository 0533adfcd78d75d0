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

#ifndef SASR_GRADCHECK_HPP
#define SASR_GRADCHECK_HPP

#include "sasr/autodiff.hpp"
#include "sasr/networks.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace sasr::gradcheck {

inline constexpr double kStep = 1e-6;
inline constexpr double kTolerance = 1e-5;
/// Denominator floor of relative_error per unit of objective magnitude.
inline constexpr double kScaleFloor = 1e-3;
/// Step multiplier of the confirmation probe for a kink inside the step.
inline constexpr double kRefineFactor = 1e-2;

/// |analytic - numeric| / max(|analytic|, |numeric|, kScaleFloor * max(1, |objective|)).
double relative_error(double analytic, double numeric, double objective = 0.0);

struct CaseResult {
  std::string name;
  int instances = 0;
  long checked = 0;
  long excluded = 0;  // probes straddling a kink
  double max_rel_error = 0.0;

  void merge(const CaseResult& other);
};

struct Report {
  std::uint64_t seed = 0;
  std::vector<CaseResult> cases;

  double max_rel_error() const;
  bool passed(double tol = kTolerance) const { return max_rel_error() < tol; }
};

/// Builds a scalar on a fresh tape from leaf variables.
using LeafGraph = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;
/// Evaluates an objective with zeroed gradient slots and leaves d objective / d parameters in them.
using ParamObjective = std::function<double()>;

/**
 * Central-difference check of d f / d leaves. At most `max_probes` random
 * elements are probed (all when <= 0). A failing probe is counted as a kink
 * and excluded when its one-sided differences disagree and either the
 * analytic value matches one side or a central difference with step
 * kStep * kRefineFactor matches the analytic value.
 */
CaseResult check_leaves(const std::string& name, std::vector<Image> leaves, const LeafGraph& f, long max_probes,
                        std::mt19937_64& rng);

/// Same check over every layer of `nets` (probed parameters perturbed in place, then restored).
CaseResult check_params(const std::string& name, const std::vector<NetworkParams*>& nets, const ParamObjective& f,
                        long max_probes, std::mt19937_64& rng);

/// Every loss term, every tape operator and the end-to-end losses, `instances` random cases each.
Report run_gradient_audit(std::uint64_t seed, int instances = 20);

}  // namespace sasr::gradcheck

#endif  // SASR_GRADCHECK_HPP
