#pragma once

#include <span>
#include <vector>

#include "instmvs/cascade.hpp"
#include "instmvs/costvolume.hpp"
#include "instmvs/depth_map.hpp"
#include "instmvs/interval.hpp"

namespace instmvs {

struct ConfidenceMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  ConfidenceMap() = default;
  ConfidenceMap(int rows_, int cols_)
      : rows(rows_), cols(cols_), values(static_cast<size_t>(rows_) * cols_, 0.0) {}
  size_t size() const { return values.size(); }
};

// Per-pixel maximum of the stage distribution; pixels outside the volume's
// support get 0.
ConfidenceMap stage_confidence_max(const ProbabilityVolume& pv);

// Element-wise mean of the stage maps.
ConfidenceMap average_confidence(std::span<const ConfidenceMap> stage_maps);

// Mass of [a, b] under a discrete distribution over depths
// first, first + spacing, ... read as a piecewise-constant density: bin l
// spans [d_l - spacing/2, d_l + spacing/2) with density p_l / spacing.
double interval_mass(std::span<const double> probs, double first, double spacing,
                     const Interval& interval);
double interval_mass(std::span<const float> probs, double first, double spacing,
                     const Interval& interval);

// One inference step of a pixel: its distribution over the hypotheses it was
// sampled on, and the sub-range it realized for the next step. A prior link
// carries no distribution and stands for the scene depth prior, which holds
// the true depth with probability 1.
struct ChainLink {
  std::vector<double> probs;
  double first_depth = 0.0;
  double spacing = 0.0;
  Interval realized;
  bool prior = false;

  // [d_0 - spacing/2, d_{L-1} + spacing/2].
  Interval support() const;
};

struct ConfidenceChain {
  std::vector<ChainLink> links;
  double predicted_depth = 0.0;
};

struct ConditionalConfidence {
  double sigma = 0.0;
  bool zero_mass = false;  // some intermediate range carried no mass
};

// Probability that the true depth lies in (d_pred - delta, d_pred + delta]
// given the chain: the product of each link's mass on its realized range,
// except the last link, which contributes its mass on the final interval.
ConditionalConfidence conditional_confidence(const ConfidenceChain& chain, double delta);

// Refinement volumes inserted between stage 1 and stage 2 (IF-ADS), in
// processing order. `linked` marks which slots of each volume were accepted.
struct RefinementLinks {
  std::span<const ProbabilityVolume> volumes;
  std::span<const std::vector<uint8_t>> linked;
};

struct ConditionalConfidenceMap {
  ConfidenceMap map;
  size_t zero_mass = 0;
};

// Per pixel: stage 1, any refinement links, stages 2..N, then the final
// interval around `final_depth`. `delta <= 0` selects half the pixel's
// finest hypothesis interval. Invalid pixels get 0.
ConditionalConfidenceMap conditional_confidence_map(std::span<const StageRecord> stages,
                                                    const RefinementLinks& refinements,
                                                    const DepthMap& final_depth,
                                                    double delta = 0.0);

}  // namespace instmvs
