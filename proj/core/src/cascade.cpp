#include "instmvs/cascade.hpp"

#include <algorithm>
#include <stdexcept>

#include "instmvs/errors.hpp"

namespace instmvs {

RangeMap RangeMap::uniform(int rows, int cols, const Interval& range, int stage) {
  return RangeMap{rows, cols, stage, std::vector<Interval>(static_cast<size_t>(rows) * cols, range)};
}

void StageConfig::validate() const {
  if (hypotheses.empty()) throw std::invalid_argument("cascade needs at least one stage");
  for (int L : hypotheses) {
    if (L < 2) throw std::invalid_argument("every stage needs at least 2 hypotheses");
  }
  if (shrink.size() + 1 < hypotheses.size()) {
    throw std::invalid_argument("cascade needs one shrink factor per stage transition");
  }
  for (double w : shrink) {
    if (!(w > 0.0 && w < 1.0)) throw std::invalid_argument("shrink factors must lie in (0, 1)");
  }
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (window < 3 || window % 2 == 0) throw std::invalid_argument("window must be odd and >= 3");
}

HypothesisSet sample_hypotheses(const RangeMap& ranges, int count) {
  return HypothesisSet::dense(ranges.rows, ranges.cols, count, ranges.ranges);
}

DepthMap regress_depth(const ProbabilityVolume& pv, bool argmax) {
  const HypothesisSet& hyps = pv.hypotheses;
  const int L = hyps.count();
  DepthMap out(hyps.rows(), hyps.cols());
  for (size_t slot = 0; slot < hyps.slots(); ++slot) {
    const std::span<const float> p = pv.distribution(slot);
    double d = 0.0;
    if (argmax) {
      int best = 0;
      for (int l = 1; l < L; ++l) {
        if (p[l] > p[best]) best = l;
      }
      d = hyps.depth(slot, best);
    } else {
      for (int l = 0; l < L; ++l) d += static_cast<double>(p[l]) * hyps.depth(slot, l);
    }
    const Interval& r = hyps.range(slot);
    d = std::clamp(d, r.lo, r.hi);
    const size_t pixel = static_cast<size_t>(hyps.pixel(slot));
    out.depth[pixel] = d;
    out.valid[pixel] = pv.matched[slot];
  }
  return out;
}

RangeMap narrow_range(const RangeMap& prev, const DepthMap& depth, double shrink,
                      const Interval& prior) {
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("shrink must lie in (0, 1)");
  if (depth.rows != prev.rows || depth.cols != prev.cols) {
    throw DimensionMismatch("depth map does not match the range map");
  }
  RangeMap next{prev.rows, prev.cols, prev.stage + 1, std::vector<Interval>(prev.size())};
  for (size_t i = 0; i < prev.size(); ++i) {
    const Interval bound = prev.ranges[i].intersect(prior);
    const double length = prev.ranges[i].length() * shrink;
    const double center = depth.valid[i] ? depth.depth[i] : prev.ranges[i].center();
    double lo = center - 0.5 * length;
    if (lo < bound.lo) lo = bound.lo;
    if (lo + length > bound.hi) lo = bound.hi - length;
    double hi = lo + length;
    // Guard the last ulp so nesting holds under exact comparison.
    if (hi > bound.hi) hi = bound.hi;
    if (lo < bound.lo) lo = bound.lo;
    next.ranges[i] = {lo, hi};
  }
  return next;
}

StageRecord run_stage(const CameraView& ref, std::span<const CameraView> srcs,
                      const RangeMap& ranges, int count, const StageConfig& cfg) {
  const HypothesisSet hyps = sample_hypotheses(ranges, count);
  ProbabilityVolume pv = cost_to_probability(build_cost_volume(ref, srcs, hyps, cfg.window),
                                             cfg.temperature, ranges.stage);
  DepthMap depth = regress_depth(pv, cfg.argmax_regression);
  return StageRecord{ranges.stage, ranges, std::move(pv), std::move(depth)};
}

void continue_cascade(const CameraView& ref, std::span<const CameraView> srcs,
                      const StageConfig& cfg, const Interval& prior, const RangeMap& seed_ranges,
                      const DepthMap& seed_depth, std::vector<StageRecord>& stages) {
  const RangeMap* prev_ranges = &seed_ranges;
  const DepthMap* prev_depth = &seed_depth;
  for (int k = static_cast<int>(stages.size()); k < cfg.stages(); ++k) {
    const RangeMap ranges = narrow_range(*prev_ranges, *prev_depth, cfg.shrink[k - 1], prior);
    stages.push_back(run_stage(ref, srcs, ranges, cfg.hypotheses[k], cfg));
    prev_ranges = &stages.back().ranges;
    prev_depth = &stages.back().depth;
  }
}

std::vector<StageRecord> run_cascade(const CameraView& ref, std::span<const CameraView> srcs,
                                     const StageConfig& cfg, const Interval& prior) {
  cfg.validate();
  std::vector<StageRecord> stages;
  const RangeMap initial = RangeMap::uniform(ref.image.rows(), ref.image.cols(), prior, 1);
  stages.push_back(run_stage(ref, srcs, initial, cfg.hypotheses[0], cfg));
  continue_cascade(ref, srcs, cfg, prior, stages.front().ranges, stages.front().depth, stages);
  return stages;
}

}  // namespace instmvs
