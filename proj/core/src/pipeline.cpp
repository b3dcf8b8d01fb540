#include "instmvs/pipeline.hpp"

#include <algorithm>

namespace instmvs {

StageRecord initial_stage(const CameraView& ref, std::span<const CameraView> srcs,
                          const Interval& prior, const StageConfig& cfg) {
  cfg.validate();
  const RangeMap ranges = RangeMap::uniform(ref.image.rows(), ref.image.cols(), prior, 1);
  return run_stage(ref, srcs, ranges, cfg.hypotheses.front(), cfg);
}

std::vector<StageSummary> summarize_stages(std::span<const StageRecord> stages) {
  std::vector<StageSummary> out;
  for (const StageRecord& s : stages) {
    const ConfidenceMap conf = stage_confidence_max(s.volume);
    std::vector<double> values = conf.values;
    StageSummary summary;
    summary.stage = s.stage;
    if (!values.empty()) {
      double sum = 0.0;
      for (double v : values) sum += v;
      summary.mean_max_prob = sum / static_cast<double>(values.size());
      const size_t mid = values.size() / 2;
      std::nth_element(values.begin(), values.begin() + mid, values.end());
      summary.median_max_prob = values[mid];
    }
    const HypothesisSet& h = s.volume.hypotheses;
    double spacing = 0.0;
    for (size_t slot = 0; slot < h.slots(); ++slot) spacing += h.spacing(slot);
    summary.mean_interval = h.slots() ? spacing / static_cast<double>(h.slots()) : 0.0;
    out.push_back(summary);
  }
  return out;
}

ViewEstimate estimate_from_initial(const CameraView& ref, std::span<const CameraView> srcs,
                                   std::span<const InstanceMask> masks, const Interval& prior,
                                   const PipelineOptions& opts, StageRecord initial) {
  const StageConfig& cfg = opts.stages;
  cfg.validate();
  ViewEstimate est;
  est.stages.push_back(std::move(initial));
  const StageRecord& first = est.stages.front();

  if (opts.ifads && !masks.empty()) {
    const RefineParams params{cfg.hypotheses.front(), cfg.temperature, cfg.window,
                              cfg.argmax_regression};
    est.ifads = ifads(ref, srcs, masks, first, prior, opts.ifads_config, params);
  }
  const RangeMap& seed_ranges = est.ifads ? est.ifads->ranges : first.ranges;
  const DepthMap& seed_depth = est.ifads ? est.ifads->depth : first.depth;
  continue_cascade(ref, srcs, cfg, prior, seed_ranges, seed_depth, est.stages);
  est.depth = est.stages.size() > 1 ? est.stages.back().depth : seed_depth;

  std::vector<ConfidenceMap> per_stage;
  for (const StageRecord& s : est.stages) per_stage.push_back(stage_confidence_max(s.volume));
  est.baseline_confidence = average_confidence(per_stage);

  if (opts.cpc) {
    RefinementLinks links;
    if (est.ifads) links = {est.ifads->refinements, est.ifads->linked};
    est.conditional = conditional_confidence_map(est.stages, links, est.depth, opts.delta);
  }
  est.report = summarize_stages(est.stages);
  return est;
}

ViewEstimate estimate_view(const CameraView& ref, std::span<const CameraView> srcs,
                           std::span<const InstanceMask> masks, const Interval& prior,
                           const PipelineOptions& opts) {
  return estimate_from_initial(ref, srcs, masks, prior, opts,
                               initial_stage(ref, srcs, prior, opts.stages));
}

}  // namespace instmvs
