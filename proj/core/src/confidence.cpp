#include "instmvs/confidence.hpp"

#include <algorithm>
#include <stdexcept>

#include "instmvs/errors.hpp"

namespace instmvs {

ConfidenceMap stage_confidence_max(const ProbabilityVolume& pv) {
  const HypothesisSet& hyps = pv.hypotheses;
  ConfidenceMap map(hyps.rows(), hyps.cols());
  for (size_t slot = 0; slot < hyps.slots(); ++slot) {
    const std::span<const float> p = pv.distribution(slot);
    map.values[static_cast<size_t>(hyps.pixel(slot))] = *std::max_element(p.begin(), p.end());
  }
  return map;
}

ConfidenceMap average_confidence(std::span<const ConfidenceMap> stage_maps) {
  if (stage_maps.empty()) throw std::invalid_argument("average_confidence needs at least one map");
  ConfidenceMap out(stage_maps[0].rows, stage_maps[0].cols);
  for (const ConfidenceMap& m : stage_maps) {
    if (m.rows != out.rows || m.cols != out.cols) {
      throw DimensionMismatch("confidence maps differ in size");
    }
    for (size_t i = 0; i < out.size(); ++i) out.values[i] += m.values[i];
  }
  const double n = static_cast<double>(stage_maps.size());
  for (double& v : out.values) v /= n;
  return out;
}

namespace {

template <typename T>
double mass_of(std::span<const T> probs, double first, double spacing, const Interval& interval) {
  if (!(spacing > 0.0)) throw std::invalid_argument("interval_mass needs a positive spacing");
  if (interval.lo > interval.hi) throw std::invalid_argument("interval_mass needs a <= b");
  const double half = 0.5 * spacing;
  // Only bins whose span can overlap [a, b] contribute.
  const long n = static_cast<long>(probs.size());
  const double limit = static_cast<double>(n) + 1.0;
  const double lo_index = std::clamp((interval.lo - first) / spacing - 1.0, 0.0, limit);
  const double hi_index = std::clamp((interval.hi - first) / spacing + 2.0, 0.0, limit);
  const long begin = std::min(static_cast<long>(lo_index), n);
  const long end = std::min(static_cast<long>(hi_index), n);
  double mass = 0.0;
  for (long l = begin; l < end; ++l) {
    const double center = first + spacing * static_cast<double>(l);
    const double overlap =
        std::min(interval.hi, center + half) - std::max(interval.lo, center - half);
    if (overlap > 0.0) mass += static_cast<double>(probs[l]) * overlap;
  }
  return std::clamp(mass / spacing, 0.0, 1.0);
}

}  // namespace

double interval_mass(std::span<const double> probs, double first, double spacing,
                     const Interval& interval) {
  return mass_of(probs, first, spacing, interval);
}

double interval_mass(std::span<const float> probs, double first, double spacing,
                     const Interval& interval) {
  return mass_of(probs, first, spacing, interval);
}

Interval ChainLink::support() const {
  const double half = 0.5 * spacing;
  return {first_depth - half,
          first_depth + spacing * static_cast<double>(probs.size() - 1) + half};
}

ConditionalConfidence conditional_confidence(const ConfidenceChain& chain, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("conditional confidence needs delta > 0");
  std::vector<const ChainLink*> links;
  for (size_t k = 0; k < chain.links.size(); ++k) {
    if (chain.links[k].prior) {
      if (k != 0) throw std::invalid_argument("the prior link must come first");
      continue;  // P(d in R_0) = 1
    }
    links.push_back(&chain.links[k]);
  }
  if (links.empty()) throw std::invalid_argument("conditional confidence needs a non-empty chain");

  ConditionalConfidence out;
  double sigma = 1.0;
  for (size_t k = 0; k + 1 < links.size(); ++k) {
    const ChainLink& link = *links[k];
    const double m = interval_mass(link.probs, link.first_depth, link.spacing, link.realized);
    if (m == 0.0) {
      out.zero_mass = true;
      return out;
    }
    sigma *= m;
  }
  const ChainLink& last = *links.back();
  const Interval final_range{chain.predicted_depth - delta, chain.predicted_depth + delta};
  sigma *= interval_mass(last.probs, last.first_depth, last.spacing, final_range);
  out.sigma = std::clamp(sigma, 0.0, 1.0);
  return out;
}

namespace {

struct LinkView {
  std::span<const float> probs;
  double first = 0.0;
  double spacing = 0.0;
  Interval range;  // hypothesis range this link was sampled on
};

LinkView view_of(const ProbabilityVolume& pv, size_t slot) {
  const HypothesisSet& h = pv.hypotheses;
  return {pv.distribution(slot), h.depth(slot, 0), h.spacing(slot), h.range(slot)};
}

}  // namespace

ConditionalConfidenceMap conditional_confidence_map(std::span<const StageRecord> stages,
                                                    const RefinementLinks& refinements,
                                                    const DepthMap& final_depth, double delta) {
  if (stages.empty()) throw std::invalid_argument("conditional confidence needs stage records");
  if (refinements.volumes.size() != refinements.linked.size()) {
    throw std::invalid_argument("refinement volumes and link flags differ in count");
  }
  const int rows = stages[0].depth.rows;
  const int cols = stages[0].depth.cols;
  if (final_depth.rows != rows || final_depth.cols != cols) {
    throw DimensionMismatch("final depth does not match the stage records");
  }
  ConditionalConfidenceMap out{ConfidenceMap(rows, cols), 0};
  std::vector<LinkView> chain;
  for (size_t p = 0; p < out.map.size(); ++p) {
    if (!final_depth.valid[p]) continue;
    chain.clear();
    chain.push_back(view_of(stages[0].volume, p));
    for (size_t r = 0; r < refinements.volumes.size(); ++r) {
      const auto slot = refinements.volumes[r].hypotheses.slot_of(p);
      if (slot && refinements.linked[r][*slot]) chain.push_back(view_of(refinements.volumes[r], *slot));
    }
    for (size_t k = 1; k < stages.size(); ++k) chain.push_back(view_of(stages[k].volume, p));

    double sigma = 1.0;
    bool zero = false;
    for (size_t k = 0; k + 1 < chain.size(); ++k) {
      const double m = interval_mass(chain[k].probs, chain[k].first, chain[k].spacing, chain[k + 1].range);
      if (m == 0.0) {
        zero = true;
        break;
      }
      sigma *= m;
    }
    if (zero) {
      ++out.zero_mass;
      continue;
    }
    const LinkView& last = chain.back();
    const double half_width = delta > 0.0 ? delta : 0.5 * last.spacing;
    const double d = final_depth.depth[p];
    sigma *= interval_mass(last.probs, last.first, last.spacing, {d - half_width, d + half_width});
    out.map.values[p] = std::clamp(sigma, 0.0, 1.0);
  }
  return out;
}

}  // namespace instmvs
