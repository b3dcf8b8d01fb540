#include "instmvs/costvolume.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "instmvs/errors.hpp"

namespace instmvs {

HypothesisSet::HypothesisSet(int rows, int cols, int count, std::vector<int32_t> pixels,
                             std::vector<Interval> ranges)
    : rows_(rows), cols_(cols), count_(count), pixels_(std::move(pixels)), ranges_(std::move(ranges)) {
  if (count < 2) throw std::invalid_argument("hypothesis count must be at least 2");
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("hypothesis set needs a positive size");
  const size_t total = static_cast<size_t>(rows) * cols;
  if (pixels_.empty()) {
    if (ranges_.size() != total) {
      throw std::invalid_argument("dense hypothesis set needs one range per pixel");
    }
  } else {
    if (pixels_.size() != ranges_.size()) {
      throw std::invalid_argument("hypothesis set pixel and range counts differ");
    }
    slot_index_.assign(total, -1);
    for (size_t s = 0; s < pixels_.size(); ++s) {
      const int32_t p = pixels_[s];
      if (p < 0 || static_cast<size_t>(p) >= total || (s > 0 && p <= pixels_[s - 1])) {
        throw std::invalid_argument("hypothesis set pixels must be increasing and in bounds");
      }
      slot_index_[p] = static_cast<int32_t>(s);
    }
  }
  for (const Interval& r : ranges_) {
    if (!(r.lo < r.hi)) throw std::invalid_argument("hypothesis range must satisfy lo < hi");
  }
}

HypothesisSet HypothesisSet::dense(int rows, int cols, int count, std::vector<Interval> ranges) {
  return HypothesisSet(rows, cols, count, {}, std::move(ranges));
}

std::optional<size_t> HypothesisSet::slot_of(size_t pixel) const {
  if (is_dense()) {
    if (pixel < ranges_.size()) return pixel;
    return std::nullopt;
  }
  if (pixel >= slot_index_.size() || slot_index_[pixel] < 0) return std::nullopt;
  return static_cast<size_t>(slot_index_[pixel]);
}

namespace {

// Centered statistics of a window: values minus mean, and sum of squares.
struct CenteredWindow {
  double mean = 0.0;
  double sum_squares = 0.0;
};

CenteredWindow center_window(std::span<const double> values, std::span<double> centered) {
  double sum = 0.0;
  for (double v : values) sum += v;
  CenteredWindow w;
  w.mean = sum / static_cast<double>(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    centered[i] = values[i] - w.mean;
    w.sum_squares += centered[i] * centered[i];
  }
  return w;
}

double correlate(std::span<const double> a_centered, double a_ss, std::span<const double> b_centered,
                 double b_ss) {
  const double n = static_cast<double>(a_centered.size());
  if (a_ss / n < kDegenerateVariance || b_ss / n < kDegenerateVariance) return 0.0;
  double cov = 0.0;
  for (size_t i = 0; i < a_centered.size(); ++i) cov += a_centered[i] * b_centered[i];
  return std::clamp(cov / std::sqrt(a_ss * b_ss), -1.0, 1.0);
}

constexpr int kMaxWindow = 15;
constexpr size_t kMaxWindowPixels = kMaxWindow * kMaxWindow;

}  // namespace

double zncc(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("zncc windows differ in size");
  std::vector<double> ac(a.size());
  std::vector<double> bc(b.size());
  const CenteredWindow wa = center_window(a, ac);
  const CenteredWindow wb = center_window(b, bc);
  return correlate(ac, wa.sum_squares, bc, wb.sum_squares);
}

namespace {

// Fronto-parallel sweep for slot sets that share one depth range: every
// window pixel at hypothesis l warps exactly as the full-image warp at that
// depth, so the source image is warped once per (depth, view) and the window
// statistics come from box sums.
void sweep_shared_range(const CameraView& ref, std::span<const CameraView> srcs,
                        std::span<const WarpKernel> kernels, const HypothesisSet& hyps,
                        int radius, CostVolume& cv) {
  const int rows = ref.image.rows();
  const int cols = ref.image.cols();
  const int L = hyps.count();
  const double n = static_cast<double>((2 * radius + 1) * (2 * radius + 1));

  std::vector<size_t> slots;
  int r_min = rows, r_max = -1, c_min = cols, c_max = -1;
  for (size_t slot = 0; slot < hyps.slots(); ++slot) {
    const int pixel = hyps.pixel(slot);
    const int row = pixel / cols;
    const int col = pixel % cols;
    if (row < radius || col < radius || row >= rows - radius || col >= cols - radius) continue;
    slots.push_back(slot);
    r_min = std::min(r_min, row);
    r_max = std::max(r_max, row);
    c_min = std::min(c_min, col);
    c_max = std::max(c_max, col);
  }
  if (slots.empty()) return;

  // Region covered by the windows of the active slots.
  const int top = r_min - radius;
  const int left = c_min - radius;
  const int h = r_max + radius - top + 1;
  const int w = c_max + radius - left + 1;
  const int out_w = c_max - c_min + 1;
  const size_t area = static_cast<size_t>(h) * w;

  // Reference statistics, two-pass per window as in the per-window path.
  std::vector<double> ref_mean(slots.size());
  std::vector<double> ref_ss(slots.size());
  for (size_t i = 0; i < slots.size(); ++i) {
    const int pixel = hyps.pixel(slots[i]);
    const int row = pixel / cols;
    const int col = pixel % cols;
    double sum = 0.0;
    for (int dr = -radius; dr <= radius; ++dr) {
      for (int dc = -radius; dc <= radius; ++dc) sum += ref.image(row + dr, col + dc);
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (int dr = -radius; dr <= radius; ++dr) {
      for (int dc = -radius; dc <= radius; ++dc) {
        const double d = ref.image(row + dr, col + dc) - mean;
        ss += d * d;
      }
    }
    ref_mean[i] = mean;
    ref_ss[i] = ss;
  }

  std::vector<Vec3> rays(static_cast<size_t>(w) * h);
  std::vector<double> warped(area), valid(area);
  // Horizontal window sums of s, s^2, r*s and invalid count.
  std::vector<double> hs(area), hss(area), hrs(area), hbad(area);
  std::vector<double> cost_sum(slots.size());
  std::vector<int> view_count(slots.size());
  std::vector<double> window(static_cast<size_t>(n));

  for (int l = 0; l < L; ++l) {
    const double depth = hyps.depth(slots.front(), l);
    std::fill(cost_sum.begin(), cost_sum.end(), 0.0);
    std::fill(view_count.begin(), view_count.end(), 0);
    for (size_t v = 0; v < srcs.size(); ++v) {
      const GrayImage& img = srcs[v].image;
      const double max_col = img.cols() - 1;
      const double max_row = img.rows() - 1;
      const Mat3& m = kernels[v].ray;
      const Vec3& offset = kernels[v].offset;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const size_t k = static_cast<size_t>(y) * w + x;
          const Vec3 hv = depth * (m * Vec3(left + x, top + y, 1.0)) + offset;
          warped[k] = 0.0;
          valid[k] = 0.0;
          if (!(hv.z() > 1e-9)) continue;
          const double sx = hv.x() / hv.z();
          const double sy = hv.y() / hv.z();
          if (!(sx >= 0.0 && sx <= max_col && sy >= 0.0 && sy <= max_row)) continue;
          warped[k] = sample_bilinear(img, sy, sx);
          valid[k] = 1.0;
        }
      }
      for (int y = 0; y < h; ++y) {
        const float* ref_row = ref.image.data() + static_cast<size_t>(top + y) * cols + left;
        for (int x = 0; x < out_w; ++x) {
          double s = 0.0, ss = 0.0, rs = 0.0, bad = 0.0;
          for (int dx = 0; dx <= 2 * radius; ++dx) {
            const size_t k = static_cast<size_t>(y) * w + x + dx;
            const double sv = warped[k];
            s += sv;
            ss += sv * sv;
            rs += ref_row[x + dx] * sv;
            bad += 1.0 - valid[k];
          }
          const size_t o = static_cast<size_t>(y) * w + x;
          hs[o] = s;
          hss[o] = ss;
          hrs[o] = rs;
          hbad[o] = bad;
        }
      }
      for (size_t i = 0; i < slots.size(); ++i) {
        const int pixel = hyps.pixel(slots[i]);
        const int y0 = pixel / cols - radius - top;
        const int x0 = pixel % cols - c_min;
        double s = 0.0, ss = 0.0, rs = 0.0, bad = 0.0;
        for (int dy = 0; dy <= 2 * radius; ++dy) {
          const size_t o = static_cast<size_t>(y0 + dy) * w + x0;
          s += hs[o];
          ss += hss[o];
          rs += hrs[o];
          bad += hbad[o];
        }
        if (bad > 0.0) continue;
        double src_ss = ss - s * s / n;
        double cov = rs - ref_mean[i] * s;
        if (src_ss / n < 1e-3) {
          // Near-constant window: redo the statistics in two passes.
          size_t k = 0;
          double sum = 0.0;
          for (int dy = 0; dy <= 2 * radius; ++dy) {
            for (int dx = 0; dx <= 2 * radius; ++dx) {
              window[k] = warped[static_cast<size_t>(y0 + dy) * w + x0 + dx];
              sum += window[k++];
            }
          }
          const double mean = sum / n;
          src_ss = 0.0;
          cov = 0.0;
          k = 0;
          for (int dy = 0; dy <= 2 * radius; ++dy) {
            const float* ref_row = ref.image.data() + static_cast<size_t>(top + y0 + dy) * cols + left + x0;
            for (int dx = 0; dx <= 2 * radius; ++dx) {
              const double d = window[k++] - mean;
              src_ss += d * d;
              cov += (ref_row[dx] - ref_mean[i]) * d;
            }
          }
        }
        double score = 0.0;
        if (ref_ss[i] / n >= kDegenerateVariance && src_ss / n >= kDegenerateVariance) {
          score = std::clamp(cov / std::sqrt(ref_ss[i] * src_ss), -1.0, 1.0);
        }
        cost_sum[i] += 1.0 - score;
        ++view_count[i];
      }
    }
    for (size_t i = 0; i < slots.size(); ++i) {
      if (view_count[i] == 0) continue;
      const size_t e = slots[i] * L + l;
      cv.cost[e] = static_cast<float>(cost_sum[i] / view_count[i]);
      cv.view_count[e] = static_cast<uint8_t>(view_count[i]);
    }
  }
}

bool shared_range(const HypothesisSet& hyps) {
  const std::vector<Interval>& r = hyps.ranges();
  return std::all_of(r.begin(), r.end(), [&](const Interval& x) { return x == r.front(); });
}

}  // namespace

CostVolume build_cost_volume(const CameraView& ref, std::span<const CameraView> srcs,
                             const HypothesisSet& hyps, int window, bool allow_sweep) {
  if (window < 3 || window % 2 == 0 || window > kMaxWindow) {
    throw std::invalid_argument("matching window must be odd and within [3, 15]");
  }
  if (srcs.empty()) throw std::invalid_argument("cost volume needs at least one source view");
  if (hyps.rows() != ref.image.rows() || hyps.cols() != ref.image.cols()) {
    throw DimensionMismatch("hypothesis set does not match the reference image");
  }

  const int radius = window / 2;
  const size_t n = static_cast<size_t>(window) * window;
  const int L = hyps.count();

  std::vector<WarpKernel> kernels;
  kernels.reserve(srcs.size());
  for (const CameraView& src : srcs) kernels.push_back(make_warp_kernel(ref.camera, src.camera));

  CostVolume cv{hyps, std::vector<float>(hyps.slots() * L, kInvalidCost),
                std::vector<uint8_t>(hyps.slots() * L, 0)};
  if (hyps.slots() == 0) return cv;
  if (allow_sweep && shared_range(hyps)) {
    sweep_shared_range(ref, srcs, kernels, hyps, radius, cv);
    return cv;
  }

  std::array<double, kMaxWindowPixels> ref_values{};
  std::array<double, kMaxWindowPixels> ref_centered{};
  std::array<double, kMaxWindowPixels> src_values{};
  std::array<double, kMaxWindowPixels> src_centered{};
  // Per-view ray directions of the window pixels (depth factored out).
  std::vector<std::array<Vec3, kMaxWindowPixels>> rays(srcs.size());

  const int cols = ref.image.cols();
  const int rows = ref.image.rows();
  for (size_t slot = 0; slot < hyps.slots(); ++slot) {
    const int pixel = hyps.pixel(slot);
    const int row = pixel / cols;
    const int col = pixel % cols;
    if (row < radius || col < radius || row >= rows - radius || col >= cols - radius) continue;

    size_t k = 0;
    for (int dr = -radius; dr <= radius; ++dr) {
      for (int dc = -radius; dc <= radius; ++dc) ref_values[k++] = ref.image(row + dr, col + dc);
    }
    const CenteredWindow ref_stats =
        center_window(std::span<const double>(ref_values.data(), n), ref_centered);

    for (size_t v = 0; v < srcs.size(); ++v) {
      const Mat3& m = kernels[v].ray;
      k = 0;
      for (int dr = -radius; dr <= radius; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc) {
          rays[v][k++] = m * Vec3(col + dc, row + dr, 1.0);
        }
      }
    }

    float* costs = cv.cost.data() + slot * L;
    uint8_t* counts = cv.view_count.data() + slot * L;
    for (int l = 0; l < L; ++l) {
      const double depth = hyps.depth(slot, l);
      double cost_sum = 0.0;
      int valid_views = 0;
      for (size_t v = 0; v < srcs.size(); ++v) {
        const GrayImage& img = srcs[v].image;
        const double max_col = img.cols() - 1;
        const double max_row = img.rows() - 1;
        const Vec3& offset = kernels[v].offset;
        bool inside = true;
        for (size_t i = 0; i < n; ++i) {
          const Vec3 h = depth * rays[v][i] + offset;
          if (!(h.z() > 1e-9)) {
            inside = false;
            break;
          }
          const double x = h.x() / h.z();
          const double y = h.y() / h.z();
          if (!(x >= 0.0 && x <= max_col && y >= 0.0 && y <= max_row)) {
            inside = false;
            break;
          }
          src_values[i] = sample_bilinear(img, y, x);
        }
        if (!inside) continue;
        const CenteredWindow src_stats =
            center_window(std::span<const double>(src_values.data(), n), src_centered);
        const double score =
            correlate(std::span<const double>(ref_centered.data(), n), ref_stats.sum_squares,
                      std::span<const double>(src_centered.data(), n), src_stats.sum_squares);
        cost_sum += 1.0 - score;
        ++valid_views;
      }
      if (valid_views > 0) {
        costs[l] = static_cast<float>(cost_sum / valid_views);
        counts[l] = static_cast<uint8_t>(valid_views);
      }
    }
  }
  return cv;
}

std::vector<double> softmax_costs(std::span<const double> costs, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
  std::vector<double> p(costs.size());
  if (costs.empty()) return p;
  const double best = *std::min_element(costs.begin(), costs.end());
  double sum = 0.0;
  for (size_t l = 0; l < costs.size(); ++l) {
    p[l] = std::exp(-(costs[l] - best) / temperature);
    sum += p[l];
  }
  for (double& v : p) v /= sum;
  return p;
}

ProbabilityVolume cost_to_probability(const CostVolume& cv, double temperature, int stage) {
  if (!(temperature > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
  const size_t L = static_cast<size_t>(cv.hypotheses.count());
  ProbabilityVolume pv{cv.hypotheses, std::vector<float>(cv.cost.size()),
                       std::vector<uint8_t>(cv.hypotheses.slots(), 0), stage};
  std::vector<double> costs(L);
  for (size_t slot = 0; slot < cv.hypotheses.slots(); ++slot) {
    for (size_t l = 0; l < L; ++l) {
      costs[l] = cv.cost[slot * L + l];
      if (cv.view_count[slot * L + l] > 0) pv.matched[slot] = 1;
    }
    const std::vector<double> p = softmax_costs(costs, temperature);
    for (size_t l = 0; l < L; ++l) pv.prob[slot * L + l] = static_cast<float>(p[l]);
  }
  return pv;
}

namespace {

constexpr char kVolumeMagic[6] = {'I', 'A', 'V', 'O', 'L', '1'};

void put_u32(std::ofstream& out, uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v & 0xff),
                                  static_cast<unsigned char>((v >> 8) & 0xff),
                                  static_cast<unsigned char>((v >> 16) & 0xff),
                                  static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

uint32_t get_u32(std::ifstream& in) {
  unsigned char bytes[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(bytes), 4);
  return static_cast<uint32_t>(bytes[0]) | (static_cast<uint32_t>(bytes[1]) << 8) |
         (static_cast<uint32_t>(bytes[2]) << 16) | (static_cast<uint32_t>(bytes[3]) << 24);
}

}  // namespace

void write_volume_dump(const std::filesystem::path& path, const HypothesisSet& hyps,
                       std::span<const float> values) {
  const size_t L = static_cast<size_t>(hyps.count());
  if (values.size() != hyps.slots() * L) {
    throw std::invalid_argument("volume values do not match the hypothesis set");
  }
  std::vector<float> dense(static_cast<size_t>(hyps.rows()) * hyps.cols() * L, 0.0f);
  for (size_t slot = 0; slot < hyps.slots(); ++slot) {
    std::copy_n(values.data() + slot * L, L, dense.data() + hyps.pixel(slot) * L);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write volume dump " + path.string());
  out.write(kVolumeMagic, sizeof(kVolumeMagic));
  put_u32(out, static_cast<uint32_t>(hyps.rows()));
  put_u32(out, static_cast<uint32_t>(hyps.cols()));
  put_u32(out, static_cast<uint32_t>(L));
  out.write(reinterpret_cast<const char*>(dense.data()),
            static_cast<std::streamsize>(dense.size() * sizeof(float)));
  if (!out) throw IoError("failed writing volume dump " + path.string());
}

VolumeDump read_volume_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open volume dump " + path.string());
  char magic[6] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kVolumeMagic, sizeof(magic)) != 0) {
    throw DataError(path.string() + ": not a volume dump");
  }
  VolumeDump dump;
  dump.rows = get_u32(in);
  dump.cols = get_u32(in);
  dump.count = get_u32(in);
  dump.values.resize(static_cast<size_t>(dump.rows) * dump.cols * dump.count);
  in.read(reinterpret_cast<char*>(dump.values.data()),
          static_cast<std::streamsize>(dump.values.size() * sizeof(float)));
  if (!in) throw DataError(path.string() + ": volume dump truncated");
  return dump;
}

}  // namespace instmvs
