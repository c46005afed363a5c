#include "gaze2seg/promptgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "gaze2seg/rng.hpp"

namespace g2s {

using nlohmann::json;

bool Heatmap::empty() const {
  return std::all_of(values.data.begin(), values.data.end(), [](double v) { return v == 0.0; });
}

double default_sigma_px(std::int64_t nx) { return 25.0 * static_cast<double>(nx) / 512.0; }

std::size_t default_min_area_px(std::int64_t nx, std::int64_t ny) {
  const double scaled = 50.0 * static_cast<double>(nx * ny) / (512.0 * 512.0);
  return static_cast<std::size_t>(std::max(1.0, std::round(scaled)));
}

// --- heatmap ---------------------------------------------------------------

Heatmap accumulate_heatmap(std::span<const GazeSample> samples, int width, int height, double sigma_px) {
  if (!(sigma_px > 0.0)) fail(Errc::kInvalidArgument, "sigma_px must be > 0");
  if (width < 1 || height < 1) fail(Errc::kInvalidDims, "heatmap dims must be >= 1");
  Heatmap h{Image2D<double>(width, height, 0.0), sigma_px};
  if (samples.empty()) return h;

  std::vector<std::array<double, 2>> pts;
  pts.reserve(samples.size());
  for (const auto& s : samples) pts.push_back({s.x_px, s.y_px});
  std::sort(pts.begin(), pts.end());

  const double inv_two_var = 1.0 / (2.0 * sigma_px * sigma_px);
  const double cutoff = 3.0 * sigma_px;
  const double cutoff2 = cutoff * cutoff;
  for (const auto& [gx, gy] : pts) {
    const int xa = std::max(0, static_cast<int>(std::ceil(gx - cutoff)));
    const int xb = std::min(width - 1, static_cast<int>(std::floor(gx + cutoff)));
    const int ya = std::max(0, static_cast<int>(std::ceil(gy - cutoff)));
    const int yb = std::min(height - 1, static_cast<int>(std::floor(gy + cutoff)));
    for (int y = ya; y <= yb; ++y) {
      const double dy = y - gy;
      for (int x = xa; x <= xb; ++x) {
        const double dx = x - gx;
        const double d2 = dx * dx + dy * dy;
        if (d2 <= cutoff2) h.values(x, y) += std::exp(-d2 * inv_two_var);
      }
    }
  }
  const double peak = *std::max_element(h.values.data.begin(), h.values.data.end());
  if (peak > 0.0) {
    for (auto& v : h.values.data) v /= peak;
  }
  return h;
}

// --- K-Means ---------------------------------------------------------------

KMeans1D kmeans_1d(std::span<const double> values, int k, std::uint64_t seed) {
  if (k < 2) fail(Errc::kInvalidArgument, "k must be >= 2");
  if (values.empty()) fail(Errc::kInvalidArgument, "no values to cluster");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  KMeans1D r;
  r.centroids.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) r.centroids[static_cast<std::size_t>(c)] = *mn + (*mx - *mn) * c / (k - 1);
  r.labels.assign(values.size(), 0);

  SplitMix64 rng(seed);
  std::vector<double> sum(static_cast<std::size_t>(k));
  std::vector<std::size_t> cnt(static_cast<std::size_t>(k));
  for (r.iterations = 1; r.iterations <= 100; ++r.iterations) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(cnt.begin(), cnt.end(), 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::size_t best = 0;
      double best_d = std::abs(values[i] - r.centroids[0]);
      for (std::size_t c = 1; c < r.centroids.size(); ++c) {
        const double d = std::abs(values[i] - r.centroids[c]);
        if (d < best_d) {  // ties go to the lower cluster
          best_d = d;
          best = c;
        }
      }
      r.labels[i] = static_cast<std::uint8_t>(best);
      sum[best] += values[i];
      ++cnt[best];
    }
    double moved = 0.0;
    for (std::size_t c = 0; c < r.centroids.size(); ++c) {
      double next = r.centroids[c];
      if (cnt[c]) {
        next = sum[c] / static_cast<double>(cnt[c]);
      } else if (k > 2) {
        // Re-seed an empty interior cluster from a random sample.
        next = values[rng.uniform_index(values.size())];
      }
      moved = std::max(moved, std::abs(next - r.centroids[c]));
      r.centroids[c] = next;
    }
    if (moved < 1e-6) break;
  }
  r.iterations = std::min(r.iterations, 100);

  // Relabel so centroid order is ascending.
  std::vector<std::size_t> order(r.centroids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return r.centroids[a] < r.centroids[b]; });
  std::vector<std::uint8_t> rank(order.size());
  std::vector<double> sorted(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    rank[order[i]] = static_cast<std::uint8_t>(i);
    sorted[i] = r.centroids[order[i]];
  }
  r.centroids = std::move(sorted);
  for (auto& l : r.labels) l = rank[l];
  return r;
}

CoarseMask kmeans_coarse_mask(const Heatmap& h, int k, std::size_t min_area_px, std::uint64_t seed) {
  if (h.empty()) fail(Errc::kEmptyHeatmap, "heatmap is all zero");
  const auto km = kmeans_1d(h.values.data, k, seed);
  const auto top = static_cast<std::uint8_t>(k - 1);

  CoarseMask out{SliceMask(h.width(), h.height()), 0};
  for (std::size_t i = 0; i < km.labels.size(); ++i) out.mask.data[i] = km.labels[i] == top;

  const auto comps = label_components(out.mask);
  std::vector<bool> keep(comps.areas.size(), false);
  for (int c = 1; c <= comps.count(); ++c) {
    if (comps.areas[static_cast<std::size_t>(c)] >= min_area_px) {
      keep[static_cast<std::size_t>(c)] = true;
      ++out.component_count;
    }
  }
  for (std::size_t i = 0; i < out.mask.size(); ++i) {
    out.mask.data[i] = keep[static_cast<std::size_t>(comps.labels.data[i])] ? 1 : 0;
  }
  return out;
}

// --- components and boxes -------------------------------------------------

Components label_components(const SliceMask& m) {
  Components c{Image2D<std::int32_t>(m.width, m.height, 0), {0}};
  std::vector<std::array<int, 2>> stack;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m(x, y) || c.labels(x, y)) continue;
      const auto id = static_cast<std::int32_t>(c.areas.size());
      std::size_t area = 0;
      c.labels(x, y) = id;
      stack.push_back({x, y});
      while (!stack.empty()) {
        const auto [px, py] = stack.back();
        stack.pop_back();
        ++area;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int qx = px + dx, qy = py + dy;
            if (m.contains(qx, qy) && m(qx, qy) && !c.labels(qx, qy)) {
              c.labels(qx, qy) = id;
              stack.push_back({qx, qy});
            }
          }
        }
      }
      c.areas.push_back(area);
    }
  }
  return c;
}

std::vector<BBoxPrompt> extract_bboxes(const SliceMask& m, std::int64_t slice, int margin_px) {
  if (margin_px < 0) fail(Errc::kInvalidArgument, "margin_px must be >= 0");
  const auto comps = label_components(m);
  std::vector<BBoxPrompt> boxes(static_cast<std::size_t>(comps.count()));
  for (auto& b : boxes) {
    b = {slice, m.width, m.height, -1, -1};
  }
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const auto id = comps.labels(x, y);
      if (!id) continue;
      auto& b = boxes[static_cast<std::size_t>(id - 1)];
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }
  }
  for (auto& b : boxes) {
    b.x0 = std::max(0, b.x0 - margin_px);
    b.y0 = std::max(0, b.y0 - margin_px);
    b.x1 = std::min(m.width - 1, b.x1 + margin_px);
    b.y1 = std::min(m.height - 1, b.y1 + margin_px);
  }
  std::sort(boxes.begin(), boxes.end(), [](const auto& a, const auto& b) {
    return std::tie(a.y0, a.x0, a.y1, a.x1) < std::tie(b.y0, b.x0, b.y1, b.x1);
  });
  return boxes;
}

// --- strategies ---------------------------------------------------------------

std::string PromptStrategy::name() const {
  switch (kind) {
    case Kind::kFirstSlice: return "first_slice";
    case Kind::kAllSlices: return "all_slices";
    case Kind::kBudget: return "budget_" + std::to_string(budget);
  }
  return "?";
}

PromptStrategy PromptStrategy::parse(std::string_view s) {
  if (s == "first_slice" || s == "first") return first_slice();
  if (s == "all_slices" || s == "all") return all_slices();
  constexpr std::string_view prefix = "budget_";
  if (s.starts_with(prefix)) {
    const std::string digits(s.substr(prefix.size()));
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      const int n = std::stoi(digits);
      if (n >= 1) return budget_n(n);
    }
  }
  fail(Errc::kInvalidArgument, "unknown strategy '" + std::string(s) + "'");
}

std::vector<std::int64_t> select_slices(std::int64_t z_lo, std::int64_t z_hi, const PromptStrategy& st) {
  if (z_lo < 0 || z_lo > z_hi) {
    fail(Errc::kInvalidArgument, "invalid extent [" + std::to_string(z_lo) + "," + std::to_string(z_hi) + "]");
  }
  const std::int64_t length = z_hi - z_lo + 1;
  std::vector<std::int64_t> all(static_cast<std::size_t>(length));
  std::iota(all.begin(), all.end(), z_lo);

  switch (st.kind) {
    case PromptStrategy::Kind::kFirstSlice: return {z_lo};
    case PromptStrategy::Kind::kAllSlices: return all;
    case PromptStrategy::Kind::kBudget: break;
  }
  if (st.budget < 1) fail(Errc::kInvalidArgument, "budget must be >= 1");
  if (st.budget == 1) return {z_lo};
  if (length <= st.budget) return all;

  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(st.budget));
  const double step = static_cast<double>(z_hi - z_lo) / static_cast<double>(st.budget - 1);
  for (int i = 0; i < st.budget; ++i) out.push_back(z_lo + std::llround(i * step));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// --- plans ---------------------------------------------------------------

std::vector<BBoxPrompt> PromptPlan::prompts_for(std::int64_t slice) const {
  std::vector<BBoxPrompt> out;
  std::copy_if(prompts.begin(), prompts.end(), std::back_inserter(out),
               [slice](const auto& p) { return p.slice == slice; });
  return out;
}

std::string PromptPlan::to_json() const {
  json j;
  j["strategy"] = strategy.name();
  j["prompted_slices"] = prompted_slices;
  j["prompts"] = json::array();
  for (const auto& p : prompts) {
    j["prompts"].push_back({{"slice", p.slice}, {"x0", p.x0}, {"y0", p.y0}, {"x1", p.x1}, {"y1", p.y1}});
  }
  return j.dump();
}

PromptPlan PromptPlan::from_json(std::string_view text) {
  PromptPlan plan;
  try {
    const auto j = json::parse(text);
    plan.strategy = PromptStrategy::parse(j.at("strategy").get<std::string>());
    for (const auto& p : j.at("prompts")) {
      plan.prompts.push_back({p.at("slice").get<std::int64_t>(), p.at("x0").get<int>(), p.at("y0").get<int>(),
                              p.at("x1").get<int>(), p.at("y1").get<int>()});
    }
    if (j.contains("prompted_slices")) {
      plan.prompted_slices = j["prompted_slices"].get<std::vector<std::int64_t>>();
    } else {
      for (const auto& p : plan.prompts) plan.prompted_slices.push_back(p.slice);
    }
  } catch (const json::exception& e) {
    fail(Errc::kInvalidArgument, std::string("prompt plan JSON: ") + e.what());
  }
  std::sort(plan.prompted_slices.begin(), plan.prompted_slices.end());
  plan.prompted_slices.erase(std::unique(plan.prompted_slices.begin(), plan.prompted_slices.end()),
                             plan.prompted_slices.end());
  std::stable_sort(plan.prompts.begin(), plan.prompts.end(), [](auto& a, auto& b) { return a.slice < b.slice; });
  return plan;
}

PromptPlan build_gaze_plan(const GazeStream& stream, const Dims& dims, const std::vector<std::int64_t>& candidates,
                           const PromptStrategy& strategy, const GazePromptParams& params) {
  const double sigma = params.sigma_px > 0.0 ? params.sigma_px : default_sigma_px(dims.nx);
  const std::size_t min_area = params.min_area_px.value_or(default_min_area_px(dims.nx, dims.ny));

  std::map<std::int64_t, std::vector<GazeSample>> by_slice;
  for (const auto& s : stream.samples) by_slice[s.slice].push_back(s);

  PromptPlan plan;
  plan.strategy = strategy;
  for (auto z : candidates) {
    auto it = by_slice.find(z);
    if (it == by_slice.end()) continue;
    const auto heat = accumulate_heatmap(it->second, static_cast<int>(dims.nx), static_cast<int>(dims.ny), sigma);
    if (heat.empty()) continue;
    const auto coarse = kmeans_coarse_mask(heat, params.k, min_area, params.seed ^ static_cast<std::uint64_t>(z));
    auto boxes = extract_bboxes(coarse.mask, z, params.margin_px);
    if (boxes.empty()) continue;
    plan.prompted_slices.push_back(z);
    plan.prompts.insert(plan.prompts.end(), boxes.begin(), boxes.end());
  }
  return plan;
}

PromptPlan build_gt_bbox_plan(const MaskVolume& gt, const std::vector<std::int64_t>& candidates,
                              const PromptStrategy& strategy) {
  PromptPlan plan;
  plan.strategy = strategy;
  for (auto z : candidates) {
    auto boxes = extract_bboxes(gt.slice(z), z, 0);
    if (boxes.empty()) continue;
    plan.prompted_slices.push_back(z);
    plan.prompts.insert(plan.prompts.end(), boxes.begin(), boxes.end());
  }
  return plan;
}

}  // namespace g2s
