#include "bronchograph/edt.hpp"

#include <cmath>
#include <limits>

namespace bronchograph {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (x - pos[k])^2 + val[k] sampled at x = i * step,
// i in [0, n). Samples must be sorted by position with finite values.
class Envelope {
 public:
  void reset() {
    pos_.clear();
    val_.clear();
    tag_.clear();
  }
  void add(double p, double v, std::int64_t tag) {
    pos_.push_back(p);
    val_.push_back(v);
    tag_.push_back(tag);
  }
  bool empty() const { return pos_.empty(); }

  template <typename Out>
  void evaluate(int n, double step, Out&& out) {
    const std::size_t m = pos_.size();
    hull_.assign(m, 0);
    bound_.assign(m + 1, 0.0);
    std::size_t k = 0;
    hull_[0] = 0;
    bound_[0] = -kInf;
    bound_[1] = kInf;
    for (std::size_t q = 1; q < m; ++q) {
      double s = intersect(q, hull_[k]);
      while (s <= bound_[k]) {
        --k;
        s = intersect(q, hull_[k]);
      }
      ++k;
      hull_[k] = q;
      bound_[k] = s;
      bound_[k + 1] = kInf;
    }
    k = 0;
    for (int i = 0; i < n; ++i) {
      const double x = i * step;
      while (bound_[k + 1] < x) ++k;
      const auto h = hull_[k];
      const double d = x - pos_[h];
      out(i, d * d + val_[h], tag_[h]);
    }
  }

 private:
  double intersect(std::size_t q, std::size_t r) const {
    return ((val_[q] + pos_[q] * pos_[q]) - (val_[r] + pos_[r] * pos_[r])) / (2.0 * (pos_[q] - pos_[r]));
  }

  std::vector<double> pos_, val_;
  std::vector<std::int64_t> tag_;
  std::vector<std::size_t> hull_;
  std::vector<double> bound_;
};

// Runs one separable pass along `axis` over every grid line.
template <typename Fn>
void for_each_line(const Dims& d, int axis, Fn&& fn) {
  const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? static_cast<std::size_t>(d.nx)
                                                        : static_cast<std::size_t>(d.nx) * d.ny);
  const int n = d.extent(axis);
  const int a = axis == 0 ? d.ny : d.nx;
  const int b = axis == 2 ? d.ny : d.nz;
  for (int j = 0; j < b; ++j) {
    for (int i = 0; i < a; ++i) {
      std::size_t base;
      if (axis == 0) base = d.index(0, i, j);
      else if (axis == 1) base = d.index(i, 0, j);
      else base = d.index(i, j, 0);
      fn(base, stride, n);
    }
  }
}

}  // namespace

DistanceField distance_transform(const Volume& mask) {
  const auto& d = mask.dims();
  DistanceField out{d, mask.spacing(), std::vector<double>(d.count(), 0.0)};
  auto& g = out.data;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = mask[i] ? kInf : 0.0;

  Envelope env;
  std::vector<double> line;
  for (int axis = 0; axis < 3; ++axis) {
    const double s = mask.spacing()[axis];
    for_each_line(d, axis, [&](std::size_t base, std::size_t stride, int n) {
      env.reset();
      env.add(-s, 0.0, -1);  // virtual exterior background
      for (int i = 0; i < n; ++i) {
        const double v = g[base + i * stride];
        if (v < kInf) env.add(i * s, v, i);
      }
      env.add(n * s, 0.0, -1);
      env.evaluate(n, s, [&](int i, double v, std::int64_t) { g[base + i * stride] = v; });
    });
  }
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = mask[i] ? std::sqrt(g[i]) : 0.0;
  return out;
}

FeatureTransform feature_transform(const Dims& d, const Vec3& spacing, const std::vector<std::uint8_t>& sites) {
  FeatureTransform ft;
  ft.sq_distance.assign(d.count(), kInf);
  ft.nearest.assign(d.count(), -1);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i]) {
      ft.sq_distance[i] = 0.0;
      ft.nearest[i] = static_cast<std::int64_t>(i);
    }
  }
  Envelope env;
  for (int axis = 0; axis < 3; ++axis) {
    const double s = spacing[axis];
    for_each_line(d, axis, [&](std::size_t base, std::size_t stride, int n) {
      env.reset();
      for (int i = 0; i < n; ++i) {
        const auto idx = base + i * stride;
        if (ft.sq_distance[idx] < kInf) env.add(i * s, ft.sq_distance[idx], ft.nearest[idx]);
      }
      if (env.empty()) return;
      env.evaluate(n, s, [&](int i, double v, std::int64_t tag) {
        ft.sq_distance[base + i * stride] = v;
        ft.nearest[base + i * stride] = tag;
      });
    });
  }
  return ft;
}

}  // namespace bronchograph
