#include "bronchograph/cohort_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bronchograph {

ReferenceTable build_reference(const std::vector<SignatureMatrix>& controls) {
  if (controls.size() < 2) throw Error(ErrorCode::TooFewCases, "reference needs at least two control cases");
  ReferenceTable ref;
  for (int r = 0; r < kNumComponents; ++r) {
    for (int d = 0; d < kNumDescriptors; ++d) {
      double sum = 0, lo = 0, hi = 0;
      int n = 0;
      for (const auto& c : controls) {
        const double x = c.values[r][d];
        if (x == -1.0) continue;
        lo = n ? std::min(lo, x) : x;
        hi = n ? std::max(hi, x) : x;
        sum += x;
        ++n;
      }
      ref.count[r][d] = n;
      if (n == 0) continue;
      if (lo == hi) {
        // exact for constant columns, where sum / n can be off by an ulp
        ref.mean[r][d] = lo;
        continue;
      }
      const double mean = sum / n;
      double ss = 0;
      for (const auto& c : controls)
        if (c.values[r][d] != -1.0) ss += (c.values[r][d] - mean) * (c.values[r][d] - mean);
      ref.mean[r][d] = mean;
      ref.std[r][d] = n >= 2 ? std::sqrt(ss / (n - 1)) : 0.0;
    }
  }
  return ref;
}

int outlying_descriptors(const SignatureMatrix& c, const ReferenceTable& ref, int row) {
  int k = 0;
  for (int d = 0; d < kNumDescriptors; ++d) {
    const double x = c.values[row][d];
    if (x == -1.0 || !ref.defined(row, d)) continue;
    if (std::abs(x - ref.mean[row][d]) > 2.0 * ref.std[row][d]) ++k;
  }
  return k;
}

std::array<bool, kNumComponents> flag_significant(const SignatureMatrix& c, const ReferenceTable& ref) {
  std::array<bool, kNumComponents> out{};
  for (int r = 0; r < kNumComponents; ++r) out[r] = outlying_descriptors(c, ref, r) >= 3;
  return out;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300, eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

double variance_of(const std::vector<double>& v, double mean) {
  double s = 0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / (v.size() - 1);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double dof) {
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw Error(ErrorCode::TooFewCases, "Welch test needs two samples of size >= 2");
  const double ma = mean_of(a), mb = mean_of(b);
  const double sa = variance_of(a, ma) / a.size(), sb = variance_of(b, mb) / b.size();
  WelchResult r;
  if (sa + sb == 0.0) {
    r.dof = static_cast<double>(a.size() + b.size() - 2);
    if (ma == mb) return r;
    r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    r.degenerate = true;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.dof = (sa + sb) * (sa + sb) / (sa * sa / (a.size() - 1) + sb * sb / (b.size() - 1));
  r.p = student_t_two_sided(r.t, r.dof);
  return r;
}

std::vector<RankedFeature> rank_top_k(const FeatureTable& table, std::size_t k, double alpha) {
  if (k == 0) return {};
  auto column = [&](std::size_t f, auto&& in_group) {
    std::vector<double> out;
    for (std::size_t c = 0; c < table.values.size(); ++c)
      if (in_group(table.groups[c]) && std::isfinite(table.values[c][f])) out.push_back(table.values[c][f]);
    return out;
  };
  auto is_control = [](const std::string& g) { return g == "control"; };
  auto is_sig = [](const std::string& g) { return g == "significant" || g == "experimental"; };
  auto is_insig = [](const std::string& g) { return g == "insignificant"; };
  const bool has_insig = std::any_of(table.groups.begin(), table.groups.end(), is_insig);

  std::vector<RankedFeature> out;
  for (std::size_t f = 0; f < table.features.size(); ++f) {
    const auto ctrl = column(f, is_control), sig = column(f, is_sig);
    if (ctrl.size() < 2 || sig.size() < 2) continue;
    const auto one = welch_t_test(sig, ctrl);
    if (!(one.p < alpha)) continue;
    if (has_insig) {
      const auto ins = column(f, is_insig);
      if (ins.size() >= 2 && welch_t_test(ins, ctrl).p < alpha) continue;
    }
    out.push_back({table.features[f], one.t, one.dof, one.p});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedFeature& x, const RankedFeature& y) {
    if (x.p != y.p) return x.p < y.p;
    return std::abs(x.t) > std::abs(y.t);
  });
  if (out.size() > k) out.resize(k);
  return out;
}

}  // namespace bronchograph
