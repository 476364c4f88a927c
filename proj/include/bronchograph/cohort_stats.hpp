#pragma once

#include <array>
#include <string>
#include <vector>

#include "bronchograph/morpho_signatures.hpp"

namespace bronchograph {

struct ReferenceTable {
  std::array<std::array<double, kNumDescriptors>, kNumComponents> mean{};
  std::array<std::array<double, kNumDescriptors>, kNumComponents> std{};  // sample std (n - 1)
  std::array<std::array<int, kNumDescriptors>, kNumComponents> count{};   // valid (non -1) samples
  bool defined(int row, int d) const { return count[row][d] >= 2; }
};

/// Throws TooFewCases with fewer than two control cases.
ReferenceTable build_reference(const std::vector<SignatureMatrix>& controls);

/// Number of descriptors of a component outside mean +- 2 std.
int outlying_descriptors(const SignatureMatrix& c, const ReferenceTable& ref, int row);
/// Flagged when at least 3 of the 6 descriptors are outlying.
std::array<bool, kNumComponents> flag_significant(const SignatureMatrix& c, const ReferenceTable& ref);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
/// Two-sided tail of Student's t: P(|T| >= |t|) with `dof` degrees of freedom.
double student_t_two_sided(double t, double dof);

struct WelchResult {
  double t = 0, dof = 0, p = 1;
  bool degenerate = false;  // both samples constant and different: p = 0
};
/// Each sample needs n >= 2 (TooFewCases otherwise).
WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct FeatureTable {
  std::vector<std::string> features;
  std::vector<std::string> groups;          // per case: "control", "significant"/"experimental", "insignificant"
  std::vector<std::vector<double>> values;  // [case][feature]
};

struct RankedFeature {
  std::string feature;
  double t = 0, dof = 0, p = 1;
};

/// Features whose significant-vs-control p < 0.05 and, when an insignificant
/// group exists, whose insignificant-vs-control p >= 0.05; sorted by the first p.
/// Non-finite values are missing and left out of the tests.
std::vector<RankedFeature> rank_top_k(const FeatureTable& table, std::size_t k, double alpha = 0.05);

}  // namespace bronchograph
