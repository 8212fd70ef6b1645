#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace treemart {

/// Parameters (beta, m) of a linear recursive tree: a node with outdegree d
/// is chosen as parent with probability proportional to beta*d + m.
///
/// Valid combinations are beta >= 0 with m = 1 (recursive, plane-oriented,
/// p-oriented trees) and beta = -1 with m >= 2 (m-ary trees, BST for m = 2).
/// Construct through make_params() or one of the presets.
class ModelParams {
 public:
  double beta() const noexcept { return beta_; }
  int m() const noexcept { return m_; }

  /// beta + m, the increment of the total weight per insertion.
  double growth() const noexcept { return beta_ + m_; }

  /// theta = m / (beta + m).
  double theta() const noexcept { return m_ / (beta_ + m_); }

  bool integer_beta() const noexcept;

  /// Short identifier used in reports and file names: bst, rt, port,
  /// p-oriented:<p>, mary:<m> or custom:<beta>,<m>.
  std::string tag() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  friend ModelParams make_params(double beta, int m);
  ModelParams(double beta, int m) : beta_(beta), m_(m) {}

  double beta_;
  int m_;
};

/// Throws Error(invalid_combination) unless (beta >= 0, m = 1) or (beta = -1, m >= 2).
ModelParams make_params(double beta, int m);

namespace presets {
ModelParams bst();
ModelParams rt();
ModelParams port();
ModelParams p_oriented(int p);
ModelParams mary(int m);
}  // namespace presets

/// Parses bst | rt | port | p-oriented:<p> | mary:<m> | custom:<beta>,<m>.
ModelParams parse_model(std::string_view selector);

/// Total attachment weight alpha_n of a tree with n nodes (alpha_0 = 1).
double alpha(const ModelParams& params, std::int64_t n);

/// beta*d + m; throws saturation_violation for beta = -1 and d > m.
double attachment_weight(const ModelParams& params, std::int64_t outdegree);

double digamma(double x);
double trigamma(double x);

}  // namespace treemart
