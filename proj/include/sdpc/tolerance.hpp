#pragma once

namespace sdpc {

/// Every zero/nonzero and sign decision in the library reads its threshold
/// from here.
struct ToleranceConfig {
  double abs = 1e-9;     // absolute part of the eigenvalue rank threshold
  double rel = 1e-9;     // relative part (times max |eigenvalue|)
  double gap = 1e-8;     // oracle duality gap, relative to 1 + |value|
  double feas = 1e-8;    // oracle primal/dual residuals
  double branch = 1e-7;  // zero tests on oracle outputs (t*, <c,x*>, ...)
  double sub = 1e-9;     // subspace membership and rank of linear maps
  double face = 1e-6;    // rank of oracle-produced PSD matrices (trace-normalized)
  int max_iter = 200;
  double epsilon_default = 1e-6;

  /// All positive and branch >= gap.
  bool valid() const;

  /// Threshold used by numeric_rank for a matrix whose extreme eigenvalue
  /// magnitude is `scale`.
  double rank_threshold(double scale) const { return abs + rel * scale; }

  /// Same config with the rank threshold replaced by the face tolerance;
  /// used for matrices that come out of the interior point oracle.
  ToleranceConfig for_oracle_output() const {
    ToleranceConfig t = *this;
    t.abs = face;
    t.rel = face;
    return t;
  }
};

}  // namespace sdpc
