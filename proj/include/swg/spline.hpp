#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace swg {

// Low-rank penalized smoother, reparameterized so each penalized coefficient
// carries an independent unit-variance shrinkage direction. Column layout:
// columns 0..K-2 are the penalized directions (centered, ordered from most
// to least penalized); column K-1 is the unit-norm linear term, which spans
// the penalty null space beyond the intercept. The intercept is carried
// separately by callers.
struct SplineBasis {
  Eigen::MatrixXd X;          // n_points x K
  std::vector<double> grid;   // evaluation points
  int K = 0;                  // total coefficient count
  int penalized_count = 0;    // K - 1
  int nullspace_count = 1;

  // Back-transform from penalized coordinates to raw B-spline coefficients;
  // raw_dim x (K-1). Kept for penalty-equivalence checks and export.
  Eigen::MatrixXd transform;
  std::vector<double> knots;  // raw-basis knots (empty for imported bases)

  int rows() const { return static_cast<int>(X.rows()); }
  double value_at(int row, double beta0, const Eigen::VectorXd& beta) const;
};

// Build the reparameterized basis on `grid` with K coefficients. The raw
// basis is a cubic B-spline sequence of dimension K+1 on evenly spaced knots
// spanning the grid range, penalized by squared second differences of the
// raw coefficients; eigendecomposition of that penalty yields the K-1
// penalized columns (X_raw * U * D^{-1/2}) and leaves {1, x} unpenalized.
SplineBasis build_basis(const std::vector<double>& grid, int K);

// beta0 + X * beta on every grid row; beta must have length K.
std::vector<double> eval_curve(const SplineBasis& basis, double beta0,
                               const std::vector<double>& beta);

// Second-difference penalty matrix of the raw basis (dim x dim), exposed so
// independent checks can form the original quadratic form.
Eigen::MatrixXd second_difference_penalty(int dim);

// Cubic B-spline design matrix of `dim` basis functions on evenly spaced
// knots covering [lo, hi], evaluated at `points`.
Eigen::MatrixXd bspline_design(const std::vector<double>& points, double lo, double hi,
                               int dim);

// Delimited-text import/export. Header row names the columns; names starting
// with "null" mark null-space columns (moved to the back on import); a first
// column named "grid" carries the evaluation points, otherwise 1..n is used.
SplineBasis load_basis(const std::string& path);
void save_basis(const SplineBasis& basis, const std::string& path);

}  // namespace swg
