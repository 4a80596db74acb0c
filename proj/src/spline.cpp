#include "swg/spline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "swg/errors.hpp"

namespace swg {

namespace {

// de Boor-Cox cubic B-spline value for basis function i on knot vector t.
double bspline_value(const std::vector<double>& t, int i, int order, double x) {
  if (order == 1) {
    // half-open cells, closed at the last cell so the right endpoint is covered
    if (x >= t[i] && x < t[i + 1]) return 1.0;
    if (x == t[i + 1] && t[i + 1] == t.back() && t[i] < t[i + 1]) return 1.0;
    return 0.0;
  }
  double left = 0.0, right = 0.0;
  double d1 = t[i + order - 1] - t[i];
  if (d1 > 0.0) left = (x - t[i]) / d1 * bspline_value(t, i, order - 1, x);
  double d2 = t[i + order] - t[i + 1];
  if (d2 > 0.0) right = (t[i + order] - x) / d2 * bspline_value(t, i + 1, order - 1, x);
  return left + right;
}

std::vector<double> uniform_knots(double lo, double hi, int dim) {
  // dim cubic B-splines need dim+4 knots; keep spacing uniform across the
  // extension so the difference penalty annihilates linear functions exactly.
  // The window is stretched slightly past the right edge: on a symmetric grid
  // with exactly K distinct points a mirror-symmetric layout makes the
  // constant function land in the span of the penalized columns, and
  // centering would then cost a rank.
  int n_seg = dim - 3;
  double h0 = (hi - lo) / n_seg;
  if (!(h0 > 0.0)) throw NumericalError("degenerate grid for spline basis");
  double h = (hi + 0.29 * h0 - lo) / n_seg;
  std::vector<double> t(dim + 4);
  for (int j = 0; j < dim + 4; ++j) t[j] = lo + (j - 3) * h;
  return t;
}

}  // namespace

Eigen::MatrixXd bspline_design(const std::vector<double>& points, double lo, double hi,
                               int dim) {
  auto knots = uniform_knots(lo, hi, dim);
  Eigen::MatrixXd B(points.size(), dim);
  for (size_t r = 0; r < points.size(); ++r)
    for (int i = 0; i < dim; ++i) B(r, i) = bspline_value(knots, i, 4, points[r]);
  return B;
}

Eigen::MatrixXd second_difference_penalty(int dim) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(dim - 2, dim);
  for (int i = 0; i < dim - 2; ++i) {
    D(i, i) = 1.0;
    D(i, i + 1) = -2.0;
    D(i, i + 2) = 1.0;
  }
  return D.transpose() * D;
}

SplineBasis build_basis(const std::vector<double>& grid, int K) {
  if (K < 3) throw NumericalError("spline basis needs K >= 3");
  std::set<double> distinct(grid.begin(), grid.end());
  if (static_cast<int>(distinct.size()) < K)
    throw NumericalError("spline basis needs at least K distinct grid points");
  double lo = *distinct.begin();
  double hi = *distinct.rbegin();

  const int raw = K + 1;
  Eigen::MatrixXd B = bspline_design(grid, lo, hi, raw);
  Eigen::MatrixXd S = second_difference_penalty(raw);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) throw NumericalError("penalty eigendecomposition failed");
  const auto& evals = eig.eigenvalues();  // ascending; two ~zero for {1, x}
  double tol = evals(raw - 1) * 1e-10;
  int n_pos = 0;
  for (int i = 0; i < raw; ++i)
    if (evals(i) > tol) ++n_pos;
  if (n_pos != K - 1) throw NumericalError("unexpected penalty rank");

  // most-penalized direction first
  Eigen::MatrixXd T(raw, K - 1);
  for (int j = 0; j < K - 1; ++j) {
    int src = raw - 1 - j;
    T.col(j) = eig.eigenvectors().col(src) / std::sqrt(evals(src));
  }

  SplineBasis out;
  out.grid = grid;
  out.K = K;
  out.penalized_count = K - 1;
  out.nullspace_count = 1;
  out.transform = T;
  out.knots = uniform_knots(lo, hi, raw);
  out.X.resize(grid.size(), K);
  Eigen::MatrixXd Z = B * T;
  for (int j = 0; j < K - 1; ++j) {
    double mean = Z.col(j).mean();
    out.X.col(j) = Z.col(j).array() - mean;
  }
  Eigen::VectorXd lin = Eigen::Map<const Eigen::VectorXd>(grid.data(), grid.size());
  out.X.col(K - 1) = lin / lin.norm();
  return out;
}

double SplineBasis::value_at(int row, double beta0, const Eigen::VectorXd& beta) const {
  return beta0 + X.row(row).dot(beta);
}

std::vector<double> eval_curve(const SplineBasis& basis, double beta0,
                               const std::vector<double>& beta) {
  if (static_cast<int>(beta.size()) != basis.K)
    throw NumericalError("eval_curve: coefficient length != K");
  Eigen::Map<const Eigen::VectorXd> b(beta.data(), beta.size());
  Eigen::VectorXd y = basis.X * b;
  std::vector<double> out(y.size());
  for (int i = 0; i < y.size(); ++i) out[i] = beta0 + y(i);
  return out;
}

SplineBasis load_basis(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read basis file " + path);
  std::string header;
  if (!std::getline(f, header)) throw ParseError("empty basis file", 1);
  std::vector<std::string> names;
  {
    std::stringstream ss(header);
    std::string tok;
    while (ss >> tok) names.push_back(tok);
  }
  bool has_grid_col = !names.empty() && names.front() == "grid";
  size_t first_col = has_grid_col ? 1 : 0;
  if (names.size() <= first_col) throw ParseError("basis header has no data columns", 1);

  std::vector<size_t> penalized_cols, null_cols;
  for (size_t i = first_col; i < names.size(); ++i) {
    if (names[i].rfind("null", 0) == 0)
      null_cols.push_back(i);
    else
      penalized_cols.push_back(i);
  }
  if (null_cols.size() != 1)
    throw ParseError("basis header must name exactly one null-space column", 1);

  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    std::stringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (row.empty()) continue;
    if (row.size() != names.size()) throw ParseError("basis row width mismatch", line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("basis file has no rows", line_no);

  SplineBasis out;
  out.K = static_cast<int>(penalized_cols.size() + null_cols.size());
  out.penalized_count = out.K - 1;
  out.nullspace_count = 1;
  out.grid.resize(rows.size());
  out.X.resize(rows.size(), out.K);
  for (size_t r = 0; r < rows.size(); ++r) {
    out.grid[r] = has_grid_col ? rows[r][0] : static_cast<double>(r + 1);
    for (size_t j = 0; j < penalized_cols.size(); ++j) out.X(r, j) = rows[r][penalized_cols[j]];
    out.X(r, out.K - 1) = rows[r][null_cols[0]];
  }
  return out;
}

void save_basis(const SplineBasis& basis, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write basis file " + path);
  f << "grid";
  for (int j = 0; j < basis.penalized_count; ++j) f << " p" << (j + 1);
  f << " null_linear\n";
  f.precision(17);
  for (int r = 0; r < basis.rows(); ++r) {
    f << basis.grid[r];
    for (int j = 0; j < basis.K; ++j) f << ' ' << basis.X(r, j);
    f << '\n';
  }
}

}  // namespace swg
