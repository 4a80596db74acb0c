#pragma once

#include <vector>

namespace swg {

// Draws of one scalar quantity, one vector per chain (equal lengths).
struct ChainsMatrix {
  std::vector<std::vector<double>> chains;

  int n_chains() const { return static_cast<int>(chains.size()); }
  long n_draws() const { return chains.empty() ? 0 : static_cast<long>(chains[0].size()); }
  long n_total() const { return n_chains() * n_draws(); }
  void validate() const;  // >= 2 chains, >= 4 draws, rectangular
};

struct DiagResult {
  double value = 0.0;
  bool degenerate = false;
};

// Rank-normalized split R-hat: max of the statistic on rank-normalized draws
// and on rank-normalized folded (|x - median|) draws. Constant input returns
// 1.0, flagged.
DiagResult rhat(const ChainsMatrix& m);

enum class EssKind { bulk, tail };

// Bulk: ESS via Geyer-truncated autocorrelation sums on rank-normalized
// split chains. Tail: minimum ESS of the 5% / 95% quantile indicators.
DiagResult ess(const ChainsMatrix& m, EssKind kind);

// Percentiles (linear interpolation) of a diagnostic across groups.
std::vector<double> summarize_percentiles(std::vector<double> values,
                                          const std::vector<double>& percentiles);

}  // namespace swg
