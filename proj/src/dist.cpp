#include "swg/dist.hpp"

#include <limits>

#include "swg/errors.hpp"

namespace swg {

namespace {

double gamma_p_series(double a, double x) {
  // sum_{n>=0} x^n / (a (a+1) ... (a+n)), scaled by x^a e^-x / Gamma(a)
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  double lg = std::lgamma(a);
  return sum * std::exp(-x + a * std::log(x) - lg);
}

double gamma_q_contfrac(double a, double x) {
  // modified Lentz for the continued fraction of Q(a,x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  double lg = std::lgamma(a);
  return std::exp(-x + a * std::log(x) - lg) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || std::isnan(x)) throw NumericalError("gamma_p: invalid arguments");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  double q = gamma_q_contfrac(a, x);
  return 1.0 - q;
}

double gpd_cdf(double x, double xi, double sigma) {
  if (x <= 0.0) return 0.0;
  double z = x / sigma;
  if (std::fabs(xi) < 1e-12) return -std::expm1(-z);
  double arg = 1.0 + xi * z;
  if (arg <= 0.0) return 1.0;  // beyond the upper bound when xi < 0
  return -std::expm1(-std::log1p(xi * z) / xi);
}

double gpd_quantile(double p, double xi, double sigma) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  if (std::fabs(xi) < 1e-12) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-xi * std::log1p(-p)) / xi;
}

double gpd_median(double xi, double sigma) {
  static const double kLn2 = 0.6931471805599453;
  if (std::fabs(xi) < 1e-8) return sigma * kLn2;
  return sigma * std::expm1(xi * kLn2) / xi;
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw NumericalError("norm_quantile: p outside [0,1]");
  }
  // Acklam 2003 coefficients
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, x;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // one Halley step against the exact CDF
  static const double kSqrt2Pi = 2.5066282746310002;
  double e = norm_cdf(x) - p;
  double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

}  // namespace swg
