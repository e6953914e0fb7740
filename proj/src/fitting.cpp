#include <cmath>
#include <sstream>

#include "nozzleflow/diagnostics.hpp"

namespace nozzle {

namespace {

struct Line {
  double slope = 0.0, intercept = 0.0, se = 0.0, r2 = 0.0;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  Line l;
  l.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  l.intercept = my - l.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - l.intercept - l.slope * x[i];
    sse += e * e;
  }
  l.r2 = syy > 0.0 ? 1.0 - sse / syy : 0.0;
  l.se = n > 2.0 && sxx > 0.0 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return l;
}

enum class Model { exponential, algebraic };

// Fits log v against T or log T; `halve` maps an energy slope to an amplitude rate.
FitResult fit(const std::vector<double>& T, const std::vector<double>& v, double floor, Model model, bool halve) {
  if (T.size() != v.size()) throw Error(Errc::invalid_argument, "stations and values differ in length");
  std::vector<double> xe, xa, y;
  for (std::size_t i = 0; i < T.size(); ++i) {
    if (!(v[i] > floor) || !(v[i] > 0.0)) continue;
    if (!(T[i] > 0.0)) {
      if (model == Model::algebraic) throw Error(Errc::invalid_argument, "algebraic fit needs stations T > 0");
      continue;
    }
    xe.push_back(T[i]);
    xa.push_back(std::log(T[i]));
    y.push_back(std::log(v[i]));
  }
  if (y.size() < 5) {
    std::ostringstream os;
    os << "only " << y.size() << " of " << T.size() << " stations lie above the noise floor " << floor;
    throw Error(Errc::noise_floor, os.str());
  }
  const Line main = least_squares(model == Model::exponential ? xe : xa, y);
  const Line other = least_squares(model == Model::exponential ? xa : xe, y);
  if (!(main.slope + 2.0 * main.se < 0.0)) {
    std::ostringstream os;
    os << "no significant decay: slope " << main.slope << " +- " << 2.0 * main.se;
    throw Error(Errc::noise_floor, os.str());
  }
  const double scale = halve ? 0.5 : 1.0;
  FitResult r;
  r.slope = main.slope;
  r.intercept = main.intercept;
  r.rate = -scale * main.slope;
  r.ci = 2.0 * scale * main.se;
  r.r_squared = main.r2;
  r.other_r_squared = other.r2;
  r.model_mismatch = other.r2 > main.r2;
  r.used = static_cast<int>(y.size());
  return r;
}

}  // namespace

FitResult fit_exponential_rate(const std::vector<double>& T, const std::vector<double>& E, double floor) {
  return fit(T, E, floor, Model::exponential, true);
}

FitResult fit_algebraic_rate(const std::vector<double>& T, const std::vector<double>& E, double floor) {
  return fit(T, E, floor, Model::algebraic, true);
}

FitResult fit_power_exponent(const std::vector<double>& T, const std::vector<double>& v, double floor) {
  return fit(T, v, floor, Model::algebraic, false);
}

}  // namespace nozzle
