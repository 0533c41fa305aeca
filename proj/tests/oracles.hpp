#pragma once

// Reference computations written from the textbook definitions, independent
// of the library code they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace cdi::oracle {

inline double mean(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  return static_cast<double>(s / v.size());
}

// r = sum((x-mx)(y-my)) / sqrt(sum((x-mx)^2) sum((y-my)^2)), in long double.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Average rank (1-based) of each element, ties sharing the mean of their
// positions. Quadratic on purpose.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      else if (w == v[i]) ++equal;
    }
    r[i] = less + (equal + 1) / 2.0;
  }
  return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

// Every n-gram for n = 1..n_max over `toks`, joined by single spaces.
inline std::vector<std::string> ngrams(const std::vector<std::string>& toks, int n_max) {
  std::vector<std::string> out;
  for (int n = 1; n <= n_max; ++n) {
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      std::string g = toks[i];
      for (int k = 1; k < n; ++k) g += " " + toks[i + k];
      out.push_back(g);
    }
  }
  return out;
}

// Central difference of f at coordinate `i` of `x`.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2 * h);
}

}  // namespace cdi::oracle
