#include "dgflive/stats.hpp"

#include <algorithm>
#include <cmath>

namespace dgflive {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double mann_whitney_less(const std::vector<double>& a, const std::vector<double>& b) {
  size_t n1 = a.size(), n2 = b.size();
  if (n1 == 0 || n2 == 0) return 1.0;

  struct Obs {
    double v;
    bool from_a;
  };
  std::vector<Obs> all;
  all.reserve(n1 + n2);
  for (double v : a) all.push_back({v, true});
  for (double v : b) all.push_back({v, false});
  std::sort(all.begin(), all.end(), [](const Obs& x, const Obs& y) { return x.v < y.v; });

  // Midranks, collecting tie group sizes for the variance correction.
  double r1 = 0;
  double tie_term = 0;
  size_t i = 0;
  size_t n = all.size();
  while (i < n) {
    size_t j = i;
    while (j < n && all[j].v == all[i].v) ++j;
    double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k)
      if (all[k].from_a) r1 += rank;
    double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  double u1 = r1 - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
  double mean = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  double nn = static_cast<double>(n);
  double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
               (nn + 1.0 - tie_term / (nn * (nn - 1.0)));
  if (var <= 0) return 1.0;  // all values tied
  double z = (u1 - mean + 0.5) / std::sqrt(var);
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

}  // namespace dgflive
