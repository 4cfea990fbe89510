#pragma once

#include <vector>

namespace dgflive {

double median(std::vector<double> values);

// One-sided Mann-Whitney U test (normal approximation with tie correction and
// continuity correction): p-value for the alternative "a stochastically less
// than b". Small p means a's values rank lower.
double mann_whitney_less(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace dgflive
