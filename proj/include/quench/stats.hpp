/*
   Copyright 2026 The quench Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <span>
#include <vector>

namespace quench {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
};

/// Ordinary least squares y = intercept + slope x. Needs >= 2 distinct x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
/// Unbiased sample variance.
double sample_variance(std::span<const double> v);

double normal_cdf(double z);

/// sup |F_n - Phi| of the sample against N(0,1).
double ks_normal(std::vector<double> sample);
/// sup |F_n - U(0,1)|.
double ks_uniform(std::vector<double> sample);

}  // namespace quench
