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

#include "quench/observable.hpp"

#include <cmath>

#include "quench/error.hpp"

namespace quench {

bool Observable::identically_zero() const noexcept {
    if (scale_ != 0.0) return false;
    if (!means_) return true;
    for (double m : *means_)
        if (m != 0.0) return false;
    return true;
}

double Observable::mean(long absolute_index) const {
    if (!means_) return 0.0;
    const long k = absolute_index - means_first_;
    if (k < 0 || k >= static_cast<long>(means_->size()))
        throw StateError("observable: index " + std::to_string(absolute_index) + " outside the centering window");
    return (*means_)[static_cast<std::size_t>(k)];
}

double Observable::lipschitz_bound(const SymbolParams& s) const noexcept {
    using std::numbers::pi;
    const double k = std::abs(scale_);
    switch (kind_) {
        case ObservableKind::trig:
            return k * (2.0 * pi * std::abs(s.a) + 4.0 * pi * std::abs(s.c));
        case ObservableKind::coboundary:
            return k * 2.0 * pi * (1.0 + s.d);
        case ObservableKind::constant:
            return 0.0;
    }
    return 0.0;
}

Observable Observable::scaled(double factor) const {
    Observable out(kind_, scale_ * factor);
    if (means_) {
        auto m = std::make_shared<std::vector<double>>(*means_);
        for (double& v : *m) v *= factor;
        out.means_ = std::move(m);
        out.means_first_ = means_first_;
    }
    return out;
}

Observable Observable::with_means(long first_absolute, std::vector<double> means) const {
    Observable out(kind_, scale_);
    out.means_first_ = first_absolute;
    out.means_ = std::make_shared<const std::vector<double>>(std::move(means));
    return out;
}

}  // namespace quench
