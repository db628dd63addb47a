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

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "quench/driving.hpp"

namespace quench {

enum class ObservableKind {
    trig,        // a cos(2 pi x) + c sin(4 pi x), coefficients from the symbol
    coboundary,  // cos(2 pi x) - cos(2 pi f_omega(x))
    constant,
};

/// The observable psi_omega, optionally centered by per-fiber means.
///
/// Means are keyed by absolute driving index so that a centered observable
/// stays valid on shifted paths.
class Observable {
public:
    static Observable trig(double scale = 1.0) { return Observable(ObservableKind::trig, scale); }
    static Observable coboundary(double scale = 1.0) { return Observable(ObservableKind::coboundary, scale); }
    static Observable constant(double value) { return Observable(ObservableKind::constant, value); }
    static Observable zero() { return Observable(ObservableKind::constant, 0.0); }

    ObservableKind kind() const noexcept { return kind_; }
    double scale() const noexcept { return scale_; }
    bool centered() const noexcept { return static_cast<bool>(means_); }
    bool identically_zero() const noexcept;

    /// Uncentered psi_omega(x) for a fiber with parameters s.
    double raw(const SymbolParams& s, double x) const noexcept {
        using std::numbers::pi;
        switch (kind_) {
            case ObservableKind::trig:
                return scale_ * (s.a * std::cos(2.0 * pi * x) + s.c * std::sin(4.0 * pi * x));
            case ObservableKind::coboundary:
                return scale_ * (std::cos(2.0 * pi * x) - std::cos(2.0 * pi * (s.d * x + s.b)));
            case ObservableKind::constant:
                return scale_;
        }
        return 0.0;
    }

    /// Subtracted mean at an absolute index (0 when uncentered).
    /// Throws StateError if centered but the index lies outside the table.
    double mean(long absolute_index) const;

    double value(const OmegaPath& omega, long i, double x) const {
        return raw(omega.params_at(i), x) - mean(omega.absolute(i));
    }

    /// Lipschitz constant of psi_omega, an upper bound for every v_{alpha,xi}.
    double lipschitz_bound(const SymbolParams& s) const noexcept;

    Observable scaled(double factor) const;

    /// Copy with the given mean table: means[k] belongs to absolute index first + k.
    Observable with_means(long first_absolute, std::vector<double> means) const;
    long means_first() const noexcept { return means_first_; }
    std::size_t means_size() const noexcept { return means_ ? means_->size() : 0; }

private:
    Observable(ObservableKind kind, double scale) : kind_(kind), scale_(scale) {}

    ObservableKind kind_;
    double scale_;
    long means_first_ = 0;
    std::shared_ptr<const std::vector<double>> means_;
};

}  // namespace quench
