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

#include <stdexcept>
#include <string>

namespace quench {

/// Invalid configuration (probability vectors, grid sizes, parameter ranges).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument to an operation (out-of-range twist, n <= 0, grid mismatch).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Operation needs state that has not been computed yet.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Block scheme parameters that cannot produce a valid tiling.
class FeasibilityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace quench
