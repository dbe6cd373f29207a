// Copyright 2026 The gencon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gencon {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (dimension mismatch, non-finite entries).
class InputError : public Error {
public:
    using Error::Error;
};

/// Linearly dependent constraint rows where independent ones are required.
class DegeneracyError : public Error {
public:
    DegeneracyError(const std::string& what, std::vector<int> dependent_rows = {})
        : Error(what), dependent_rows_(std::move(dependent_rows)) {}

    const std::vector<int>& dependent_rows() const noexcept { return dependent_rows_; }

private:
    std::vector<int> dependent_rows_;
};

/// A numerical identity that must hold did not (e.g. energy gain from a projection).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// The adaptive integrator could not continue.
class IntegrationError : public Error {
public:
    using Error::Error;
};

} // namespace gencon
