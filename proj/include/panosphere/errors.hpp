// Copyright Contributors to the PanoSphere Project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ps {

// Base for all library errors; CLI maps these to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid value for a domain quantity (FoV out of range, non-unit ray, ...).
struct DomainError : Error {
  using Error::Error;
};

// Bad configuration (non-divisible dims, D % 4 != 0, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Malformed file on disk.
struct FormatError : Error {
  using Error::Error;
};

// Degenerate alignment (empty mask, zero median, constant prediction).
struct AlignmentError : Error {
  using Error::Error;
};

}  // namespace ps
