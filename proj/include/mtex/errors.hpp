/* Copyright 2026 The mtex Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef MTEX_ERRORS_HPP_
#define MTEX_ERRORS_HPP_

#include <stdexcept>

namespace mtex {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing, unreadable, unwritable or truncated files.
class IoError : public Error {
 public:
  using Error::Error;
};

// Parseable input with unsupported or inconsistent content.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values surfaced by an optimization or training loop.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mtex

#endif  // MTEX_ERRORS_HPP_
