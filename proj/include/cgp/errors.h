/*
 * Copyright 2026 The CGP Toolkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CGP_ERRORS_H_
#define CGP_ERRORS_H_

#include <stdexcept>
#include <string>

namespace cgp {

// Base class for every error raised by the library. Callers that only care
// about "something went wrong" catch this; the CLI maps subclasses to exit
// codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Malformed input text (JSON syntax, wrong field types).
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }
  const char* kind() const noexcept override { return "parse_error"; }

 private:
  int line_;
};

// Well-formed input that violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation_error"; }
};

// Argument outside the domain of an operation (e.g. a cut time past tau).
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain_error"; }
};

// Linear algebra failure, e.g. a Gram matrix that stays indefinite after
// jitter escalation, or a non-finite objective.
class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical_error"; }
};

// A model that cannot be applied to the data it is given.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config_error"; }
};

// Every restart of a fit failed.
class OptimizationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "optimization_error"; }
};

}  // namespace cgp

#endif  // CGP_ERRORS_H_
