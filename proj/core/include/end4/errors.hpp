// Copyright 2026 The End4 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef END4_ERRORS_HPP_
#define END4_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <vector>

namespace end4 {

// Base of every error raised by this library. The CLI maps ValidationError
// and ParameterError family members to exit code 1 and everything else to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing files, malformed annotations, unreadable images.
class DataError : public Error {
 public:
  using Error::Error;
  DataError(const std::string& what, std::vector<std::string> items);
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::vector<std::string> items_;
};

// Manifest invariant violations; carries the offending record ids.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> ids);
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Retryable: timeouts, refused connections, 5xx.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Not retryable: the backend answered but the payload is unusable.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace end4

#endif  // END4_ERRORS_HPP_
