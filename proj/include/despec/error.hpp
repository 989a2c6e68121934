//  Copyright 2026 The despec Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace despec {

// Caller supplied something malformed: shapes, arguments, files, flags.
// The CLI maps these to exit status 1.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public UserError {
 public:
  using UserError::UserError;
};

class IoError : public UserError {
 public:
  using UserError::UserError;
};

class ConfigError : public UserError {
 public:
  using UserError::UserError;
};

// Broken internal invariant (NaN in activations, misuse of the tape).
// The CLI maps these to exit status 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NumericError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

}  // namespace despec
