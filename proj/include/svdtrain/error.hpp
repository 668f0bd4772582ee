//------------------------------------------------------------------------------
//
//   Copyright 2026 The svdtrain Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace svdtrain {

/// Base of every error thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not line up.
class DimensionError : public Error
{
public:
  using Error::Error;
};

/// Convolution / layer geometry does not produce a valid output.
class GeometryError : public Error
{
public:
  using Error::Error;
};

/// A tensor has the wrong number of axes (e.g. non-scalar loss).
class RankError : public Error
{
public:
  using Error::Error;
};

/// Non-convergence or a non-finite value.
class NumericError : public Error
{
public:
  using Error::Error;
};

/// Invalid argument value (negative std, e outside [0,1], ...).
class ParameterError : public Error
{
public:
  using Error::Error;
};

/// An internal invariant was violated by the caller.
class InvariantError : public Error
{
public:
  using Error::Error;
};

// Dataset ingestion.
class FormatError : public Error
{
public:
  using Error::Error;
};

class LengthError : public Error
{
public:
  using Error::Error;
};

class ConsistencyError : public Error
{
public:
  using Error::Error;
};

// Checkpoint persistence.
class VersionError : public Error
{
public:
  using Error::Error;
};

class ManifestError : public Error
{
public:
  using Error::Error;
};

class BlobLengthError : public Error
{
public:
  using Error::Error;
};

class IoError : public Error
{
public:
  using Error::Error;
};

/// A pipeline stage failed; the original error is nested
/// (std::rethrow_if_nested recovers it).
class StageError : public Error
{
public:
  StageError(std::string stage, const std::string &what)
    : Error("stage " + stage + ": " + what)
    , stage_(std::move(stage))
  {}

  const std::string &stage() const
  {
    return stage_;
  }

private:
  std::string stage_;
};

}  // namespace svdtrain
