#pragma once

#include <stdexcept>
#include <string>

namespace synparse {

// Base for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape or rank disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file (CoNLL, dataset, checkpoint); carries location info.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Malformed logic-form token sequence.
class LogicParseError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or missing data at use time (vocabulary misses, misaligned
// corpora, provider/sentence mismatches).
class DataError : public Error {
 public:
  using Error::Error;
};

// A required input was not supplied (tree, SAWR matrix, model list).
class InputError : public Error {
 public:
  using Error::Error;
};

// A token missing from a closed vocabulary where UNK substitution is not
// allowed (gold targets).
class VocabError : public DataError {
 public:
  using DataError::DataError;
};

// Filesystem-level failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf or other numeric breakdown; names the operation involved.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Divergence during optimization; names epoch and batch.
class TrainingError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace synparse
