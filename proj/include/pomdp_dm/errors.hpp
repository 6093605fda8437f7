#pragma once

#include <stdexcept>
#include <string>

namespace pdm {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed model, lexicon, ontology or config document.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Pr(o | b, a) == 0: the observation is impossible under the model.
class DegenerateObservation : public Error {
 public:
  using Error::Error;
};

class InsufficientHistory : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class AllZeroWeights : public Error {
 public:
  using Error::Error;
};

class CycleDetected : public ModelError {
 public:
  using ModelError::ModelError;
};

class DanglingReference : public ModelError {
 public:
  using ModelError::ModelError;
};

class AsymmetricConflict : public ModelError {
 public:
  using ModelError::ModelError;
};

class SessionEnded : public Error {
 public:
  using Error::Error;
};

}  // namespace pdm
