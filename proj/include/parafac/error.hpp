#pragma once

#include <stdexcept>
#include <string>

namespace parafac {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or violated preconditions (shape mismatch, divisibility, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

// Evaluation of a transfer matrix at one of its poles (z = 0 with causal taps).
class PoleError : public Error {
 public:
  using Error::Error;
};

// A desk-scale size guard was exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace parafac
