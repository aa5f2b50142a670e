#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace teven {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad problem data: unreadable files, malformed manifests, dimension
/// mismatches, structure violations.
class InputError : public Error {
public:
  using Error::Error;
};

/// A matrix that must be factorized is singular to working precision.
class SingularMatrixError : public Error {
public:
  using Error::Error;
};

/// The requested shift lies (numerically) on the spectrum of P.
class ShiftOnSpectrumError : public Error {
public:
  ShiftOnSpectrumError(std::complex<double> shift, const std::string& what)
      : Error(what), shift_(shift) {}
  std::complex<double> shift() const { return shift_; }

private:
  std::complex<double> shift_;
};

/// A dense helper was asked to materialize beyond its configured cap.
class CapExceededError : public Error {
public:
  using Error::Error;
};

}  // namespace teven
