#pragma once

#include <stdexcept>
#include <string>

namespace entlab {

// Base of every library error. The code is the process exit status the
// command line driver maps the error to.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, int code = 3)
      : std::runtime_error(what), code_(code) {}
  int exit_code() const { return code_; }

 private:
  int code_;
};

// Precondition violations are usage errors.
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(what, 2) {}
};

class UnsupportedInstance : public Error {
 public:
  explicit UnsupportedInstance(const std::string& what) : Error(what, 2) {}
};

class AtomMismatch : public Error {
 public:
  explicit AtomMismatch(const std::string& what) : Error(what, 2) {}
};

class GridMismatch : public Error {
 public:
  explicit GridMismatch(const std::string& what) : Error(what, 2) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what, 2) {}
};

class HorizonTooClose : public Error {
 public:
  explicit HorizonTooClose(const std::string& what) : Error(what, 3) {}
};

class NonFinite : public Error {
 public:
  explicit NonFinite(const std::string& what) : Error(what, 3) {}
};

class NoConvergence : public Error {
 public:
  explicit NoConvergence(const std::string& what) : Error(what, 3) {}
};

class DegenerateRun : public Error {
 public:
  explicit DegenerateRun(const std::string& what) : Error(what, 3) {}
};

class InsufficientData : public Error {
 public:
  explicit InsufficientData(const std::string& what) : Error(what, 3) {}
};

}  // namespace entlab
