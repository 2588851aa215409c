#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace radm {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SymmetryViolation : public Error {
 public:
  explicit SymmetryViolation(double deviation)
      : Error("Hermitian symmetry violated (max deviation " + std::to_string(deviation) + ")"),
        deviation_(deviation) {}
  double deviation() const noexcept { return deviation_; }

 private:
  double deviation_;
};

class MeanFreeViolation : public Error {
 public:
  explicit MeanFreeViolation(double magnitude)
      : Error("field is not mean-free (|c_0| = " + std::to_string(magnitude) + ")"),
        magnitude_(magnitude) {}
  double magnitude() const noexcept { return magnitude_; }

 private:
  double magnitude_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// First NaN/Inf seen while advancing a solution.
class BlowUp : public Error {
 public:
  BlowUp(double t, long step_count)
      : Error("non-finite coefficient at t=" + std::to_string(t) + " step=" + std::to_string(step_count)),
        t_(t),
        step_count_(step_count) {}
  double t() const noexcept { return t_; }
  long step_count() const noexcept { return step_count_; }

 private:
  double t_;
  long step_count_;
};

/// Configuration text rejected. `line()` is 1-based, 0 when not tied to a line.
class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, const std::string& key, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + key + ": " + what : key + ": " + what),
        line_(line),
        key_(key) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::size_t line_;
  std::string key_;
};

class AuditFailure : public Error {
 public:
  using Error::Error;
};

class OrderingError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what) : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace radm
