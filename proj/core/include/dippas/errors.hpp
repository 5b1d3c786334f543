#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dippas {

// Shapes of two operands disagree, or a size constraint is violated.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input carries no usable signal, e.g. zero variance where a correlation is needed.
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No iteration of an optimization run reached the snapshot PSNR threshold.
class EmptyPoolError : public std::runtime_error {
 public:
  EmptyPoolError(const std::string& what, double best_psnr_db, std::size_t iterations)
      : std::runtime_error(what), best_psnr_db_(best_psnr_db), iterations_(iterations) {}

  double best_psnr_db() const noexcept { return best_psnr_db_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double best_psnr_db_;
  std::size_t iterations_;
};

}  // namespace dippas
