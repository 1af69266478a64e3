#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace synsem {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Malformed bytes in a binary or text container.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structurally readable input that violates a domain invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A referenced input file does not exist or cannot be opened.
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& what, std::string path)
      : std::runtime_error(what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace synsem
