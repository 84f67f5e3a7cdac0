#pragma once

#include <stdexcept>
#include <string>

namespace somb {

enum class ErrorKind {
  Contract,      // wrong representation, bad argument
  Setup,         // grid or domain unsuitable for the requested run
  Singular,      // evaluation at the conical intersection
  Numeric,       // NaN / Inf encountered
  Monitor,       // norm drift or edge mass beyond tolerance (strict mode)
  Degenerate,    // density-matrix eigenvalues coincide
  Undersampled,  // consecutive eigenvectors overlap too little
  Geodesic,      // antipodal points, shortest geodesic undefined
  Parse,
  Format,
  Length,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace somb
