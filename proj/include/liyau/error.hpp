#pragma once

#include <stdexcept>
#include <string>

namespace liyau {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad spec, out-of-range exponent, ...).
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

/// A field was passed to an operator built on a different manifold.
class ManifoldMismatch : public Error
{
public:
  using Error::Error;
};

/// The requested operation is not offered on this kind of manifold.
class UnsupportedManifold : public Error
{
public:
  using Error::Error;
};

/// An iterative procedure (linear solve, bisection, shooting) did not converge.
class ConvergenceFailure : public Error
{
public:
  using Error::Error;
};

} // namespace liyau
