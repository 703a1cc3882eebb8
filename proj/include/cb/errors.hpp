#pragma once

#include <stdexcept>
#include <string>

namespace cb {

// Numerical argument outside the operation's domain (p not in (0,1), t > 0, ...).
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Design matrix (or a resample of it) is numerically rank deficient.
class rank_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative solver exhausted its sweep budget.
class convergence_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Estimator undefined for this input (zero circular resultant, n <= s, ...).
class degenerate_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation requested on a model that does not support it.
class unsupported_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input file; message carries row/column location.
class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cb
