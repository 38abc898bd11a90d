#pragma once

#include <stdexcept>
#include <string>

namespace bigue {

// Malformed or inconsistent input data (files, parse failures, version
// mismatches). The CLI maps this to exit code 2.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A trace with zero variance where a diagnostic needs spread.
class degenerate_trace_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Circular mean of directions whose resultant vanishes.
class undefined_mean_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace bigue
