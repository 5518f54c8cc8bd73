#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "sgopt/metrics.hpp"

namespace sgopt {

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// CSV with header k,mse,disagreement,comm_expected,comm_realized,szo_count,sfo_count[,test_error].
/// The test_error column is present iff the trace carries test errors.
void write_trace_csv(std::ostream& out, const Trace& trace);
Trace read_trace_csv(std::istream& in);

/// Mean trace plus mse_se, disagreement_se and (when present) test_error_se columns.
void write_ensemble_csv(std::ostream& out, const EnsembleTrace& ensemble);

}  // namespace sgopt
