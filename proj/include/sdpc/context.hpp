#pragma once

#include <string>
#include <vector>

#include "sdpc/model.hpp"
#include "sdpc/tolerance.hpp"

namespace sdpc {

/// Per-solve state: tolerances, oracle call counter, optional trace of every
/// oracle subproblem, and diagnostics raised along the way.
class Context {
 public:
  explicit Context(ToleranceConfig tol = {}, bool tracing = false) : tol_(tol), tracing_(tracing) {}

  const ToleranceConfig& tol() const { return tol_; }
  bool tracing() const { return tracing_; }

  void record(TraceEntry e) {
    ++calls_;
    if (tracing_) trace_.push_back(std::move(e));
  }
  int oracle_calls() const { return calls_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }

  void diagnose(std::string msg) { diagnostics_.push_back(std::move(msg)); }
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  ToleranceConfig tol_;
  bool tracing_ = false;
  int calls_ = 0;
  std::vector<TraceEntry> trace_;
  std::vector<std::string> diagnostics_;
};

}  // namespace sdpc
