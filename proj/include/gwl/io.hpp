#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "gwl/inference.hpp"

namespace gwl {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tasks file (line based, '#' comments):
//   P <num_vars>
//   task identity          followed by   y <P values>
//   task design <N>        followed by N lines "x <P values>" and "y <N values>"
Dataset read_tasks(const std::string& path);
void write_tasks(const std::string& path, const Dataset& data);

// Groups file: one group per line, 1-based indices separated by blanks.
// An optional trailing "f=<value>" sets the group's initial weight.
GroupFamily read_groups(const std::string& path, int num_vars);
void write_groups(const std::string& path, const GroupFamily& family);

struct ModelFile {
  PriorConfig prior;
  HyperParams hp;
  FitConfig cfg;
  GroupFamily family;
  std::vector<double> objective_trace;
  int sweeps = 0;
  bool converged = false;
  std::optional<VariationalState> state;
};

ModelFile model_from_fit(const FitResult& fit, const PriorConfig& prior, const HyperParams& hp,
                         const FitConfig& cfg, bool with_state);
void write_model(const std::string& path, const ModelFile& model);
ModelFile read_model(const std::string& path);

}  // namespace gwl
