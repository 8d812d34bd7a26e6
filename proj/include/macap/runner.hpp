#pragma once
#include <string>

#include "macap/scenario.hpp"

namespace macap {

// Outcome of one command; message is already formatted for stderr as
// category=<c> module=<phase> message=<text>.
struct RunOutcome {
  int exit_code = 0;
  std::string category;  // parse | convergence | numeric | io (empty on success)
  std::string message;
};

// Executes region | boundary | validate | policy against the scenario,
// writing artifacts under sc.out_dir. Never throws; errors land in the
// outcome with their category.
RunOutcome run_command(const Scenario& sc, const std::string& command);

int category_exit_code(const std::string& category);

}  // namespace macap
