#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "cpds/io.hpp"
#include "cpds/saturation.hpp"

namespace cpds::testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline ModelFile worked_model() { return parse_model(read_file(std::string(CPDS_MODELS_DIR) + "/worked.cpds")); }

inline StackAutomaton worked_initial(const Cpds& m) {
  return parse_automaton(read_file(std::string(CPDS_MODELS_DIR) + "/worked.aut"), m);
}

// The long-form transitions of an automaton rendered with canonical state names.
inline std::set<std::string> long_forms(const StackAutomaton& a, const Cpds& m) {
  std::set<std::string> out;
  for (TransId t = 0; t < a.num_transitions(); ++t) out.insert(long_form_string(a, m, a.long_form(t)));
  return out;
}

inline Configuration config(const ModelFile& mf, const std::string& control, const std::string& stack) {
  return Configuration{mf.model.control(control), parse_stack(stack, mf.model, mf.model.order, true)};
}

}  // namespace cpds::testing
