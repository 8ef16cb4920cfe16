#pragma once

#include <json.hpp>

#include "cpds/model.hpp"
#include "cpds/witness.hpp"

namespace cpds {

// {control, stack, rule, children} with rule null at leaves.
inline nlohmann::ordered_json witness_to_json(const WitnessTree& tree, const Cpds& m, int node = 0) {
  const WitnessNode& n = tree.nodes.at(static_cast<std::size_t>(node));
  nlohmann::ordered_json j;
  j["control"] = m.control_name(n.config.control);
  j["stack"] = m.stack_string(n.config.stack);
  j["rule"] = n.rule >= 0 ? nlohmann::ordered_json(n.rule_name) : nlohmann::ordered_json(nullptr);
  j["children"] = nlohmann::ordered_json::array();
  for (int c : n.children) j["children"].push_back(witness_to_json(tree, m, c));
  return j;
}

}  // namespace cpds
