#pragma once

#include <string>

#include <json.hpp>

#include "tangle/machine.hpp"

namespace tangle {

// Parse the TMD text format. Throws SyntaxError (with line/column),
// UnknownRegister, DuplicateName, ColourOutOfRange.
Machine parse(const std::string& text);

// Canonical serialization: rack, processes (declaration order), interactions
// sorted by (agent id, first patient edge), colour lines for coloured
// registers in global id order. parse(serialize(m)) == m.
std::string serialize(const Machine& m);

nlohmann::ordered_json to_json(const Machine& m);

} // namespace tangle
