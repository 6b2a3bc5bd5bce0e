#pragma once

#include <string>

#include "blockflow/graph.hpp"

namespace blockflow {

// Parses the model document format:
//   <model name="m">
//     <block id="b1" kind="Gain" k="2.0"/>
//     <edge src="b1" dst="b2" port="0"/>
//   </model>
// Throws Error with MalformedXml / UnknownKind / DanglingEdge / PortConflict.
BlockGraph parse_model(const std::string& text);

// Canonical serialization: blocks sorted by id, edges by (src, dst, port),
// shortest round-trip float formatting. parse_model(serialize_model(g))
// is structurally equal to g for every valid graph.
std::string serialize_model(const BlockGraph& g);

BlockGraph load_model_file(const std::string& path);
void save_model_file(const BlockGraph& g, const std::string& path);

}  // namespace blockflow
