#pragma once

#include <cstdint>

#include "blockflow/graph.hpp"

namespace blockflow {

struct RandomSpec {
  std::size_t n_blocks = 3;
  std::size_t n_inports = 1;
  std::size_t n_outports = 1;
  double edge_density = 0.2;           // in [0,1]
  std::uint64_t weight_min = 0;        // Compute synthetic-cycle range
  std::uint64_t weight_max = 1000;
  std::uint64_t seed = 0;
};

// Deterministic: the same spec yields a byte-identical serialized model.
// Every non-port block lies on some Inport -> Outport path. Throws
// Error(InfeasibleSpec) when no kind assignment can satisfy that.
BlockGraph generate_random_model(const RandomSpec& spec);

}  // namespace blockflow
