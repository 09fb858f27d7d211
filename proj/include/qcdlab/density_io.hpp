#pragma once

#include <string>

#include "qcdlab/grid_density.hpp"

namespace qcdlab {

/// Parses a density from its JSON form, either sampled
///   {"support":[a,b],"values":[...]}
/// or as a model specification
///   {"model":{"K":...,"N":...,"support":[a,b],"u0":...,"slope0":...,"samples":M}}.
/// Throws std::invalid_argument with a field-level message on malformed input.
GridDensity density_from_json(const std::string& text, std::size_t default_samples = 512);

GridDensity load_density_file(const std::string& path, std::size_t default_samples = 512);

/// Serializes the sampled density back to the JSON schema.
std::string density_to_json(const GridDensity& h, int indent = 2);

} // namespace qcdlab
