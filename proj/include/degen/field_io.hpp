#pragma once

// Grid fields on disk: a raw little-endian float64 array (row-major, cells in
// grid index order with the last axis fastest, components contiguous per cell)
// plus a JSON sidecar describing the grid and the layout.

#include <filesystem>
#include <string>

#include "degen/grid.hpp"

namespace degen {

enum class FieldLayout { Scalar, Vector, Matrix };

struct FieldFile {
  GridDomain grid;
  FieldLayout layout = FieldLayout::Scalar;
  // One row per cell; 1, n, or n*n columns.
  Eigen::MatrixXd data;
  std::string name;
};

// Writes <stem>.bin and <stem>.json.
void write_field(const std::filesystem::path& stem, const GridDomain& grid, FieldLayout layout,
                 const Eigen::MatrixXd& data, const std::string& name);
void write_scalar(const std::filesystem::path& stem, const GridDomain& grid, const ScalarField& f,
                  const std::string& name);

// Reads <stem>.json and the binary it names; throws IoError.
FieldFile read_field(const std::filesystem::path& stem);

std::string to_string(FieldLayout layout);

}  // namespace degen
