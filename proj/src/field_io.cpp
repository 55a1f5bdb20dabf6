#include "degen/field_io.hpp"

#include <bit>
#include <fstream>

#include <json.hpp>

#include "degen/errors.hpp"

namespace degen {

namespace {

using json = nlohmann::ordered_json;

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  return std::filesystem::path(stem.string() + ext);
}

FieldLayout layout_from(const std::string& s) {
  if (s == "scalar") return FieldLayout::Scalar;
  if (s == "vector") return FieldLayout::Vector;
  if (s == "matrix") return FieldLayout::Matrix;
  throw Error(ErrorKind::IoError, "unknown field layout '" + s + "'");
}

Index components(FieldLayout layout, int n) {
  switch (layout) {
    case FieldLayout::Scalar: return 1;
    case FieldLayout::Vector: return n;
    case FieldLayout::Matrix: return Index(n) * n;
  }
  return 1;
}

}  // namespace

std::string to_string(FieldLayout layout) {
  switch (layout) {
    case FieldLayout::Scalar: return "scalar";
    case FieldLayout::Vector: return "vector";
    case FieldLayout::Matrix: return "matrix";
  }
  return "scalar";
}

void write_field(const std::filesystem::path& stem, const GridDomain& grid, FieldLayout layout,
                 const Eigen::MatrixXd& data, const std::string& name) {
  static_assert(std::endian::native == std::endian::little, "field files are little-endian");
  const Index k = components(layout, grid.dim());
  if (data.rows() != grid.size() || data.cols() != k)
    throw Error(ErrorKind::ShapeMismatch, "field data does not match grid and layout");
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = data;
  const auto bin = with_ext(stem, ".bin");
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + bin.string());
  out.write(reinterpret_cast<const char*>(rm.data()), std::streamsize(rm.size() * sizeof(double)));

  json side;
  side["name"] = name;
  side["dtype"] = "float64";
  side["byte_order"] = "little";
  side["layout"] = to_string(layout);
  side["components"] = k;
  side["data"] = bin.filename().string();
  side["grid"]["dim"] = grid.dim();
  side["grid"]["h"] = grid.h();
  side["grid"]["origin"] = std::vector<double>(grid.origin().data(), grid.origin().data() + grid.dim());
  side["grid"]["counts"] = grid.counts();
  if (grid.masked_count() != grid.size()) side["grid"]["mask"] = grid.mask();
  std::ofstream js(with_ext(stem, ".json"));
  if (!js) throw Error(ErrorKind::IoError, "cannot write sidecar for " + stem.string());
  js << side.dump(2) << "\n";
}

void write_scalar(const std::filesystem::path& stem, const GridDomain& grid, const ScalarField& f,
                  const std::string& name) {
  write_field(stem, grid, FieldLayout::Scalar, Eigen::MatrixXd(f), name);
}

FieldFile read_field(const std::filesystem::path& stem) {
  const auto jp = with_ext(stem, ".json");
  std::ifstream js(jp);
  if (!js) throw Error(ErrorKind::IoError, "cannot open " + jp.string());
  json side;
  try {
    side = json::parse(js);
    if (side.at("dtype") != "float64" || side.at("byte_order") != "little")
      throw Error(ErrorKind::IoError, "only little-endian float64 fields are supported");
    const auto& g = side.at("grid");
    const int n = g.at("dim").get<int>();
    const auto origin = g.at("origin").get<std::vector<double>>();
    const auto counts = g.at("counts").get<std::vector<Index>>();
    std::vector<std::uint8_t> mask;
    if (g.contains("mask")) mask = g.at("mask").get<std::vector<std::uint8_t>>();
    if (int(origin.size()) != n) throw Error(ErrorKind::IoError, "origin length differs from dim");
    GridDomain grid(Eigen::Map<const Eigen::VectorXd>(origin.data(), n), g.at("h").get<double>(), counts, mask);
    const FieldLayout layout = layout_from(side.at("layout").get<std::string>());
    const Index k = components(layout, n);
    const auto bin = jp.parent_path() / side.at("data").get<std::string>();
    std::ifstream in(bin, std::ios::binary | std::ios::ate);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + bin.string());
    const auto bytes = std::size_t(in.tellg());
    if (bytes != std::size_t(grid.size() * k) * sizeof(double))
      throw Error(ErrorKind::IoError, bin.string() + " has the wrong size");
    in.seekg(0);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(grid.size(), k);
    in.read(reinterpret_cast<char*>(rm.data()), std::streamsize(bytes));
    return FieldFile{grid, layout, Eigen::MatrixXd(rm), side.value("name", "")};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IoError, jp.string() + ": " + e.what());
  }
}

}  // namespace degen
