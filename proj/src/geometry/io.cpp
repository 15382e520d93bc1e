#include "vem/geometry.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace vem::geometry {

namespace {

void put(std::ostream& os, double v) {
  if (std::isnan(v)) {
    os << "nan";
  } else {
    os << v;
  }
}

template <typename T>
T expect(std::istream& is, const std::string& key) {
  std::string word;
  if (!(is >> word) || word != key) throw Error("field text: expected '" + key + "'");
  T v{};
  if (!(is >> v)) throw Error("field text: bad value after '" + key + "'");
  return v;
}

}  // namespace

void write_mesh_csv(std::ostream& os, const InterfaceMesh& mesh) {
  const bool three = mesh.dim == 3;
  os << (three ? "t,x,y,z,nx,ny,nz,kappa\n" : "t,x,y,nx,ny,kappa\n");
  os << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.points.size(); ++i) {
    const Vec3& x = mesh.points[i];
    const Vec3& n = mesh.normals[i];
    os << mesh.t << ',' << x[0] << ',' << x[1] << ',';
    if (three) os << x[2] << ',';
    os << n[0] << ',' << n[1] << ',';
    if (three) os << n[2] << ',';
    put(os, i < mesh.curvature.size() ? mesh.curvature[i] : std::nan(""));
    os << '\n';
  }
}

void write_field_text(std::ostream& os, const ScalarField& field) {
  const Grid& g = field.grid();
  os << std::setprecision(17);
  os << "dim " << g.dim() << '\n';
  os << "origin";
  for (int a = 0; a < g.dim(); ++a) os << ' ' << g.origin()[a];
  os << "\nh";
  for (int a = 0; a < g.dim(); ++a) os << ' ' << g.h(a);
  os << "\nextents";
  for (int a = 0; a < g.dim(); ++a) os << ' ' << g.extent(a);
  os << "\nt " << field.time() << '\n';
  for (double v : field.values()) os << v << '\n';
}

ScalarField read_field_text(std::istream& is) {
  const int dim = expect<int>(is, "dim");
  if (dim != 2 && dim != 3) throw Error("field text: dim must be 2 or 3");
  Vec3 origin = Vec3::Zero(), h = Vec3::Ones();
  std::array<int, 3> ext{1, 1, 1};
  std::string word;
  is >> word;
  if (word != "origin") throw Error("field text: expected 'origin'");
  for (int a = 0; a < dim; ++a) is >> origin[a];
  is >> word;
  if (word != "h") throw Error("field text: expected 'h'");
  for (int a = 0; a < dim; ++a) is >> h[a];
  is >> word;
  if (word != "extents") throw Error("field text: expected 'extents'");
  for (int a = 0; a < dim; ++a) is >> ext[a];
  const double t = expect<double>(is, "t");
  if (!is) throw Error("field text: truncated header");
  Grid grid(dim, origin, h, ext);
  std::vector<double> values(grid.node_count());
  for (double& v : values) {
    if (!(is >> v)) throw Error("field text: too few values");
  }
  return ScalarField(std::move(grid), std::move(values), t);
}

void write_field_csv(std::ostream& os, const ScalarField& field, int slice) {
  const Grid& g = field.grid();
  const bool three = g.dim() == 3;
  os << (three ? "x,y,z,value\n" : "x,y,value\n");
  os << std::setprecision(17);
  const int k = three ? slice : 0;
  for (int j = 0; j < g.extent(1); ++j) {
    for (int i = 0; i < g.extent(0); ++i) {
      const Vec3 x = g.node(i, j, k);
      os << x[0] << ',' << x[1] << ',';
      if (three) os << x[2] << ',';
      os << field.at(i, j, k) << '\n';
    }
  }
}

}  // namespace vem::geometry
