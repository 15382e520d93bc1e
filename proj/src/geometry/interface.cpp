#include "vem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

namespace vem::geometry {

namespace {

// Builds mesh vertices on grid edges, sharing a vertex between all cells
// that touch the same edge (or the same node when the crossing sits on it).
class VertexPool {
 public:
  VertexPool(const ScalarField& field, InterfaceMesh& mesh) : field_(field), mesh_(mesh) {}

  // Vertex on the edge a-b, where exactly one of the two values is positive.
  int on_edge(std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    const double va = field_[a], vb = field_[b];
    const double s = va / (va - vb);
    std::uint64_t key;
    if (s <= 0.0) {
      key = node_key(a);
    } else if (s >= 1.0) {
      key = node_key(b);
    } else {
      key = static_cast<std::uint64_t>(a) * field_.grid().node_count() + b;
    }
    auto it = ids_.find(key);
    if (it != ids_.end()) return it->second;
    const Grid& g = field_.grid();
    const Vec3 xa = g.node(a), xb = g.node(b);
    Vec3 x = s <= 0.0 ? xa : (s >= 1.0 ? xb : Vec3(xa + s * (xb - xa)));
    // Snap exact-zero coordinates so linear fields give exact crossings.
    for (int ax = 0; ax < 3; ++ax) {
      if (xa[ax] == xb[ax]) x[ax] = xa[ax];
    }
    const int id = static_cast<int>(mesh_.points.size());
    mesh_.points.push_back(x);
    ids_.emplace(key, id);

    Vec3 grad = interpolate_gradient(field_, x);
    double n = grad.norm();
    if (n < 1e-10) {
      mesh_.degenerate = true;
      grad = (vb - va) * (xb - xa);
      n = grad.norm();
      if (n == 0.0) {
        grad = Vec3::UnitX();
        n = 1.0;
      }
    }
    mesh_.normals.push_back(-grad / n);
    return id;
  }

 private:
  std::uint64_t node_key(std::size_t n) const {
    const auto N = static_cast<std::uint64_t>(field_.grid().node_count());
    return N * N + n;
  }

  const ScalarField& field_;
  InterfaceMesh& mesh_;
  std::unordered_map<std::uint64_t, int> ids_;
};

bool positive(double v) { return v > 0.0; }

void add_segment(InterfaceMesh& mesh, int a, int b) {
  if (a != b) mesh.elements.push_back({a, b, -1});
}

void add_triangle(InterfaceMesh& mesh, int a, int b, int c) {
  if (a != b && b != c && a != c) mesh.elements.push_back({a, b, c});
}

void march_squares(const ScalarField& f, VertexPool& pool, InterfaceMesh& mesh) {
  const Grid& g = f.grid();
  for (int j = 0; j + 1 < g.extent(1); ++j) {
    for (int i = 0; i + 1 < g.extent(0); ++i) {
      const std::size_t c[4] = {g.index(i, j), g.index(i + 1, j), g.index(i + 1, j + 1),
                                g.index(i, j + 1)};
      bool pos[4];
      int npos = 0;
      for (int q = 0; q < 4; ++q) npos += (pos[q] = positive(f[c[q]]));
      if (npos == 0 || npos == 4) continue;
      int edge_vertex[4] = {-1, -1, -1, -1};
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        if (pos[a] != pos[b]) edge_vertex[e] = pool.on_edge(c[a], c[b]);
      }
      int crossing[4];
      int m = 0;
      for (int e = 0; e < 4; ++e) {
        if (edge_vertex[e] >= 0) crossing[m++] = e;
      }
      if (m == 2) {
        add_segment(mesh, edge_vertex[crossing[0]], edge_vertex[crossing[1]]);
        continue;
      }
      // Saddle: the cell-centre average decides which diagonal pair connects.
      const double centre = 0.25 * (f[c[0]] + f[c[1]] + f[c[2]] + f[c[3]]);
      if (positive(centre) == pos[0]) {
        add_segment(mesh, edge_vertex[0], edge_vertex[1]);
        add_segment(mesh, edge_vertex[2], edge_vertex[3]);
      } else {
        add_segment(mesh, edge_vertex[3], edge_vertex[0]);
        add_segment(mesh, edge_vertex[1], edge_vertex[2]);
      }
    }
  }
}

void march_tetrahedra(const ScalarField& f, VertexPool& pool, InterfaceMesh& mesh) {
  const Grid& g = f.grid();
  // Six tetrahedra sharing the main diagonal 0-7 of the cube; corner bit
  // pattern is (dx, dy, dz) = (bit0, bit1, bit2).
  static constexpr int tets[6][4] = {{0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7},
                                     {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7}};
  for (int k = 0; k + 1 < g.extent(2); ++k) {
    for (int j = 0; j + 1 < g.extent(1); ++j) {
      for (int i = 0; i + 1 < g.extent(0); ++i) {
        std::size_t corner[8];
        for (int q = 0; q < 8; ++q) {
          corner[q] = g.index(i + (q & 1), j + ((q >> 1) & 1), k + ((q >> 2) & 1));
        }
        for (const auto& t : tets) {
          int in[4], out[4];
          int ni = 0, no = 0;
          for (int q = 0; q < 4; ++q) {
            if (positive(f[corner[t[q]]])) {
              in[ni++] = t[q];
            } else {
              out[no++] = t[q];
            }
          }
          if (ni == 0 || ni == 4) continue;
          auto v = [&](int a, int b) { return pool.on_edge(corner[a], corner[b]); };
          if (ni == 1) {
            add_triangle(mesh, v(in[0], out[0]), v(in[0], out[1]), v(in[0], out[2]));
          } else if (ni == 3) {
            add_triangle(mesh, v(out[0], in[0]), v(out[0], in[1]), v(out[0], in[2]));
          } else {
            const int a = v(in[0], out[0]), b = v(in[0], out[1]);
            const int c = v(in[1], out[1]), d = v(in[1], out[0]);
            add_triangle(mesh, a, b, c);
            add_triangle(mesh, a, c, d);
          }
        }
      }
    }
  }
}

double point_segment_distance(const Vec3& x, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? (x - a).dot(ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return (x - (a + s * ab)).norm();
}

// Closest point on a triangle by Voronoi-region classification.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return ap.norm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return bp.norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    return (p - (a + d1 / (d1 - d3) * ab)).norm();
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return cp.norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    return (p - (a + d2 / (d2 - d6) * ac)).norm();
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return (p - (b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return (p - (a + ab * v + ac * w)).norm();
}

}  // namespace

InterfaceMesh extract_interface(const ScalarField& field, bool with_curvature) {
  InterfaceMesh mesh;
  mesh.dim = field.grid().dim();
  mesh.t = field.time();
  VertexPool pool(field, mesh);
  if (mesh.dim == 2) {
    march_squares(field, pool, mesh);
  } else {
    march_tetrahedra(field, pool, mesh);
  }
  if (with_curvature) {
    mesh.curvature.reserve(mesh.points.size());
    for (const Vec3& x : mesh.points) {
      double k;
      try {
        k = curvature(field, x);
      } catch (const DegenerateGradient&) {
        k = std::numeric_limits<double>::quiet_NaN();
      }
      mesh.curvature.push_back(k);
    }
  }
  return mesh;
}

double distance_to_element(const InterfaceMesh& mesh, std::size_t element, const Vec3& x) {
  const auto& e = mesh.elements[element];
  if (e[2] < 0) return point_segment_distance(x, mesh.points[e[0]], mesh.points[e[1]]);
  return point_triangle_distance(x, mesh.points[e[0]], mesh.points[e[1]], mesh.points[e[2]]);
}

double distance_to_mesh(const InterfaceMesh& mesh, const Vec3& x) {
  double d = std::numeric_limits<double>::infinity();
  if (mesh.elements.empty()) {
    for (const Vec3& p : mesh.points) d = std::min(d, (x - p).norm());
    return d;
  }
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    d = std::min(d, distance_to_element(mesh, e, x));
  }
  return d;
}

double signed_distance_oracle(const InterfaceMesh& mesh, const ScalarField& sign_reference,
                              const Vec3& x) {
  if (mesh.empty()) throw EmptyTube("signed distance needs a nonempty interface mesh");
  const double s = interpolate(sign_reference, x);
  const double d = distance_to_mesh(mesh, x);
  if (s > 0.0) return d;
  if (s < 0.0) return -d;
  return 0.0;
}

double hausdorff_distance(const InterfaceMesh& mesh, std::span<const Vec3> reference) {
  if (mesh.empty() || reference.empty()) return std::numeric_limits<double>::infinity();
  double h = 0.0;
  for (const Vec3& r : reference) h = std::max(h, distance_to_mesh(mesh, r));
  for (const Vec3& p : mesh.points) {
    double d = std::numeric_limits<double>::infinity();
    for (const Vec3& r : reference) d = std::min(d, (p - r).norm());
    h = std::max(h, d);
  }
  return h;
}

}  // namespace vem::geometry
