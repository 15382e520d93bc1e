#include "vem/geometry.hpp"
#include "vem/levelset.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace vem;
using namespace vem::geometry;

namespace {

Grid square_grid(double half, double h) {
  return Grid::from_box(2, make_vec(-half, -half), make_vec(half, half), h);
}

double radial(const Vec3& x) { return std::hypot(x[0], x[1]); }

}  // namespace

TEST(Grid, FromBoxPlacesNodesOnTheBox) {
  const Grid g = square_grid(1.6, 0.05);
  EXPECT_EQ(g.extent(0), 65);
  EXPECT_EQ(g.extent(2), 1);
  EXPECT_NEAR(g.node(g.extent(0) - 1, 0)[0], 1.6, 1e-12);
  const auto c = g.ijk(g.index(3, 7));
  EXPECT_EQ(c[0], 3);
  EXPECT_EQ(c[1], 7);
  EXPECT_TRUE(g.is_boundary(g.index(0, 5)));
  EXPECT_FALSE(g.is_boundary(g.index(1, 5)));
}

TEST(Grid, RejectsTooFewNodes) {
  EXPECT_THROW(Grid(2, Vec3::Zero(), Vec3::Constant(0.1), {3, 10, 1}), ValidationError);
  EXPECT_THROW(Grid(2, Vec3::Zero(), Vec3(0.0, 0.1, 0.1), {10, 10, 1}), ValidationError);
}

TEST(ScalarField, RejectsWrongValueCount) {
  const Grid g = square_grid(1.0, 0.25);
  EXPECT_THROW(ScalarField(g, std::vector<double>(3, 0.0)), GridMismatch);
}

TEST(Gradient, ConstantFieldHasZeroGradient) {
  const ScalarField f(square_grid(1.0, 0.1), 3.5);
  for (const Vec3& g : gradient(f)) EXPECT_EQ(g.norm(), 0.0);
}

TEST(Gradient, AffineFieldsAreExactEverywhere) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const Grid g(3, make_vec(-1, -0.5, 0.2), make_vec(0.1, 0.07, 0.13), {9, 11, 8});
  for (int trial = 0; trial < 5; ++trial) {
    const Vec3 a(u(rng), u(rng), u(rng));
    const double b = u(rng);
    const auto f = ScalarField::sample(g, [&](const Vec3& x) { return a.dot(x) + b; });
    for (const auto scheme : {GradientScheme::central(), GradientScheme::upwind(make_vec(1, -1, 0))}) {
      for (const Vec3& gr : gradient(f, scheme)) EXPECT_LT((gr - a).norm(), 1e-12);
    }
  }
}

TEST(Gradient, CentralDifferenceOfRadialField) {
  const Grid g = square_grid(1.6, 0.05);
  const auto f = ScalarField::sample(g, radial);
  const std::size_t n = g.index(52, 32);
  ASSERT_NEAR(g.node(n)[0], 1.0, 1e-12);
  ASSERT_NEAR(g.node(n)[1], 0.0, 1e-12);
  const Vec3 gr = gradient(f)[n];
  EXPECT_LT((gr - make_vec(1, 0)).norm(), 1e-3);
}

TEST(Gradient, CentralIsSecondOrderOnSmoothFields) {
  auto error = [](double h) {
    const Grid g = square_grid(1.0, h);
    const auto f = ScalarField::sample(g, [](const Vec3& x) { return std::sin(x[0]) * std::cos(2 * x[1]); });
    double e = 0.0;
    const auto gr = gradient(f);
    for (std::size_t n = 0; n < gr.size(); ++n) {
      if (g.is_boundary(n)) continue;
      const Vec3 x = g.node(n);
      const Vec3 exact(std::cos(x[0]) * std::cos(2 * x[1]), -2 * std::sin(x[0]) * std::sin(2 * x[1]), 0);
      e = std::max(e, (gr[n] - exact).norm());
    }
    return e;
  };
  const double ratio = error(0.1) / error(0.05);
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
}

TEST(Interpolate, ReproducesMultilinearFunctions) {
  const Grid g(3, Vec3::Zero(), Vec3::Constant(0.25), {5, 5, 5});
  const auto f = ScalarField::sample(g, [](const Vec3& x) { return 1 + x[0] - 2 * x[1] + 3 * x[0] * x[2]; });
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 x(u(rng), u(rng), u(rng));
    EXPECT_NEAR(interpolate(f, x), 1 + x[0] - 2 * x[1] + 3 * x[0] * x[2], 1e-12);
  }
}

TEST(ExtractInterface, CircleVerticesNearTheCircle) {
  const double h = 0.02;
  const Grid g = square_grid(1.5, h);
  const auto f = ScalarField::sample(g, [](const Vec3& x) { return radial(x) - 1.0; });
  const auto mesh = extract_interface(f);
  ASSERT_FALSE(mesh.empty());
  EXPECT_FALSE(mesh.degenerate);
  EXPECT_EQ(mesh.points.size(), mesh.elements.size());  // closed curve
  for (std::size_t i = 0; i < mesh.points.size(); ++i) {
    EXPECT_LT(std::abs(radial(mesh.points[i]) - 1.0), 1.5 * h);
    EXPECT_NEAR(mesh.normals[i].norm(), 1.0, 1e-12);
    // nu points away from the positive phase, here towards the centre.
    EXPECT_LT(mesh.normals[i].dot(mesh.points[i]), 0.0);
    EXPECT_TRUE(g.box().contains(mesh.points[i], 2));
  }
}

TEST(ExtractInterface, SingleSignFieldGivesEmptyMesh) {
  const ScalarField f(square_grid(1.0, 0.1), 1.0);
  EXPECT_TRUE(extract_interface(f).empty());
}

TEST(ExtractInterface, LinearFieldCrossingIsExact) {
  const Grid g(2, make_vec(-0.33, -1), make_vec(0.1, 0.1), {8, 21, 1});
  const auto f = ScalarField::sample(g, [](const Vec3& x) { return x[0]; });
  const auto mesh = extract_interface(f);
  ASSERT_FALSE(mesh.empty());
  for (const Vec3& p : mesh.points) EXPECT_NEAR(p[0], 0.0, 1e-15);
}

TEST(ExtractInterface, ZeroOnGridLineGivesExactCrossing) {
  const Grid g(2, make_vec(-0.5, -0.5), make_vec(0.25, 0.25), {5, 5, 1});
  const auto f = ScalarField::sample(g, [](const Vec3& x) { return x[0]; });
  const auto mesh = extract_interface(f);
  EXPECT_EQ(mesh.points.size(), 5u);
  for (const Vec3& p : mesh.points) EXPECT_EQ(p[0], 0.0);
}

TEST(ExtractInterface, SphereTrianglesNearTheSphere) {
  const double h = 0.1;
  const Grid g = Grid::from_box(3, Vec3::Constant(-1.5), Vec3::Constant(1.5), h);
  const auto f = ScalarField::sample(g, [](const Vec3& x) { return 1.0 - x.norm(); });
  const auto mesh = extract_interface(f, false);
  ASSERT_FALSE(mesh.elements.empty());
  for (std::size_t i = 0; i < mesh.points.size(); ++i) {
    EXPECT_LT(std::abs(mesh.points[i].norm() - 1.0), 1.5 * h);
    EXPECT_NEAR(mesh.normals[i].norm(), 1.0, 1e-12);
  }
  for (const auto& e : mesh.elements) EXPECT_GE(e[2], 0);
  EXPECT_NEAR(distance_to_mesh(mesh, make_vec(2, 0, 0)), 1.0, 1.5 * h);
}

TEST(MetricProjection, RadialProjectionOntoUnitCircle) {
  const Grid g = square_grid(2.5, 0.05);
  const auto f = ScalarField::sample(g, [](const Vec3& x) { return radial(x) - 1.0; });
  const Vec3 p = metric_projection(f, make_vec(2, 0));
  EXPECT_LT((p - make_vec(1, 0)).norm(), 1e-9);
}

TEST(MetricProjection, InterfacePointIsFixed) {
  const Grid g = square_grid(2.0, 0.05);
  const auto f = ScalarField::sample(g, [](const Vec3& x) { return radial(x) - 1.0; });
  const Vec3 x = make_vec(std::cos(0.3), std::sin(0.3));
  EXPECT_LT((metric_projection(f, x) - x).norm(), 0.05 * 0.05);
}

TEST(MetricProjection, RejectsNonDistanceFields) {
  const Grid g = square_grid(2.0, 0.05);
  const auto f = ScalarField::sample(g, [](const Vec3& x) { return 2 * (radial(x) - 1.0); });
  EXPECT_THROW(metric_projection(f, make_vec(1.2, 0.1)), OutOfTube);
}

TEST(MetricProjection, MatchesBruteForceNearestPointOnEllipse) {
  const double h = 0.02;
  const Grid g = square_grid(2.0, h);
  const EllipseSdf ellipse(Vec3::Zero(), 1.2, 0.8);
  const auto f = ellipse.sample(g);
  std::vector<Vec3> dense;
  for (int i = 0; i < 20000; ++i) {
    const double th = 2 * std::numbers::pi * i / 20000;
    dense.push_back(make_vec(1.2 * std::cos(th), 0.8 * std::sin(th)));
  }
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  int tested = 0;
  while (tested < 200) {
    const Vec3 x = make_vec(u(rng), u(rng));
    if (std::abs(ellipse.value(x)) >= 0.2) continue;
    ++tested;
    const Vec3 p = metric_projection(f, x);
    double best = 1e9;
    Vec3 nearest;
    for (const Vec3& q : dense) {
      if ((q - x).norm() < best) {
        best = (q - x).norm();
        nearest = q;
      }
    }
    EXPECT_LT((p - nearest).norm(), 2 * h) << x.transpose();
  }
}

TEST(MetricProjection, IdempotentOnDistanceFields) {
  const Grid g = square_grid(2.0, 0.02);
  const EllipseSdf ellipse(Vec3::Zero(), 1.2, 0.8);
  const auto f = ellipse.sample(g);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  int tested = 0;
  while (tested < 200) {
    const Vec3 x = make_vec(u(rng), u(rng));
    if (std::abs(ellipse.value(x)) >= 0.2 || std::abs(ellipse.value(x)) < 0.02) continue;
    ++tested;
    const Vec3 p1 = metric_projection(f, x);
    const Vec3 p2 = metric_projection(f, p1);
    const double residual = std::abs(interpolate(f, p1));
    EXPECT_LE((p2 - p1).norm(), 10 * residual + 1e-14);
  }
}

TEST(MetricProjection, DisplacementIsNormalAndTightensWithRefinement) {
  auto worst_angle = [](double h) {
    const Grid g = square_grid(2.0, h);
    const EllipseSdf ellipse(Vec3::Zero(), 1.2, 0.8);
    const auto f = ellipse.sample(g);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.4, 1.4);
    double worst = 0.0;
    int tested = 0;
    while (tested < 300) {
      const Vec3 x = make_vec(u(rng), u(rng));
      const double d = std::abs(ellipse.value(x));
      if (d >= 0.2 || d < 0.05) continue;
      ++tested;
      const Vec3 p = metric_projection(f, x);
      const Vec3 nu = -interpolate_gradient(f, p).normalized();
      const double c = std::abs((x - p).normalized().dot(nu));
      worst = std::max(worst, std::acos(std::min(1.0, c)) * 180 / std::numbers::pi);
    }
    return worst;
  };
  const double coarse = worst_angle(0.04), fine = worst_angle(0.02);
  EXPECT_LE(coarse, 2.0);
  EXPECT_LT(fine, coarse);
}

TEST(SignedDistanceOracle, UnitCircleValues) {
  const double h = 0.02;
  const Grid g = square_grid(3.5, h);
  const SphereSdf inside_positive(2, Vec3::Zero(), 1.0);
  const auto f = inside_positive.sample(g);
  const auto mesh = extract_interface(f, false);
  EXPECT_NEAR(signed_distance_oracle(mesh, f, make_vec(0, 0)), 1.0, h);
  EXPECT_NEAR(signed_distance_oracle(mesh, f, make_vec(3, 0)), -2.0, h);
  EXPECT_NEAR(signed_distance_oracle(mesh, f, mesh.points[7]), 0.0, 1e-15);
  const auto flipped = SphereSdf(2, Vec3::Zero(), 1.0, false).sample(g);
  EXPECT_NEAR(signed_distance_oracle(mesh, flipped, make_vec(0, 0)), -1.0, h);
}

TEST(SignedDistanceOracle, RoundTripMatchesFieldInTube) {
  const double h = 0.04;
  const Grid g = square_grid(2.0, h);
  const EllipseSdf ellipse(Vec3::Zero(), 1.2, 0.8);
  const auto f = ellipse.sample(g);
  const auto mesh = extract_interface(f, false);
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (std::abs(f[n]) > 0.3) continue;
    EXPECT_NEAR(signed_distance_oracle(mesh, f, g.node(n)), f[n], 2 * h);
  }
}

TEST(Curvature, CircleAndFlatInterface) {
  const Grid g = square_grid(2.0, 0.01);
  const auto inside = ScalarField::sample(g, [](const Vec3& x) { return 1.0 - radial(x); });
  const auto outside = ScalarField::sample(g, [](const Vec3& x) { return radial(x) - 1.0; });
  const Vec3 on = make_vec(std::cos(1.0), std::sin(1.0));
  EXPECT_NEAR(curvature(inside, on), -1.0, 1e-3);
  EXPECT_NEAR(curvature(outside, on), 1.0, 1e-3);
  const auto flat = ScalarField::sample(g, [](const Vec3& x) { return x[0] + 0.3 * x[1]; });
  EXPECT_NEAR(curvature(flat, make_vec(0.1, 0.2)), 0.0, 1e-9);
}

TEST(Curvature, SphereIsTwiceMeanCurvature) {
  const Grid g = Grid::from_box(3, Vec3::Constant(-1.5), Vec3::Constant(1.5), 0.05);
  const auto f = ScalarField::sample(g, [](const Vec3& x) { return 1.0 - x.norm(); });
  const Vec3 on = make_vec(1, 1, 1).normalized();
  EXPECT_NEAR(curvature(f, on), -2.0, 1e-2);
}

TEST(Curvature, DegenerateGradientThrows) {
  const ScalarField f(square_grid(1.0, 0.1), 0.0);
  EXPECT_THROW(curvature(f, make_vec(0.1, 0.1)), DegenerateGradient);
}

TEST(PhaseMask, LabelsPartitionNodes) {
  const Grid g = square_grid(1.5, 0.1);
  const auto f = ScalarField::sample(g, [](const Vec3& x) { return 1.0 - radial(x); });
  const auto mask = classify_phases(f);
  const std::size_t total = mask.count(Phase::plus) + mask.count(Phase::minus) +
                            mask.count(Phase::interface_adjacent);
  EXPECT_EQ(total, g.node_count());
  EXPECT_EQ(mask.labels[g.index(15, 15)], Phase::plus);
  EXPECT_EQ(mask.labels[g.index(0, 0)], Phase::minus);
  EXPECT_GT(mask.count(Phase::interface_adjacent), 0u);
}

TEST(FieldText, RoundTrip) {
  const Grid g(3, make_vec(-1, 0.5, 2), make_vec(0.1, 0.2, 0.3), {4, 5, 6});
  const auto f = ScalarField::sample(g, [](const Vec3& x) { return std::sin(x[0] + 2 * x[1] - x[2]); }, 0.75);
  std::stringstream ss;
  write_field_text(ss, f);
  const auto back = read_field_text(ss);
  EXPECT_TRUE(back.grid().same_layout(g));
  EXPECT_EQ(back.time(), 0.75);
  for (std::size_t n = 0; n < g.node_count(); ++n) EXPECT_EQ(back[n], f[n]);
}

TEST(MeshCsv, HeaderAndRows) {
  const Grid g = square_grid(1.5, 0.1);
  const auto f = ScalarField::sample(g, [](const Vec3& x) { return 1.0 - radial(x); });
  InterfaceMesh mesh = extract_interface(f, false);
  std::stringstream ss;
  write_mesh_csv(ss, mesh);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "t,x,y,nx,ny,kappa");
  std::getline(ss, line);
  EXPECT_NE(line.find("nan"), std::string::npos);
}

TEST(LevelSets, AnalyticGradientsMatchFiniteDifferences) {
  const Box box{make_vec(-2, -2), make_vec(2, 2)};
  const auto circle = std::make_shared<SphereSdf>(2, make_vec(0.1, -0.2), 1.0);
  const std::vector<std::shared_ptr<const LevelSetFunction>> fns = {
      circle,
      std::make_shared<EllipseSdf>(make_vec(0.0, 0.1), 1.3, 0.7),
      std::make_shared<ScaledLevelSet>(circle, 2.0),
      std::make_shared<BoundaryTaperedLevelSet>(circle, 2, box, 0.5, 0.2, 0.4),
      std::make_shared<ExpressionLevelSet>(Expression("0.8 - sqrt(x^2 + 2*y^2)")),
  };
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.9, 1.9);
  for (const auto& fn : fns) {
    for (int i = 0; i < 200; ++i) {
      const Vec3 x = make_vec(u(rng), u(rng));
      if ((x - make_vec(0.1, -0.2)).norm() < 0.05 || x.norm() < 0.05) continue;
      Vec3 fd = Vec3::Zero();
      for (int a = 0; a < 2; ++a) {
        Vec3 p = x, m = x;
        p[a] += 1e-6;
        m[a] -= 1e-6;
        fd[a] = (fn->value(p) - fn->value(m)) / 2e-6;
      }
      EXPECT_LT((fd - fn->gradient(x)).norm(), 1e-4) << x.transpose();
    }
  }
}

TEST(LevelSets, TaperedProfileVanishesOnTheBoxAndSaturates) {
  const Box box{make_vec(-3, -3), make_vec(3, 3)};
  const auto circle = std::make_shared<SphereSdf>(2, Vec3::Zero(), 1.0);
  const BoundaryTaperedLevelSet f(circle, 2, box, 0.5, 0.2, 0.4);
  EXPECT_EQ(f.value(make_vec(3, 0.3)), 0.0);
  EXPECT_EQ(f.value(make_vec(-1.1, -3)), 0.0);
  EXPECT_EQ(f.value(make_vec(0.95, 0.0)), circle->value(make_vec(0.95, 0.0)));
  EXPECT_NEAR(f.value(make_vec(0, 0)), 0.5, 1e-15);
  EXPECT_NEAR(f.value(make_vec(1.8, 0)), -0.5, 1e-15);
  EXPECT_NEAR(f.value(make_vec(1.5, 0)), -0.45, 1e-15);
}

TEST(Expression, ParsesArithmeticAndFunctions) {
  EXPECT_DOUBLE_EQ(Expression("1 + 2*3 - 4/2")(0, 0, 0, 0), 5.0);
  EXPECT_DOUBLE_EQ(Expression("-2^2")(0, 0, 0, 0), -4.0);
  EXPECT_DOUBLE_EQ(Expression("2^3^2")(0, 0, 0, 0), 512.0);
  EXPECT_DOUBLE_EQ(Expression("x*y + z - t")(2, 3, 4, 5), 5.0);
  EXPECT_NEAR(Expression("sin(pi/2) + cos(0) + sqrt(4) + exp(0)")(0, 0, 0, 0), 5.0, 1e-15);
  EXPECT_DOUBLE_EQ(Expression("1e-1 * 10")(0, 0, 0, 0), 1.0);
}

TEST(Expression, ReportsColumnOfParseErrors) {
  try {
    Expression("x + * y");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_EQ(e.column(), 5);
  }
  EXPECT_THROW(Expression("foo(x)"), ParseError);
  EXPECT_THROW(Expression("(x + 1"), ParseError);
  EXPECT_THROW(Expression("sin x"), ParseError);
}
