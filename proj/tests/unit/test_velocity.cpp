#include "vem/levelset.hpp"
#include "vem/velocity.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace vem;
using namespace vem::velocity;
using geometry::Box;
using geometry::Grid;

namespace {

std::vector<FieldPtr> catalog() {
  return {std::make_shared<RigidRotation>(1.3, make_vec(0.2, -0.1)),
          std::make_shared<Translation>(make_vec(0.5, 0.25)), std::make_shared<Shear>(2.0),
          std::make_shared<SingleVortex>(2.0),
          std::make_shared<ExpressionField>(std::array<Expression, 3>{
              Expression("sin(x) * y + t"), Expression("cos(y + 0.5*t) - x^2"), Expression("0")})};
}

Vec3 random_point(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return make_vec(u(rng), u(rng));
}

}  // namespace

TEST(VelocityField, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> tdist(-1.0, 2.0);
  for (const auto& v : catalog()) {
    for (int s = 0; s < 200; ++s) {
      const Vec3 x = random_point(rng, 0.0, 1.0);
      const double t = tdist(rng);
      Mat3 fd = Mat3::Zero();
      for (int a = 0; a < 2; ++a) {
        Vec3 p = x, m = x;
        p[a] += 1e-6;
        m[a] -= 1e-6;
        fd.col(a) = (v->eval(t, p) - v->eval(t, m)) / 2e-6;
      }
      EXPECT_LT((fd - v->grad(t, x)).cwiseAbs().maxCoeff(), 1e-5) << v->name();
    }
  }
}

TEST(VelocityField, LipschitzConstantBoundsSampledPairs) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> tdist(0.0, 1.0);
  for (const auto& v : catalog()) {
    if (v->name() == "user_expression") continue;
    for (int s = 0; s < 2000; ++s) {
      const Vec3 x = random_point(rng, 0.0, 1.0), y = random_point(rng, 0.0, 1.0);
      const double t = tdist(rng);
      EXPECT_LE((v->eval(t, x) - v->eval(t, y)).norm(), v->lipschitz() * (x - y).norm() + 1e-12)
          << v->name();
    }
  }
}

TEST(VelocityField, NegativeTimeContinuation) {
  const SingleVortex v(2.0);
  const Vec3 x = make_vec(0.3, 0.6);
  for (double t : {0.1, 0.7, 1.5}) {
    EXPECT_LT((v.eval(-t, x) - (2.0 * v.eval(0.0, x) - v.eval(t, x))).norm(), 1e-15);
  }
  EXPECT_LT((v.eval(-1e-9, x) - v.eval(0.0, x)).norm(), 1e-8);
  const RigidRotation r(1.0);
  EXPECT_EQ(r.eval(-0.4, x), r.eval(0.4, x));
}

TEST(VelocityField, SingleVortexVanishesOnTheUnitSquareBoundary) {
  const SingleVortex v(2.0);
  EXPECT_TRUE(v.subtangential_certified());
  for (int i = 0; i <= 10; ++i) {
    const double s = 0.1 * i;
    for (const Vec3& x : {make_vec(s, 0), make_vec(s, 1), make_vec(0, s), make_vec(1, s)}) {
      EXPECT_LT(v.eval(0.3, x).norm(), 1e-15);
    }
  }
}

TEST(LipschitzEstimate, CatalogValues) {
  const Box box{make_vec(-1, -1), make_vec(1, 1)};
  EXPECT_NEAR(lipschitz_estimate(RigidRotation(1.0), 2, box), 1.05, 1e-12);
  EXPECT_EQ(lipschitz_estimate(Translation(make_vec(1, 2)), 2, box), 0.0);
  EXPECT_NEAR(lipschitz_estimate(Shear(2.0), 2, box), 2.1, 1e-12);
  EXPECT_THROW(lipschitz_estimate(Shear(2.0), 2, box, 999), ValidationError);
}

TEST(LipschitzEstimate, SingleVortexBoundsTheSampledJacobian) {
  const SingleVortex v(2.0);
  std::mt19937_64 rng(4);
  for (int s = 0; s < 1000; ++s) {
    const Vec3 x = random_point(rng, 0.0, 1.0);
    const Eigen::Matrix2d j = v.grad(0.0, x).topLeftCorner(2, 2);
    EXPECT_LE(Eigen::JacobiSVD<Eigen::Matrix2d>(j).singularValues()(0), v.lipschitz());
  }
}

TEST(LipschitzExtension, AgreesWithFieldOnDomainSamples) {
  const Grid grid = Grid::from_box(2, make_vec(0, 0), make_vec(1, 1), 0.05);
  auto v = std::make_shared<SingleVortex>(2.0);
  const LipschitzExtension ext(v, v->lipschitz(), grid);
  const auto frozen = ext.at_time(0.25);
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    EXPECT_EQ(frozen(grid.node(n)), v->eval(0.25, grid.node(n)));
  }
}

TEST(LipschitzExtension, ConstantFieldExtendsToConstant) {
  const Grid grid = Grid::from_box(2, make_vec(0, 0), make_vec(1, 1), 0.1);
  const Translation c(make_vec(0.3, -0.7));
  const Vec3 value = make_vec(0.3, -0.7);
  for (double lambda : {0.0, 0.5, 3.0}) {
    for (const Vec3& x : {make_vec(0.4, 0.4), make_vec(0.0, 1.0), make_vec(0.7, 0.2)}) {
      EXPECT_LT((lipschitz_extend(c, lambda, grid, 0.0, x) - value).norm(), 1e-15);
    }
  }
  // Off the domain the infimum is c + lambda * dist(x, domain); it stays
  // constant only for lambda = 0.
  for (const Vec3& x : {make_vec(5, 5), make_vec(-2, 0.3)}) {
    EXPECT_LT((lipschitz_extend(c, 0.0, grid, 0.0, x) - value).norm(), 1e-15);
  }
  const Vec3 expected = value + Vec3::Constant(1.5 * std::sqrt(2.0));
  EXPECT_LT((lipschitz_extend(c, 1.5, grid, 0.0, make_vec(2, 2)) - expected).norm(), 1e-12);
}

TEST(LipschitzExtension, OneDimensionalAnalogMatchesBruteForce) {
  // Omega = [0, 1], v(z) = z, lambda = 1, evaluated at x = 2.
  std::vector<Vec3> samples;
  for (int i = 0; i <= 1000; ++i) samples.push_back(make_vec(i / 1000.0, 0));
  auto v = std::make_shared<ExpressionField>(
      std::array<Expression, 3>{Expression("x"), Expression("0"), Expression("0")}, 1.0);
  const LipschitzExtension ext(v, 1.0, samples);
  double brute = 1e300;
  for (int i = 0; i <= 100000; ++i) {
    const double z = i / 100000.0;
    brute = std::min(brute, z + std::abs(2.0 - z));
  }
  EXPECT_NEAR(ext(0.0, make_vec(2, 0))[0], brute, 1e-12);
  EXPECT_NEAR(brute, 2.0, 1e-12);
}

TEST(LipschitzExtension, ComponentsAreLambdaLipschitzOutsideTheDomain) {
  const Grid grid = Grid::from_box(2, make_vec(0, 0), make_vec(1, 1), 0.05);
  auto v = std::make_shared<SingleVortex>(2.0);
  const LipschitzExtension ext(v, v->lipschitz(), grid);
  const auto frozen = ext.at_time(0.5);
  std::mt19937_64 rng(8);
  for (int s = 0; s < 2000; ++s) {
    const Vec3 x = random_point(rng, -0.5, 1.5), y = random_point(rng, -0.5, 1.5);
    const Vec3 d = (frozen(x) - frozen(y)).cwiseAbs();
    EXPECT_LE(d.maxCoeff(), ext.lambda() * (x - y).norm() + 1e-9);
  }
}

TEST(LipschitzExtension, TimeIncrementBoundedBySupOverDomain) {
  const Grid grid = Grid::from_box(2, make_vec(0, 0), make_vec(1, 1), 0.05);
  auto v = std::make_shared<SingleVortex>(2.0);
  const LipschitzExtension ext(v, v->lipschitz(), grid);
  std::mt19937_64 rng(21);
  for (double delta : {0.01, 0.1, 0.4}) {
    const auto a = ext.at_time(0.3), b = ext.at_time(0.3 + delta);
    double sup = 0.0;
    for (const Vec3& z : ext.samples()) {
      sup = std::max(sup, (v->eval(0.3 + delta, z) - v->eval(0.3, z)).cwiseAbs().maxCoeff());
    }
    for (int s = 0; s < 200; ++s) {
      const Vec3 x = random_point(rng, -0.5, 1.5);
      EXPECT_LE((b(x) - a(x)).cwiseAbs().maxCoeff(), sup + 1e-12);
    }
  }
}

TEST(ExtendedVelocity, ProjectsBeforeEvaluating) {
  const Grid grid = Grid::from_box(2, make_vec(-3, -3), make_vec(3, 3), 0.05);
  const auto sdf = geometry::SphereSdf(2, Vec3::Zero(), 1.0).sample(grid);
  const RigidRotation rot(1.0);
  EXPECT_LT((extended_velocity(sdf, rot, 0.0, make_vec(2, 0)) - make_vec(0, 1)).norm(), 1e-9);
  const Vec3 on = make_vec(std::cos(0.4), std::sin(0.4));
  EXPECT_LT((extended_velocity(sdf, rot, 0.0, on) - rot.eval(0.0, on)).norm(), 1e-2);
  const auto doubled = geometry::ScaledLevelSet(
      std::make_shared<geometry::SphereSdf>(2, Vec3::Zero(), 1.0), 2.0).sample(grid);
  EXPECT_THROW(extended_velocity(doubled, rot, 0.0, make_vec(1.3, 0.1)), OutOfTube);
}

TEST(ExtendedVelocity, ConstantAlongNormals) {
  auto run = [](double h) {
    const Grid grid = Grid::from_box(2, make_vec(-2, -2), make_vec(2, 2), h);
    const geometry::EllipseSdf ellipse(Vec3::Zero(), 1.2, 0.8);
    const auto sdf = ellipse.sample(grid);
    const Shear v(1.0);
    double worst = 0.0;
    for (int i = 0; i < 64; ++i) {
      const double th = 2 * M_PI * i / 64;
      const Vec3 x = make_vec(1.2 * std::cos(th), 0.8 * std::sin(th));
      const Vec3 nu = -ellipse.gradient(x);
      const Vec3 base = extended_velocity(sdf, v, 0.0, x);
      for (double a : {-0.15, -0.05, 0.05, 0.15}) {
        worst = std::max(worst, (extended_velocity(sdf, v, 0.0, x + a * nu) - base).norm());
      }
    }
    return worst;
  };
  const double coarse = run(0.04), fine = run(0.02);
  EXPECT_LE(coarse, 2 * 0.04);
  EXPECT_LE(fine, 2 * 0.02);
  EXPECT_LT(fine, coarse);
}

TEST(MakeField, BuildsCatalogKinds) {
  const Box box{make_vec(-1, -1), make_vec(1, 1)};
  AnalyticFieldSpec spec;
  spec.kind = parse_kind("shear");
  spec.sigma = 3.0;
  auto f = make_field(spec, 2, box);
  EXPECT_EQ(f->name(), "shear");
  EXPECT_EQ(f->lipschitz(), 3.0);
  spec.kind = AnalyticFieldSpec::Kind::user_expression;
  spec.expressions = {"-y", "x", "0"};
  f = make_field(spec, 2, box);
  EXPECT_NEAR(f->lipschitz(), 1.05, 1e-6);
  EXPECT_THROW(parse_kind("whirlpool"), ValidationError);
}

TEST(BoundaryCutoff, IdentityInsideZeroOnFaces) {
  const Box box{make_vec(-1.6, -1.6), make_vec(1.6, 1.6)};
  const auto base = std::make_shared<RigidRotation>(1.0);
  const BoundaryCutoff v(base, 2, box, 0.3);
  EXPECT_TRUE(v.subtangential_certified());
  EXPECT_EQ(v.name(), "rigid_rotation");
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const Vec3 x = random_point(rng, -1.3, 1.3);
    EXPECT_EQ(v.eval(0.4, x), base->eval(0.4, x));
    EXPECT_EQ(v.cutoff(x), 1.0);
    const Vec3 on_face = make_vec(1.6, x[1]);
    EXPECT_EQ(v.eval(0.4, on_face).norm(), 0.0);
  }
}

TEST(BoundaryCutoff, JacobianMatchesFiniteDifferences) {
  const Box box{make_vec(-2.5, -2.5), make_vec(2.5, 2.5)};
  const BoundaryCutoff v(std::make_shared<Shear>(1.0), 2, box, 0.5);
  std::mt19937_64 rng(22);
  for (int i = 0; i < 200; ++i) {
    const Vec3 x = random_point(rng, -2.5, 2.5);
    const Mat3 j = v.grad(0.0, x);
    for (int a = 0; a < 2; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = 1e-6;
      const Vec3 fd = (v.eval(0.0, x + e) - v.eval(0.0, x - e)) / 2e-6;
      for (int r = 0; r < 2; ++r) EXPECT_NEAR(j(r, a), fd[r], 1e-6);
    }
  }
}

TEST(BoundaryCutoff, LipschitzBoundHoldsOnPairs) {
  const Box box{make_vec(-1.6, -1.6), make_vec(1.6, 1.6)};
  const BoundaryCutoff v(std::make_shared<RigidRotation>(1.0), 2, box, 0.3);
  EXPECT_GT(v.lipschitz(), 1.0);
  std::mt19937_64 rng(23);
  for (int i = 0; i < 5000; ++i) {
    const Vec3 x = random_point(rng, -1.6, 1.6);
    const Vec3 y = random_point(rng, -1.6, 1.6);
    EXPECT_LE((v.eval(0.0, x) - v.eval(0.0, y)).norm(), v.lipschitz() * (x - y).norm() + 1e-12);
  }
  EXPECT_THROW(BoundaryCutoff(std::make_shared<RigidRotation>(1.0), 2, box, 1.7),
               ValidationError);
}
