#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "scatsig/oracles.hpp"
#include "scatsig/spectra.hpp"

using namespace scatsig;
using namespace scatsig::spectra;
using ffop::OperatorKind;

namespace {

ffop::Scene ball_scene(cd n) {
  ffop::Scene s;
  s.medium = forward::MediumSpec::single(1.0, n);
  return s;
}

// Weighted norm squared (g, g).
double wnorm2(const TangentField& g, const SphereQuadrature& q) { return ffop::inner_product(g, g, q).real(); }

}  // namespace

TEST_CASE("eig: diagonal, rotation and residual contract") {
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(3, 3);
  D(0, 0) = 1.0;
  D(1, 1) = cd{0.0, 2.0};
  D(2, 2) = -3.0;
  const auto e = eig(D);
  REQUIRE(e.values.size() == 3);
  CHECK(std::abs(e.values(0) - cd{-3.0, 0.0}) < 1e-14);
  CHECK(std::abs(e.values(1) - cd{0.0, 2.0}) < 1e-14);
  CHECK(std::abs(e.values(2) - cd{1.0, 0.0}) < 1e-14);

  Eigen::MatrixXcd R(2, 2);
  R << 0.0, 1.0, -1.0, 0.0;
  const auto r = eig(R);
  // Equal moduli: ties sort by real part, then imaginary part descending.
  CHECK(std::abs(r.values(0) - kI) < 1e-14);
  CHECK(std::abs(r.values(1) + kI) < 1e-14);

  rng::Stream s(5);
  Eigen::MatrixXcd A(40, 40);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) A(i, j) = cd{s.normal(), s.normal()};
  const auto ev = eig(A, true);
  REQUIRE(ev.residuals.size() == 40);
  for (double res : ev.residuals) CHECK(res <= 1e-8);
  for (int i = 1; i < 40; ++i) CHECK(std::abs(ev.values(i - 1)) >= std::abs(ev.values(i)));
  // Trace is preserved by the spectrum.
  CHECK(std::abs(ev.values.sum() - A.trace()) < 1e-9 * A.norm());

  // Upper triangular input: eigenvalues are the diagonal.
  Eigen::MatrixXcd T = A.triangularView<Eigen::Upper>();
  const auto et = eig(T);
  for (int i = 0; i < 40; ++i) {
    double best = 1e300;
    for (int j = 0; j < 40; ++j) best = std::min(best, std::abs(et.values(j) - T(i, i)));
    CHECK(best < 1e-8 * T.norm());
  }

  CHECK(eig(Eigen::MatrixXcd(0, 0)).values.size() == 0);
  Eigen::MatrixXcd bad = D;
  bad(0, 1) = cd{std::nan(""), 0.0};
  CHECK_THROWS_AS(eig(bad), NumericError);
}

TEST_CASE("circle residual: trivial points and kind rejection") {
  Eigen::VectorXcd v(3);
  v << 0.0, cd{-4.0 * kPi, 0.0}, cd{-2.0 * kPi, 2.0 * kPi};
  for (double r : circle_residual(v, OperatorKind::ELECTRIC, 1.0)) CHECK(r < 1e-14);
  const double k = 2.5;
  Eigen::VectorXcd m(2);
  m << 0.0, cd{0.0, 4.0 * kPi / k};
  for (double r : circle_residual(m, OperatorKind::MAGNETIC, k)) CHECK(r < 1e-14);
  Eigen::VectorXcd off(1);
  off << cd{1.0, 0.0};
  CHECK(std::abs(circle_residual(off, OperatorKind::ELECTRIC, 1.0)[0] - (2.0 * kPi + 1.0 - 2.0 * kPi)) < 1e-14);
  CHECK_THROWS_AS(circle_residual(v, OperatorKind::IMPEDANCE, 1.0), ConfigError);
  CHECK_THROWS_AS(circle_residual(v, OperatorKind::MODIFIED, 1.0), ConfigError);
  CHECK_THROWS_AS(circle_for(OperatorKind::MODIFIED, 1.0), ConfigError);
}

TEST_CASE("sphere spectra obey the circle laws") {
  const auto q = th::gauss(12);
  for (auto kind : {OperatorKind::ELECTRIC, OperatorKind::MAGNETIC}) {
    const double k = kind == OperatorKind::ELECTRIC ? 1.0 : 1.7;
    const auto F = ffop::assemble(kind, ball_scene(2.0), k, q);
    const auto e = eig(F);
    const auto res = circle_residual(e.values, kind, k);
    const double radius = circle_for(kind, k).radius;
    int counted = 0;
    for (int i = 0; i < e.values.size(); ++i) {
      if (std::abs(e.values(i)) < 1e-6 * e.norm) continue;
      ++counted;
      CHECK(res[static_cast<std::size_t>(i)] <= 1e-3 * radius);
    }
    CHECK(counted > 10);
  }
}

TEST_CASE("absorption pulls the electric spectrum inside the circle") {
  const auto q = th::gauss(12);
  const auto F = ffop::assemble(OperatorKind::ELECTRIC, ball_scene(cd{2.0, 2.0}), 1.0, q);
  const auto e = eig(F);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(e.values(i) + 2.0 * kPi) < 2.0 * kPi - 1e-3);
  for (int i = 0; i < e.values.size(); ++i) CHECK(std::abs(e.values(i) + 2.0 * kPi) < 2.0 * kPi + 1e-6 * e.norm);
}

TEST_CASE("energy identity: zero fields, lossless and absorbing media") {
  const auto q = th::gauss(10);
  rng::Stream s(21);
  for (cd n : {cd{2.0, 0.0}, cd{2.0, 2.0}, cd{1.5, 0.3}}) {
    const auto F = ffop::assemble(OperatorKind::ELECTRIC, ball_scene(n), 1.0, q);
    const double nrm = ffop::operator_norm(F);
    const TangentField zero = TangentField::Zero(q->dim());
    CHECK(std::abs(energy_identity_residual(F, zero, zero)) == 0.0);
    for (int trial = 0; trial < 3; ++trial) {
      TangentField g = th::random_field(s, q->dim());
      TangentField h = th::random_field(s, q->dim());
      g /= std::sqrt(wnorm2(g, *q));
      h /= std::sqrt(wnorm2(h, *q));
      CHECK(std::abs(energy_identity_residual(F, g, h)) <= 1e-6 * nrm * nrm);
    }
  }
  // The identity is sesquilinear: a nonzero LHS must be present for absorbing media.
  const auto Fa = ffop::assemble(OperatorKind::ELECTRIC, ball_scene(cd{2.0, 2.0}), 1.0, q);
  TangentField g = th::random_field(s, q->dim());
  const TangentField Fg = Fa.A * g;
  const cd rhs = -2.0 * kPi * ffop::inner_product(Fg, g, *q) - 2.0 * kPi * ffop::inner_product(g, Fg, *q) -
                 ffop::inner_product(Fg, Fg, *q);
  CHECK(rhs.real() > 1e-3 * wnorm2(g, *q));
}

TEST_CASE("energy identity residual matches the circle residual on eigenpairs") {
  const auto q = th::gauss(10);
  const auto F = ffop::assemble(OperatorKind::ELECTRIC, ball_scene(2.0), 1.0, q);
  const auto e = eig(F.A, true);
  // With F g = lambda g the right side equals -(|lambda + 2 pi|^2 - 4 pi^2)(g, g),
  // so the circle residual is |RHS| / ((g, g)(|lambda + 2 pi| + 2 pi)).
  for (int i = 0; i < 8; ++i) {
    const TangentField g = e.vectors.col(i);
    const cd lam = e.values(i);
    const double rho = std::abs(lam + 2.0 * kPi);
    const double from_identity = std::abs(energy_identity_residual(F, g, g)) / (wnorm2(g, *q) * (rho + 2.0 * kPi));
    const double circle = circle_residual(e.values.segment(i, 1), OperatorKind::ELECTRIC, 1.0)[0];
    CHECK(std::abs(from_identity - circle) < 1e-9);
  }
}

TEST_CASE("Lidski positivity") {
  const auto q = th::gauss(10);
  ffop::FarFieldMatrix Z;
  Z.kind = OperatorKind::ELECTRIC;
  Z.quad = q;
  Z.A = Eigen::MatrixXcd::Zero(q->dim(), q->dim());
  CHECK(lidski_positivity(Z, 10, 1) == 0.0);

  const auto Fr = ffop::assemble(OperatorKind::ELECTRIC, ball_scene(2.0), 1.0, q);
  CHECK(lidski_positivity(Fr, 50, 2) >= -1e-6 * ffop::operator_norm(Fr));
  const auto Fa = ffop::assemble(OperatorKind::ELECTRIC, ball_scene(cd{2.0, 2.0}), 1.0, q);
  CHECK(lidski_positivity(Fa, 50, 2) > 0.0);
  // Deterministic in the seed.
  CHECK(lidski_positivity(Fa, 20, 9) == lidski_positivity(Fa, 20, 9));
}

TEST_CASE("normality residual") {
  const auto q = th::gauss(10);
  for (auto kind : {OperatorKind::ELECTRIC, OperatorKind::MAGNETIC})
    CHECK(normality_residual(ffop::assemble(kind, ball_scene(2.0), 1.0, q)) <= 1e-10);
  // A nilpotent shift is far from normal.
  ffop::FarFieldMatrix J;
  J.quad = q;
  J.A = Eigen::MatrixXcd::Zero(q->dim(), q->dim());
  for (int i = 0; i + 1 < q->dim(); ++i) J.A(i, i + 1) = 1.0;
  CHECK(normality_residual(J) > 0.1);
}

TEST_CASE("matched displacement is an optimal bottleneck matching") {
  Eigen::VectorXcd ref(3), pert(3);
  ref << 3.0, 2.0, 1.0;
  pert << 3.02, 2.01, 0.99;
  CHECK(std::abs(matched_displacement(ref, pert, 3, 0.0) - 0.02) < 1e-14);
  CHECK(matched_displacement(ref, ref, 3, 0.0) == 0.0);

  // The perturbation swaps the modulus order; index pairing would report ~4.
  Eigen::VectorXcd a(2), b(2);
  a << 2.0, -1.99;
  b << -2.0, 1.99;
  CHECK(std::abs(matched_displacement(a, b, 2, 0.0) - 0.01) < 1e-12);

  // References below the floor are exempt.
  Eigen::VectorXcd c(2), d(2);
  c << 2.0, 1e-9;
  d << 5.0, 2.0;
  CHECK(matched_displacement(c, d, 2, 1e-6) == 0.0);
}

TEST_CASE("phase track: unit phases and the dip at the first transmission eigenvalue") {
  const double k1 = oracles::first_tev(1.0, 4.0);
  const auto q = th::gauss(10);
  const std::vector<double> grid{3.12, 3.14, 3.16};
  const auto pt = phase_track(forward::MediumSpec::single(1.0, 4.0), grid, q);
  REQUIRE(pt.points.size() == 3);
  for (const auto& p : pt.points) {
    CHECK(!p.phases.empty());
    for (cd z : p.phases) CHECK(std::abs(std::abs(z) - 1.0) <= 1e-12);
  }
  CHECK(std::abs(grid[1] - k1) < 0.01);
  CHECK(pt.points[1].min_plus <= 0.1);
  CHECK(pt.points[1].min_plus < pt.points[0].min_plus);
  CHECK(pt.points[1].min_plus < pt.points[2].min_plus);
}

TEST_CASE("phase track: index below one dips towards +1") {
  const double k1 = oracles::first_tev(1.0, 0.25);
  CHECK(std::abs(k1 - 2.0 * kPi) < 1e-8);
  const auto q = th::gauss(14);
  const std::vector<double> grid{6.28, 6.33};
  const auto pt = phase_track(forward::MediumSpec::single(1.0, 0.25), grid, q);
  CHECK(pt.points[0].min_minus <= 0.1);
  CHECK(pt.points[1].min_minus > 0.1);
  CHECK_THROWS_AS(phase_track(forward::MediumSpec::single(1.0, 4.0), {}, q), ConfigError);
}
