#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <random>

#include "oracles.hpp"
#include "prunekit/metrics.hpp"

using namespace prunekit;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937& gen, int n, int d, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = dist(gen);
  return m;
}

Eigen::MatrixXd random_orthogonal(std::mt19937& gen, int d) {
  Eigen::MatrixXd m = random_matrix(gen, d, d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ();
  return q;
}

RepresentationMatrix rep(const Eigen::MatrixXd& m) { return make_representation(m); }

}  // namespace

TEST_CASE("center_columns basics") {
  Eigen::MatrixXd consts(3, 2);
  consts << 5.0, 1.0, 5.0, 2.0, 5.0, 3.0;
  auto c = center_columns(rep(consts));
  CHECK(c.data.col(0).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));

  // already-centered input is a fixed point
  auto c2 = center_columns(c);
  CHECK((c2.data - c.data).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  auto cm = center_columns(rep(m));
  Eigen::MatrixXd expected(2, 2);
  expected << -1, -1, 1, 1;
  CHECK((cm.data - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("center_columns rejects non-finite entries") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, std::nan(""), 4;
  CHECK_THROWS_WITH_AS(center_columns(rep(m)), doctest::Contains("InvalidRepresentation"),
                       PruneError);
}

TEST_CASE("gaussian_summary hand-computed cases") {
  const double ridge = 1e-6;

  Eigen::MatrixXd same(2, 2);
  same << 1.5, -2.0, 1.5, -2.0;
  auto g = gaussian_summary(rep(same), ridge);
  CHECK((g.covariance - ridge * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::MatrixXd two(2, 2);
  two << 0, 0, 2, 0;
  auto g2 = gaussian_summary(rep(two), ridge);
  CHECK(g2.mean(0) == doctest::Approx(1.0));
  CHECK(g2.mean(1) == doctest::Approx(0.0));
  CHECK(g2.covariance(0, 0) == doctest::Approx(2.0 + ridge));  // unbiased: (1+1)/(2-1)
  CHECK(g2.covariance(1, 1) == doctest::Approx(ridge));
  CHECK(g2.covariance(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("gaussian_summary is invariant to row permutation") {
  std::mt19937 gen(11);
  Eigen::MatrixXd m = random_matrix(gen, 5, 3);
  Eigen::MatrixXd perm(5, 3);
  std::array<int, 5> order{3, 0, 4, 1, 2};
  for (int i = 0; i < 5; ++i) perm.row(i) = m.row(order[i]);
  auto g1 = gaussian_summary(rep(m));
  auto g2 = gaussian_summary(rep(perm));
  CHECK((g1.mean - g2.mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((g1.covariance - g2.covariance).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gaussian_summary needs two samples") {
  Eigen::MatrixXd m(1, 2);
  m << 1, 2;
  CHECK_THROWS_WITH_AS(gaussian_summary(rep(m)), doctest::Contains("InsufficientSamples"),
                       PruneError);
}

TEST_CASE("linear_cka self similarity and invariances") {
  std::mt19937 gen(42);
  Eigen::MatrixXd m = random_matrix(gen, 6, 4);
  auto r = rep(m);
  CHECK(linear_cka(r, r) == doctest::Approx(1.0).epsilon(1e-9));

  Eigen::MatrixXd q = random_orthogonal(gen, 4);
  CHECK(linear_cka(r, rep(m * q)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(linear_cka(r, rep(3.7 * m)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("linear_cka matches the HSIC gram oracle") {
  std::mt19937 gen(7);
  Eigen::MatrixXd x = random_matrix(gen, 4, 2);
  Eigen::MatrixXd y = random_matrix(gen, 4, 2);
  double got = linear_cka(rep(x), rep(y));
  double want = oracle::cka_gram_oracle(x, y);
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("linear_cka rejects zero-variance input") {
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(3, 2, 4.0);
  std::mt19937 gen(3);
  Eigen::MatrixXd other = random_matrix(gen, 3, 2);
  CHECK_THROWS_WITH_AS(linear_cka(rep(flat), rep(other)),
                       doctest::Contains("DegenerateRepresentation"), PruneError);
}

TEST_CASE("procrustes self distance and rotation invariance") {
  std::mt19937 gen(5);
  Eigen::MatrixXd m = random_matrix(gen, 6, 3);
  auto r = rep(m);
  CHECK(procrustes_distance(r, r) == doctest::Approx(0.0).epsilon(1e-9));

  Eigen::MatrixXd q = random_orthogonal(gen, 3);
  CHECK(procrustes_distance(r, rep(m * q)) < 1e-9);
}

TEST_CASE("procrustes matches the grid oracle on a 3x2 pair") {
  std::mt19937 gen(17);
  Eigen::MatrixXd x = random_matrix(gen, 3, 2);
  Eigen::MatrixXd y = random_matrix(gen, 3, 2);
  double got = procrustes_distance(rep(x), rep(y));
  double want = oracle::procrustes_grid_oracle(x, y);
  CHECK(got == doctest::Approx(want).epsilon(1e-3));
  CHECK(got <= want + 1e-9);  // grid value can only overshoot the true minimum
}

TEST_CASE("procrustes shape and degeneracy errors") {
  std::mt19937 gen(2);
  Eigen::MatrixXd x = random_matrix(gen, 4, 2);
  Eigen::MatrixXd y = random_matrix(gen, 4, 3);
  CHECK_THROWS_WITH_AS(procrustes_distance(rep(x), rep(y)), doctest::Contains("ShapeMismatch"),
                       PruneError);
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(4, 2, 1.0);
  CHECK_THROWS_WITH_AS(procrustes_distance(rep(flat), rep(x)),
                       doctest::Contains("DegenerateRepresentation"), PruneError);
}

TEST_CASE("bures distance closed forms") {
  GaussianSummary g1{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)};
  GaussianSummary g2{Eigen::VectorXd::Zero(3), 4.0 * Eigen::MatrixXd::Identity(3, 3)};
  CHECK(bures_distance(g1, g1) == doctest::Approx(0.0).epsilon(1e-8));
  // Tr(I + 4I - 2*2I) = 3 -> sqrt(3)
  CHECK(bures_distance(g1, g2) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-10));

  Eigen::VectorXd a(3), b(3);
  a << 0.5, 1.0, 2.0;
  b << 1.5, 0.25, 3.0;
  GaussianSummary ga{Eigen::VectorXd::Zero(3), a.asDiagonal()};
  GaussianSummary gb{Eigen::VectorXd::Zero(3), b.asDiagonal()};
  CHECK(bures_distance(ga, gb) ==
        doctest::Approx(oracle::bures_commuting_oracle(a, b)).epsilon(1e-10));
}

TEST_CASE("bures is invariant under a joint rotation of commuting covariances") {
  std::mt19937 gen(23);
  Eigen::VectorXd a(3), b(3);
  a << 0.3, 1.2, 2.5;
  b << 0.9, 0.1, 1.7;
  Eigen::MatrixXd q = random_orthogonal(gen, 3);
  GaussianSummary ga{Eigen::VectorXd::Zero(3), q * a.asDiagonal() * q.transpose()};
  GaussianSummary gb{Eigen::VectorXd::Zero(3), q * b.asDiagonal() * q.transpose()};
  CHECK(bures_distance(ga, gb) ==
        doctest::Approx(oracle::bures_commuting_oracle(a, b)).epsilon(1e-8));
}

TEST_CASE("interpolated distance endpoints and closed form") {
  Eigen::VectorXd mu1(2), mu2(2);
  mu1 << 0, 0;
  mu2 << 3, 4;
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 2.0;
  b << 2.0, 0.5;
  GaussianSummary g1{mu1, a.asDiagonal()};
  GaussianSummary g2{mu2, b.asDiagonal()};

  CHECK(interpolated_distance(g1, g2, 0.0) ==
        doctest::Approx(bures_distance(g1, g2)).epsilon(1e-9));
  CHECK(interpolated_distance(g1, g2, 1.0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(interpolated_distance(g1, g2, 0.5) ==
        doctest::Approx(oracle::interpolated_commuting_oracle(mu1, mu2, a, b, 0.5))
            .epsilon(1e-10));
  CHECK_THROWS_WITH_AS(interpolated_distance(g1, g2, 1.5),
                       doctest::Contains("InvalidParameter"), PruneError);
}

TEST_CASE("score_layer dispatches to the named kernel") {
  std::mt19937 gen(31);
  Eigen::MatrixXd m = random_matrix(gen, 8, 4);
  auto r = rep(m);
  CHECK(score_layer(make_metric("linear_cka"), r, r) == doctest::Approx(1.0));
  CHECK(score_layer(make_metric("procrustes"), r, r) == doctest::Approx(0.0));

  // column-shuffled copy: dispatch must equal the direct kernel call
  Eigen::MatrixXd shuffled = m;
  shuffled.col(0).swap(shuffled.col(3));
  auto rs = rep(shuffled);
  auto metric = make_metric("interpolated", {{"lambda", 0.5}});
  double via_dispatch = score_layer(metric, r, rs);
  double direct = interpolated_distance(gaussian_summary(r), gaussian_summary(rs), 0.5);
  CHECK(via_dispatch == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("make_metric validates names and lambda") {
  CHECK_THROWS_WITH_AS(make_metric("rbf_cka"), doctest::Contains("InvalidParameter"), PruneError);
  CHECK_THROWS_WITH_AS(make_metric("interpolated", {{"lambda", -0.1}}),
                       doctest::Contains("InvalidParameter"), PruneError);
  CHECK(make_metric("linear_cka").orientation == Orientation::similarity);
  CHECK(make_metric("bures").orientation == Orientation::distance);
}

TEST_CASE("self comparison is perfect for every default metric") {
  std::mt19937 gen(61);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd m = random_matrix(gen, 5, 3);
    auto r = rep(m);
    for (const auto& metric : default_metric_set()) {
      double s = score_layer(metric, r, r);
      CHECK(std::abs(s - perfect_score(metric.orientation)) < 1e-8);
    }
  }
}

TEST_CASE("all metrics are symmetric") {
  std::mt19937 gen(71);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x = random_matrix(gen, 5, 3);
    Eigen::MatrixXd y = random_matrix(gen, 5, 3);
    auto rx = rep(x), ry = rep(y);
    for (const auto& metric : default_metric_set()) {
      CHECK(score_layer(metric, rx, ry) ==
            doctest::Approx(score_layer(metric, ry, rx)).epsilon(1e-6));
    }
  }
}

TEST_CASE("permuting rows of both arguments leaves scores unchanged") {
  std::mt19937 gen(83);
  Eigen::MatrixXd x = random_matrix(gen, 5, 3);
  Eigen::MatrixXd y = random_matrix(gen, 5, 3);
  std::array<int, 5> order{4, 2, 0, 3, 1};
  Eigen::MatrixXd xp(5, 3), yp(5, 3);
  for (int i = 0; i < 5; ++i) {
    xp.row(i) = x.row(order[i]);
    yp.row(i) = y.row(order[i]);
  }
  for (const auto& metric : default_metric_set()) {
    double base = score_layer(metric, rep(x), rep(y));
    double perm = score_layer(metric, rep(xp), rep(yp));
    CHECK(std::abs(base - perm) < 1e-10);
  }
}

TEST_CASE("orthogonal invariance holds for cka and procrustes") {
  std::mt19937 gen(97);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd x = random_matrix(gen, 5, 3);
    Eigen::MatrixXd y = random_matrix(gen, 5, 3);
    Eigen::MatrixXd q = random_orthogonal(gen, 3);
    CHECK(std::abs(linear_cka(rep(x), rep(y)) - linear_cka(rep(x), rep(y * q))) < 1e-8);
    CHECK(std::abs(procrustes_distance(rep(x), rep(y)) -
                   procrustes_distance(rep(x), rep(y * q))) < 1e-8);
  }
}

TEST_CASE("mismatched probe batches are rejected") {
  std::mt19937 gen(13);
  Eigen::MatrixXd m = random_matrix(gen, 4, 2);
  auto a = rep(m);
  auto b = rep(m);
  b.sample_ids[2] = 99;
  CHECK_THROWS_WITH_AS(linear_cka(a, b), doctest::Contains("InvalidRepresentation"), PruneError);
}
