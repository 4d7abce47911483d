#include "prunekit/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <numeric>

namespace prunekit {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

void require_same_samples(const RepresentationMatrix& a, const RepresentationMatrix& b) {
  if (a.rows() != b.rows()) {
    fail(ErrorKind::ShapeMismatch, "representations have different sample counts");
  }
  if (a.sample_ids != b.sample_ids) {
    fail(ErrorKind::InvalidRepresentation, "representations were extracted on different probe batches");
  }
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& m) {
  return m.rowwise() - m.colwise().mean();
}

}  // namespace

RepresentationMatrix make_representation(Eigen::MatrixXd data) {
  RepresentationMatrix r;
  r.sample_ids.resize(static_cast<std::size_t>(data.rows()));
  std::iota(r.sample_ids.begin(), r.sample_ids.end(), 0);
  r.data = std::move(data);
  return r;
}

void validate_representation(const RepresentationMatrix& r) {
  if (r.rows() < 2) fail(ErrorKind::InsufficientSamples, "need at least 2 samples");
  if (r.cols() < 1) fail(ErrorKind::InvalidRepresentation, "feature dimension must be >= 1");
  if (!all_finite(r.data)) fail(ErrorKind::InvalidRepresentation, "non-finite entries");
  if (r.sample_ids.size() != static_cast<std::size_t>(r.rows())) {
    fail(ErrorKind::InvalidRepresentation, "sample_ids do not match row count");
  }
}

MetricDescriptor make_metric(const std::string& name, std::map<std::string, double> params) {
  MetricDescriptor m;
  m.name = name;
  m.params = std::move(params);
  if (name == "linear_cka") {
    m.orientation = Orientation::similarity;
  } else if (name == "procrustes" || name == "bures" || name == "interpolated") {
    m.orientation = Orientation::distance;
  } else {
    fail(ErrorKind::InvalidParameter, "unknown metric '" + name + "'");
  }
  if (name == "interpolated") {
    double lambda = m.param_or("lambda", 0.5);
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
      fail(ErrorKind::InvalidParameter, "interpolated lambda must lie in [0,1]");
    }
    m.params["lambda"] = lambda;
  }
  return m;
}

std::vector<MetricDescriptor> default_metric_set() {
  return {
      make_metric("linear_cka"),
      make_metric("procrustes"),
      make_metric("bures"),
      make_metric("interpolated", {{"lambda", 0.5}}),
  };
}

double perfect_score(Orientation o) {
  return o == Orientation::similarity ? 1.0 : 0.0;
}

RepresentationMatrix center_columns(const RepresentationMatrix& r) {
  validate_representation(r);
  RepresentationMatrix out;
  out.data = centered(r.data);
  out.sample_ids = r.sample_ids;
  return out;
}

GaussianSummary gaussian_summary(const RepresentationMatrix& r, double ridge) {
  validate_representation(r);
  if (ridge < 0.0) fail(ErrorKind::InvalidParameter, "ridge must be >= 0");
  const auto n = static_cast<double>(r.rows());
  GaussianSummary g;
  g.mean = r.data.colwise().mean();
  Eigen::MatrixXd xc = centered(r.data);
  g.covariance = (xc.transpose() * xc) / (n - 1.0);
  g.covariance += ridge * Eigen::MatrixXd::Identity(r.cols(), r.cols());
  return g;
}

double linear_cka(const RepresentationMatrix& a, const RepresentationMatrix& b) {
  validate_representation(a);
  validate_representation(b);
  require_same_samples(a, b);

  Eigen::MatrixXd xc = centered(a.data);
  Eigen::MatrixXd yc = centered(b.data);
  double gram_x = (xc.transpose() * xc).norm();
  double gram_y = (yc.transpose() * yc).norm();
  if (gram_x == 0.0 || gram_y == 0.0) {
    fail(ErrorKind::DegenerateRepresentation, "zero-variance representation in linear_cka");
  }
  double cross = (yc.transpose() * xc).squaredNorm();
  return cross / (gram_x * gram_y);
}

double procrustes_distance(const RepresentationMatrix& a, const RepresentationMatrix& b) {
  validate_representation(a);
  validate_representation(b);
  require_same_samples(a, b);
  if (a.cols() != b.cols()) {
    fail(ErrorKind::ShapeMismatch, "procrustes requires equal feature dimensions");
  }

  Eigen::MatrixXd xc = centered(a.data);
  Eigen::MatrixXd yc = centered(b.data);
  double nx = xc.norm();
  double ny = yc.norm();
  if (nx == 0.0 || ny == 0.0) {
    fail(ErrorKind::DegenerateRepresentation, "zero matrix after centering in procrustes");
  }
  xc /= nx;
  yc /= ny;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(yc.transpose() * xc,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd q = svd.matrixU() * svd.matrixV().transpose();
  return (xc - yc * q).norm();
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m) {
  if (!all_finite(m)) fail(ErrorKind::NumericalFailure, "non-finite matrix in sqrt");
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) {
    fail(ErrorKind::NumericalFailure, "eigendecomposition did not converge");
  }
  Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
}

namespace {

void validate_summary(const GaussianSummary& g) {
  if (!g.mean.allFinite() || !all_finite(g.covariance)) {
    fail(ErrorKind::NumericalFailure, "non-finite Gaussian summary");
  }
  if (g.covariance.rows() != g.covariance.cols() || g.covariance.rows() != g.mean.size()) {
    fail(ErrorKind::ShapeMismatch, "Gaussian summary shape inconsistent");
  }
  if ((g.covariance - g.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
    fail(ErrorKind::InvalidParameter, "covariance not symmetric");
  }
}

}  // namespace

double bures_distance(const GaussianSummary& a, const GaussianSummary& b) {
  validate_summary(a);
  validate_summary(b);
  if (a.covariance.rows() != b.covariance.rows()) {
    fail(ErrorKind::ShapeMismatch, "bures requires equal covariance dimensions");
  }
  Eigen::MatrixXd s1 = matrix_sqrt_psd(a.covariance);
  Eigen::MatrixXd s2 = matrix_sqrt_psd(b.covariance);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s2.transpose() * s1,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd u = svd.matrixU() * svd.matrixV().transpose();
  return (s1 - s2 * u).norm();
}

double interpolated_distance(const GaussianSummary& a, const GaussianSummary& b,
                             double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    fail(ErrorKind::InvalidParameter, "lambda must lie in [0,1]");
  }
  validate_summary(a);
  validate_summary(b);
  if (a.mean.size() != b.mean.size()) {
    fail(ErrorKind::ShapeMismatch, "interpolated requires equal dimensions");
  }
  double mean_sq = (a.mean - b.mean).squaredNorm();
  double bures = lambda == 1.0 ? 0.0 : bures_distance(a, b);
  return std::sqrt(lambda * mean_sq + (1.0 - lambda) * bures * bures);
}

double score_layer(const MetricDescriptor& metric, const RepresentationMatrix& reference,
                   const RepresentationMatrix& candidate) {
  validate_representation(reference);
  validate_representation(candidate);
  require_same_samples(reference, candidate);

  if (metric.name == "linear_cka") {
    return linear_cka(reference, candidate);
  }
  if (metric.name == "procrustes") {
    return procrustes_distance(reference, candidate);
  }
  double ridge = metric.param_or("ridge", 1e-6);
  GaussianSummary g1 = gaussian_summary(reference, ridge);
  GaussianSummary g2 = gaussian_summary(candidate, ridge);
  if (metric.name == "bures") {
    return bures_distance(g1, g2);
  }
  if (metric.name == "interpolated") {
    return interpolated_distance(g1, g2, metric.param_or("lambda", 0.5));
  }
  fail(ErrorKind::InvalidParameter, "unknown metric '" + metric.name + "'");
}

}  // namespace prunekit
