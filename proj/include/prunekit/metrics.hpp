#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prunekit/errors.hpp"

namespace prunekit {

/// n x d matrix of penultimate-layer features, one row per probe sample.
/// Two matrices are comparable only when they were extracted on the same
/// probe batch in the same order (sample_ids equal).
struct RepresentationMatrix {
  Eigen::MatrixXd data;
  std::vector<std::int64_t> sample_ids;

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }
};

/// Builds a representation with sample ids 0..n-1 (tests, ad-hoc use).
RepresentationMatrix make_representation(Eigen::MatrixXd data);

/// Checks finiteness, n >= 2, d >= 1 and id/row agreement.
/// Throws InvalidRepresentation / InsufficientSamples.
void validate_representation(const RepresentationMatrix& r);

/// Empirical Gaussian summary of a representation: column means plus
/// ridge-regularized unbiased sample covariance (guaranteed PSD).
struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

enum class Orientation { similarity, distance };

/// A similarity/distance kernel by name plus its fixed orientation and
/// named real parameters (interpolation weight, covariance ridge).
struct MetricDescriptor {
  std::string name;
  Orientation orientation = Orientation::distance;
  std::map<std::string, double> params;

  double param_or(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

/// Known kernels: "linear_cka" (similarity), "procrustes", "bures",
/// "interpolated" (distances). Orientation is not caller-choosable.
MetricDescriptor make_metric(const std::string& name,
                             std::map<std::string, double> params = {});

/// Default metric set: linear CKA, Procrustes, Bures, interpolated(0.5).
std::vector<MetricDescriptor> default_metric_set();

/// Score of a metric when both arguments are identical: 1 for similarity
/// orientation, 0 for distance orientation.
double perfect_score(Orientation o);

RepresentationMatrix center_columns(const RepresentationMatrix& r);

GaussianSummary gaussian_summary(const RepresentationMatrix& r, double ridge = 1e-6);

/// Linear CKA on column-centered inputs:
///   ||Yc^T Xc||_F^2 / (||Xc^T Xc||_F * ||Yc^T Yc||_F), in [0, 1].
double linear_cka(const RepresentationMatrix& a, const RepresentationMatrix& b);

/// Orthogonal Procrustes distance min_Q ||Xc - Yc Q||_F on column-centered,
/// Frobenius-normalized inputs. Evaluated at the optimal rotation from the
/// SVD of Yc^T Xc, which equals
///   sqrt(||Xc||_F^2 + ||Yc||_F^2 - 2 * sum of singular values of Yc^T Xc)
/// but stays accurate near zero.
double procrustes_distance(const RepresentationMatrix& a, const RepresentationMatrix& b);

/// Bures distance sqrt(Tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2})),
/// evaluated as the optimal alignment ||sqrt(S1) - sqrt(S2) U*||_F.
double bures_distance(const GaussianSummary& a, const GaussianSummary& b);

/// sqrt(lambda * ||mu1 - mu2||^2 + (1 - lambda) * bures^2). lambda in [0, 1];
/// 0 reduces to Bures, 1 to the Euclidean mean distance.
double interpolated_distance(const GaussianSummary& a, const GaussianSummary& b,
                             double lambda);

/// Dispatches to the named kernel. Stochastic kernels (bures, interpolated)
/// operate on Gaussian summaries built from the representations with the
/// metric's "ridge" parameter (default 1e-6).
double score_layer(const MetricDescriptor& metric, const RepresentationMatrix& reference,
                   const RepresentationMatrix& candidate);

/// Symmetric PSD matrix square root via eigendecomposition with eigenvalue
/// clamping at zero. Throws NumericalFailure if the solver does not converge.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m);

}  // namespace prunekit
