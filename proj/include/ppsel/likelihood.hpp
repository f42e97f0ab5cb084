#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ppsel/covariates.hpp"
#include "ppsel/geometry.hpp"

namespace ppsel {

// A candidate model: an intercept plus the covariates in `subset`
// (0-based indices, kept sorted). p_l = |subset| + 1.
class ModelSpec {
 public:
  ModelSpec() = default;
  explicit ModelSpec(std::vector<std::size_t> subset);
  static ModelSpec from_mask(std::uint32_t mask);

  const std::vector<std::size_t>& subset() const { return subset_; }
  std::size_t p_l() const { return subset_.size() + 1; }
  std::uint32_t mask() const;
  bool contains(std::size_t j) const;
  // One-based, e.g. "{}" or "{1,2}".
  std::string label() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;

 private:
  std::vector<std::size_t> subset_;
};

struct QuadNode {
  Point u;
  double weight;
  bool is_data;
  std::size_t cell;  // iy * nx + ix of the dummy-grid cell holding u
};

// Berman-Turner quadrature: one dummy point at the center of every cell of a
// regular nx x ny grid, plus every data point. Each cell's area is divided
// equally among the nodes it contains. Data nodes come first, in pattern
// order.
class QuadratureScheme {
 public:
  QuadratureScheme(Window window, std::size_t nx, std::size_t ny,
                   std::vector<QuadNode> nodes);

  const Window& window() const { return window_; }
  const std::vector<QuadNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t n_dummy() const { return nx_ * ny_; }
  std::size_t n_data() const { return nodes_.size() - n_dummy(); }
  double cell_width() const { return window_.width() / static_cast<double>(nx_); }
  double cell_height() const { return window_.height() / static_cast<double>(ny_); }
  double total_weight() const;

 private:
  Window window_;
  std::size_t nx_, ny_;
  std::vector<QuadNode> nodes_;
};

// Dummy grid of ceil(sqrt(m*a)) x ceil(sqrt(m/a)) cells, a = width/height.
QuadratureScheme build_quadrature(const PointPattern& p, std::size_t m);

// Covariates evaluated once at every quadrature node, shared read-only by all
// model fits on the same pattern.
class NodeDesign {
 public:
  NodeDesign(std::shared_ptr<const QuadratureScheme> scheme,
             const CovariateSet& cov);

  const QuadratureScheme& scheme() const { return *scheme_; }
  const std::shared_ptr<const QuadratureScheme>& scheme_ptr() const {
    return scheme_;
  }
  std::size_t n_covariates() const {
    return static_cast<std::size_t>(full_.cols()) - 1;
  }
  // n_nodes x (p + 1); column 0 is the intercept.
  const Eigen::MatrixXd& full() const { return full_; }
  const Eigen::VectorXd& weights() const { return weights_; }

  Eigen::MatrixXd model_matrix(const ModelSpec& model) const;
  // Sum of z_l(u) over data points.
  Eigen::VectorXd data_sum(const ModelSpec& model) const;

 private:
  std::shared_ptr<const QuadratureScheme> scheme_;
  Eigen::MatrixXd full_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd data_sum_full_;
};

// Quadrature form of the Poisson log-likelihood, theta absorbed in beta_0:
//   sum_data beta.z(u) - sum_nodes w exp(beta.z(u)).
double loglik(const NodeDesign& design, const ModelSpec& model,
              const Eigen::VectorXd& beta);
Eigen::VectorXd score(const NodeDesign& design, const ModelSpec& model,
                      const Eigen::VectorXd& beta);
// sum_nodes w z z^T exp(beta.z). Throws SingularSensitivity when the smallest
// eigenvalue is below 1e-10 times the largest.
Eigen::MatrixXd sensitivity(const NodeDesign& design, const ModelSpec& model,
                            const Eigen::VectorXd& beta);

double loglik(const QuadratureScheme& scheme, const ModelSpec& model,
              const CovariateSet& cov, const Eigen::VectorXd& beta);
Eigen::VectorXd score(const QuadratureScheme& scheme, const ModelSpec& model,
                      const CovariateSet& cov, const Eigen::VectorXd& beta);
Eigen::MatrixXd sensitivity(const QuadratureScheme& scheme,
                            const ModelSpec& model, const CovariateSet& cov,
                            const Eigen::VectorXd& beta);

struct FitResult {
  ModelSpec model;
  Eigen::VectorXd beta_hat;
  double loglik = 0.0;
  Eigen::MatrixXd sensitivity;
  std::shared_ptr<const QuadratureScheme> scheme;
  bool converged = false;
  std::size_t iterations = 0;
  // Log-likelihood at the start and after every accepted Newton step.
  std::vector<double> loglik_trace;
};

struct FitOptions {
  std::size_t max_iterations = 100;
  // Stop when the score sup-norm is below tolerance * max(1, N(W)).
  double tolerance = 1e-8;
};

// Newton-Raphson with step halving from the intercept-only MLE
// (log(N/|W|), 0, ..., 0). A run that hits max_iterations is returned with
// converged = false. Throws EmptyPattern and SingularSensitivity.
FitResult fit(const NodeDesign& design, const ModelSpec& model,
              const FitOptions& options = {});
FitResult fit(const PointPattern& p, const ModelSpec& model,
              const CovariateSet& cov, std::size_t m,
              const FitOptions& options = {});

// One CSV record per fit: model_id, label, b0, b1..bp (empty when the
// covariate is not in the model), loglik, converged, iterations.
void write_fit_header(std::ostream& out, std::size_t p);
void write_fit_record(std::ostream& out, const FitResult& fit, std::size_t p);

}  // namespace ppsel
