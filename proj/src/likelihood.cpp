#include "ppsel/likelihood.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "ppsel/error.hpp"
#include "text_io.hpp"

namespace ppsel {

ModelSpec::ModelSpec(std::vector<std::size_t> subset) : subset_(std::move(subset)) {
  std::sort(subset_.begin(), subset_.end());
  if (std::adjacent_find(subset_.begin(), subset_.end()) != subset_.end()) {
    throw InvalidArgument("model subset has repeated covariates");
  }
}

ModelSpec ModelSpec::from_mask(std::uint32_t mask) {
  std::vector<std::size_t> subset;
  for (std::size_t j = 0; j < 32; ++j) {
    if (mask & (1u << j)) subset.push_back(j);
  }
  return ModelSpec(std::move(subset));
}

std::uint32_t ModelSpec::mask() const {
  std::uint32_t m = 0;
  for (auto j : subset_) m |= 1u << j;
  return m;
}

bool ModelSpec::contains(std::size_t j) const {
  return std::binary_search(subset_.begin(), subset_.end(), j);
}

std::string ModelSpec::label() const {
  std::string out = "{";
  for (std::size_t k = 0; k < subset_.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(subset_[k] + 1);
  }
  return out + "}";
}

QuadratureScheme::QuadratureScheme(Window window, std::size_t nx,
                                   std::size_t ny, std::vector<QuadNode> nodes)
    : window_(window), nx_(nx), ny_(ny), nodes_(std::move(nodes)) {}

double QuadratureScheme::total_weight() const {
  long double s = 0.0L;
  for (const auto& n : nodes_) s += n.weight;
  return static_cast<double>(s);
}

QuadratureScheme build_quadrature(const PointPattern& p, std::size_t m) {
  if (m < 4) throw InvalidArgument("need at least 4 dummy points");
  const Window& w = p.window();
  const double aspect = w.width() / w.height();
  const double md = static_cast<double>(m);
  const auto nx = static_cast<std::size_t>(std::ceil(std::sqrt(md * aspect)));
  const auto ny = static_cast<std::size_t>(std::ceil(std::sqrt(md / aspect)));
  const double cw = w.width() / static_cast<double>(nx);
  const double ch = w.height() / static_cast<double>(ny);

  auto cell_of = [&](Point u) {
    const auto ix = std::min(
        static_cast<std::size_t>(std::max(0.0, std::floor((u.x - w.x_min()) / cw))),
        nx - 1);
    const auto iy = std::min(
        static_cast<std::size_t>(std::max(0.0, std::floor((u.y - w.y_min()) / ch))),
        ny - 1);
    return iy * nx + ix;
  };

  std::vector<QuadNode> nodes;
  nodes.reserve(p.size() + nx * ny);
  std::vector<std::size_t> occupancy(nx * ny, 1);  // the dummy itself
  for (const auto& u : p.points()) {
    const auto c = cell_of(u);
    ++occupancy[c];
    nodes.push_back({u, 0.0, true, c});
  }
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const Point u{w.x_min() + (static_cast<double>(ix) + 0.5) * cw,
                    w.y_min() + (static_cast<double>(iy) + 0.5) * ch};
      nodes.push_back({u, 0.0, false, iy * nx + ix});
    }
  }
  const double cell_area = cw * ch;
  for (auto& n : nodes) {
    n.weight = cell_area / static_cast<double>(occupancy[n.cell]);
  }
  return QuadratureScheme(w, nx, ny, std::move(nodes));
}

NodeDesign::NodeDesign(std::shared_ptr<const QuadratureScheme> scheme,
                       const CovariateSet& cov)
    : scheme_(std::move(scheme)) {
  const auto& nodes = scheme_->nodes();
  const auto n = static_cast<Eigen::Index>(nodes.size());
  const auto p = static_cast<Eigen::Index>(cov.size());
  full_.resize(n, p + 1);
  weights_.resize(n);
  data_sum_full_ = Eigen::VectorXd::Zero(p + 1);
  std::vector<double> z(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& node = nodes[static_cast<std::size_t>(i)];
    cov.eval_all(node.u, z);
    full_(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < p; ++j) full_(i, j + 1) = z[static_cast<std::size_t>(j)];
    weights_(i) = node.weight;
    if (node.is_data) data_sum_full_ += full_.row(i).transpose();
  }
}

namespace {

std::vector<Eigen::Index> model_columns(const ModelSpec& model, std::size_t p) {
  std::vector<Eigen::Index> cols{0};
  for (auto j : model.subset()) {
    if (j >= p) {
      throw DimensionMismatch("model uses covariate " + std::to_string(j + 1) +
                              " but only " + std::to_string(p) + " exist");
    }
    cols.push_back(static_cast<Eigen::Index>(j) + 1);
  }
  return cols;
}

void check_beta(const ModelSpec& model, const Eigen::VectorXd& beta) {
  if (static_cast<std::size_t>(beta.size()) != model.p_l()) {
    throw DimensionMismatch("beta has length " + std::to_string(beta.size()) +
                            ", model needs " + std::to_string(model.p_l()));
  }
}

// Everything the Newton solver needs for one model, columns copied once.
struct ModelProblem {
  Eigen::MatrixXd x;
  Eigen::VectorXd w;
  Eigen::VectorXd data_sum;

  ModelProblem(const NodeDesign& design, const ModelSpec& model)
      : x(design.model_matrix(model)),
        w(design.weights()),
        data_sum(design.data_sum(model)) {}

  double loglik(const Eigen::VectorXd& beta) const {
    const Eigen::VectorXd eta = x * beta;
    return data_sum.dot(beta) - w.dot(eta.array().exp().matrix());
  }

  // Log-likelihood, score and sensitivity in a single pass.
  void evaluate(const Eigen::VectorXd& beta, double& ll, Eigen::VectorXd& sc,
                Eigen::MatrixXd& sens) const {
    const Eigen::VectorXd eta = x * beta;
    const Eigen::VectorXd we = w.array() * eta.array().exp();
    ll = data_sum.dot(beta) - we.sum();
    sc = data_sum - x.transpose() * we;
    sens.noalias() = x.transpose() * we.asDiagonal() * x;
  }
};

void check_conditioning(const Eigen::MatrixXd& sens) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sens, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || lo < 1e-10 * hi) {
    std::ostringstream msg;
    msg << "sensitivity eigenvalues span [" << lo << ", " << hi << "]";
    throw SingularSensitivity(msg.str());
  }
}

}  // namespace

Eigen::MatrixXd NodeDesign::model_matrix(const ModelSpec& model) const {
  const auto cols = model_columns(model, n_covariates());
  Eigen::MatrixXd x(full_.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    x.col(static_cast<Eigen::Index>(k)) = full_.col(cols[k]);
  }
  return x;
}

Eigen::VectorXd NodeDesign::data_sum(const ModelSpec& model) const {
  const auto cols = model_columns(model, n_covariates());
  Eigen::VectorXd s(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    s(static_cast<Eigen::Index>(k)) = data_sum_full_(cols[k]);
  }
  return s;
}

double loglik(const NodeDesign& design, const ModelSpec& model,
              const Eigen::VectorXd& beta) {
  check_beta(model, beta);
  return ModelProblem(design, model).loglik(beta);
}

Eigen::VectorXd score(const NodeDesign& design, const ModelSpec& model,
                      const Eigen::VectorXd& beta) {
  check_beta(model, beta);
  const ModelProblem prob(design, model);
  const Eigen::VectorXd we =
      prob.w.array() * (prob.x * beta).array().exp();
  return prob.data_sum - prob.x.transpose() * we;
}

Eigen::MatrixXd sensitivity(const NodeDesign& design, const ModelSpec& model,
                            const Eigen::VectorXd& beta) {
  check_beta(model, beta);
  const ModelProblem prob(design, model);
  const Eigen::VectorXd we =
      prob.w.array() * (prob.x * beta).array().exp();
  Eigen::MatrixXd sens = prob.x.transpose() * we.asDiagonal() * prob.x;
  check_conditioning(sens);
  return sens;
}

namespace {

NodeDesign design_for(const QuadratureScheme& scheme, const CovariateSet& cov) {
  return NodeDesign(std::make_shared<const QuadratureScheme>(scheme), cov);
}

}  // namespace

double loglik(const QuadratureScheme& scheme, const ModelSpec& model,
              const CovariateSet& cov, const Eigen::VectorXd& beta) {
  return loglik(design_for(scheme, cov), model, beta);
}

Eigen::VectorXd score(const QuadratureScheme& scheme, const ModelSpec& model,
                      const CovariateSet& cov, const Eigen::VectorXd& beta) {
  return score(design_for(scheme, cov), model, beta);
}

Eigen::MatrixXd sensitivity(const QuadratureScheme& scheme,
                            const ModelSpec& model, const CovariateSet& cov,
                            const Eigen::VectorXd& beta) {
  return sensitivity(design_for(scheme, cov), model, beta);
}

FitResult fit(const NodeDesign& design, const ModelSpec& model,
              const FitOptions& options) {
  const auto n_data = design.scheme().n_data();
  if (n_data == 0) throw EmptyPattern("cannot fit an intensity to no points");

  const ModelProblem prob(design, model);
  const auto p_l = static_cast<Eigen::Index>(model.p_l());
  const double tol = options.tolerance * std::max(1.0, static_cast<double>(n_data));
  // Steps that lose less than rounding noise still count as ascent.
  constexpr double kRoundoff = 64.0 * std::numeric_limits<double>::epsilon();
  constexpr int kMaxHalvings = 60;

  FitResult out;
  out.model = model;
  out.scheme = design.scheme_ptr();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p_l);
  beta(0) = std::log(static_cast<double>(n_data) / area(design.scheme().window()));

  double ll = 0.0;
  Eigen::VectorXd sc;
  Eigen::MatrixXd sens(p_l, p_l);
  prob.evaluate(beta, ll, sc, sens);
  check_conditioning(sens);
  out.loglik_trace.push_back(ll);

  std::size_t it = 0;
  bool converged = sc.lpNorm<Eigen::Infinity>() < tol;
  while (!converged && it < options.max_iterations) {
    const Eigen::VectorXd step = sens.llt().solve(sc);
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h, t *= 0.5) {
      const Eigen::VectorXd cand = beta + t * step;
      const double ll_cand = prob.loglik(cand);
      if (std::isfinite(ll_cand) && ll_cand >= ll - kRoundoff * std::abs(ll)) {
        beta = cand;
        accepted = true;
        break;
      }
    }
    ++it;
    if (!accepted) break;
    prob.evaluate(beta, ll, sc, sens);
    out.loglik_trace.push_back(ll);
    converged = sc.lpNorm<Eigen::Infinity>() < tol;
  }

  check_conditioning(sens);
  out.beta_hat = beta;
  out.loglik = ll;
  out.sensitivity = sens;
  out.converged = converged;
  out.iterations = it;
  return out;
}

FitResult fit(const PointPattern& p, const ModelSpec& model,
              const CovariateSet& cov, std::size_t m, const FitOptions& options) {
  if (p.empty()) throw EmptyPattern("cannot fit an intensity to no points");
  const NodeDesign design(std::make_shared<const QuadratureScheme>(build_quadrature(p, m)),
                          cov);
  return fit(design, model, options);
}

void write_fit_header(std::ostream& out, std::size_t p) {
  out << "model_id,label,b0";
  for (std::size_t j = 1; j <= p; ++j) out << ",b" << j;
  out << ",loglik,converged,iterations\n";
}

void write_fit_record(std::ostream& out, const FitResult& fit, std::size_t p) {
  out << fit.model.mask() << ",\"" << fit.model.label() << "\","
      << detail::format_double(fit.beta_hat(0));
  Eigen::Index k = 1;
  for (std::size_t j = 0; j < p; ++j) {
    out << ',';
    if (fit.model.contains(j)) out << detail::format_double(fit.beta_hat(k++));
  }
  out << ',' << detail::format_double(fit.loglik) << ','
      << (fit.converged ? 1 : 0) << ',' << fit.iterations << '\n';
}

}  // namespace ppsel
