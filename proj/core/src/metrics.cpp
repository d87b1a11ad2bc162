#include "balance/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace balance {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Matrix sqrt_psd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  Vector roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

double min_eigenvalue(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

FrechetResult frechet(const Vector& mu_a, Matrix cov_a, const Vector& mu_b, Matrix cov_b) {
  FrechetResult res;
  if (min_eigenvalue(cov_a) <= 0.0 || min_eigenvalue(cov_b) <= 0.0) {
    const Matrix jitter = 1e-10 * Matrix::Identity(cov_a.rows(), cov_a.cols());
    cov_a += jitter;
    cov_b += jitter;
    res.jittered = true;
  }
  const Matrix root_a = sqrt_psd(cov_a);
  const Matrix middle = root_a * cov_b * root_a;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (middle + middle.transpose()), Eigen::EigenvaluesOnly);
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * cross;
  res.distance = std::max(d, 0.0);
  return res;
}

void moments(const Tensor& x, Vector& mu, Matrix& cov) {
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto d = static_cast<Eigen::Index>(x.cols());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(x.data().data(), n, d);
  mu = m.colwise().mean().transpose();
  const Matrix centered = m.rowwise() - mu.transpose();
  cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
}

}  // namespace

double kl_to_uniform_counts(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (!(total > 0.0)) throw std::invalid_argument("kl_to_uniform: no labels");
  const double k = static_cast<double>(counts.size());
  double kl = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    const double q = c / total;
    kl += q * std::log(q * k);
  }
  return std::max(kl, 0.0);
}

double kl_to_uniform(std::span<const int> labels, std::size_t num_classes) {
  if (labels.empty()) throw std::invalid_argument("kl_to_uniform: no labels");
  std::vector<double> counts(num_classes, 0.0);
  for (int y : labels) counts.at(static_cast<std::size_t>(y)) += 1.0;
  return kl_to_uniform_counts(counts);
}

std::vector<double> label_fractions(std::span<const int> labels, std::size_t num_classes) {
  std::vector<double> f(num_classes, 0.0);
  for (int y : labels) f.at(static_cast<std::size_t>(y)) += 1.0;
  if (!labels.empty())
    for (double& v : f) v /= static_cast<double>(labels.size());
  return f;
}

FrechetResult frechet_gaussian(const Tensor& real, const Tensor& generated) {
  if (real.cols() != generated.cols()) throw ShapeError("frechet: point sets differ in dimension");
  const std::size_t need = real.cols() + 1;
  if (real.rows() < need || generated.rows() < need) {
    throw std::invalid_argument("frechet: each set needs at least dim + 1 = " + std::to_string(need) + " points");
  }
  Vector mu_a, mu_b;
  Matrix cov_a, cov_b;
  moments(real, mu_a, cov_a);
  moments(generated, mu_b, cov_b);
  return frechet(mu_a, cov_a, mu_b, cov_b);
}

FrechetResult frechet_from_moments(std::span<const double> mean_a, std::span<const double> cov_a,
                                   std::span<const double> mean_b, std::span<const double> cov_b) {
  const auto d = static_cast<Eigen::Index>(mean_a.size());
  if (mean_b.size() != mean_a.size() || cov_a.size() != mean_a.size() * mean_a.size() || cov_b.size() != cov_a.size()) {
    throw ShapeError("frechet: moment shapes do not conform");
  }
  const Vector mu_a = Eigen::Map<const Vector>(mean_a.data(), d);
  const Vector mu_b = Eigen::Map<const Vector>(mean_b.data(), d);
  const Matrix ca = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(cov_a.data(), d, d);
  const Matrix cb = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(cov_b.data(), d, d);
  return frechet(mu_a, ca, mu_b, cb);
}

Sampler generator_sampler(const Mlp& generator) {
  return [generator](std::size_t n, Rng& rng) {
    Tensor z(n, generator.input_dim());
    for (double& v : z.data()) v = rng.normal();
    return generator.forward(z);
  };
}

Sampler resampling_sampler(const LabeledDataset& data) {
  return [data](std::size_t n, Rng& rng) {
    Tensor x(n, data.dim());
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t src = rng.index(data.size());
      for (std::size_t d = 0; d < data.dim(); ++d) x(i, d) = data.samples(src, d);
    }
    return x;
  };
}

CasResult classifier_accuracy_score(const Sampler& generator, const Mlp& labeler, const LabeledDataset& real_test,
                                    std::size_t samples, const ClassifierOptions& budget) {
  if (samples == 0) throw std::invalid_argument("classifier_accuracy_score: need at least one sample");
  Rng rng(budget.seed, "cas-samples");
  LabeledDataset synthetic;
  synthetic.samples = generator(samples, rng);
  if (synthetic.samples.cols() != labeler.input_dim()) throw ShapeError("generator output does not match labeler input");
  synthetic.labels = argmax_rows(labeler.forward(synthetic.samples));
  synthetic.counts.assign(labeler.output_dim(), 0);
  for (int y : synthetic.labels) ++synthetic.counts[static_cast<std::size_t>(y)];

  CasResult res;
  for (std::size_t c = 0; c < synthetic.counts.size(); ++c)
    if (synthetic.counts[c] == 0) res.missing_classes.push_back(static_cast<int>(c));

  const TrainedClassifier fresh = pretrain_classifier(synthetic, real_test, budget);
  res.accuracy = fresh.accuracy.overall;
  return res;
}

}  // namespace balance
