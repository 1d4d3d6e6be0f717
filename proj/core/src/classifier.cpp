#include "qfsum/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qfsum/error.hpp"

namespace qfsum {
namespace {

// log(1 + exp(z)) without overflow.
double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

void AddScaled(std::span<double> out, const Embedding& x, double scale) {
  if (const auto* s = std::get_if<SparseVector>(&x)) {
    for (const auto& e : s->entries) out[e.index] += scale * e.weight;
  } else {
    const auto& d = std::get<DenseVector>(x).values;
    for (std::size_t i = 0; i < d.size(); ++i) out[i] += scale * d[i];
  }
}

void CheckFits(const Embedding& x, std::size_t dimension) {
  if (const auto* s = std::get_if<SparseVector>(&x)) {
    if (!s->empty() && s->entries.back().index >= dimension) {
      throw Error(ErrorCode::kDimensionMismatch, "sparse feature index outside the model");
    }
  } else if (std::get<DenseVector>(x).dimension() != dimension) {
    throw Error(ErrorCode::kDimensionMismatch, "dense feature has the wrong dimension");
  }
}

LinearClassifier TrainLogistic(std::span<const Embedding> features,
                               std::span<const Label> labels, std::size_t dimension,
                               const ClassifierConfig& config) {
  const LogisticObjective objective(features, labels, dimension, config.l2);
  std::vector<double> params(dimension + 1, 0.0);
  for (int it = 0; it < config.iterations; ++it) {
    const auto grad = objective.Gradient(params);
    for (std::size_t j = 0; j < params.size(); ++j) params[j] -= config.step_size * grad[j];
  }
  const double bias = params.back();
  params.pop_back();
  return LinearClassifier(std::move(params), bias);
}

// Full-batch Pegasos on the class-weighted hinge loss. The bias rides along as
// a regularized weight on a constant feature so the projection step bounds it.
LinearClassifier TrainSvm(std::span<const Embedding> features, std::span<const Label> labels,
                          std::size_t dimension, const ClassifierConfig& config) {
  const auto weights = InverseFrequencyWeights(labels);
  const double n = static_cast<double>(features.size());
  const double lambda = config.l2;
  const double radius = 1.0 / std::sqrt(lambda);
  std::vector<double> w(dimension + 1, 0.0);
  std::vector<double> step(dimension + 1, 0.0);
  const std::span<double> step_w(step.data(), dimension);
  const std::span<const double> w_view(w.data(), dimension);
  for (int t = 1; t <= config.iterations; ++t) {
    std::fill(step.begin(), step.end(), 0.0);
    for (std::size_t i = 0; i < features.size(); ++i) {
      const double y = labels[i] == Label::kRelevant ? 1.0 : -1.0;
      const double margin = y * (Dot(w_view, features[i]) + w.back());
      if (margin < 1.0) {
        const double scale = weights[i] * y / n;
        AddScaled(step_w, features[i], scale);
        step.back() += scale;
      }
    }
    const double eta = 1.0 / (lambda * t);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      w[j] = (1.0 - eta * lambda) * w[j] + eta * step[j];
      norm2 += w[j] * w[j];
    }
    const double norm = std::sqrt(norm2);
    if (norm > radius) {
      for (double& v : w) v *= radius / norm;
    }
  }
  const double bias = w.back();
  w.pop_back();
  return LinearClassifier(std::move(w), bias);
}

}  // namespace

std::string_view ToString(Label label) {
  return label == Label::kRelevant ? "relevant" : "irrelevant";
}

Label ParseLabel(std::string_view name) {
  if (name == "relevant") return Label::kRelevant;
  if (name == "irrelevant") return Label::kIrrelevant;
  throw Error(ErrorCode::kMalformedInput, "unknown label: " + std::string(name));
}

std::string_view ToString(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kLogisticRegression: return "logistic-regression";
    case ClassifierKind::kLinearSvm: return "linear-svm";
    case ClassifierKind::kRandomForest: return "random-forest";
  }
  return "unknown";
}

ClassifierKind ParseClassifierKind(std::string_view name) {
  if (name == "logistic-regression" || name == "logreg") {
    return ClassifierKind::kLogisticRegression;
  }
  if (name == "linear-svm" || name == "svm") return ClassifierKind::kLinearSvm;
  if (name == "random-forest") return ClassifierKind::kRandomForest;
  throw Error(ErrorCode::kInvalidArgument, "unknown classifier: " + std::string(name));
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double Dot(std::span<const double> weights, const Embedding& x) {
  double sum = 0.0;
  if (const auto* s = std::get_if<SparseVector>(&x)) {
    for (const auto& e : s->entries) {
      if (e.index >= weights.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "sparse feature index outside the model");
      }
      sum += weights[e.index] * e.weight;
    }
    return sum;
  }
  const auto& d = std::get<DenseVector>(x).values;
  if (d.size() != weights.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "dense feature has the wrong dimension");
  }
  for (std::size_t i = 0; i < d.size(); ++i) sum += weights[i] * d[i];
  return sum;
}

double LinearClassifier::Margin(const Embedding& x) const {
  return Dot(weights_, x) + bias_;
}

double LinearClassifier::Score(const Embedding& x) const { return Sigmoid(Margin(x)); }

std::vector<double> InverseFrequencyWeights(std::span<const Label> labels) {
  const auto positives = static_cast<double>(
      std::count(labels.begin(), labels.end(), Label::kRelevant));
  const auto n = static_cast<double>(labels.size());
  const double negatives = n - positives;
  std::vector<double> weights;
  weights.reserve(labels.size());
  for (const auto l : labels) {
    const double count = l == Label::kRelevant ? positives : negatives;
    weights.push_back(n / (2.0 * count));
  }
  return weights;
}

LogisticObjective::LogisticObjective(std::span<const Embedding> features,
                                     std::span<const Label> labels, std::size_t dimension,
                                     double l2)
    : features_(features),
      class_weights_(InverseFrequencyWeights(labels)),
      dimension_(dimension),
      l2_(l2) {
  if (features.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "features and labels differ in length");
  }
  targets_.reserve(labels.size());
  for (const auto l : labels) targets_.push_back(l == Label::kRelevant ? 1.0 : 0.0);
  for (const auto& x : features) CheckFits(x, dimension);
}

double LogisticObjective::Loss(std::span<const double> params) const {
  const std::span<const double> w = params.first(dimension_);
  const double b = params[dimension_];
  double loss = 0.0;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const double z = Dot(w, features_[i]) + b;
    // -y log s(z) - (1-y) log(1-s(z)) = softplus(z) - y z
    loss += class_weights_[i] * (Softplus(z) - targets_[i] * z);
  }
  loss /= static_cast<double>(features_.size());
  double norm2 = 0.0;
  for (double v : w) norm2 += v * v;
  return loss + 0.5 * l2_ * norm2;
}

std::vector<double> LogisticObjective::Gradient(std::span<const double> params) const {
  const std::span<const double> w = params.first(dimension_);
  const double b = params[dimension_];
  std::vector<double> grad(dimension_ + 1, 0.0);
  const std::span<double> grad_w(grad.data(), dimension_);
  const double inv_n = 1.0 / static_cast<double>(features_.size());
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const double z = Dot(w, features_[i]) + b;
    const double r = class_weights_[i] * (Sigmoid(z) - targets_[i]) * inv_n;
    AddScaled(grad_w, features_[i], r);
    grad[dimension_] += r;
  }
  for (std::size_t j = 0; j < dimension_; ++j) grad[j] += l2_ * w[j];
  return grad;
}

std::unique_ptr<Classifier> Train(std::span<const Embedding> features,
                                  std::span<const Label> labels, std::size_t dimension,
                                  const ClassifierConfig& config) {
  if (features.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "features and labels differ in length");
  }
  const bool has_pos = std::find(labels.begin(), labels.end(), Label::kRelevant) != labels.end();
  const bool has_neg =
      std::find(labels.begin(), labels.end(), Label::kIrrelevant) != labels.end();
  if (!has_pos || !has_neg) {
    throw Error(ErrorCode::kSingleClass, "training needs both relevant and irrelevant labels");
  }
  for (const auto& x : features) CheckFits(x, dimension);
  switch (config.kind) {
    case ClassifierKind::kLogisticRegression:
      return std::make_unique<LinearClassifier>(
          TrainLogistic(features, labels, dimension, config));
    case ClassifierKind::kLinearSvm:
      return std::make_unique<LinearClassifier>(TrainSvm(features, labels, dimension, config));
    case ClassifierKind::kRandomForest:
      break;
  }
  throw Error(ErrorCode::kInvalidArgument, "random-forest is not available in this build");
}

}  // namespace qfsum
