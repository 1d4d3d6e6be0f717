#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "qfsum/embeddings.hpp"

namespace qfsum {

enum class Label { kIrrelevant, kRelevant };

std::string_view ToString(Label label);
Label ParseLabel(std::string_view name);

enum class ClassifierKind { kLogisticRegression, kLinearSvm, kRandomForest };

std::string_view ToString(ClassifierKind kind);
// Accepts canonical names plus the CLI forms "logreg" and "svm".
ClassifierKind ParseClassifierKind(std::string_view name);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::kLogisticRegression;
  double l2 = 0.01;
  int iterations = 200;
  double step_size = 0.1;  // logistic regression only
  std::uint64_t seed = 42;

  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  // Relevance score in [0, 1]; higher means more likely relevant.
  virtual double Score(const Embedding& x) const = 0;
  virtual std::size_t dimension() const = 0;
};

// sigmoid(w.x + b). Used for both linear kinds; the SVM margin is squashed
// through the same sigmoid.
class LinearClassifier final : public Classifier {
 public:
  LinearClassifier(std::vector<double> weights, double bias)
      : weights_(std::move(weights)), bias_(bias) {}

  double Score(const Embedding& x) const override;
  double Margin(const Embedding& x) const;
  std::size_t dimension() const override { return weights_.size(); }

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  std::vector<double> weights_;
  double bias_;
};

double Sigmoid(double z);

// Dot product of a dense weight vector with an embedding; throws
// DimensionMismatch when the embedding does not fit.
double Dot(std::span<const double> weights, const Embedding& x);

// n / (2 * n_class) for each example's class.
std::vector<double> InverseFrequencyWeights(std::span<const Label> labels);

// Class-weighted, L2-regularized mean log loss over parameters [w..., b]:
//   (1/n) sum_i c_i * logloss(y_i, sigmoid(w.x_i + b)) + (l2/2) |w|^2
// The bias is not regularized.
class LogisticObjective {
 public:
  LogisticObjective(std::span<const Embedding> features, std::span<const Label> labels,
                    std::size_t dimension, double l2);

  double Loss(std::span<const double> params) const;
  std::vector<double> Gradient(std::span<const double> params) const;
  std::size_t parameter_count() const { return dimension_ + 1; }

 private:
  std::span<const Embedding> features_;
  std::vector<double> targets_;
  std::vector<double> class_weights_;
  std::size_t dimension_;
  double l2_;
};

// Throws SingleClass unless both labels are present, DimensionMismatch when a
// feature does not fit `dimension`, and InvalidArgument for random-forest
// (not part of this build).
std::unique_ptr<Classifier> Train(std::span<const Embedding> features,
                                  std::span<const Label> labels, std::size_t dimension,
                                  const ClassifierConfig& config);

}  // namespace qfsum
