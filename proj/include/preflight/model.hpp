#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "preflight/cohort.hpp"
#include "preflight/matrix.hpp"

namespace preflight {

// Scorer contract: pure, deterministic, probabilities in [0,1]. Fitted
// models are immutable; score() may be called concurrently.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> score(const FeatureMatrix& X) const = 0;
  virtual std::string descriptor() const = 0;
};

struct FitConfig {
  double learning_rate = 0.5;
  int max_iters = 5000;
  double l2 = 1e-4;  // weights only, never the bias
  uint64_t seed = 42;
  double grad_tol = 1e-8;
  int checkpoint_every = 100;
};

// Built-in deterministic baseline: full-batch gradient descent on the
// regularised logistic loss over standardized features. The step is halved
// whenever a move would increase the loss, so recorded checkpoints are
// non-increasing.
class LogisticBaseline : public Scorer {
 public:
  std::vector<double> score(const FeatureMatrix& X) const override;
  std::string descriptor() const override;

  // Linear predictor before the sigmoid; the explanation provider works in
  // this space.
  std::vector<double> logit(const FeatureMatrix& X) const;
  double background_logit() const;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  const std::vector<double>& means() const { return mean_; }
  const std::vector<double>& sds() const { return sd_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<double>& loss_checkpoints() const { return checkpoints_; }

  friend LogisticBaseline fit_logistic(const Cohort& train,
                                       const FitConfig& config);

 private:
  void check_layout(const FeatureMatrix& X) const;

  std::vector<double> weights_;
  double bias_ = 0.0;
  std::vector<double> mean_, sd_;
  std::vector<std::string> columns_;
  std::vector<ColumnKind> kinds_;
  std::vector<double> checkpoints_;
  FitConfig config_;
};

LogisticBaseline fit_logistic(const Cohort& train, const FitConfig& config);

// Precomputed scores aligned to a cohort, for auditing external models.
struct ScoreSet {
  std::vector<double> baseline;
  std::vector<std::pair<std::string, std::vector<double>>> perturbed;

  const std::vector<double>* find(const std::string& id) const {
    for (const auto& [pid, v] : perturbed)
      if (pid == id) return &v;
    return nullptr;
  }
};

// Score file: CSV with columns id, score[, score@<perturbation-id> ...].
ScoreSet load_score_set(const std::string& path, const Cohort& cohort);
std::string score_set_to_csv(const Cohort& cohort, const ScoreSet& scores);

}  // namespace preflight
