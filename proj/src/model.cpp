#include "preflight/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "preflight/csv.hpp"

namespace preflight {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double log1pexp(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

}  // namespace

void LogisticBaseline::check_layout(const FeatureMatrix& X) const {
  if (X.column_names != columns_)
    fail(Errc::shape_error, "column layout differs from fit-time layout");
}

std::vector<double> LogisticBaseline::logit(const FeatureMatrix& X) const {
  check_layout(X);
  std::vector<double> z(X.n, bias_);
  for (size_t i = 0; i < X.n; ++i) {
    double acc = bias_;
    const double* row = &X.values[i * X.d];
    for (size_t j = 0; j < X.d; ++j)
      acc += weights_[j] * ((row[j] - mean_[j]) / sd_[j]);
    z[i] = acc;
  }
  return z;
}

double LogisticBaseline::background_logit() const { return bias_; }

std::vector<double> LogisticBaseline::score(const FeatureMatrix& X) const {
  std::vector<double> z = logit(X);
  for (double& v : z) v = sigmoid(v);
  return z;
}

std::string LogisticBaseline::descriptor() const {
  std::ostringstream out;
  out << "logistic_baseline(d=" << weights_.size() << ",seed=" << config_.seed
      << ")";
  return out.str();
}

LogisticBaseline fit_logistic(const Cohort& train, const FitConfig& config) {
  train.validate();
  const FeatureMatrix& X = train.features;
  const size_t n = X.n;
  const size_t d = X.d;

  bool has_pos = false, has_neg = false;
  for (int y : train.labels) (y ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    fail(Errc::fit_error, "training data holds a single class");

  LogisticBaseline model;
  model.columns_ = X.column_names;
  model.kinds_ = X.column_kinds;
  model.config_ = config;
  model.mean_.resize(d);
  model.sd_.resize(d);
  for (size_t j = 0; j < d; ++j) {
    model.mean_[j] = column_mean(X, j);
    double sd = column_stddev(X, j);
    model.sd_[j] = sd > 0.0 ? sd : 1.0;  // constant columns pass through
  }

  // Standardized copy for the solver.
  std::vector<double> Z(n * d);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j)
      Z[i * d + j] = (X.at(i, j) - model.mean_[j]) / model.sd_[j];

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  std::vector<double> p(n), grad(d);

  auto loss_at = [&](const std::vector<double>& wv, double bv) {
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double z = bv;
      const double* zi = &Z[i * d];
      for (size_t j = 0; j < d; ++j) z += wv[j] * zi[j];
      loss += train.labels[i] ? log1pexp(-z) : log1pexp(z);
    }
    loss /= static_cast<double>(n);
    double reg = 0.0;
    for (double wj : wv) reg += wj * wj;
    return loss + 0.5 * config.l2 * reg;
  };

  double lr = config.learning_rate;
  double loss = loss_at(w, b);
  model.checkpoints_.push_back(loss);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    for (size_t i = 0; i < n; ++i) {
      double z = b;
      const double* zi = &Z[i * d];
      for (size_t j = 0; j < d; ++j) z += w[j] * zi[j];
      p[i] = sigmoid(z) - train.labels[i];
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double* zi = &Z[i * d];
      for (size_t j = 0; j < d; ++j) grad[j] += p[i] * zi[j];
      grad_b += p[i];
    }
    double max_norm = std::fabs(grad_b / n);
    for (size_t j = 0; j < d; ++j) {
      grad[j] = grad[j] / n + config.l2 * w[j];
      max_norm = std::max(max_norm, std::fabs(grad[j]));
    }
    grad_b /= n;
    if (max_norm < config.grad_tol) break;

    // Step with halving until the loss does not increase.
    bool stepped = false;
    for (int h = 0; h < 60; ++h) {
      std::vector<double> w_try(d);
      for (size_t j = 0; j < d; ++j) w_try[j] = w[j] - lr * grad[j];
      double b_try = b - lr * grad_b;
      double loss_try = loss_at(w_try, b_try);
      if (loss_try <= loss + 1e-15) {
        w = std::move(w_try);
        b = b_try;
        loss = loss_try;
        stepped = true;
        break;
      }
      lr *= 0.5;
    }
    if (!stepped) break;
    if (config.checkpoint_every > 0 && (iter + 1) % config.checkpoint_every == 0)
      model.checkpoints_.push_back(loss);
  }
  model.checkpoints_.push_back(loss);

  model.weights_ = std::move(w);
  model.bias_ = b;
  return model;
}

// ---------------------------------------------------------------------------
// Score sets
// ---------------------------------------------------------------------------

ScoreSet load_score_set(const std::string& path, const Cohort& cohort) {
  CsvTable table = read_csv(path);
  int id_col = table.column("id");
  int score_col = table.column("score");
  if (id_col < 0 || score_col < 0)
    fail(Errc::schema_error, "score file needs 'id' and 'score' columns");

  std::vector<int> pert_cols;
  std::vector<std::string> pert_ids;
  for (size_t j = 0; j < table.header.size(); ++j) {
    const std::string& h = table.header[j];
    if (h.rfind("score@", 0) == 0) {
      pert_cols.push_back(static_cast<int>(j));
      pert_ids.push_back(h.substr(6));
    }
  }

  std::map<std::string, size_t> cohort_index;
  for (size_t i = 0; i < cohort.size(); ++i)
    cohort_index[cohort.row_ids[i]] = i;

  const size_t n = cohort.size();
  ScoreSet set;
  set.baseline.assign(n, -1.0);
  for (const auto& id : pert_ids)
    set.perturbed.emplace_back(id, std::vector<double>(n, -1.0));

  std::vector<bool> seen(n, false);
  for (const auto& row : table.rows) {
    const std::string& id = row[id_col];
    auto it = cohort_index.find(id);
    if (it == cohort_index.end())
      fail(Errc::alignment_error, "score file row id not in cohort: " + id);
    size_t i = it->second;
    if (seen[i]) fail(Errc::alignment_error, "duplicate row id in score file: " + id);
    seen[i] = true;
    auto read_score = [&](int col, const std::string& what) {
      double v;
      if (!parse_double(row[col], v))
        fail(Errc::schema_error, "non-numeric " + what + " for id " + id);
      if (!(v >= 0.0 && v <= 1.0))
        fail(Errc::range_error,
             what + " outside [0,1] for id " + id + ": " + row[col]);
      return v;
    };
    set.baseline[i] = read_score(score_col, "score");
    for (size_t k = 0; k < pert_cols.size(); ++k)
      set.perturbed[k].second[i] = read_score(pert_cols[k], "score@" + pert_ids[k]);
  }
  for (size_t i = 0; i < n; ++i)
    if (!seen[i])
      fail(Errc::alignment_error,
           "score file missing cohort row id: " + cohort.row_ids[i]);
  return set;
}

std::string score_set_to_csv(const Cohort& cohort, const ScoreSet& scores) {
  std::ostringstream out;
  out << "id,score";
  for (const auto& [pid, v] : scores.perturbed) out << ",score@" << pid;
  out << "\n";
  for (size_t i = 0; i < cohort.size(); ++i) {
    out << cohort.row_ids[i] << "," << format_double(scores.baseline[i]);
    for (const auto& [pid, v] : scores.perturbed)
      out << "," << format_double(v[i]);
    out << "\n";
  }
  return out.str();
}

}  // namespace preflight
