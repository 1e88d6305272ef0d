#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tmedit/token_seq.hpp"

namespace tmedit {

// Placeholder-count log-probabilities: n_seqs x n_gaps x (k_max + 1), row
// major. Gap g of sequence n sits between framed tokens g and g + 1, so a
// sequence with c content tokens uses gaps 0..c; the rest are padding.
struct PlhLogits {
  std::size_t n_seqs = 0;
  std::size_t n_gaps = 0;
  std::size_t k_max = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;  // n_seqs x n_gaps

  PlhLogits() = default;
  PlhLogits(std::size_t n_seqs, std::size_t n_gaps, std::size_t k_max);

  std::size_t classes() const { return k_max + 1; }
  bool is_valid(std::size_t n, std::size_t g) const {
    return valid[n * n_gaps + g] != 0;
  }
  double& at(std::size_t n, std::size_t g, std::size_t k) {
    return values[(n * n_gaps + g) * classes() + k];
  }
  double at(std::size_t n, std::size_t g, std::size_t k) const {
    return values[(n * n_gaps + g) * classes() + k];
  }
  std::span<const double> row(std::size_t n, std::size_t g) const {
    return {values.data() + (n * n_gaps + g) * classes(), classes()};
  }
  std::span<double> row(std::size_t n, std::size_t g) {
    return {values.data() + (n * n_gaps + g) * classes(), classes()};
  }

  // Number of valid gaps of sequence n (valid gaps form a prefix).
  std::size_t gaps_of(std::size_t n) const;

  // Shape and normalization check (log-sum-exp within tol of 0 on valid
  // rows, masked rows ignored). Throws DataError.
  void validate(double tol = 1e-4) const;

  // Per sequence, argmax count of each valid gap; ties to the lowest count.
  std::vector<std::vector<std::size_t>> argmax() const;

  // Log-softmax of a raw score row, in place.
  static void normalize_row(std::span<double> row);

  // Near one-hot rows (-30 nats off the chosen count), one row per gap;
  // counts[n].size() gaps are valid for sequence n.
  static PlhLogits one_hot(const std::vector<std::vector<std::size_t>>& counts,
                           std::size_t k_max);
};

struct RealignConfig {
  double d_max = 4.0;
  std::size_t steps = 100;
  double step_size = 0.03;
  std::size_t t0 = 30;
  std::size_t t_final = 80;
  double mu_final = 1.0;
  double var_min = 0.25;
  double var_max = 4.0;

  // Throws UsageError.
  void validate() const;
};

// Integer-loss scale at step t.
double mu_schedule(const RealignConfig& cfg, double t);

struct LossTerms {
  double likelihood = 0.0;
  double alignment = 0.0;
  double integer = 0.0;
  double total() const { return likelihood + alignment + integer; }
};

struct LossGradients {
  std::vector<double> likelihood;
  std::vector<double> alignment;
  std::vector<double> integer;
};

// X[n][i] = i + sum_{g < i} P[n][g] over framed positions i < lengths[n].
// P is n_seqs x n_gaps row major; the result is n_seqs x n_pos row major
// with padding positions left at 0.
std::vector<double> positions(std::span<const double> plan, std::size_t n_seqs,
                              std::size_t n_gaps,
                              std::span<const std::size_t> lengths);

// One realignment instance: logits plus the framed token keys of the
// sequences the placeholders are inserted into.
class RealignProblem {
 public:
  RealignProblem(const PlhLogits& logits, std::span<const TokenSeq> seqs,
                 const RealignConfig& cfg);

  std::size_t n_seqs() const { return logits_.n_seqs; }
  std::size_t n_gaps() const { return logits_.n_gaps; }
  std::size_t n_pos() const { return n_pos_; }
  std::size_t plan_size() const { return logits_.n_seqs * logits_.n_gaps; }
  const std::vector<std::size_t>& lengths() const { return lengths_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& variance() const { return var_; }

  std::vector<double> positions(std::span<const double> plan) const;

  // G as a dense n_seqs x n_pos x n_seqs x n_pos byte tensor.
  std::vector<std::uint8_t> graph(std::span<const double> x) const;

  // Loss terms at step t; gradients with respect to P when requested
  // (masked entries get 0).
  LossTerms losses(std::span<const double> plan, double t,
                   LossGradients* grads = nullptr) const;

  std::vector<double> argmax_plan() const;

 private:
  PlhLogits logits_;
  RealignConfig cfg_;
  std::vector<std::vector<TokenKey>> keys_;  // framed
  std::vector<std::size_t> lengths_;         // framed lengths
  std::size_t n_pos_ = 0;
  std::vector<double> mean_;
  std::vector<double> var_;
};

struct RealignResult {
  std::vector<std::vector<std::size_t>> counts;  // per sequence, valid gaps
  std::vector<std::vector<std::size_t>> initial;  // argmax counts
  std::size_t changes = 0;  // sum |counts - initial|
  LossTerms loss_before;    // argmax plan at t = steps
  LossTerms loss_after;     // returned plan at t = steps
  bool kept_argmax = false;  // rounded plan was worse, argmax returned
};

// Subgradient descent from the argmax plan, clamped to [0, k_max], rounded
// half-up. Throws DataError on a non-finite loss (with the step index).
RealignResult realign(const PlhLogits& logits, std::span<const TokenSeq> seqs,
                      const RealignConfig& cfg = {});

struct RealignInstance {
  PlhLogits logits;
  std::vector<TokenSeq> seqs;
};

// OpenMP over instances.
std::vector<RealignResult> realign_batch(std::span<const RealignInstance> batch,
                                         const RealignConfig& cfg = {});
std::vector<RealignResult> realign_batch_serial(
    std::span<const RealignInstance> batch, const RealignConfig& cfg = {});

}  // namespace tmedit
