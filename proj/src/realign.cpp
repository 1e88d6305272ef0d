#include "tmedit/realign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "tmedit/errors.hpp"
#include "tmedit/parallel.hpp"

namespace tmedit {

PlhLogits::PlhLogits(std::size_t n_seqs_, std::size_t n_gaps_,
                     std::size_t k_max_)
    : n_seqs(n_seqs_),
      n_gaps(n_gaps_),
      k_max(k_max_),
      values(n_seqs_ * n_gaps_ * (k_max_ + 1), 0.0),
      valid(n_seqs_ * n_gaps_, 0) {}

std::size_t PlhLogits::gaps_of(std::size_t n) const {
  std::size_t g = 0;
  while (g < n_gaps && is_valid(n, g)) ++g;
  return g;
}

void PlhLogits::validate(double tol) const {
  if (values.size() != n_seqs * n_gaps * classes() ||
      valid.size() != n_seqs * n_gaps) {
    throw DataError("placeholder logits have an inconsistent shape");
  }
  for (std::size_t n = 0; n < n_seqs; ++n) {
    const std::size_t used = gaps_of(n);
    for (std::size_t g = 0; g < n_gaps; ++g) {
      if (is_valid(n, g) != (g < used)) {
        throw DataError("valid gaps of sequence " + std::to_string(n) +
                        " are not a prefix");
      }
      if (!is_valid(n, g)) continue;
      const auto r = row(n, g);
      const double hi = *std::max_element(r.begin(), r.end());
      double s = 0.0;
      for (double v : r) {
        if (std::isnan(v)) throw DataError("NaN in placeholder logits");
        s += std::exp(v - hi);
      }
      const double lse = hi + std::log(s);
      if (!std::isfinite(lse) || std::abs(lse) > tol) {
        throw DataError("placeholder logits of sequence " + std::to_string(n) +
                        " gap " + std::to_string(g) + " are not normalized");
      }
    }
  }
}

std::vector<std::vector<std::size_t>> PlhLogits::argmax() const {
  std::vector<std::vector<std::size_t>> out(n_seqs);
  for (std::size_t n = 0; n < n_seqs; ++n) {
    for (std::size_t g = 0; g < gaps_of(n); ++g) {
      const auto r = row(n, g);
      out[n].push_back(static_cast<std::size_t>(
          std::max_element(r.begin(), r.end()) - r.begin()));
    }
  }
  return out;
}

void PlhLogits::normalize_row(std::span<double> row) {
  const double hi = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double v : row) s += std::exp(v - hi);
  const double lse = hi + std::log(s);
  for (double& v : row) v -= lse;
}

PlhLogits PlhLogits::one_hot(const std::vector<std::vector<std::size_t>>& counts,
                             std::size_t k_max) {
  std::size_t gaps = 0;
  for (const auto& c : counts) gaps = std::max(gaps, c.size());
  PlhLogits out(counts.size(), gaps, k_max);
  for (std::size_t n = 0; n < counts.size(); ++n) {
    for (std::size_t g = 0; g < counts[n].size(); ++g) {
      if (counts[n][g] > k_max) throw GapOverflowError(n, g, counts[n][g], k_max);
      out.valid[n * gaps + g] = 1;
      auto r = out.row(n, g);
      std::fill(r.begin(), r.end(), -30.0);
      r[counts[n][g]] = 0.0;
      normalize_row(r);
    }
  }
  return out;
}

void RealignConfig::validate() const {
  if (!(d_max > 0.0)) throw UsageError("realign: d_max must be positive");
  if (!(t0 < t_final && t_final <= steps)) {
    throw UsageError("realign: need t0 < T <= steps");
  }
  if (!(step_size > 0.0)) throw UsageError("realign: step_size must be positive");
  if (!(mu_final >= 0.0)) throw UsageError("realign: mu_T must be >= 0");
  if (!(var_min > 0.0 && var_min <= var_max)) {
    throw UsageError("realign: need 0 < var_min <= var_max");
  }
}

double mu_schedule(const RealignConfig& cfg, double t) {
  const double t0 = static_cast<double>(cfg.t0);
  const double tf = static_cast<double>(cfg.t_final);
  if (t < t0) return 0.0;
  if (t > tf) return cfg.mu_final;
  const double r = (t - t0) / (tf - t0);
  return cfg.mu_final * r * r;
}

std::vector<double> positions(std::span<const double> plan, std::size_t n_seqs,
                              std::size_t n_gaps,
                              std::span<const std::size_t> lengths) {
  std::size_t n_pos = 0;
  for (std::size_t len : lengths) n_pos = std::max(n_pos, len);
  std::vector<double> x(n_seqs * n_pos, 0.0);
  for (std::size_t n = 0; n < n_seqs; ++n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < lengths[n]; ++i) {
      x[n * n_pos + i] = static_cast<double>(i) + acc;
      if (i < n_gaps) acc += plan[n * n_gaps + i];
    }
  }
  return x;
}

RealignProblem::RealignProblem(const PlhLogits& logits,
                               std::span<const TokenSeq> seqs,
                               const RealignConfig& cfg)
    : logits_(logits), cfg_(cfg) {
  cfg_.validate();
  logits_.validate();
  if (seqs.size() != logits_.n_seqs) {
    throw DataError("realign: " + std::to_string(seqs.size()) +
                    " sequences for logits over " +
                    std::to_string(logits_.n_seqs));
  }
  const auto content_keys = token_keys(seqs);
  for (std::size_t n = 0; n < seqs.size(); ++n) {
    if (logits_.gaps_of(n) != seqs[n].size() + 1) {
      throw DataError("realign: sequence " + std::to_string(n) + " has " +
                      std::to_string(seqs[n].size() + 1) + " gaps but " +
                      std::to_string(logits_.gaps_of(n)) + " logit rows");
    }
    std::vector<TokenKey> k{Vocab::kBos};
    k.insert(k.end(), content_keys[n].begin(), content_keys[n].end());
    k.push_back(Vocab::kEos);
    lengths_.push_back(k.size());
    n_pos_ = std::max(n_pos_, k.size());
    keys_.push_back(std::move(k));
  }

  mean_.assign(plan_size(), 0.0);
  var_.assign(plan_size(), 0.0);
  for (std::size_t n = 0; n < n_seqs(); ++n) {
    for (std::size_t g = 0; g < n_gaps(); ++g) {
      if (!logits_.is_valid(n, g)) continue;
      double m1 = 0.0, m2 = 0.0;
      const auto r = logits_.row(n, g);
      for (std::size_t k = 0; k < r.size(); ++k) {
        const double p = std::exp(r[k]);
        m1 += p * static_cast<double>(k);
        m2 += p * static_cast<double>(k * k);
      }
      mean_[n * n_gaps() + g] = m1;
      var_[n * n_gaps() + g] =
          std::clamp(m2 - m1 * m1, cfg_.var_min, cfg_.var_max);
    }
  }
}

std::vector<double> RealignProblem::positions(std::span<const double> plan) const {
  return tmedit::positions(plan, n_seqs(), n_gaps(), lengths_);
}

std::vector<std::uint8_t> RealignProblem::graph(std::span<const double> x) const {
  const std::size_t np = n_pos_;
  const std::size_t ns = n_seqs();
  std::vector<std::uint8_t> g(ns * np * ns * np, 0);
  for (std::size_t n = 0; n < ns; ++n) {
    for (std::size_t i = 0; i < lengths_[n]; ++i) {
      for (std::size_t m = 0; m < ns; ++m) {
        if (m == n) continue;
        for (std::size_t j = 0; j < lengths_[m]; ++j) {
          if (keys_[n][i] == keys_[m][j] &&
              std::abs(x[n * np + i] - x[m * np + j]) < cfg_.d_max) {
            g[((n * np + i) * ns + m) * np + j] = 1;
          }
        }
      }
    }
  }
  return g;
}

LossTerms RealignProblem::losses(std::span<const double> plan, double t,
                                 LossGradients* grads) const {
  const std::size_t ng = n_gaps();
  const std::size_t np = n_pos_;
  LossTerms out;
  if (grads) {
    grads->likelihood.assign(plan_size(), 0.0);
    grads->alignment.assign(plan_size(), 0.0);
    grads->integer.assign(plan_size(), 0.0);
  }
  const double mu = mu_schedule(cfg_, t);
  for (std::size_t idx = 0; idx < plan_size(); ++idx) {
    if (!logits_.valid[idx]) continue;
    const double diff = plan[idx] - mean_[idx];
    out.likelihood += diff * diff / (2.0 * var_[idx]);
    const double s = std::sin(std::numbers::pi * plan[idx]);
    out.integer += mu * s * s;
    if (grads) {
      grads->likelihood[idx] = diff / var_[idx];
      grads->integer[idx] =
          mu * std::numbers::pi * std::sin(2.0 * std::numbers::pi * plan[idx]);
    }
  }

  const auto x = positions(plan);
  for (std::size_t n = 0; n < n_seqs(); ++n) {
    for (std::size_t i = 0; i < lengths_[n]; ++i) {
      const double xi = x[n * np + i];
      double best = std::numeric_limits<double>::infinity();
      std::size_t bm = 0, bj = 0;
      for (std::size_t m = 0; m < n_seqs(); ++m) {
        if (m == n) continue;
        for (std::size_t j = 0; j < lengths_[m]; ++j) {
          if (keys_[n][i] != keys_[m][j]) continue;
          const double d = std::abs(xi - x[m * np + j]);
          if (d < cfg_.d_max && d < best) {
            best = d;
            bm = m;
            bj = j;
          }
        }
      }
      if (!std::isfinite(best)) continue;
      out.alignment += best;
      if (!grads) continue;
      const double diff = xi - x[bm * np + bj];
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      if (sign == 0.0) continue;
      for (std::size_t g = 0; g < std::min(i, ng); ++g) {
        grads->alignment[n * ng + g] += sign;
      }
      for (std::size_t g = 0; g < std::min(bj, ng); ++g) {
        grads->alignment[bm * ng + g] -= sign;
      }
    }
  }
  if (grads) {
    for (std::size_t idx = 0; idx < plan_size(); ++idx) {
      if (!logits_.valid[idx]) grads->alignment[idx] = 0.0;
    }
  }
  return out;
}

std::vector<double> RealignProblem::argmax_plan() const {
  std::vector<double> p(plan_size(), 0.0);
  const auto am = logits_.argmax();
  for (std::size_t n = 0; n < n_seqs(); ++n) {
    for (std::size_t g = 0; g < am[n].size(); ++g) {
      p[n * n_gaps() + g] = static_cast<double>(am[n][g]);
    }
  }
  return p;
}

RealignResult realign(const PlhLogits& logits, std::span<const TokenSeq> seqs,
                      const RealignConfig& cfg) {
  const RealignProblem prob(logits, seqs, cfg);
  const std::size_t ng = prob.n_gaps();
  const double k_max = static_cast<double>(logits.k_max);
  const std::vector<double> start = prob.argmax_plan();
  std::vector<double> p = start;
  LossGradients grads;
  for (std::size_t t = 0; t < cfg.steps; ++t) {
    const LossTerms l = prob.losses(p, static_cast<double>(t), &grads);
    if (!std::isfinite(l.total())) {
      throw DataError("realign: non-finite loss at step " + std::to_string(t));
    }
    for (std::size_t idx = 0; idx < p.size(); ++idx) {
      if (!logits.valid[idx]) continue;
      const double g =
          grads.likelihood[idx] + grads.alignment[idx] + grads.integer[idx];
      p[idx] = std::clamp(p[idx] - cfg.step_size * g, 0.0, k_max);
    }
  }
  std::vector<double> rounded(p.size(), 0.0);
  for (std::size_t idx = 0; idx < p.size(); ++idx) {
    if (logits.valid[idx]) rounded[idx] = std::min(std::floor(p[idx] + 0.5), k_max);
  }

  RealignResult res;
  const double t_end = static_cast<double>(cfg.steps);
  res.loss_before = prob.losses(start, t_end);
  res.loss_after = prob.losses(rounded, t_end);
  if (res.loss_after.total() > res.loss_before.total()) {
    rounded = start;
    res.loss_after = res.loss_before;
    res.kept_argmax = true;
  }
  res.initial = logits.argmax();
  res.counts.resize(prob.n_seqs());
  for (std::size_t n = 0; n < prob.n_seqs(); ++n) {
    for (std::size_t g = 0; g < res.initial[n].size(); ++g) {
      const auto c = static_cast<std::size_t>(rounded[n * ng + g]);
      res.counts[n].push_back(c);
      res.changes += c > res.initial[n][g] ? c - res.initial[n][g]
                                           : res.initial[n][g] - c;
    }
  }
  return res;
}

std::vector<RealignResult> realign_batch(std::span<const RealignInstance> batch,
                                         const RealignConfig& cfg) {
  std::vector<RealignResult> out(batch.size());
  FirstException err;
  const auto n = static_cast<std::int64_t>(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t b = 0; b < n; ++b) {
    err.run([&] { out[b] = realign(batch[b].logits, batch[b].seqs, cfg); });
  }
  err.rethrow();
  return out;
}

std::vector<RealignResult> realign_batch_serial(
    std::span<const RealignInstance> batch, const RealignConfig& cfg) {
  std::vector<RealignResult> out;
  out.reserve(batch.size());
  for (const auto& inst : batch) out.push_back(realign(inst.logits, inst.seqs, cfg));
  return out;
}

}  // namespace tmedit
