#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlpsel/dataset.hpp"
#include "mlpsel/likelihood.hpp"
#include "mlpsel/sampling.hpp"
#include "mlpsel/selection.hpp"

namespace mlpsel {

// Draws x_t ~ input i.i.d., eps_t ~ N(0, sigma2) and y_t = F_theta0(x_t) + eps_t.
// sigma2 == 0 produces noiseless data (testing only). Same seed, same dataset,
// regardless of thread count.
Dataset generate_dataset(const MlpParams& theta0, const TransferFunction& phi,
                         const NoiseModel& noise, const InputDistribution& input, std::int64_t n,
                         std::uint64_t seed);

// One simulation study: true network, noise, inputs, sample-size grid,
// replication count, candidate range and penalty, optimizer settings.
// Replication seeds derive as seed_mix({master_seed, n, r}) so cells can run
// in any order or in parallel with identical results.
struct ExperimentPlan {
  MlpParams theta0;
  Transfer transfer = Transfer::tanh;
  NoiseModel noise{0.09};
  InputDistribution input = InputDistribution::standard_normal(1);
  std::vector<std::int64_t> n_grid{100, 500, 2000, 5000};
  int replications = 50;
  int M = 3;
  Penalty penalty = Penalty::bic();
  FitConfig fit_cfg;
  SpaceBounds space;
  std::uint64_t master_seed = 20260810;
  double lrs_loose_factor = 10.0;  // box multiplier for the loosely-bounded contrast

  void validate() const;
  // Likelihood evaluation needs a positive variance even for noiseless data.
  NoiseModel eval_noise() const { return NoiseModel(noise.sigma2 > 0.0 ? noise.sigma2 : 1.0); }
};

struct ConsistencyCell {
  std::int64_t n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  int k_hat = 0;
  bool failed = false;
  std::string error;
};

struct ConsistencySummaryRow {
  std::int64_t n = 0;
  std::vector<std::int64_t> k_hat_counts;  // index k-1, k = 1..M
  double freq_true = 0.0;                  // fraction of valid cells with k_hat == k0
  int failures = 0;
  bool invalid = false;  // more than 10% of the cells at this n failed
};

struct ConsistencyTable {
  int k0 = 0;
  std::vector<ConsistencyCell> cells;          // all (n, rep) cells, row-major in (n, rep)
  std::vector<ConsistencySummaryRow> per_n;
};

// Selection consistency study: for every (n, replication) cell, generate a
// dataset and run the penalized selection; report the empirical distribution
// of the selected unit count per n.
ConsistencyTable consistency_experiment(const ExperimentPlan& plan);

struct LrsCell {
  std::int64_t n = 0;
  int rep = 0;
  int condition = 0;  // 0 = bounded, 1 = loosely bounded
  double lrs_raw = 0.0;
  double lrs = 0.0;  // clamped at zero
  bool failed = false;
  std::string error;
};

struct LrsSummaryRow {
  std::int64_t n = 0;
  int condition = 0;
  double median = 0.0;
  double q90 = 0.0;
  double min_raw = 0.0;
  int clamped = 0;
  int failures = 0;
  bool invalid = false;
};

struct LrsTable {
  int k0 = 0;
  int k_over = 0;
  std::vector<LrsCell> cells;
  std::vector<LrsSummaryRow> per_n;
};

// Likelihood-ratio statistic study: LRS = 2 (max_{k_over} l_n - max_{k0} l_n)
// per replication, under the configured box bound and under a loosened box
// (bound multiplied by lrs_loose_factor). The overfit maximization is
// warm-started from the k0 solution, so the raw statistic is nonnegative up
// to optimizer slack; the clamped value never is below zero.
LrsTable lrs_tightness_experiment(const ExperimentPlan& plan, int k_over);

const char* condition_name(int condition);

}  // namespace mlpsel
