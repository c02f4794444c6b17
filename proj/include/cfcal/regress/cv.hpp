#pragma once

#include "cfcal/phase1.hpp"
#include "cfcal/predictor.hpp"
#include "cfcal/regress/mlp.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cfcal::regress {

struct CvReport {
  std::vector<double> fold_loss;  // mean squared L2 on each held-out fold, mm^2
  double mean{0.0};
  double stddev{0.0};  // population spread of the fold losses
  int k{0};
};

// Seeded assignment of n rows to k folds. Fold sizes differ by at most one and
// every index appears in exactly one fold, sorted within its fold.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int k, std::uint64_t seed);

// Fits a predictor on the training rows of one fold.
using Trainer = std::function<Predictor(const phase1::CoarseDataset& train, std::size_t fold)>;

double mean_squared_error(const Predictor& p, const phase1::CoarseDataset& ds);

CvReport summarize_folds(std::vector<double> fold_loss);

// Folds are independent and may be trained in parallel; the report does not
// depend on the thread count.
CvReport kfold_cv(const phase1::CoarseDataset& ds, int k, const Trainer& trainer, std::uint64_t seed,
                  std::size_t threads = 1);

// The 4 x 2 x 3 grid: hidden layers 1-4, width 30 or 300, relu/sigmoid/tanh.
std::vector<MlpArch> sweep_configs();

struct SweepEntry {
  MlpArch arch;
  CvReport report;
};

// Every configuration under k-fold CV, sorted by mean loss (stable on ties).
// Each (config, fold) pair is an independent job.
std::vector<SweepEntry> hyperparam_sweep(const phase1::CoarseDataset& ds, int k, const TrainOptions& base,
                                         std::uint64_t seed, std::size_t threads = 1);

// "config,mean,std" rows in ranked order.
std::string sweep_csv(const std::vector<SweepEntry>& entries);
// Ranked "mean ± std" listing of the first `top` entries.
std::string sweep_report(const std::vector<SweepEntry>& entries, std::size_t top = 12);

}  // namespace cfcal::regress
