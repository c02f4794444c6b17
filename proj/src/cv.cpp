#include "cfcal/regress/cv.hpp"

#include "cfcal/errors.hpp"
#include "cfcal/kvfile.hpp"
#include "cfcal/parallel.hpp"
#include "cfcal/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace cfcal::regress {

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("kfold: k must be at least 2");
  if (static_cast<std::size_t>(k) > n)
    throw InvalidArgument("kfold: k=" + std::to_string(k) + " exceeds dataset size " + std::to_string(n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(derive_seed(seed, Stream::Fold));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) folds[i % static_cast<std::size_t>(k)].push_back(perm[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

double mean_squared_error(const Predictor& p, const phase1::CoarseDataset& ds) {
  if (ds.empty()) throw EmptyDataset("mean_squared_error: empty dataset");
  double sum = 0.0;
  for (const auto& s : ds.samples) sum += (p(s.camera, s.orientation).v - s.target.v).squaredNorm();
  return sum / static_cast<double>(ds.size());
}

CvReport summarize_folds(std::vector<double> fold_loss) {
  CvReport r;
  r.k = static_cast<int>(fold_loss.size());
  r.fold_loss = std::move(fold_loss);
  if (r.fold_loss.empty()) return r;
  r.mean = std::accumulate(r.fold_loss.begin(), r.fold_loss.end(), 0.0) / r.k;
  double ss = 0.0;
  for (double l : r.fold_loss) ss += (l - r.mean) * (l - r.mean);
  r.stddev = std::sqrt(ss / r.k);
  return r;
}

namespace {

struct FoldData {
  phase1::CoarseDataset train;
  phase1::CoarseDataset test;
};

std::vector<FoldData> split_folds(const phase1::CoarseDataset& ds, int k, std::uint64_t seed) {
  const auto folds = kfold_indices(ds.size(), k, seed);
  std::vector<FoldData> out(folds.size());
  for (std::size_t j = 0; j < folds.size(); ++j) {
    std::vector<std::size_t> train;
    train.reserve(ds.size() - folds[j].size());
    for (std::size_t o = 0; o < folds.size(); ++o)
      if (o != j) train.insert(train.end(), folds[o].begin(), folds[o].end());
    std::sort(train.begin(), train.end());
    out[j].train = ds.subset(train);
    out[j].test = ds.subset(folds[j]);
  }
  return out;
}

}  // namespace

CvReport kfold_cv(const phase1::CoarseDataset& ds, int k, const Trainer& trainer, std::uint64_t seed,
                  std::size_t threads) {
  const auto folds = split_folds(ds, k, seed);
  std::vector<double> loss(folds.size());
  parallel_for(folds.size(), threads, [&](std::size_t j) {
    const Predictor p = trainer(folds[j].train, j);
    loss[j] = mean_squared_error(p, folds[j].test);
  });
  return summarize_folds(std::move(loss));
}

std::vector<MlpArch> sweep_configs() {
  std::vector<MlpArch> out;
  for (int layers = 1; layers <= 4; ++layers)
    for (int width : {30, 300})
      for (Activation a : {Activation::Relu, Activation::Sigmoid, Activation::Tanh})
        out.push_back({layers, width, a});
  return out;
}

std::vector<SweepEntry> hyperparam_sweep(const phase1::CoarseDataset& ds, int k, const TrainOptions& base,
                                         std::uint64_t seed, std::size_t threads) {
  if (ds.empty()) throw EmptyDataset("hyperparam_sweep: empty dataset");
  const auto configs = sweep_configs();
  const auto folds = split_folds(ds, k, seed);
  const std::size_t nf = folds.size();
  std::vector<double> loss(configs.size() * nf);
  parallel_for(loss.size(), threads, [&](std::size_t job) {
    const std::size_t c = job / nf, j = job % nf;
    TrainOptions opts = base;
    opts.seed = derive_seed(seed, Stream::Sweep, job);
    const MlpModel m = train_mlp(folds[j].train, configs[c], opts);
    loss[job] = mean_squared_error([&m](const CameraPosition& x, const Orientation& phi) { return m.predict(x, phi); },
                                   folds[j].test);
  });
  std::vector<SweepEntry> out;
  for (std::size_t c = 0; c < configs.size(); ++c)
    out.push_back({configs[c], summarize_folds({loss.begin() + static_cast<std::ptrdiff_t>(c * nf),
                                                loss.begin() + static_cast<std::ptrdiff_t>((c + 1) * nf)})});
  std::stable_sort(out.begin(), out.end(),
                   [](const SweepEntry& a, const SweepEntry& b) { return a.report.mean < b.report.mean; });
  return out;
}

std::string sweep_csv(const std::vector<SweepEntry>& entries) {
  std::ostringstream os;
  os << "config,mean,std\n";
  for (const auto& e : entries)
    os << e.arch.tag() << ',' << format_double(e.report.mean) << ',' << format_double(e.report.stddev) << '\n';
  return os.str();
}

std::string sweep_report(const std::vector<SweepEntry>& entries, std::size_t top) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-4s  %-16s  %s\n", "rank", "config", "cv loss (mm^2)");
  os << buf;
  for (std::size_t i = 0; i < std::min(top, entries.size()); ++i) {
    std::snprintf(buf, sizeof buf, "%-4zu  %-16s  %.3f +/- %.3f\n", i + 1, entries[i].arch.tag().c_str(),
                  entries[i].report.mean, entries[i].report.stddev);
    os << buf;
  }
  return os.str();
}

}  // namespace cfcal::regress
