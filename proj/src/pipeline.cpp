#include "cfcal/pipeline.hpp"

#include "cfcal/debridesim.hpp"
#include "cfcal/errors.hpp"
#include "cfcal/evalbench.hpp"
#include "cfcal/model_io.hpp"
#include "cfcal/phase1.hpp"
#include "cfcal/phase2.hpp"
#include "cfcal/regress/cv.hpp"
#include "cfcal/regress/linear.hpp"
#include "cfcal/regress/rigid.hpp"
#include "cfcal/rng.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace cfcal::pipeline {

namespace fs = std::filesystem;

KvDocument RunManifest::to_kv() const {
  KvDocument doc;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
  doc.set("run", "config_hash", hash);
  doc.set("run", "version", version);
  for (const auto& [k, v] : artifacts) doc.set("artifacts", k, v);
  for (const auto& [k, v] : durations) doc.set("durations", k, v);
  return doc;
}

RunManifest RunManifest::from_kv(const KvDocument& doc) {
  RunManifest m;
  const auto& h = doc.require("run", "config_hash");
  try {
    m.config_hash = std::stoull(h.value, nullptr, 16);
  } catch (const std::exception&) {
    throw ConfigError(h.line, "malformed config_hash");
  }
  m.version = doc.require("run", "version").value;
  for (const auto& e : doc.entries()) {
    if (e.section == "artifacts") m.artifacts[e.key] = e.value;
    if (e.section == "durations") m.durations[e.key] = parse_double(e.value, e.line);
  }
  return m;
}

namespace {

std::string yaw_suffix(int tag) { return tag < 0 ? "m" + std::to_string(-tag) : std::to_string(tag); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

Predictor as_predictor(const regress::MlpModel& m) {
  return [&m](const CameraPosition& c, const Orientation& phi) { return m.predict(c, phi); };
}

}  // namespace

Runner::Runner(ScenarioConfig config, std::string out_dir, std::ostream* log)
    : config_(std::move(config)), out_dir_(std::move(out_dir)), log_(log) {
  validate(config_);
  manifest_.config_hash = config_hash(config_);
  const fs::path mp = manifest_path();
  if (fs::exists(mp)) {
    RunManifest old;
    try {
      old = RunManifest::from_kv(KvDocument::load(mp.string()));
    } catch (const ConfigError& e) {
      throw FormatError(FormatError::Kind::Malformed, mp.string() + ": " + e.what());
    }
    if (old.config_hash == manifest_.config_hash) manifest_ = old;
  }
}

std::string Runner::manifest_path() const { return (fs::path(out_dir_) / "manifest.txt").string(); }

std::string Runner::path(const std::string& key) const {
  const auto it = manifest_.artifacts.find(key);
  if (it == manifest_.artifacts.end()) throw InvalidArgument("no artifact '" + key + "'");
  return (fs::path(out_dir_) / it->second).string();
}

std::string Runner::require(const std::string& key, const char* producer) const {
  const auto it = manifest_.artifacts.find(key);
  if (it == manifest_.artifacts.end() || !fs::exists(fs::path(out_dir_) / it->second))
    throw MissingArtifact(producer, "missing " + key + " in " + out_dir_ + "; run the '" + std::string(producer) +
                                        "' stage first");
  return (fs::path(out_dir_) / it->second).string();
}

void Runner::record(const std::string& key, const std::string& file) { manifest_.artifacts[key] = file; }

void Runner::begin(const char* stage) {
  fs::create_directories(out_dir_);
  if (log_) *log_ << "[" << stage << "]\n";
}

void Runner::end(const char* stage, double seconds) {
  manifest_.durations[stage] = seconds;
  manifest_.to_kv().save(manifest_path());
}

namespace {

template <class Fn>
double timed(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void Runner::collect() {
  begin("collect");
  const double secs = timed([&] {
    const worldsim::Arm arm = make_arm(config_);
    const phase1::Sensors sensors{make_rig(config_), config_.occlusion, config_.marker_offset};
    const std::uint64_t seed = derive_seed(config_.seed, Stream::Phase1);
    const auto raw = phase1::collect(config_.n_traj, arm, sensors, seed, config_.trajectory, config_.threads);
    const auto ds = phase1::clean(raw, sensors.rig, config_.workspace, config_.clean, seed);

    write_text((fs::path(out_dir_) / "scenario.cfg").string(), config_text(config_));
    arm.field.to_kv().save((fs::path(out_dir_) / "bias.txt").string());
    phase1::save_dataset(ds, (fs::path(out_dir_) / "coarse.csv").string(),
                         (fs::path(out_dir_) / "coarse.meta").string());
    record("config", "scenario.cfg");
    record("bias", "bias.txt");
    record("coarse_dataset", "coarse.csv");
    record("coarse_provenance", "coarse.meta");
    if (log_) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "  %zu raw records, %zu kept (retention %.3f)\n", raw.size(), ds.size(),
                    static_cast<double>(ds.size()) / static_cast<double>(raw.size()));
      *log_ << buf;
    }
  });
  end("collect", secs);
}

void Runner::train() {
  const std::string csv = require("coarse_dataset", "collect");
  const std::string meta = require("coarse_provenance", "collect");
  begin("train");
  const double secs = timed([&] {
    const auto ds = phase1::load_dataset(csv, meta);
    const auto rbt = regress::fit_rbt_per_yaw(ds);
    model_io::save_rigid(rbt, (fs::path(out_dir_) / "rbt.txt").string());
    record("rbt", "rbt.txt");

    regress::TrainOptions opts = config_.train;
    opts.seed = derive_seed(config_.seed, Stream::Mlp);
    const auto mlp = regress::train_mlp(ds, config_.arch, opts);
    model_io::save_mlp(mlp, (fs::path(out_dir_) / "mlp.txt").string());
    record("mlp", "mlp.txt");
    if (log_) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "  %s on %zu samples: loss %.4f -> %.4f mm^2\n", config_.arch.tag().c_str(),
                    ds.size(), mlp.epoch_loss.front(), mlp.epoch_loss.back());
      *log_ << buf;
    }

    if (config_.sweep) {
      regress::TrainOptions sweep_opts = config_.train;
      sweep_opts.epochs = config_.sweep_epochs;
      const std::uint64_t sweep_seed = derive_seed(config_.seed, Stream::Sweep);
      const auto entries = regress::hyperparam_sweep(ds, config_.cv_folds, sweep_opts, sweep_seed, config_.threads);
      std::ostringstream report;
      report << regress::sweep_report(entries, 12) << '\n';
      for (auto repr : {regress::AngleRepr::Euler, regress::AngleRepr::Quaternion}) {
        const auto cv = regress::kfold_cv(
            ds, config_.cv_folds,
            [repr](const phase1::CoarseDataset& train, std::size_t) -> Predictor {
              const auto lm = regress::fit_linear(train, repr);
              return [lm](const CameraPosition& c, const Orientation& phi) { return lm.predict(c, phi); };
            },
            sweep_seed, config_.threads);
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-22s  %.3f +/- %.3f\n",
                      repr == regress::AngleRepr::Euler ? "linear_euler" : "linear_quaternion", cv.mean, cv.stddev);
        report << buf;
      }
      write_text((fs::path(out_dir_) / "sweep.csv").string(), regress::sweep_csv(entries));
      write_text((fs::path(out_dir_) / "sweep.txt").string(), report.str());
      record("sweep_csv", "sweep.csv");
      record("sweep_report", "sweep.txt");
      if (log_) *log_ << report.str();
    }
  });
  end("train", secs);
}

void Runner::fine() {
  const std::string mlp_path = require("mlp", "train");
  begin("fine");
  const double secs = timed([&] {
    phase2::CombinedPredictor cp;
    cp.mlp = model_io::load_mlp(mlp_path);
    const phase2::FineSetup setup{make_arm(config_), make_rig(config_), config_.pitch_roll, config_.hand,
                                  config_.target_pixel_sigma};
    const auto grid = phase2::make_grid(config_.workspace, config_.grid);
    const auto datasets = phase2::collect_fine(as_predictor(cp.mlp), grid, setup,
                                               derive_seed(config_.seed, Stream::Fine), config_.threads);
    regress::ForestOptions fopts = config_.forest;
    fopts.seed = derive_seed(config_.seed, Stream::Forest);
    fopts.threads = config_.threads;
    cp.forests = phase2::train_residual_forests(datasets, fopts);

    const auto files = model_io::combined_file_names();
    for (std::size_t g = 0; g < kYawTags.size(); ++g) {
      const std::string name = "fine_" + yaw_suffix(kYawTags[g]) + ".csv";
      phase2::save_fine_dataset(datasets[g], (fs::path(out_dir_) / name).string());
      record("fine_" + yaw_suffix(kYawTags[g]), name);
      record("forest_" + yaw_suffix(kYawTags[g]), files.forests[g]);
    }
    model_io::save_combined(cp, (fs::path(out_dir_) / "combined.txt").string(), files, false);
    record("combined", "combined.txt");

    // Re-measure the grid with the corrected predictor.
    const Predictor corrected = [&cp](const CameraPosition& c, const Orientation& phi) { return cp.predict(c, phi); };
    const auto after = phase2::collect_fine(corrected, grid, setup, derive_seed(config_.seed, Stream::Fine, 1),
                                            config_.threads);
    std::ostringstream report;
    report << "yaw,samples,failed,mean_correction_mm,mean_correction_after_mm\n";
    for (std::size_t g = 0; g < kYawTags.size(); ++g) {
      report << kYawTags[g] << ',' << datasets[g].size() << ',' << datasets[g].failed << ','
             << format_double(phase2::mean_correction(std::span(&datasets[g], 1))) << ','
             << format_double(phase2::mean_correction(std::span(&after[g], 1))) << '\n';
    }
    report << "all," << 0 << ',' << 0 << ',' << format_double(phase2::mean_correction(datasets)) << ','
           << format_double(phase2::mean_correction(after)) << '\n';
    write_text((fs::path(out_dir_) / "fine_summary.csv").string(), report.str());
    record("fine_summary", "fine_summary.csv");
    if (log_) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "  mean correction %.3f mm before, %.3f mm after residual forests\n",
                    phase2::mean_correction(datasets), phase2::mean_correction(after));
      *log_ << buf;
    }
  });
  end("fine", secs);
}

void Runner::bench() {
  const std::string rbt_path = require("rbt", "train");
  const std::string mlp_path = require("mlp", "train");
  const std::string combined_path = require("combined", "fine");
  begin("bench");
  const double secs = timed([&] {
    const auto rbt = model_io::load_rigid(rbt_path);
    const auto mlp = model_io::load_mlp(mlp_path);
    const auto cp = model_io::load_combined(combined_path);
    const evalbench::BenchSetup setup{make_arm(config_), make_rig(config_), config_.pitch_roll,
                                      config_.target_pixel_sigma};
    const auto grid = phase2::make_grid(config_.workspace, config_.grid);
    const std::vector<std::pair<std::string, Predictor>> predictors{
        {"RBT", [&rbt](const CameraPosition& c, const Orientation& phi) { return rbt.predict(c, phi); }},
        {"DNN", as_predictor(mlp)},
        {"DNN+RF", [&cp](const CameraPosition& c, const Orientation& phi) { return cp.predict(c, phi); }},
    };
    const auto table =
        evalbench::full_table(predictors, grid, setup, derive_seed(config_.seed, Stream::Bench), config_.threads);
    write_text((fs::path(out_dir_) / "bench.csv").string(), table.csv(setup.rig));
    write_text((fs::path(out_dir_) / "bench.txt").string(), table.text(setup.rig));
    record("bench_csv", "bench.csv");
    record("bench_report", "bench.txt");
    if (log_) *log_ << table.text(setup.rig);
  });
  end("bench", secs);
}

void Runner::debride() {
  const std::string mlp_path = require("mlp", "train");
  const std::string combined_path = require("combined", "fine");
  begin("debride");
  const double secs = timed([&] {
    const auto mlp = model_io::load_mlp(mlp_path);
    const auto cp = model_io::load_combined(combined_path);
    const debridesim::TrialSetup setup{make_arm(config_), make_rig(config_), config_.pitch_roll, config_.grasp,
                                       config_.scene, config_.target_pixel_sigma};
    const std::vector<std::pair<std::string, Predictor>> predictors{
        {"DNN", as_predictor(mlp)},
        {"DNN+RF", [&cp](const CameraPosition& c, const Orientation& phi) { return cp.predict(c, phi); }},
    };
    std::ostringstream text, csv;
    csv << "kind,mapping,attempts,success,type_a,type_b,type_c\n";
    for (std::size_t k = 0; k < config_.kinds.size(); ++k) {
      const auto kind = config_.kinds[k];
      const std::uint64_t seed = derive_seed(config_.seed, Stream::Debride, k);
      for (const auto& [name, p] : predictors) {
        const auto tally = debridesim::run_trials(kind, name, p, config_.n_trials, setup, seed);
        text << tally.grid() << '\n';
        csv << debridesim::to_string(kind) << ',' << name << ',' << tally.attempts() << ','
            << tally.count(debridesim::OutcomeTag::Success) << ',' << tally.count(debridesim::OutcomeTag::TypeA)
            << ',' << tally.count(debridesim::OutcomeTag::TypeB) << ',' << tally.count(debridesim::OutcomeTag::TypeC)
            << '\n';
      }
    }
    write_text((fs::path(out_dir_) / "debride.txt").string(), text.str());
    write_text((fs::path(out_dir_) / "debride.csv").string(), csv.str());
    record("debride_report", "debride.txt");
    record("debride_csv", "debride.csv");
    if (log_) *log_ << csv.str();
  });
  end("debride", secs);
}

void Runner::all() {
  collect();
  train();
  fine();
  bench();
  debride();
}

}  // namespace cfcal::pipeline
