#pragma once

#include "cfcal/config.hpp"
#include "cfcal/kvfile.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

namespace cfcal::pipeline {

inline constexpr const char* kVersion = "0.1.0";

// Record of what a run produced. Artifact paths are relative to the output
// directory.
struct RunManifest {
  std::uint64_t config_hash{0};
  std::string version{kVersion};
  std::map<std::string, std::string> artifacts;
  std::map<std::string, double> durations;  // seconds per stage

  KvDocument to_kv() const;
  static RunManifest from_kv(const KvDocument& doc);
};

// Stage driver. Each stage reads its inputs from the manifest in the output
// directory and throws MissingArtifact naming the stage that should have
// produced them. A manifest written under a different configuration is
// discarded when a stage starts.
class Runner {
 public:
  Runner(ScenarioConfig config, std::string out_dir, std::ostream* log = nullptr);

  void collect();
  void train();
  void fine();
  void bench();
  void debride();
  void all();

  const RunManifest& manifest() const { return manifest_; }
  std::string path(const std::string& artifact_key) const;
  std::string manifest_path() const;

 private:
  void begin(const char* stage);
  void end(const char* stage, double seconds);
  std::string require(const std::string& key, const char* producer) const;
  void record(const std::string& key, const std::string& file);

  ScenarioConfig config_;
  std::string out_dir_;
  std::ostream* log_;
  RunManifest manifest_;
};

}  // namespace cfcal::pipeline
