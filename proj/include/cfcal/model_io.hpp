#pragma once

#include "cfcal/phase2.hpp"
#include "cfcal/regress/forest.hpp"
#include "cfcal/regress/mlp.hpp"
#include "cfcal/regress/rigid.hpp"

#include <array>
#include <iosfwd>
#include <string>

namespace cfcal::model_io {

// Versioned line-oriented text. Every file starts with "<magic> <version>",
// stores parameters row-major with 17 significant digits and ends with an
// "end" line, so a cut-off file is reported as truncated rather than loaded.
// Readers throw FormatError with kind Version, Truncated, NonNumeric or
// Malformed.

void write_mlp(std::ostream& out, const regress::MlpModel& m);
regress::MlpModel read_mlp(std::istream& in, const std::string& what = "mlp");
void save_mlp(const regress::MlpModel& m, const std::string& path);
regress::MlpModel load_mlp(const std::string& path);

void write_forest(std::ostream& out, const regress::ForestModel& f);
regress::ForestModel read_forest(std::istream& in, const std::string& what = "forest");
void save_forest(const regress::ForestModel& f, const std::string& path);
regress::ForestModel load_forest(const std::string& path);

void write_rigid(std::ostream& out, const regress::PerYawRigid& r);
regress::PerYawRigid read_rigid(std::istream& in, const std::string& what = "rigid");
void save_rigid(const regress::PerYawRigid& r, const std::string& path);
regress::PerYawRigid load_rigid(const std::string& path);

// The combined predictor is a small manifest naming an MLP file and one forest
// file per yaw, relative to the manifest's directory.
struct CombinedFiles {
  std::string mlp;
  std::array<std::string, 5> forests;  // in kYawTags order
};

CombinedFiles combined_file_names(const std::string& stem = "");
// Writes the manifest and forest files, and the MLP file unless it is already
// persisted elsewhere (write_mlp = false).
void save_combined(const phase2::CombinedPredictor& cp, const std::string& manifest_path,
                   const CombinedFiles& files, bool write_mlp = true);
phase2::CombinedPredictor load_combined(const std::string& manifest_path);

}  // namespace cfcal::model_io
