#include "cfcal/config.hpp"
#include "cfcal/debridesim.hpp"
#include "cfcal/errors.hpp"
#include "cfcal/model_io.hpp"
#include "cfcal/phase1.hpp"
#include "cfcal/pipeline.hpp"
#include "cfcal/regress/mlp.hpp"
#include "cfcal/regress/rigid.hpp"
#include "cfcal/stereocam.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <vector>

namespace py = pybind11;
using namespace cfcal;

namespace {

using Rows = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ScenarioConfig make_config(const std::optional<std::string>& path, const std::optional<std::string>& text) {
  if (path && text) throw InvalidArgument("pass either config_path or config_text, not both");
  if (path) return load_config(*path);
  if (text) return parse_config(KvDocument::parse_string(*text));
  return {};
}

Orientation orientation(const Eigen::Vector3d& phi) { return {phi[0], phi[1], phi[2]}; }

// Rows of (c_x, c_y, c_z, yaw, pitch, roll) to rows of base positions.
template <class Model>
Rows predict_rows(const Model& m, const Eigen::Ref<const Rows>& X) {
  if (X.cols() != 6) throw InvalidArgument("expected n x 6 inputs");
  Rows out(X.rows(), 3);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const BasePosition b = m.predict(CameraPosition(X(i, 0), X(i, 1), X(i, 2)), {X(i, 3), X(i, 4), X(i, 5)});
    out.row(i) = b.v.transpose();
  }
  return out;
}

std::vector<Vec3> points(const Eigen::Ref<const Rows>& P) {
  if (P.cols() != 3) throw InvalidArgument("expected n x 3 points");
  std::vector<Vec3> out;
  for (Eigen::Index i = 0; i < P.rows(); ++i) out.emplace_back(P(i, 0), P(i, 1), P(i, 2));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Coarse-to-fine calibration workbench";
  m.attr("__version__") = pipeline::kVersion;

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<MissingArtifact>(m, "MissingArtifact", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<NumericFailure>(m, "NumericFailure", error.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
  py::register_exception<DegenerateInput>(m, "DegenerateInput", error.ptr());

  m.def(
      "config_text",
      [](std::optional<std::string> path, std::optional<std::string> text) {
        return cfcal::config_text(make_config(path, text));
      },
      py::arg("config_path") = py::none(), py::arg("config_text") = py::none(),
      "Effective scenario file after defaults are filled in.");

  m.def(
      "run",
      [](const std::string& stage, const std::string& out_dir, std::optional<std::string> path,
         std::optional<std::string> text, std::optional<std::uint64_t> seed, std::optional<std::size_t> threads) {
        ScenarioConfig cfg = make_config(path, text);
        if (seed) cfg.seed = *seed;
        if (threads) cfg.threads = *threads;
        pipeline::Runner runner(cfg, out_dir);
        {
          py::gil_scoped_release release;
          if (stage == "collect") runner.collect();
          else if (stage == "train") runner.train();
          else if (stage == "fine") runner.fine();
          else if (stage == "bench") runner.bench();
          else if (stage == "debride") runner.debride();
          else if (stage == "all") runner.all();
          else throw InvalidArgument("unknown stage '" + stage + "'");
        }
        std::map<std::string, std::string> paths;
        for (const auto& [key, file] : runner.manifest().artifacts) paths[key] = runner.path(key);
        return paths;
      },
      py::arg("stage"), py::arg("out_dir"), py::arg("config_path") = py::none(),
      py::arg("config_text") = py::none(), py::arg("seed") = py::none(), py::arg("threads") = py::none(),
      "Runs one pipeline stage (or 'all') and returns the artifact paths by key.");

  py::class_<stereocam::StereoRig>(m, "StereoRig")
      .def(py::init([] { return stereocam::StereoRig::for_workspace({}); }))
      .def_readwrite("focal_px", &stereocam::StereoRig::focal_px)
      .def_readwrite("baseline", &stereocam::StereoRig::baseline)
      .def_property_readonly("px_per_mm", &stereocam::StereoRig::px_per_mm)
      .def("project",
           [](const stereocam::StereoRig& r, const Eigen::Vector3d& c) {
             const auto p = stereocam::project(CameraPosition(c), r);
             return std::make_pair(Eigen::Vector2d(p.left.u, p.left.v), Eigen::Vector2d(p.right.u, p.right.v));
           })
      .def("triangulate",
           [](const stereocam::StereoRig& r, const Eigen::Vector2d& left, const Eigen::Vector2d& right) {
             return Eigen::Vector3d(stereocam::triangulate({{left[0], left[1]}, {right[0], right[1]}}, r).v);
           })
      .def("to_camera", [](const stereocam::StereoRig& r, const Eigen::Vector3d& w) {
        return Eigen::Vector3d(r.to_camera(WorldPoint(w)).v);
      });

  m.def(
      "fit_rbt",
      [](const Eigen::Ref<const Rows>& src, const Eigen::Ref<const Rows>& dst) {
        const auto s = points(src), d = points(dst);
        const auto T = regress::fit_rbt(s, d);
        return std::make_pair(Eigen::Matrix3d(T.R), Eigen::Vector3d(T.t));
      },
      py::arg("src"), py::arg("dst"), "Least-squares rotation R and translation t with dst ~ R src + t.");

  py::class_<regress::MlpModel>(m, "Mlp")
      .def_property_readonly("sizes", &regress::MlpModel::sizes)
      .def_readonly("epoch_loss", &regress::MlpModel::epoch_loss)
      .def("predict", [](const regress::MlpModel& mm, const Eigen::Ref<const Rows>& X) { return predict_rows(mm, X); });
  py::class_<regress::PerYawRigid>(m, "PerYawRigid")
      .def("predict",
           [](const regress::PerYawRigid& r, const Eigen::Ref<const Rows>& X) { return predict_rows(r, X); });
  py::class_<phase2::CombinedPredictor>(m, "CombinedPredictor")
      .def_readonly("mlp", &phase2::CombinedPredictor::mlp)
      .def("predict",
           [](const phase2::CombinedPredictor& cp, const Eigen::Ref<const Rows>& X) { return predict_rows(cp, X); });

  m.def("load_mlp", &model_io::load_mlp, py::arg("path"));
  m.def("load_rigid", &model_io::load_rigid, py::arg("path"));
  m.def("load_combined", &model_io::load_combined, py::arg("manifest_path"));

  m.def(
      "load_coarse_dataset",
      [](const std::string& csv, const std::string& meta) {
        const auto ds = phase1::load_dataset(csv, meta);
        Rows X(static_cast<Eigen::Index>(ds.size()), 6), Y(static_cast<Eigen::Index>(ds.size()), 3);
        for (std::size_t i = 0; i < ds.size(); ++i) {
          const auto in = ds.samples[i].input();
          for (int j = 0; j < 6; ++j) X(static_cast<Eigen::Index>(i), j) = in[static_cast<std::size_t>(j)];
          Y.row(static_cast<Eigen::Index>(i)) = ds.samples[i].target.v.transpose();
        }
        return std::make_pair(X, Y);
      },
      py::arg("csv_path"), py::arg("provenance_path"),
      "Cleaned Phase I samples as (inputs n x 6, targets n x 3).");

  m.def("snap_yaw", &debridesim::snap_yaw, py::arg("angle_deg"));
}
