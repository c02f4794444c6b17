#include "cfcal/model_io.hpp"

#include "cfcal/errors.hpp"
#include "cfcal/kvfile.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

namespace cfcal::model_io {

using FK = FormatError::Kind;

namespace {

void put(std::ostream& out, const double* v, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) out << (i ? " " : "") << format_double17(v[i]);
  out << '\n';
}

void put(std::ostream& out, const Eigen::VectorXd& v) { put(out, v.data(), v.size()); }

// One line holding exactly n numbers.
std::vector<double> row(TextReader& r, std::size_t n, const std::string& what) {
  const auto toks = r.tokens();
  if (toks.size() != n) {
    const std::string msg = what + ": line " + std::to_string(r.line()) + ": expected " + std::to_string(n) +
                            " values, found " + std::to_string(toks.size());
    throw FormatError(r.eof() ? FK::Truncated : FK::Malformed, msg);
  }
  std::vector<double> out;
  out.reserve(n);
  for (const auto& t : toks) out.push_back(r.number(t));
  return out;
}

Eigen::VectorXd vec_row(TextReader& r, Eigen::Index n, const std::string& what) {
  const auto v = row(r, static_cast<std::size_t>(n), what);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), n);
}

// "keyword v1 v2 ..." with exactly n values after the keyword.
std::vector<std::string> keyed(TextReader& r, std::string_view keyword, std::size_t n, const std::string& what) {
  auto toks = r.expect(keyword);
  if (toks.size() != n)
    throw FormatError(r.eof() ? FK::Truncated : FK::Malformed,
                      what + ": line " + std::to_string(r.line()) + ": '" + std::string(keyword) + "' expects " +
                          std::to_string(n) + " values");
  return toks;
}

void finish(TextReader& r) { r.expect("end"); }

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FK::Truncated, path + ": cannot open");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  return out;
}

int positive_count(TextReader& r, const std::string& tok, const std::string& what) {
  const long long v = r.integer(tok);
  if (v < 0 || v > (1LL << 30))
    throw FormatError(FK::Malformed, what + ": line " + std::to_string(r.line()) + ": bad count " + tok);
  return static_cast<int>(v);
}

std::string yaw_key(int tag) { return tag < 0 ? "m" + std::to_string(-tag) : std::to_string(tag); }

}  // namespace

// --- MLP ---

void write_mlp(std::ostream& out, const regress::MlpModel& m) {
  m.validate();
  out << "cfcal-mlp 1\n";
  out << "activation " << regress::to_string(m.activation) << '\n';
  out << "sizes";
  for (int s : m.sizes()) out << ' ' << s;
  out << '\n';
  out << "input_mean\n";
  put(out, m.input_mean);
  out << "input_std\n";
  put(out, m.input_std);
  out << "output_mean\n";
  put(out, m.output_mean);
  out << "output_std\n";
  put(out, m.output_std);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const auto& W = m.layers[l].weight;
    out << "layer " << l << ' ' << W.rows() << ' ' << W.cols() << '\n';
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      const Eigen::VectorXd r = W.row(i).transpose();
      put(out, r);
    }
    out << "bias\n";
    put(out, m.layers[l].bias);
  }
  out << "epoch_loss " << m.epoch_loss.size() << '\n';
  if (!m.epoch_loss.empty()) put(out, m.epoch_loss.data(), static_cast<Eigen::Index>(m.epoch_loss.size()));
  out << "end\n";
}

regress::MlpModel read_mlp(std::istream& in, const std::string& what) {
  TextReader r(in, what);
  r.expect_header("cfcal-mlp", 1);
  regress::MlpModel m;
  const auto act = keyed(r, "activation", 1, what);
  try {
    m.activation = regress::parse_activation(act[0]);
  } catch (const InvalidArgument& e) {
    throw FormatError(FK::Malformed, what + ": line " + std::to_string(r.line()) + ": " + e.what());
  }
  const auto size_toks = r.expect("sizes");
  if (size_toks.size() < 3) throw FormatError(FK::Malformed, what + ": need at least three layer sizes");
  std::vector<int> sizes;
  for (const auto& t : size_toks) {
    const int s = positive_count(r, t, what);
    if (s < 1) throw FormatError(FK::Malformed, what + ": layer sizes must be positive");
    sizes.push_back(s);
  }
  const int in_dim = sizes.front(), out_dim = sizes.back();
  keyed(r, "input_mean", 0, what);
  m.input_mean = vec_row(r, in_dim, what);
  keyed(r, "input_std", 0, what);
  m.input_std = vec_row(r, in_dim, what);
  keyed(r, "output_mean", 0, what);
  m.output_mean = vec_row(r, out_dim, what);
  keyed(r, "output_std", 0, what);
  m.output_std = vec_row(r, out_dim, what);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto hdr = keyed(r, "layer", 3, what);
    if (r.integer(hdr[0]) != static_cast<long long>(l) || r.integer(hdr[1]) != sizes[l + 1] ||
        r.integer(hdr[2]) != sizes[l])
      throw FormatError(FK::Malformed,
                        what + ": line " + std::to_string(r.line()) + ": layer shape disagrees with sizes");
    regress::DenseLayer layer;
    layer.weight.resize(sizes[l + 1], sizes[l]);
    for (int i = 0; i < sizes[l + 1]; ++i) layer.weight.row(i) = vec_row(r, sizes[l], what).transpose();
    keyed(r, "bias", 0, what);
    layer.bias = vec_row(r, sizes[l + 1], what);
    m.layers.push_back(std::move(layer));
  }
  const auto ne = keyed(r, "epoch_loss", 1, what);
  const int n_epochs = positive_count(r, ne[0], what);
  if (n_epochs > 0) m.epoch_loss = row(r, static_cast<std::size_t>(n_epochs), what);
  finish(r);
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(FK::Malformed, what + ": " + e.what());
  }
  return m;
}

void save_mlp(const regress::MlpModel& m, const std::string& path) {
  auto out = open_out(path);
  write_mlp(out, m);
}

regress::MlpModel load_mlp(const std::string& path) {
  auto in = open_in(path);
  return read_mlp(in, path);
}

// --- forest ---

void write_forest(std::ostream& out, const regress::ForestModel& f) {
  out << "cfcal-forest 1\n";
  out << "dims " << f.input_dim << ' ' << f.output_dim << '\n';
  out << "max_depth " << (f.max_depth ? std::to_string(*f.max_depth) : "none") << '\n';
  out << "min_leaf " << f.min_leaf << '\n';
  out << "trees " << f.trees.size() << '\n';
  for (std::size_t t = 0; t < f.trees.size(); ++t) {
    const auto& tree = f.trees[t];
    const std::size_t leaves = tree.leaf_values.size() / static_cast<std::size_t>(std::max(1, f.output_dim));
    out << "tree " << t << ' ' << (t < f.tree_seeds.size() ? f.tree_seeds[t] : 0) << ' ' << tree.nodes.size() << ' '
        << leaves << '\n';
    for (const auto& n : tree.nodes)
      out << n.feature << ' ' << format_double17(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << n.leaf
          << ' ' << n.count << '\n';
    for (std::size_t l = 0; l < leaves; ++l)
      put(out, &tree.leaf_values[l * static_cast<std::size_t>(f.output_dim)], f.output_dim);
  }
  out << "end\n";
}

regress::ForestModel read_forest(std::istream& in, const std::string& what) {
  TextReader r(in, what);
  r.expect_header("cfcal-forest", 1);
  regress::ForestModel f;
  const auto dims = keyed(r, "dims", 2, what);
  f.input_dim = positive_count(r, dims[0], what);
  f.output_dim = positive_count(r, dims[1], what);
  if (f.input_dim < 1 || f.output_dim < 1) throw FormatError(FK::Malformed, what + ": dimensions must be positive");
  const auto md = keyed(r, "max_depth", 1, what);
  if (md[0] != "none") f.max_depth = positive_count(r, md[0], what);
  f.min_leaf = positive_count(r, keyed(r, "min_leaf", 1, what)[0], what);
  const int n_trees = positive_count(r, keyed(r, "trees", 1, what)[0], what);
  for (int t = 0; t < n_trees; ++t) {
    const auto hdr = keyed(r, "tree", 4, what);
    if (r.integer(hdr[0]) != t) throw FormatError(FK::Malformed, what + ": trees out of order");
    try {
      f.tree_seeds.push_back(parse_u64(hdr[1], r.line()));
    } catch (const ConfigError&) {
      throw FormatError(FK::NonNumeric, what + ": line " + std::to_string(r.line()) + ": non-numeric tree seed");
    }
    const int n_nodes = positive_count(r, hdr[2], what);
    const int n_leaves = positive_count(r, hdr[3], what);
    if (n_nodes < 1) throw FormatError(FK::Malformed, what + ": tree without nodes");
    regress::RegressionTree tree;
    for (int i = 0; i < n_nodes; ++i) {
      const auto v = row(r, 6, what);
      regress::TreeNode n;
      n.feature = static_cast<int>(v[0]);
      n.threshold = v[1];
      n.left = static_cast<int>(v[2]);
      n.right = static_cast<int>(v[3]);
      n.leaf = static_cast<int>(v[4]);
      n.count = static_cast<int>(v[5]);
      const bool internal = n.feature >= 0;
      const bool ok = internal ? (n.feature < f.input_dim && n.left > i && n.left < n_nodes && n.right > i &&
                                  n.right < n_nodes)
                               : (n.leaf >= 0 && n.leaf < n_leaves);
      if (!ok) throw FormatError(FK::Malformed, what + ": line " + std::to_string(r.line()) + ": inconsistent node");
      tree.nodes.push_back(n);
    }
    for (int l = 0; l < n_leaves; ++l) {
      const auto v = row(r, static_cast<std::size_t>(f.output_dim), what);
      tree.leaf_values.insert(tree.leaf_values.end(), v.begin(), v.end());
    }
    f.trees.push_back(std::move(tree));
  }
  finish(r);
  return f;
}

void save_forest(const regress::ForestModel& f, const std::string& path) {
  auto out = open_out(path);
  write_forest(out, f);
}

regress::ForestModel load_forest(const std::string& path) {
  auto in = open_in(path);
  return read_forest(in, path);
}

// --- rigid ---

void write_rigid(std::ostream& out, const regress::PerYawRigid& rg) {
  out << "cfcal-rigid 1\n";
  out << "groups " << kYawTags.size() << '\n';
  for (std::size_t g = 0; g < kYawTags.size(); ++g) {
    const auto& T = rg.transforms[g];
    out << "yaw " << kYawTags[g] << '\n';
    for (int i = 0; i < 3; ++i) {
      const Vec3 rrow = T.R.row(i).transpose();
      put(out, rrow.data(), 3);
    }
    put(out, T.t.data(), 3);
  }
  out << "end\n";
}

regress::PerYawRigid read_rigid(std::istream& in, const std::string& what) {
  TextReader r(in, what);
  r.expect_header("cfcal-rigid", 1);
  if (r.integer(keyed(r, "groups", 1, what)[0]) != static_cast<long long>(kYawTags.size()))
    throw FormatError(FK::Malformed, what + ": expected five yaw groups");
  regress::PerYawRigid out;
  for (std::size_t g = 0; g < kYawTags.size(); ++g) {
    if (r.integer(keyed(r, "yaw", 1, what)[0]) != kYawTags[g])
      throw FormatError(FK::Malformed, what + ": line " + std::to_string(r.line()) + ": yaw groups out of order");
    auto& T = out.transforms[g];
    for (int i = 0; i < 3; ++i) T.R.row(i) = vec_row(r, 3, what).transpose();
    T.t = vec_row(r, 3, what);
  }
  finish(r);
  return out;
}

void save_rigid(const regress::PerYawRigid& rg, const std::string& path) {
  auto out = open_out(path);
  write_rigid(out, rg);
}

regress::PerYawRigid load_rigid(const std::string& path) {
  auto in = open_in(path);
  return read_rigid(in, path);
}

// --- combined ---

CombinedFiles combined_file_names(const std::string& stem) {
  CombinedFiles f;
  f.mlp = stem + "mlp.txt";
  for (std::size_t g = 0; g < kYawTags.size(); ++g) f.forests[g] = stem + "forest_" + yaw_key(kYawTags[g]) + ".txt";
  return f;
}

void save_combined(const phase2::CombinedPredictor& cp, const std::string& manifest_path, const CombinedFiles& files,
                   bool write_mlp) {
  cp.validate();
  const auto dir = std::filesystem::path(manifest_path).parent_path();
  if (write_mlp) save_mlp(cp.mlp, (dir / files.mlp).string());
  for (std::size_t g = 0; g < kYawTags.size(); ++g)
    save_forest(cp.forests.at(kYawTags[g]), (dir / files.forests[g]).string());
  auto out = open_out(manifest_path);
  out << "cfcal-combined 1\n";
  out << "mlp " << files.mlp << '\n';
  for (std::size_t g = 0; g < kYawTags.size(); ++g) out << "forest " << kYawTags[g] << ' ' << files.forests[g] << '\n';
  out << "end\n";
}

phase2::CombinedPredictor load_combined(const std::string& manifest_path) {
  auto in = open_in(manifest_path);
  TextReader r(in, manifest_path);
  r.expect_header("cfcal-combined", 1);
  const auto dir = std::filesystem::path(manifest_path).parent_path();
  phase2::CombinedPredictor cp;
  cp.mlp = load_mlp((dir / keyed(r, "mlp", 1, manifest_path)[0]).string());
  for (std::size_t g = 0; g < kYawTags.size(); ++g) {
    const auto toks = keyed(r, "forest", 2, manifest_path);
    if (r.integer(toks[0]) != kYawTags[g])
      throw FormatError(FK::Malformed, manifest_path + ": forests out of yaw order");
    cp.forests.emplace(kYawTags[g], load_forest((dir / toks[1]).string()));
  }
  finish(r);
  return cp;
}

}  // namespace cfcal::model_io
