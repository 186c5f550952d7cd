#include "lasdi/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lasdi/errors.hpp"

namespace lasdi::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian");

namespace {

using json = nlohmann::json;
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open for writing: " + path.string());
    path_ = path.string();
  }
  template <typename T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
  void doubles(const double* p, Eigen::Index n) { bytes(p, sizeof(double) * n); }
  void close() {
    out_.close();
    if (!out_) throw IoError("write failed: " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open: " + path.string());
    path_ = path.string();
  }
  template <typename T>
  T get() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), n);
    if (static_cast<std::size_t>(in_.gcount()) != n) throw IoError("truncated file: " + path_);
  }
  void doubles(double* p, Eigen::Index n) { bytes(p, sizeof(double) * n); }
  void magic(const char* expected) {
    char m[4];
    bytes(m, 4);
    if (std::memcmp(m, expected, 4) != 0)
      throw IoError(path_ + ": bad magic, expected " + std::string(expected, 4));
  }
  void version() {
    const auto v = get<std::uint32_t>();
    if (v != kVersion) throw IoError(path_ + ": unsupported version " + std::to_string(v));
  }
  void expect_end() {
    in_.peek();
    if (!in_.eof()) throw IoError(path_ + ": trailing bytes");
  }
  const std::string& path() const { return path_; }

 private:
  std::ifstream in_;
  std::string path_;
};

void write_container(const std::filesystem::path& path, const char* magic, const json& header,
                     const std::vector<double>& blob) {
  const std::string text = header.dump();
  Writer w(path);
  w.bytes(magic, 4);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint64_t>(text.size());
  w.bytes(text.data(), text.size());
  w.doubles(blob.data(), static_cast<Eigen::Index>(blob.size()));
  w.close();
}

// Cursor over the blob of a container file.
struct Blob {
  std::vector<double> data;
  std::size_t pos = 0;
  std::string path;

  void take(double* dst, Eigen::Index n) {
    if (pos + static_cast<std::size_t>(n) > data.size()) throw IoError(path + ": blob too short");
    std::copy_n(data.begin() + pos, n, dst);
    pos += n;
  }
  void finish() const {
    if (pos != data.size()) throw IoError(path + ": blob has unexpected trailing values");
  }
};

std::pair<json, Blob> read_container(const std::filesystem::path& path, const char* magic) {
  Reader r(path);
  r.magic(magic);
  r.version();
  const auto len = r.get<std::uint64_t>();
  std::string text(len, '\0');
  r.bytes(text.data(), len);
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": bad header: " + e.what());
  }
  const auto offset = sizeof(std::uint32_t) * 2 + sizeof(std::uint64_t) + len;
  const auto total = std::filesystem::file_size(path);
  if ((total - offset) % sizeof(double) != 0) throw IoError(path.string() + ": ragged blob");
  Blob blob;
  blob.path = path.string();
  blob.data.resize((total - offset) / sizeof(double));
  r.doubles(blob.data.data(), static_cast<Eigen::Index>(blob.data.size()));
  return {std::move(header), std::move(blob)};
}

template <typename M>
void append(std::vector<double>& blob, const M& m) {
  // Row-major order regardless of the storage order of m.
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) blob.push_back(m(i, j));
}

template <typename M>
void take(Blob& blob, M& m) {
  std::vector<double> tmp(m.size());
  blob.take(tmp.data(), m.size());
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = tmp[k++];
}

json mlp_header(const rom::MLP& m) { return {{"widths", m.widths}, {"omega0", m.omega0}}; }

rom::MLP mlp_shell(const json& h) {
  rom::MLP m;
  m.widths = h.at("widths").get<std::vector<int>>();
  m.omega0 = h.at("omega0").get<double>();
  if (m.widths.size() < 2) throw IoError("checkpoint: network needs at least two widths");
  for (std::size_t l = 0; l + 1 < m.widths.size(); ++l) {
    m.weights.emplace_back(m.widths[l + 1], m.widths[l]);
    m.biases.emplace_back(1, m.widths[l + 1]);
  }
  return m;
}

}  // namespace

// ---- trajectories ----------------------------------------------------------

void write_trajectory(const std::filesystem::path& path, const fom::Trajectory& traj) {
  if (traj.states.rows() != traj.times.size())
    throw DimensionError("write_trajectory: frame count does not match time count");
  Writer w(path);
  w.bytes("LSDT", 4);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(2);
  w.put<double>(traj.theta.nu);
  w.put<double>(traj.theta.omega);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(traj.times.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(traj.states.cols()));
  w.doubles(traj.times.data(), traj.times.size());
  w.doubles(traj.states.data(), traj.states.size());  // row-major storage
  w.close();
}

fom::Trajectory read_trajectory(const std::filesystem::path& path) {
  Reader r(path);
  r.magic("LSDT");
  r.version();
  const auto p = r.get<std::uint32_t>();
  if (p != 2) throw IoError(path.string() + ": expected 2 parameters, found " + std::to_string(p));
  fom::Trajectory t;
  t.theta.nu = r.get<double>();
  t.theta.omega = r.get<double>();
  const auto n_frames = r.get<std::uint32_t>();
  const auto n_u = r.get<std::uint32_t>();
  t.times.resize(n_frames);
  t.states.resize(n_frames, n_u);
  r.doubles(t.times.data(), t.times.size());
  r.doubles(t.states.data(), t.states.size());
  r.expect_end();
  return t;
}

// ---- model checkpoint ------------------------------------------------------

void write_model(const std::filesystem::path& path, const ModelCheckpoint& ckpt) {
  ckpt.model.validate();
  if (ckpt.points.size() != ckpt.coefficients.size())
    throw DimensionError("write_model: points and coefficient sets differ in count");

  json header;
  header["format_version"] = kVersion;
  header["encoder"] = mlp_header(ckpt.model.encoder);
  header["decoder"] = mlp_header(ckpt.model.decoder);
  header["latent_dim"] = ckpt.model.latent_dim();
  header["n_u"] = ckpt.model.num_nodes();
  header["seed"] = ckpt.model.seed;
  json pts = json::array();
  for (const auto& p : ckpt.points)
    pts.push_back({{"nu", p.theta.nu},
                   {"omega", p.theta.omega},
                   {"origin", static_cast<int>(p.origin)},
                   {"trained_epochs", p.trained_epochs},
                   {"grid_index", p.grid_index}});
  header["training_set"] = pts;

  std::vector<double> blob;
  for (const auto* net : {&ckpt.model.encoder, &ckpt.model.decoder})
    for (std::size_t l = 0; l < net->num_layers(); ++l) {
      append(blob, net->weights[l]);
      append(blob, net->biases[l]);
    }
  for (const auto& c : ckpt.coefficients) {
    if (c.dim() != ckpt.model.latent_dim())
      throw DimensionError("write_model: coefficient set has wrong latent dimension");
    append(blob, c.A);
    append(blob, c.b.transpose());
  }
  write_container(path, "LSDM", header, blob);
}

ModelCheckpoint read_model(const std::filesystem::path& path) {
  auto [h, blob] = read_container(path, "LSDM");
  ModelCheckpoint ckpt;
  try {
    ckpt.model.encoder = mlp_shell(h.at("encoder"));
    ckpt.model.decoder = mlp_shell(h.at("decoder"));
    ckpt.model.seed = h.at("seed").get<std::uint64_t>();
    for (const auto& p : h.at("training_set")) {
      TrainingPoint tp;
      tp.theta = {p.at("nu").get<double>(), p.at("omega").get<double>()};
      tp.origin = static_cast<train::Origin>(p.at("origin").get<int>());
      tp.trained_epochs = p.at("trained_epochs").get<int>();
      tp.grid_index = p.value("grid_index", -1);
      ckpt.points.push_back(tp);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": malformed header: " + e.what());
  }
  for (auto* net : {&ckpt.model.encoder, &ckpt.model.decoder})
    for (std::size_t l = 0; l < net->num_layers(); ++l) {
      take(blob, net->weights[l]);
      take(blob, net->biases[l]);
    }
  const int l = ckpt.model.latent_dim();
  for (std::size_t i = 0; i < ckpt.points.size(); ++i) {
    auto c = rom::LatentCoefficients::zeros(l);
    take(blob, c.A);
    take(blob, c.b);
    ckpt.coefficients.push_back(std::move(c));
  }
  blob.finish();
  ckpt.model.validate();
  return ckpt;
}

// ---- GP surrogate ----------------------------------------------------------

void write_surrogate(const std::filesystem::path& path, const gp::GPSurrogate& s) {
  const auto n = s.num_points();
  const auto m = s.num_outputs();
  if (static_cast<Eigen::Index>(s.params.size()) != m ||
      static_cast<Eigen::Index>(s.cholesky.size()) != m)
    throw DimensionError("write_surrogate: surrogate is not factorized");
  json header;
  header["format_version"] = kVersion;
  header["latent_dim"] = s.latent_dim;
  header["n_points"] = n;
  header["n_outputs"] = m;
  header["inputs"] = json::array();
  for (Eigen::Index i = 0; i < n; ++i)
    header["inputs"].push_back({s.train_inputs(i, 0), s.train_inputs(i, 1)});
  header["input_mean"] = {s.input_mean(0), s.input_mean(1)};
  header["input_scale"] = {s.input_scale(0), s.input_scale(1)};
  header["target_mean"] = std::vector<double>(s.target_mean.data(), s.target_mean.data() + m);
  json params = json::array();
  for (const auto& p : s.params)
    params.push_back({{"signal_variance", p.signal_variance},
                      {"lengthscales", std::vector<double>(p.lengthscales.data(),
                                                           p.lengthscales.data() +
                                                               p.lengthscales.size())},
                      {"jitter", p.jitter},
                      {"jitter_scale", p.jitter_scale}});
  header["kernels"] = params;

  std::vector<double> blob;
  append(blob, s.train_targets);
  for (Eigen::Index k = 0; k < m; ++k) {
    append(blob, s.cholesky[k]);
    append(blob, s.alpha[k].transpose());
  }
  write_container(path, "LSDG", header, blob);
}

gp::GPSurrogate read_surrogate(const std::filesystem::path& path) {
  auto [h, blob] = read_container(path, "LSDG");
  gp::GPSurrogate s;
  Eigen::Index n = 0, m = 0;
  try {
    s.latent_dim = h.at("latent_dim").get<int>();
    n = h.at("n_points").get<Eigen::Index>();
    m = h.at("n_outputs").get<Eigen::Index>();
    s.train_inputs.resize(n, 2);
    const auto& inputs = h.at("inputs");
    if (static_cast<Eigen::Index>(inputs.size()) != n) throw IoError("input count mismatch");
    for (Eigen::Index i = 0; i < n; ++i)
      for (int j = 0; j < 2; ++j) s.train_inputs(i, j) = inputs.at(i).at(j).get<double>();
    s.input_mean.resize(2);
    s.input_scale.resize(2);
    for (int j = 0; j < 2; ++j) {
      s.input_mean(j) = h.at("input_mean").at(j).get<double>();
      s.input_scale(j) = h.at("input_scale").at(j).get<double>();
    }
    const auto tm = h.at("target_mean").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(tm.size()) != m) throw IoError("target mean size mismatch");
    s.target_mean = Eigen::Map<const Eigen::RowVectorXd>(tm.data(), m);
    for (const auto& k : h.at("kernels")) {
      gp::KernelParams p;
      p.signal_variance = k.at("signal_variance").get<double>();
      const auto ls = k.at("lengthscales").get<std::vector<double>>();
      p.lengthscales = Eigen::Map<const Eigen::VectorXd>(ls.data(), ls.size());
      p.jitter = k.at("jitter").get<double>();
      p.jitter_scale = k.at("jitter_scale").get<double>();
      s.params.push_back(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": malformed header: " + e.what());
  }
  if (static_cast<Eigen::Index>(s.params.size()) != m)
    throw IoError(path.string() + ": kernel count mismatch");
  if (m != static_cast<Eigen::Index>(s.latent_dim) * s.latent_dim + s.latent_dim)
    throw IoError(path.string() + ": output count does not match latent dimension");

  s.train_targets.resize(n, m);
  take(blob, s.train_targets);
  for (Eigen::Index k = 0; k < m; ++k) {
    Eigen::MatrixXd chol(n, n);
    Eigen::VectorXd a(n);
    take(blob, chol);
    take(blob, a);
    s.cholesky.push_back(std::move(chol));
    s.alpha.push_back(std::move(a));
  }
  blob.finish();
  return s;
}

// ---- text ------------------------------------------------------------------

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace lasdi::io
