#include "lasdi/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lasdi/errors.hpp"
#include "lasdi/gp.hpp"
#include "lasdi/rom.hpp"

namespace lasdi::experiment {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Reads an object field by field and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& field) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw ConfigError("expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("expected true or false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("expected an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (!it->is_number_unsigned()) throw ConfigError("expected a nonnegative integer");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError("expected a string");
      }
      field = it->template get<T>();
    } catch (const ConfigError& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return std::nullopt;
    return Section(*it, path_ + "." + key);
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_axis(Section& parent, const char* key, AxisSpec& axis) {
  if (auto s = parent.child(key)) {
    s->read("min", axis.min);
    s->read("max", axis.max);
    s->read("count", axis.count);
    s->finish();
  }
}

json axis_json(const AxisSpec& a) { return {{"min", a.min}, {"max", a.max}, {"count", a.count}}; }

json fom_json(const fom::FOMConfig& f) {
  return {{"grid",
           {{"x_min", f.grid.x_min},
            {"x_max", f.grid.x_max},
            {"y_min", f.grid.y_min},
            {"y_max", f.grid.y_max},
            {"n_x", f.grid.n_x},
            {"n_y", f.grid.n_y}}},
          {"final_time", f.final_time},
          {"n_t", f.n_t},
          {"k", f.k},
          {"cfl_safety", f.cfl_safety},
          {"time_mode", fom::to_string(f.time_mode)},
          {"jitter", f.jitter}};
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string trajectory_file(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "theta_%04d.lsdt", index);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + ": '" + s + "'");
  }
}

void write_history(const fs::path& path, const std::vector<train::EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,L_Recon,L_LD,L_Rollout,regularizer,total,wall_seconds,n_train_params\n";
  double wall = 0.0;
  for (const auto& r : history) {
    wall += r.wall_seconds;
    out << r.epoch << ',' << fmt_double(r.recon) << ',' << fmt_double(r.ld) << ','
        << fmt_double(r.rollout) << ',' << fmt_double(r.reg) << ',' << fmt_double(r.total) << ','
        << fmt_double(wall) << ',' << r.n_train << '\n';
  }
}

io::ModelCheckpoint checkpoint_of(const train::TrainState& state, const ExperimentConfig& config) {
  io::ModelCheckpoint ckpt;
  ckpt.model = state.model;
  ckpt.coefficients = state.coefficients;
  for (std::size_t i = 0; i < state.data.size(); ++i) {
    const auto& theta = state.data[i].trajectory.theta;
    ckpt.points.push_back(
        {theta, state.origin[i], state.trained_epochs[i], config.grid_index(theta)});
  }
  return ckpt;
}

}  // namespace

// ---- config ----------------------------------------------------------------

double AxisSpec::value(int i) const {
  if (count == 1) return min;
  // Pin the last value to max exactly.
  if (i == count - 1) return max;
  return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
}

std::vector<double> AxisSpec::values() const {
  std::vector<double> v;
  for (int i = 0; i < count; ++i) v.push_back(value(i));
  return v;
}

fom::ParameterPoint ExperimentConfig::grid_point(int index) const {
  if (index < 0 || index >= grid_size()) throw ConfigError("grid index out of range");
  return {nu.value(index / omega.count), omega.value(index % omega.count)};
}

std::vector<fom::ParameterPoint> ExperimentConfig::grid() const {
  std::vector<fom::ParameterPoint> g;
  for (int i = 0; i < grid_size(); ++i) g.push_back(grid_point(i));
  return g;
}

std::vector<int> ExperimentConfig::resolved_initial_indices() const {
  if (!initial_indices.empty()) return initial_indices;
  const int last_row = (nu.count - 1) * omega.count;
  return {0, omega.count - 1, last_row, last_row + omega.count - 1};
}

namespace {

// Nearest axis index when `x` lies within round-off of a grid value, else -1.
int axis_index(const AxisSpec& a, double x) {
  const double spacing = (a.max - a.min) / (a.count - 1);
  const long i = std::lround((x - a.min) / spacing);
  if (i < 0 || i >= a.count) return -1;
  return std::abs(x - a.value(static_cast<int>(i))) <= 1e-9 * spacing ? static_cast<int>(i) : -1;
}

}  // namespace

int ExperimentConfig::grid_index(const fom::ParameterPoint& theta) const {
  const int i = axis_index(nu, theta.nu), j = axis_index(omega, theta.omega);
  return i < 0 || j < 0 ? -1 : i * omega.count + j;
}

bool ExperimentConfig::in_domain(const fom::ParameterPoint& theta) const {
  return theta.nu >= nu.min && theta.nu <= nu.max && theta.omega >= omega.min &&
         theta.omega <= omega.max;
}

fom::FOMConfig ExperimentConfig::fom_for(int index) const {
  fom::FOMConfig f = fom;
  f.seed = seed * 1000003ULL + static_cast<std::uint64_t>(index);
  return f;
}

train::TrainConfig ExperimentConfig::train_effective() const {
  train::TrainConfig t = train;
  t.seed = seed;
  if (!rollout) t.eta.rollout = 0.0;
  return t;
}

void ExperimentConfig::validate() const {
  fom.validate();
  train.validate();
  for (const auto* a : {&nu, &omega}) {
    if (a->count < 2) throw ConfigError("parameter grids need at least 2 values per dimension");
    if (!(a->max > a->min)) throw ConfigError("parameter range must have max > min");
  }
  if (!(nu.min > 0)) throw ConfigError("viscosity range must be positive");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be nonnegative");
  const auto init = resolved_initial_indices();
  std::set<int> unique;
  for (int i : init) {
    if (i < 0 || i >= grid_size())
      throw ConfigError("initial index " + std::to_string(i) + " is not on the parameter grid");
    if (!unique.insert(i).second)
      throw ConfigError("initial index " + std::to_string(i) + " is repeated");
  }
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  Section root(doc, "config");
  root.read("seed", c.seed);
  root.read("output_dir", c.output_dir);
  root.read("rollout", c.rollout);
  if (auto f = root.child("fom")) {
    if (auto g = f->child("grid")) {
      g->read("x_min", c.fom.grid.x_min);
      g->read("x_max", c.fom.grid.x_max);
      g->read("y_min", c.fom.grid.y_min);
      g->read("y_max", c.fom.grid.y_max);
      g->read("n_x", c.fom.grid.n_x);
      g->read("n_y", c.fom.grid.n_y);
      g->finish();
    }
    f->read("final_time", c.fom.final_time);
    f->read("n_t", c.fom.n_t);
    f->read("k", c.fom.k);
    f->read("cfl_safety", c.fom.cfl_safety);
    std::string mode = fom::to_string(c.fom.time_mode);
    f->read("time_mode", mode);
    try {
      c.fom.time_mode = fom::time_mode_from_string(mode);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config.fom.time_mode: ") + e.what());
    }
    f->read("jitter", c.fom.jitter);
    f->finish();
  }
  if (auto t = root.child("train")) {
    if (auto e = t->child("eta")) {
      e->read("recon", c.train.eta.recon);
      e->read("ld", c.train.eta.ld);
      e->read("rollout", c.train.eta.rollout);
      e->read("reg", c.train.eta.reg);
      e->finish();
    }
    t->read("learning_rate", c.train.learning_rate);
    t->read("epochs", c.train.epochs);
    t->read("greedy_every", c.train.greedy_every);
    t->read("gp_samples", c.train.gp_samples);
    t->read("horizon_cap", c.train.horizon_cap);
    t->read("horizon_ramp_epochs", c.train.horizon_ramp_epochs);
    t->read("substep_factor", c.train.substep_factor);
    t->read("hidden_widths", c.train.hidden_widths);
    t->read("latent_dim", c.train.latent_dim);
    t->read("omega0", c.train.omega0);
    t->read("checkpoint_every", c.checkpoint_every);
    t->finish();
  }
  if (auto p = root.child("parameters")) {
    read_axis(*p, "nu", c.nu);
    read_axis(*p, "omega", c.omega);
    p->read("initial_indices", c.initial_indices);
    p->finish();
  }
  root.finish();
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(doc);
}

json config_to_json(const ExperimentConfig& c) {
  const auto& t = c.train;
  return {{"seed", c.seed},
          {"output_dir", c.output_dir},
          {"rollout", c.rollout},
          {"fom", fom_json(c.fom)},
          {"train",
           {{"eta",
             {{"recon", t.eta.recon},
              {"ld", t.eta.ld},
              {"rollout", t.eta.rollout},
              {"reg", t.eta.reg}}},
            {"learning_rate", t.learning_rate},
            {"epochs", t.epochs},
            {"greedy_every", t.greedy_every},
            {"gp_samples", t.gp_samples},
            {"horizon_cap", t.horizon_cap},
            {"horizon_ramp_epochs", t.horizon_ramp_epochs},
            {"substep_factor", t.substep_factor},
            {"hidden_widths", t.hidden_widths},
            {"latent_dim", t.latent_dim},
            {"omega0", t.omega0},
            {"checkpoint_every", c.checkpoint_every}}},
          {"parameters",
           {{"nu", axis_json(c.nu)},
            {"omega", axis_json(c.omega)},
            {"initial_indices", c.resolved_initial_indices()}}}};
}

std::string config_fingerprint(const ExperimentConfig& config) {
  json j = config_to_json(config);
  j.erase("rollout");
  j.erase("output_dir");
  j["train"]["eta"].erase("rollout");
  j["fom"].erase("time_mode");
  return fnv1a_hex(j.dump());
}

// ---- generate --------------------------------------------------------------

std::vector<ManifestEntry> read_manifest(const fs::path& data_dir) {
  const fs::path path = data_dir / "manifest.json";
  if (!fs::exists(path)) throw ConfigError("no manifest.json in " + data_dir.string());
  std::vector<ManifestEntry> out;
  try {
    const json doc = json::parse(io::read_text(path));
    for (const auto& e : doc.at("trajectories"))
      out.push_back({e.at("index").get<int>(),
                     {e.at("nu").get<double>(), e.at("omega").get<double>()},
                     e.at("file").get<std::string>()});
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return out;
}

void cmd_generate(const ExperimentConfig& config, const fs::path& out_dir, std::ostream* log) {
  config.validate();
  ensure_dir(out_dir);
  json entries = json::array();
  for (int i = 0; i < config.grid_size(); ++i) {
    const auto theta = config.grid_point(i);
    const fom::Trajectory traj = fom::solve_fom(config.fom_for(i), theta);
    const std::string file = trajectory_file(i);
    io::write_trajectory(out_dir / file, traj);
    entries.push_back({{"index", i}, {"nu", theta.nu}, {"omega", theta.omega}, {"file", file}});
    if (log)
      *log << "generated " << file << " (nu=" << theta.nu << ", omega=" << theta.omega << ")\n";
  }
  const json manifest = {{"fingerprint", config_fingerprint(config)},
                         {"fom", fom_json(config.fom)},
                         {"seed", config.seed},
                         {"trajectories", entries}};
  io::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  io::write_text(out_dir / "resolved_config.json", config_to_json(config).dump(2) + "\n");
}

// ---- train -----------------------------------------------------------------

TrainSummary cmd_train(const ExperimentConfig& config, const fs::path& data_dir,
                       const fs::path& out_dir, std::ostream* log) {
  config.validate();
  const auto manifest = read_manifest(data_dir);
  {
    const json doc = json::parse(io::read_text(data_dir / "manifest.json"));
    if (doc.at("fom") != fom_json(config.fom) || doc.at("seed").get<std::uint64_t>() != config.seed)
      throw ConfigError("data in " + data_dir.string() +
                        " was generated with different FOM settings or seed");
  }
  std::map<int, fs::path> files;
  for (const auto& e : manifest) files[e.index] = data_dir / e.file;

  auto load = [&](int index) {
    auto it = files.find(index);
    if (it == files.end() || !fs::exists(it->second))
      throw ConfigError("missing trajectory for grid index " + std::to_string(index));
    fom::Trajectory t = io::read_trajectory(it->second);
    if (!(t.theta == config.grid_point(index)))
      throw ConfigError(it->second.string() + " does not hold the expected parameter");
    return t;
  };

  std::vector<fom::Trajectory> initial;
  for (int i : config.resolved_initial_indices()) initial.push_back(load(i));

  train::Acquisition acq;
  acq.pool = config.grid();
  acq.solve = [&](const fom::ParameterPoint& theta) {
    const int index = config.grid_index(theta);
    if (files.count(index)) return load(index);
    return fom::solve_fom(config.fom_for(index), theta);
  };
  acq.initial_state = [&](const fom::ParameterPoint& theta) {
    return fom::initial_condition(theta, config.fom.grid, config.fom.k);
  };
  acq.times = fom::make_time_grid(config.fom.n_t, config.fom.final_time, fom::TimeMode::fixed, 0.0,
                                  0);

  ensure_dir(out_dir);
  io::write_text(out_dir / "resolved_config.json", config_to_json(config).dump(2) + "\n");

  const train::TrainConfig tc = config.train_effective();
  train::EpochHook hook;
  if (config.checkpoint_every > 0) {
    ensure_dir(out_dir / "checkpoints");
    hook = [&](const train::TrainState& s, const train::EpochRecord&) {
      if (s.epoch % config.checkpoint_every != 0) return;
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%06d.lsdm", s.epoch);
      io::write_model(out_dir / "checkpoints" / name, checkpoint_of(s, config));
    };
  }
  const train::TrainResult result = train::train_loop(tc, std::move(initial), &acq, log, hook);
  const auto& state = result.state;

  write_history(out_dir / "history.csv", result.history);
  io::write_model(out_dir / "model.lsdm", checkpoint_of(state, config));

  // Coefficients of a parameter acquired on the last epoch are untrained.
  std::vector<fom::ParameterPoint> gp_thetas;
  std::vector<rom::LatentCoefficients> gp_coeffs;
  for (std::size_t i = 0; i < state.data.size(); ++i)
    if (state.trained_epochs[i] > 0) {
      gp_thetas.push_back(state.data[i].trajectory.theta);
      gp_coeffs.push_back(state.coefficients[i]);
    }
  gp::FitOptions fit;
  fit.seed = config.seed;
  io::write_surrogate(out_dir / "surrogate.lsdg", gp::fit_gp(gp_thetas, gp_coeffs, fit));

  TrainSummary summary;
  summary.epochs = state.epoch;
  summary.acquisitions_attempted = result.acquisitions_attempted;
  for (const auto& d : state.data) summary.training_indices.push_back(config.grid_index(d.trajectory.theta));
  return summary;
}

// ---- infer -----------------------------------------------------------------

TrainedModel TrainedModel::load(const fs::path& model_dir) {
  TrainedModel m;
  m.config = load_config(model_dir / "resolved_config.json");
  m.checkpoint = io::read_model(model_dir / "model.lsdm");
  m.surrogate = io::read_surrogate(model_dir / "surrogate.lsdg");
  if (m.surrogate.latent_dim != m.checkpoint.model.latent_dim())
    throw ConfigError("surrogate and model disagree on the latent dimension");
  return m;
}

fom::Trajectory cmd_infer(const TrainedModel& trained, const fom::ParameterPoint& theta,
                          const Eigen::VectorXd& times, const Eigen::VectorXd& initial_state,
                          std::ostream* warn) {
  if (!trained.config.in_domain(theta) && warn)
    *warn << "warning: (nu=" << theta.nu << ", omega=" << theta.omega
          << ") lies outside the training domain; the GP is extrapolating\n";
  if (times.size() < 2) throw DomainError("cmd_infer: need at least two output times");
  const double mean_step = (times(times.size() - 1) - times(0)) / static_cast<double>(times.size() - 1);
  const auto c = trained.surrogate.mean_coefficients(theta);
  fom::Trajectory out;
  out.theta = theta;
  out.times = times;
  out.states = rom::predict_trajectory(trained.checkpoint.model, c, initial_state, times,
                                       trained.config.train.substep_factor * mean_step);
  return out;
}

// ---- evaluate --------------------------------------------------------------

std::vector<ErrorRow> cmd_evaluate(const fs::path& model_dir, const fs::path& data_dir,
                                   const fs::path& out_dir, std::ostream* log) {
  const TrainedModel trained = TrainedModel::load(model_dir);
  const auto manifest = read_manifest(data_dir);
  std::vector<ErrorRow> rows;
  for (const auto& e : manifest) {
    const fom::Trajectory ref = io::read_trajectory(data_dir / e.file);
    ErrorRow row;
    row.index = e.index;
    row.theta = ref.theta;
    for (const auto& p : trained.checkpoint.points)
      if (p.theta == ref.theta) row.membership = p.origin;
    try {
      const Eigen::VectorXd u0 = ref.states.row(0).transpose();
      const fom::Trajectory pred = cmd_infer(trained, ref.theta, ref.times, u0, log);
      row.error = metrics::relative_error(ref, pred).error;
    } catch (const NumericalError& err) {
      // A diverged latent trajectory has unbounded error.
      if (log) *log << "evaluate: index " << e.index << " diverged: " << err.what() << "\n";
      row.error = std::numeric_limits<double>::infinity();
    }
    rows.push_back(row);
  }
  ensure_dir(out_dir);
  std::ofstream out(out_dir / "errors.csv");
  if (!out) throw IoError("cannot write errors.csv in " + out_dir.string());
  out << "theta_index,nu,omega,error,in_training_set\n";
  for (const auto& r : rows)
    out << r.index << ',' << fmt_double(r.theta.nu) << ',' << fmt_double(r.theta.omega) << ','
        << fmt_double(r.error) << ',' << static_cast<int>(r.membership) << '\n';
  return rows;
}

// ---- heatmap ---------------------------------------------------------------

namespace {

struct RawRow {
  ErrorRow row;
  std::string nu, omega, error;  // verbatim text
};

std::vector<RawRow> read_raw_errors(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "theta_index,nu,omega,error,in_training_set")
    throw ConfigError(path.string() + ": unexpected header");
  std::vector<RawRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 5) throw ConfigError(path.string() + ": malformed row '" + line + "'");
    RawRow r;
    r.row.index = static_cast<int>(parse_double(cells[0], "theta_index"));
    r.row.theta = {parse_double(cells[1], "nu"), parse_double(cells[2], "omega")};
    r.row.error = parse_double(cells[3], "error");
    const int m = static_cast<int>(parse_double(cells[4], "in_training_set"));
    if (m < 0 || m > 2) throw ConfigError(path.string() + ": bad membership flag");
    r.row.membership = static_cast<train::Origin>(m);
    r.nu = cells[1];
    r.omega = cells[2];
    r.error = cells[3];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

std::vector<ErrorRow> read_errors_csv(const fs::path& path) {
  std::vector<ErrorRow> out;
  for (const auto& r : read_raw_errors(path)) out.push_back(r.row);
  return out;
}

void cmd_heatmap(const fs::path& errors_csv, const fs::path& out_dir) {
  const auto rows = read_raw_errors(errors_csv);
  // Axis values keyed by their numeric value, labelled by the original text.
  std::map<double, std::string> nus, omegas;
  std::map<std::pair<double, double>, const RawRow*> cells;
  for (const auto& r : rows) {
    nus.emplace(r.row.theta.nu, r.nu);
    omegas.emplace(r.row.theta.omega, r.omega);
    if (!cells.emplace(std::make_pair(r.row.theta.nu, r.row.theta.omega), &r).second)
      throw ConfigError("duplicate entry for (nu=" + r.nu + ", omega=" + r.omega + ")");
  }
  std::string missing;
  for (const auto& [nu, nu_text] : nus)
    for (const auto& [om, om_text] : omegas)
      if (!cells.count({nu, om})) missing += " (nu=" + nu_text + ", omega=" + om_text + ")";
  if (!missing.empty()) throw ConfigError("incomplete parameter grid, missing:" + missing);

  ensure_dir(out_dir);
  std::ofstream heat(out_dir / "heatmap.csv"), legend(out_dir / "heatmap_legend.csv");
  if (!heat || !legend) throw IoError("cannot write heatmap files in " + out_dir.string());
  for (auto* f : {&heat, &legend}) {
    *f << "nu\\omega";
    for (const auto& [om, text] : omegas) *f << ',' << text;
    *f << '\n';
  }
  for (const auto& [nu, nu_text] : nus) {
    heat << nu_text;
    legend << nu_text;
    for (const auto& [om, om_text] : omegas) {
      const RawRow* r = cells.at({nu, om});
      heat << ',' << r->error;
      const char* mark = r->row.membership == train::Origin::initial    ? "initial"
                         : r->row.membership == train::Origin::acquired ? "acquired"
                                                                        : "";
      legend << ',' << mark;
    }
    heat << '\n';
    legend << '\n';
  }
}

}  // namespace lasdi::experiment
