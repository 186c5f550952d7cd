#pragma once

// Experiment harness behind the command-line tool: configuration, data
// generation, training, inference, evaluation and heatmap export.
//
// Parameter grid points are indexed i_nu * omega.count + i_omega.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lasdi/fom.hpp"
#include "lasdi/io.hpp"
#include "lasdi/metrics.hpp"
#include "lasdi/train.hpp"

namespace lasdi::experiment {

struct AxisSpec {
  double min = 0.0, max = 1.0;
  int count = 11;

  double value(int i) const;
  std::vector<double> values() const;
};

struct ExperimentConfig {
  fom::FOMConfig fom;
  train::TrainConfig train;
  AxisSpec nu{0.05, 0.25, 11};
  AxisSpec omega{0.5, 1.5, 11};
  std::vector<int> initial_indices;  // empty: the four corners
  bool rollout = true;
  int checkpoint_every = 0;  // 0: final checkpoint only
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  int grid_size() const { return nu.count * omega.count; }
  fom::ParameterPoint grid_point(int index) const;
  std::vector<fom::ParameterPoint> grid() const;
  std::vector<int> resolved_initial_indices() const;
  /// Index of theta on the grid, or -1.
  int grid_index(const fom::ParameterPoint& theta) const;
  bool in_domain(const fom::ParameterPoint& theta) const;

  /// FOM and training settings with the shared seed and ablation flags applied.
  fom::FOMConfig fom_for(int grid_index) const;
  train::TrainConfig train_effective() const;

  void validate() const;
};

/// Parses a config document. Missing keys keep their defaults; unknown keys,
/// wrong types and invalid values raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Hash of everything except the ablation switches (rollout weight and flag,
/// time mode) and the output directory. Arms of one study share it.
std::string config_fingerprint(const ExperimentConfig& config);

// ---- subcommands -----------------------------------------------------------

struct ManifestEntry {
  int index = 0;
  fom::ParameterPoint theta;
  std::string file;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& data_dir);

/// One LSDT file per grid point plus manifest.json.
void cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                  std::ostream* log = nullptr);

struct TrainSummary {
  int epochs = 0;
  int acquisitions_attempted = 0;
  std::vector<int> training_indices;  // grid indices, in training-set order
};

/// Writes model.lsdm, surrogate.lsdg, history.csv and resolved_config.json.
TrainSummary cmd_train(const ExperimentConfig& config, const std::filesystem::path& data_dir,
                       const std::filesystem::path& out_dir, std::ostream* log = nullptr);

/// Trained artifacts loaded back from a model directory.
struct TrainedModel {
  ExperimentConfig config;
  io::ModelCheckpoint checkpoint;
  gp::GPSurrogate surrogate;

  static TrainedModel load(const std::filesystem::path& model_dir);
};

/// Encodes the initial state, integrates with the posterior-mean coefficients
/// and decodes. Warns (does not fail) outside the configured domain.
fom::Trajectory cmd_infer(const TrainedModel& trained, const fom::ParameterPoint& theta,
                          const Eigen::VectorXd& times, const Eigen::VectorXd& initial_state,
                          std::ostream* warn = nullptr);

struct ErrorRow {
  int index = 0;
  fom::ParameterPoint theta;
  double error = 0.0;
  train::Origin membership = train::Origin::test;
};

/// Relative error for every trajectory in the data manifest; writes errors.csv.
std::vector<ErrorRow> cmd_evaluate(const std::filesystem::path& model_dir,
                                   const std::filesystem::path& data_dir,
                                   const std::filesystem::path& out_dir,
                                   std::ostream* log = nullptr);

/// errors.csv -> heatmap.csv (rows nu, columns omega) and heatmap_legend.csv.
void cmd_heatmap(const std::filesystem::path& errors_csv, const std::filesystem::path& out_dir);

std::vector<ErrorRow> read_errors_csv(const std::filesystem::path& path);

}  // namespace lasdi::experiment
