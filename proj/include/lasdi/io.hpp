#pragma once

// Binary artifacts. All numbers are little-endian.
//
// Trajectory (.lsdt):
//   "LSDT" | u32 version=1 | u32 p | f64 theta[p] | u32 n_frames | u32 N_u
//   | f64 times[n_frames] | f64 states[n_frames * N_u] (row-major, x-fastest)
//
// Checkpoint container (model .lsdm, GP surrogate .lsdg):
//   magic[4] | u32 version=1 | u64 header_bytes | JSON header | f64 blob[...]
//
// Model blob order: for the encoder then the decoder, each layer's weight
// (row-major, out x in) followed by its bias; then for each training
// parameter its A (row-major, L x L) followed by b (L).
//
// GP blob order: training targets (row-major, n x m); then per output the
// lower Cholesky factor (row-major, n x n) followed by alpha (n).

#include <filesystem>
#include <string>
#include <vector>

#include "lasdi/fom.hpp"
#include "lasdi/gp.hpp"
#include "lasdi/rom.hpp"
#include "lasdi/train.hpp"

namespace lasdi::io {

void write_trajectory(const std::filesystem::path& path, const fom::Trajectory& traj);
fom::Trajectory read_trajectory(const std::filesystem::path& path);

struct TrainingPoint {
  fom::ParameterPoint theta;
  train::Origin origin = train::Origin::initial;
  int trained_epochs = 0;
  int grid_index = -1;
};

/// Everything inference needs besides the GP: network weights and the learned
/// coefficient set of each training parameter.
struct ModelCheckpoint {
  rom::AutoencoderModel model;
  std::vector<TrainingPoint> points;
  std::vector<rom::LatentCoefficients> coefficients;
};

void write_model(const std::filesystem::path& path, const ModelCheckpoint& ckpt);
ModelCheckpoint read_model(const std::filesystem::path& path);

void write_surrogate(const std::filesystem::path& path, const gp::GPSurrogate& s);
gp::GPSurrogate read_surrogate(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace lasdi::io
