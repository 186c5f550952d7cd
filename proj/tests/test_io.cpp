#include <doctest.h>

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "lasdi/errors.hpp"
#include "lasdi/io.hpp"
#include "support.hpp"

using namespace lasdi;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("lasdi_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

std::string bytes_of(const fs::path& p) { return io::read_text(p); }

template <typename T>
T read_at(const std::string& bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

fom::Trajectory sample_trajectory() {
  std::mt19937_64 rng(4);
  fom::Trajectory t;
  t.theta = {0.15, 0.75};
  t.times.resize(4);
  t.times << 0.0, 0.3, 0.65, 1.0;
  t.states = lasdi::testing::random_matrix(4, 6, rng);
  return t;
}

io::ModelCheckpoint sample_checkpoint() {
  io::ModelCheckpoint c;
  c.model = rom::make_autoencoder(6, {5, 4}, 3, 17, 30.0);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2; ++i) {
    rom::LatentCoefficients k;
    k.A = lasdi::testing::random_matrix(3, 3, rng);
    k.b = lasdi::testing::random_matrix(3, 1, rng);
    c.coefficients.push_back(k);
  }
  c.points.push_back({{0.05, 0.5}, train::Origin::initial, 40, 0});
  c.points.push_back({{0.25, 1.5}, train::Origin::acquired, 12, 8});
  return c;
}

void corrupt_magic(const fs::path& p) {
  std::string b = bytes_of(p);
  b[0] = 'X';
  io::write_text(p, b);
}

void truncate(const fs::path& p, std::size_t drop) {
  std::string b = bytes_of(p);
  io::write_text(p, b.substr(0, b.size() - drop));
}

}  // namespace

TEST_CASE("trajectory layout matches the documented format") {
  TempDir dir;
  const auto t = sample_trajectory();
  io::write_trajectory(dir / "a.lsdt", t);
  const std::string b = bytes_of(dir / "a.lsdt");
  REQUIRE(b.size() == 4 + 4 + 4 + 16 + 4 + 4 + 8 * 4 + 8 * 24);
  CHECK(b.substr(0, 4) == "LSDT");
  CHECK(read_at<std::uint32_t>(b, 4) == 1);
  CHECK(read_at<std::uint32_t>(b, 8) == 2);
  CHECK(read_at<double>(b, 12) == 0.15);
  CHECK(read_at<double>(b, 20) == 0.75);
  CHECK(read_at<std::uint32_t>(b, 28) == 4);
  CHECK(read_at<std::uint32_t>(b, 32) == 6);
  CHECK(read_at<double>(b, 36 + 8 * 2) == 0.65);
  // Row-major states: frame 1, component 2.
  CHECK(read_at<double>(b, 36 + 8 * 4 + 8 * (1 * 6 + 2)) == t.states(1, 2));
}

TEST_CASE("trajectory round trip is exact and byte-identical") {
  TempDir dir;
  const auto t = sample_trajectory();
  io::write_trajectory(dir / "a.lsdt", t);
  const auto r = io::read_trajectory(dir / "a.lsdt");
  CHECK(r.theta == t.theta);
  CHECK(r.times == t.times);
  CHECK(r.states == t.states);
  io::write_trajectory(dir / "b.lsdt", r);
  CHECK(bytes_of(dir / "a.lsdt") == bytes_of(dir / "b.lsdt"));
}

TEST_CASE("corrupt trajectory files are rejected") {
  TempDir dir;
  io::write_trajectory(dir / "a.lsdt", sample_trajectory());
  SUBCASE("bad magic") {
    corrupt_magic(dir / "a.lsdt");
    CHECK_THROWS_AS(io::read_trajectory(dir / "a.lsdt"), IoError);
  }
  SUBCASE("truncated") {
    truncate(dir / "a.lsdt", 3);
    CHECK_THROWS_AS(io::read_trajectory(dir / "a.lsdt"), IoError);
  }
  SUBCASE("trailing bytes") {
    io::write_text(dir / "a.lsdt", bytes_of(dir / "a.lsdt") + "zz");
    CHECK_THROWS_AS(io::read_trajectory(dir / "a.lsdt"), IoError);
  }
  SUBCASE("wrong version") {
    std::string b = bytes_of(dir / "a.lsdt");
    b[4] = 2;
    io::write_text(dir / "a.lsdt", b);
    CHECK_THROWS_AS(io::read_trajectory(dir / "a.lsdt"), IoError);
  }
  CHECK_THROWS_AS(io::read_trajectory(dir / "missing.lsdt"), IoError);
}

TEST_CASE("model checkpoint round trip") {
  TempDir dir;
  const auto c = sample_checkpoint();
  io::write_model(dir / "m.lsdm", c);
  const auto r = io::read_model(dir / "m.lsdm");
  CHECK(r.model.encoder.widths == c.model.encoder.widths);
  CHECK(r.model.decoder.widths == c.model.decoder.widths);
  CHECK(r.model.encoder.omega0 == c.model.encoder.omega0);
  CHECK(r.model.seed == 17);
  for (std::size_t l = 0; l < c.model.encoder.num_layers(); ++l) {
    CHECK(r.model.encoder.weights[l] == c.model.encoder.weights[l]);
    CHECK(r.model.decoder.biases[l] == c.model.decoder.biases[l]);
  }
  REQUIRE(r.coefficients.size() == 2);
  CHECK(r.coefficients[1].A == c.coefficients[1].A);
  CHECK(r.coefficients[1].b == c.coefficients[1].b);
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[1].theta == c.points[1].theta);
  CHECK(r.points[1].origin == train::Origin::acquired);
  CHECK(r.points[1].trained_epochs == 12);
  CHECK(r.points[1].grid_index == 8);

  std::mt19937_64 rng(9);
  const ad::Matrix u = lasdi::testing::random_matrix(3, 6, rng);
  CHECK(rom::decode(r.model, rom::encode(r.model, u)) == rom::decode(c.model, rom::encode(c.model, u)));

  io::write_model(dir / "n.lsdm", r);
  CHECK(bytes_of(dir / "m.lsdm") == bytes_of(dir / "n.lsdm"));

  SUBCASE("bad magic") {
    corrupt_magic(dir / "m.lsdm");
    CHECK_THROWS_AS(io::read_model(dir / "m.lsdm"), IoError);
  }
  SUBCASE("truncated blob") {
    truncate(dir / "m.lsdm", 8);
    CHECK_THROWS_AS(io::read_model(dir / "m.lsdm"), IoError);
  }
  SUBCASE("a surrogate file is not a model") {
    const gp::GPSurrogate s = gp::fit_gp(std::vector<fom::ParameterPoint>{{0.1, 1.0}},
                                         {rom::LatentCoefficients::zeros(2)});
    io::write_surrogate(dir / "s.lsdg", s);
    CHECK_THROWS_AS(io::read_model(dir / "s.lsdg"), IoError);
  }
}

TEST_CASE("surrogate round trip") {
  TempDir dir;
  std::vector<fom::ParameterPoint> th{{0.05, 0.5}, {0.25, 0.5}, {0.15, 1.5}, {0.1, 1.0}};
  std::vector<rom::LatentCoefficients> c;
  std::mt19937_64 rng(6);
  for (std::size_t i = 0; i < th.size(); ++i) {
    rom::LatentCoefficients k;
    k.A = lasdi::testing::random_matrix(2, 2, rng);
    k.b = lasdi::testing::random_matrix(2, 1, rng);
    c.push_back(k);
  }
  const auto s = gp::fit_gp(th, c);
  io::write_surrogate(dir / "s.lsdg", s);
  const auto r = io::read_surrogate(dir / "s.lsdg");
  for (const auto& q : {fom::ParameterPoint{0.2, 0.8}, th[2]}) {
    const auto a = s.posterior(q), b = r.posterior(q);
    CHECK(a.mean == b.mean);
    CHECK(a.variance == b.variance);
  }
  io::write_surrogate(dir / "t.lsdg", r);
  CHECK(bytes_of(dir / "s.lsdg") == bytes_of(dir / "t.lsdg"));
  truncate(dir / "s.lsdg", 1);
  CHECK_THROWS_AS(io::read_surrogate(dir / "s.lsdg"), IoError);
}
