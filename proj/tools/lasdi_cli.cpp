// Command-line front end: generate, train, infer, evaluate, heatmap.
//
// Exit codes: 0 success, 1 usage/configuration/I-O error, 2 numerical failure.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lasdi/errors.hpp"
#include "lasdi/experiment.hpp"
#include "lasdi/io.hpp"

namespace {

using namespace lasdi;
namespace fs = std::filesystem;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string rollout;
  std::string time_mode;
};

void add_config_flags(CLI::App* cmd, Overrides& o, bool with_rollout) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--time-mode", o.time_mode, "override the time grid mode")
      ->check(CLI::IsMember({"fixed", "variable"}));
  if (with_rollout)
    cmd->add_option("--rollout", o.rollout, "enable or disable the rollout loss")
        ->check(CLI::IsMember({"on", "off"}));
}

experiment::ExperimentConfig resolve(const Overrides& o) {
  experiment::ExperimentConfig c =
      o.config.empty() ? experiment::ExperimentConfig{} : experiment::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.time_mode.empty()) c.fom.time_mode = fom::time_mode_from_string(o.time_mode);
  if (!o.rollout.empty()) c.rollout = o.rollout == "on";
  c.validate();
  return c;
}

fom::ParameterPoint parse_theta(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError("--theta expects <nu>,<omega>");
  try {
    std::size_t a = 0, b = 0;
    const std::string nu = s.substr(0, comma), om = s.substr(comma + 1);
    fom::ParameterPoint p{std::stod(nu, &a), std::stod(om, &b)};
    if (a != nu.size() || b != om.size()) throw std::invalid_argument(s);
    return p;
  } catch (const std::exception&) {
    throw ConfigError("--theta expects <nu>,<omega>, got '" + s + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order modelling of 2D Burgers flows with latent linear dynamics"};
  app.require_subcommand(1);

  Overrides gen_o, train_o;
  std::string out = "out", data, model, theta_text, errors_csv, ic_file;

  auto* gen = app.add_subcommand("generate", "solve the full-order model on the parameter grid");
  add_config_flags(gen, gen_o, false);
  gen->add_option("--out", out, "output directory for trajectories and manifest");

  auto* tr = app.add_subcommand("train", "train the autoencoder, coefficients and GP surrogate");
  add_config_flags(tr, train_o, true);
  tr->add_option("--data", data, "directory written by generate")->required();
  tr->add_option("--out", out, "output directory for the trained model");

  auto* inf = app.add_subcommand("infer", "predict a trajectory for one parameter");
  inf->add_option("--model", model, "directory written by train")->required();
  inf->add_option("--theta", theta_text, "<nu>,<omega>")->required();
  inf->add_option("--data", ic_file,
                  "trajectory file supplying the initial state and times (default: analytic "
                  "initial condition on the configured grid)");
  inf->add_option("--out", out, "output directory for prediction.lsdt");

  auto* ev = app.add_subcommand("evaluate", "relative error on every generated trajectory");
  ev->add_option("--model", model, "directory written by train")->required();
  ev->add_option("--data", data, "directory written by generate")->required();
  ev->add_option("--out", out, "output directory for errors.csv");

  auto* hm = app.add_subcommand("heatmap", "turn errors.csv into a nu x omega matrix");
  hm->add_option("--errors", errors_csv, "errors.csv written by evaluate")->required();
  hm->add_option("--out", out, "output directory for heatmap.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      experiment::cmd_generate(resolve(gen_o), out, &std::cerr);
    } else if (*tr) {
      const auto config = resolve(train_o);
      const auto s = experiment::cmd_train(config, data, out, &std::cerr);
      std::cerr << "trained " << s.epochs << " epochs on " << s.training_indices.size()
                << " parameters; fingerprint " << experiment::config_fingerprint(config) << "\n";
    } else if (*inf) {
      const auto trained = experiment::TrainedModel::load(model);
      const auto theta = parse_theta(theta_text);
      Eigen::VectorXd times, u0;
      if (!ic_file.empty()) {
        const fom::Trajectory ref = io::read_trajectory(ic_file);
        times = ref.times;
        u0 = ref.states.row(0).transpose();
      } else {
        const auto& f = trained.config.fom;
        times = fom::make_time_grid(f.n_t, f.final_time, fom::TimeMode::fixed, 0.0, 0);
        u0 = fom::initial_condition(theta, f.grid, f.k);
      }
      const auto pred = experiment::cmd_infer(trained, theta, times, u0, &std::cerr);
      fs::create_directories(out);
      io::write_trajectory(fs::path(out) / "prediction.lsdt", pred);
    } else if (*ev) {
      const auto rows = experiment::cmd_evaluate(model, data, out, &std::cerr);
      std::cerr << "evaluated " << rows.size() << " parameters\n";
    } else if (*hm) {
      experiment::cmd_heatmap(errors_csv, out);
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
