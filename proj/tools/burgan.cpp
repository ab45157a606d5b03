// burgan: data generation, training, evaluation and sampling for the conditional Burgers GAN.
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include "burgan/common/allocator.hpp"
#include "burgan/common/binary_io.hpp"
#include "burgan/common/errors.hpp"
#include "burgan/common/parallel.hpp"
#include "burgan/eval/evaluation.hpp"
#include "burgan/model/checkpoint.hpp"
#include "burgan/oracle/dataset.hpp"
#include "burgan/train/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace burgan;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ICParams parse_ic(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--ic: '" + item + "' is not a number");
    }
  }
  if (v.size() != 4) throw UsageError("--ic expects four comma-separated numbers a,b,c,d");
  for (double x : v)
    if (!std::isfinite(x)) throw UsageError("--ic values must be finite");
  return {v[0], v[1], v[2], v[3]};
}

int cmd_gen_data(const fs::path& out, std::uint64_t seed, std::size_t nt, std::size_t threads) {
  DatasetOptions opts;
  opts.nt = nt;
  opts.threads = resolve_thread_count(threads);
  const Dataset ds = generate_dataset(seed, out, opts);
  std::cout << "train=" << ds.splits.train.size() << " val=" << ds.splits.val.size()
            << " test=" << ds.splits.test.size() << "\n";
  std::cout << "wrote " << ds.fields.size() << " fields to " << out.string() << "\n";
  return 0;
}

int cmd_train(const fs::path& config_path, const fs::path& data, const fs::path& out, bool resume) {
  const train::TrainConfig config = train::load_train_config(config_path);
  const Dataset ds = load_dataset(data);
  const train::TrainSummary s = train::train(config, ds, out, resume, &std::cout);
  std::cout << "finished " << s.iterations << " iterations in " << s.seconds << " s; val rel. l2 "
            << s.final_validation.rel_l2 << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& baseline, const fs::path& data, const fs::path& out,
             std::size_t K, std::uint64_t seed, std::size_t threads, bool plots) {
  if (checkpoint.empty() == baseline.empty()) throw UsageError("eval needs exactly one of --checkpoint or --baseline");
  const Dataset ds = load_dataset(data);
  std::unique_ptr<eval::FieldPredictor> predictor;
  if (!checkpoint.empty()) {
    predictor = std::make_unique<eval::ModelPredictor>(read_checkpoint(checkpoint).params);
  } else if (baseline == "persistence") {
    predictor = std::make_unique<eval::PersistencePredictor>();
  } else {
    throw UsageError("unknown baseline '" + baseline + "' (expected persistence)");
  }
  if (ds.grid().nx != kIcDim) throw ConfigError("dataset grid has " + std::to_string(ds.grid().nx) + " points, model needs 512");
  eval::EvalOptions opts;
  opts.K = K;
  opts.seed = seed;
  opts.threads = resolve_thread_count(threads);
  if (plots) opts.plot_dir = out / "plots";
  const eval::EvalReport report = eval::evaluate_testset(*predictor, ds, opts);
  eval::write_report(report, out);
  std::cout << "mean test rel. l2 (ensemble mean) " << fmt(report.mean_rel_l2) << "\n"
            << "mean test rel. l2 (single draw)   " << fmt(report.mean_rel_l2_single) << "\n";
  if (report.mean_var_err_corr) std::cout << "mean variance-error correlation " << fmt(*report.mean_var_err_corr) << "\n";
  std::cout << "wrote report to " << out.string() << " in " << report.seconds << " s\n";
  return 0;
}

int cmd_sample(const fs::path& checkpoint, const std::string& ic_text, std::uint64_t z_seed, std::size_t nt,
               const std::string& out) {
  const ICParams ic = parse_ic(ic_text);
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  Grid grid;
  grid.nt = nt;
  grid.validate();
  const auto u0 = sample_ic(ic, grid);
  const ad::Matrix field = eval::predict_field(ckpt.params, u0, grid, eval::noise_for_seed(z_seed, ckpt.params.z_dim));
  std::string text;
  text.reserve(static_cast<std::size_t>(field.size()) * 24);
  for (Eigen::Index r = 0; r < field.rows(); ++r) {
    for (Eigen::Index c = 0; c < field.cols(); ++c) {
      if (c) text += ',';
      text += fmt(field(r, c));
    }
    text += '\n';
  }
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return 0;
}

int cmd_inspect(const std::string& checkpoint, const std::string& data) {
  if (checkpoint.empty() && data.empty()) throw UsageError("inspect needs --checkpoint and/or --data");
  if (!checkpoint.empty()) {
    const Checkpoint ckpt = read_checkpoint(checkpoint);
    const ModelParams& p = ckpt.params;
    std::cout << "checkpoint " << checkpoint << "\n  z_dim " << p.z_dim << "\n  parameters " << p.parameter_count()
              << "\n";
    const std::pair<const char*, const ad::Mlp*> nets[] = {{"encoder", &p.encoder},
                                                           {"approximator", &p.approximator},
                                                           {"reconstructor", &p.reconstructor},
                                                           {"discriminator", &p.discriminator}};
    for (const auto& [name, net] : nets) {
      std::cout << "  " << name << ":";
      for (const ad::LayerSpec& s : net->specs()) std::cout << " " << s.in_dim << "->" << s.out_dim;
      std::cout << " (" << net->parameter_count() << ")\n";
    }
    const auto it = ckpt.sections.find("TRNS");
    if (it != ckpt.sections.end()) {
      const auto state = nlohmann::ordered_json::parse(it->second);
      std::cout << "  iteration " << state.at("iteration").get<std::uint64_t>() << "\n  config "
                << state.at("config").dump() << "\n";
    }
  }
  if (!data.empty()) {
    const Dataset ds = load_dataset(data);
    std::cout << "dataset " << data << "\n  fields " << ds.fields.size() << "  nx " << ds.grid().nx << "  nt "
              << ds.grid().nt << "  seed " << ds.seed << "\n  train=" << ds.splits.train.size()
              << " val=" << ds.splits.val.size() << " test=" << ds.splits.test.size() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  burgan::keep_freed_memory();
  CLI::App app{"Conditional physics-informed GAN for viscous Burgers"};
  app.require_subcommand(1);

  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: BURGAN_THREADS or all cores)");

  fs::path out, data, config;
  std::string checkpoint, baseline, ic_text, sample_out, inspect_data;
  std::uint64_t seed = 0, z_seed = 0;
  std::size_t nt = 196, K = 64;
  bool resume = false, no_plots = false;

  CLI::App* gen = app.add_subcommand("gen-data", "Solve the 120 training ICs and write a dataset");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed", seed, "Split seed");
  gen->add_option("--nt", nt, "Time levels per field")->check(CLI::Range(5, 100000));
  gen->add_option("--threads", threads, "Worker threads");

  CLI::App* tr = app.add_subcommand("train", "Train from a dataset");
  tr->add_option("--config", config, "Training config (JSON)")->required();
  tr->add_option("--data", data, "Dataset directory")->required();
  tr->add_option("--out", out, "Run directory")->required();
  tr->add_flag("--resume", resume, "Continue from <out>/checkpoint.brg");

  CLI::App* ev = app.add_subcommand("eval", "Evaluate on the test split");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file");
  ev->add_option("--baseline", baseline, "Evaluate a baseline instead of a model (persistence)");
  ev->add_option("--data", data, "Dataset directory")->required();
  ev->add_option("--out", out, "Report directory")->required();
  ev->add_option("--K", K, "Ensemble size");
  ev->add_option("--seed", seed, "First noise seed");
  ev->add_option("--threads", threads, "Worker threads");
  ev->add_flag("--no-plots", no_plots, "Skip the per-IC plot grids");

  CLI::App* sa = app.add_subcommand("sample", "Predict the field of one IC");
  sa->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  sa->add_option("--ic", ic_text, "a,b,c,d of u(x,0) = a sin(b x + c pi) + d")->required();
  sa->add_option("--z-seed", z_seed, "Noise seed");
  sa->add_option("--nt", nt, "Time levels")->check(CLI::Range(2, 100000));
  sa->add_option("--out", sample_out, "Output CSV (default stdout)");

  CLI::App* in = app.add_subcommand("inspect", "Describe a checkpoint or dataset");
  in->add_option("--checkpoint", checkpoint, "Checkpoint file");
  in->add_option("--data", inspect_data, "Dataset directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_gen_data(out, seed, nt, threads);
    if (*tr) return cmd_train(config, data, out, resume);
    if (*ev) return cmd_eval(checkpoint, baseline, data, out, K, seed, threads, !no_plots);
    if (*sa) return cmd_sample(checkpoint, ic_text, z_seed, nt, sample_out);
    if (*in) return cmd_inspect(checkpoint, inspect_data);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
