#include "burgan/train/trainer.hpp"

#include "burgan/common/binary_io.hpp"
#include "burgan/common/errors.hpp"
#include "burgan/model/graph.hpp"
#include "burgan/train/losses.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace burgan::train {

namespace fs = std::filesystem;
using ad::JetChannels;
using ad::Matrix;
using ad::Var;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kValidationStream = 0x76616c6964ULL;
constexpr std::size_t kValPdeChunk = 512;

std::string config_key(TrainConfig c) {
  c.iterations = 0;
  return to_json(c);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_finite_loss(double v, const char* name, std::uint64_t iteration) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("non-finite ") + name + " at iteration " + std::to_string(iteration));
  }
}

// Keeps the header and every row whose leading iteration is <= last.
void truncate_log(const fs::path& path, std::uint64_t last) {
  if (!fs::exists(path)) return;
  std::istringstream in(read_file(path));
  std::string line, out;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      out += line + "\n";
      header = false;
      continue;
    }
    if (line.empty()) continue;
    const std::uint64_t it = std::stoull(line.substr(0, line.find(',')));
    if (it <= last) out += line + "\n";
  }
  write_file(path, out);
}

}  // namespace

std::mt19937_64 iteration_rng(std::uint64_t seed, std::uint64_t iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration), static_cast<std::uint32_t>(iteration >> 32)};
  return std::mt19937_64(seq);
}

std::vector<NoiseVector> validation_noise(std::uint64_t seed, std::size_t count, std::size_t z_dim) {
  std::mt19937_64 rng = iteration_rng(seed ^ kValidationStream, ~std::uint64_t{0});
  std::vector<NoiseVector> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(draw_noise(rng, z_dim));
  return out;
}

ValidationMetrics validate(const ModelParams& params, const Dataset& dataset, std::span<const std::size_t> ids,
                           std::span<const NoiseVector> noise) {
  if (ids.empty()) throw ConfigError("validation set is empty");
  if (noise.empty()) throw ConfigError("validation needs at least one noise draw");
  const Grid& g = dataset.grid();
  std::vector<double> xs, ts;
  std::vector<std::size_t> js, ns;
  for (std::size_t j = 0; j < g.nx; j += kValStrideX) {
    js.push_back(j);
    xs.push_back(g.x(j));
  }
  for (std::size_t n = 0; n < g.nt; n += kValStrideT) {
    ns.push_back(n);
    ts.push_back(g.t(n));
  }
  const auto rows = static_cast<Eigen::Index>(ns.size());
  const auto cols = static_cast<Eigen::Index>(js.size());

  ValidationMetrics out;
  for (std::size_t id : ids) {
    const SolutionField& f = dataset.fields.at(id);
    Matrix ref(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) ref(r, c) = f.at(ns[static_cast<std::size_t>(r)], js[static_cast<std::size_t>(c)]);

    const std::vector<double> ic(f.u.row(0).data(), f.u.row(0).data() + f.u.cols());
    const LatentCode latent = encode(params, ic);
    Matrix mean = Matrix::Zero(rows, cols);
    double l_ic = 0.0;
    for (const NoiseVector& z : noise) {
      const Matrix p = predict_grid(params, latent, z, xs, ts);
      mean += p;
      l_ic += (p.row(0) - ref.row(0)).squaredNorm() / static_cast<double>(cols);
    }
    mean /= static_cast<double>(noise.size());
    out.rel_l2 += (mean - ref).norm() / ref.norm();
    out.l_ic += l_ic / static_cast<double>(noise.size());

    // residual of the first draw, chunked to bound tape memory
    const std::size_t total = xs.size() * ts.size();
    double pde_sum = 0.0;
    for (std::size_t begin = 0; begin < total; begin += kValPdeChunk) {
      const std::size_t count = std::min(kValPdeChunk, total - begin);
      ad::Tape tape;
      const ad::BoundMlp net = ad::bind(tape, params.approximator, false);
      Var latents = tape.constant(Eigen::Map<const Matrix>(latent.data(), 1, static_cast<Eigen::Index>(latent.size())));
      std::vector<double> px, pt;
      for (std::size_t q = begin; q < begin + count; ++q) {
        px.push_back(xs[q % xs.size()]);
        pt.push_back(ts[q / xs.size()]);
      }
      const std::vector<Eigen::Index> owner(count, 0);
      Matrix zrows(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(noise[0].size()));
      for (Eigen::Index r = 0; r < zrows.rows(); ++r)
        for (Eigen::Index c = 0; c < zrows.cols(); ++c) zrows(r, c) = noise[0][static_cast<std::size_t>(c)];
      const ad::JetBatch jets = graph::approximate(net, latents, owner, zrows, px, pt, JetChannels::full());
      pde_sum += loss_pde(jets, kViscosity).scalar() * static_cast<double>(count);
    }
    out.l_pde += pde_sum / static_cast<double>(total);
  }
  const auto n = static_cast<double>(ids.size());
  out.rel_l2 /= n;
  out.l_ic /= n;
  out.l_pde /= n;
  return out;
}

Trainer::Trainer(const TrainConfig& config, const Dataset& dataset)
    : config_(config), dataset_(&dataset), params_(ModelParams::initialize(config.z_dim, config.seed)) {
  config_.validate();
  init_pools();
  adam_g_ = AdamState::like(params_.generator_parameters());
  adam_d_ = AdamState::like(params_.discriminator_parameters());
}

Trainer::Trainer(const TrainConfig& config, const Dataset& dataset, const Checkpoint& ckpt)
    : config_(config), dataset_(&dataset), params_(ckpt.params) {
  config_.validate();
  const auto find = [&](const char* tag) -> const std::string& {
    const auto it = ckpt.sections.find(tag);
    if (it == ckpt.sections.end()) throw IoError(std::string("checkpoint has no ") + tag + " section to resume from");
    return it->second;
  };
  ordered_json state;
  try {
    state = ordered_json::parse(find("TRNS"));
    iteration_ = state.at("iteration").get<std::uint64_t>();
    const TrainConfig stored = parse_train_config(state.at("config").dump(), "checkpoint config");
    if (config_key(stored) != config_key(config_)) {
      throw ConfigError("resume config differs from the checkpoint's config (only iterations may change)");
    }
  } catch (const ordered_json::exception& e) {
    throw IoError(std::string("checkpoint training state: ") + e.what());
  }
  if (iteration_ > config_.iterations) {
    throw ConfigError("checkpoint is at iteration " + std::to_string(iteration_) + ", past the configured " +
                      std::to_string(config_.iterations));
  }
  init_pools();
  adam_g_ = parse_adam(find("ADMG"), params_.generator_parameters());
  adam_d_ = parse_adam(find("ADMD"), params_.discriminator_parameters());
  counters_ = {iteration_ * kIcsPerBatch * kCollocationPerIc, iteration_ * kIcsPerBatch * kInitialPerIc,
               iteration_ * kIcsPerBatch * kBoundaryPerIc, iteration_ * kIcsPerBatch * kRealPerIc};
}

void Trainer::init_pools() {
  dataset_->validate();
  if (dataset_->grid().nx != kIcDim) throw ConfigError("training needs 512-point fields");
  if (params_.z_dim != config_.z_dim) throw ConfigError("checkpoint z_dim differs from the config");
  train_pool_ = config_.train_ics.empty() ? dataset_->splits.train : config_.train_ics;
  val_pool_ = config_.val_ics.empty() ? dataset_->splits.val : config_.val_ics;
  for (std::size_t id : train_pool_)
    if (id >= dataset_->fields.size()) throw ConfigError("train_ics index " + std::to_string(id) + " out of range");
  for (std::size_t id : val_pool_)
    if (id >= dataset_->fields.size()) throw ConfigError("val_ics index " + std::to_string(id) + " out of range");
  if (train_pool_.empty()) throw ConfigError("no training ICs");
  val_noise_ = validation_noise(config_.seed, config_.val_z, config_.z_dim);
}

StepMetrics Trainer::step() {
  ++iteration_;
  std::mt19937_64 rng = iteration_rng(config_.seed, iteration_);
  const Minibatch mb = sample_minibatch(*dataset_, train_pool_, config_.z_dim, rng);
  if (mb.col_x.size() != kIcsPerBatch * kCollocationPerIc || mb.init_x.size() != kIcsPerBatch * kInitialPerIc ||
      mb.bc_t.size() != kIcsPerBatch * kBoundaryPerIc || mb.real_x.size() != kIcsPerBatch * kRealPerIc) {
    throw ContractViolation("minibatch composition is off");
  }
  counters_.collocation += mb.col_x.size();
  counters_.initial += mb.init_x.size();
  counters_.boundary += mb.bc_t.size();
  counters_.real += mb.real_x.size();

  const Matrix col_noise = mb.noise_rows(mb.col_ic);
  const Matrix init_noise = mb.noise_rows(mb.init_ic);
  const Matrix bc_noise = mb.noise_rows(mb.bc_ic);
  const std::vector<double> upper_x(mb.bc_t.size(), dataset_->grid().x_max());
  const std::vector<double> lower_x(mb.bc_t.size(), dataset_->grid().x_min);
  const AdamSettings adam{config_.lr};
  const auto slots = static_cast<Eigen::Index>(mb.slots());

  StepMetrics m;
  m.iteration = iteration_;
  for (std::size_t g_step = 0; g_step < config_.g_steps; ++g_step) {
    ad::Tape tape;
    const graph::BoundGenerator gen = graph::bind_generator(tape, params_, true);
    const Var latents = graph::encode(gen.encoder, tape.constant(mb.ics));
    const ad::JetBatch col =
        graph::approximate(gen.approximator, latents, mb.col_ic, col_noise, mb.col_x, mb.col_t, JetChannels::full());

    if (g_step == 0) {
      const Matrix fake_u = col.value.value();
      for (std::size_t d_step = 0; d_step < config_.d_steps; ++d_step) {
        ad::Tape dt;
        const ad::BoundMlp disc = ad::bind(dt, params_.discriminator, true);
        const Var d_real = graph::discriminate(disc, mb.real_x, mb.real_t, dt.constant(mb.real_u), mb.ics, mb.real_ic);
        const Var d_fake = graph::discriminate(disc, mb.col_x, mb.col_t, dt.constant(fake_u), mb.ics, mb.col_ic);
        const Var d_loss = gan_discriminator_loss(d_real, d_fake);
        require_finite_loss(d_loss.scalar(), "discriminator loss", iteration_);
        if (d_step == 0) m.d_loss = d_loss.scalar();
        std::vector<Matrix> grads = ad::reverse_gradient(dt, d_loss, disc.parameters());
        const double norm = clip_global_norm(grads, config_.clip_norm);
        if (d_step == 0) m.d_grad_norm = norm;
        adam_step(params_.discriminator_parameters(), grads, adam_d_, adam);
      }
    }

    const ad::JetBatch init = graph::approximate(gen.approximator, latents, mb.init_ic, init_noise, mb.init_x,
                                                 std::vector<double>(mb.init_x.size(), 0.0), JetChannels::value_only());
    const ad::JetBatch upper =
        graph::approximate(gen.approximator, latents, mb.bc_ic, bc_noise, upper_x, mb.bc_t, JetChannels::first_x());
    const ad::JetBatch lower =
        graph::approximate(gen.approximator, latents, mb.bc_ic, bc_noise, lower_x, mb.bc_t, JetChannels::first_x());

    Matrix rec_x(slots, static_cast<Eigen::Index>(kCollocationPerIc));
    Matrix rec_t(slots, static_cast<Eigen::Index>(kCollocationPerIc));
    for (std::size_t r = 0; r < mb.col_x.size(); ++r) {
      rec_x.data()[r] = mb.col_x[r];
      rec_t.data()[r] = mb.col_t[r];
    }
    const Var i_hat = graph::reconstruct(gen.reconstructor, rec_x, rec_t,
                                         ad::reshape(col.value, slots, static_cast<Eigen::Index>(kCollocationPerIc)));

    const ad::BoundMlp disc = ad::bind(tape, params_.discriminator, false);
    const Var d_fake = graph::discriminate(disc, mb.col_x, mb.col_t, col.value, mb.ics, mb.col_ic);

    LossTerms terms;
    terms.g_gan = gan_generator_loss(d_fake);
    terms.pde = loss_pde(col, kViscosity);
    terms.ic = loss_ic(init.value, mb.init_u);
    terms.bc = loss_bc(upper, lower);
    terms.rec = loss_reconstruction(i_hat, mb.ics);
    const Var total = total_generator_loss(terms, config_.weights);
    require_finite_loss(total.scalar(), "generator loss", iteration_);

    if (g_step == 0) {
      m.g_gan = terms.g_gan.scalar();
      m.l_pde = terms.pde.scalar();
      m.l_ic = terms.ic.scalar();
      m.l_bc = terms.bc.scalar();
      m.l_rec = terms.rec.scalar();
      m.g_total = total.scalar();
    }
    std::vector<Matrix> grads = ad::reverse_gradient(tape, total, gen.parameters());
    const double norm = clip_global_norm(grads, config_.clip_norm);
    if (g_step == 0) m.g_grad_norm = norm;
    adam_step(params_.generator_parameters(), grads, adam_g_, adam);
  }
  return m;
}

ValidationMetrics Trainer::validate() const { return train::validate(params_, *dataset_, val_pool_, val_noise_); }

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.params = params_;
  c.sections["ADMG"] = serialize_adam(adam_g_);
  c.sections["ADMD"] = serialize_adam(adam_d_);
  ordered_json state;
  state["iteration"] = iteration_;
  state["config"] = ordered_json::parse(to_json(config_));
  c.sections["TRNS"] = state.dump();
  return c;
}

TrainSummary train(const TrainConfig& config, const Dataset& dataset, const fs::path& out_dir, bool resume,
                   std::ostream* progress) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  const fs::path ckpt_path = out_dir / "checkpoint.brg";
  const fs::path metrics_path = out_dir / "metrics.csv";
  const fs::path val_path = out_dir / "validation.csv";

  std::optional<Trainer> trainer;
  if (resume) {
    if (!fs::exists(ckpt_path)) throw IoError(ckpt_path.string() + ": no checkpoint to resume from");
    trainer.emplace(config, dataset, read_checkpoint(ckpt_path));
    truncate_log(metrics_path, trainer->iteration());
    truncate_log(val_path, trainer->iteration());
  } else {
    trainer.emplace(config, dataset);
    write_file(metrics_path, "iter,d_loss,g_gan,l_pde,l_ic,l_bc,l_rec,val_rel_l2\n");
    const ValidationMetrics v0 = trainer->validate();
    write_file(val_path, "iter,val_rel_l2,val_l_ic,val_l_pde\n0," + fmt(v0.rel_l2) + "," + fmt(v0.l_ic) + "," +
                             fmt(v0.l_pde) + "\n");
  }
  write_file(out_dir / "config.json", to_json(config));

  std::ofstream metrics(metrics_path, std::ios::app);
  std::ofstream val_log(val_path, std::ios::app);
  if (!metrics || !val_log) throw IoError(out_dir.string() + ": cannot open training logs");

  TrainSummary summary;
  bool validated = false;
  while (trainer->iteration() < config.iterations) {
    const StepMetrics m = trainer->step();
    const std::uint64_t it = m.iteration;
    const bool last = it == config.iterations;
    std::string val_cell;
    if (it % config.validate_every == 0 || last) {
      const ValidationMetrics v = trainer->validate();
      require_finite_loss(v.rel_l2, "validation error", it);
      val_cell = fmt(v.rel_l2);
      val_log << it << ',' << fmt(v.rel_l2) << ',' << fmt(v.l_ic) << ',' << fmt(v.l_pde) << '\n' << std::flush;
      summary.final_validation = v;
      validated = true;
      if (progress) {
        *progress << "iter " << it << "  d " << m.d_loss << "  g_gan " << m.g_gan << "  pde " << m.l_pde << "  ic "
                  << m.l_ic << "  bc " << m.l_bc << "  rec " << m.l_rec << "  val_rel_l2 " << v.rel_l2 << std::endl;
      }
    }
    metrics << it << ',' << fmt(m.d_loss) << ',' << fmt(m.g_gan) << ',' << fmt(m.l_pde) << ',' << fmt(m.l_ic) << ','
            << fmt(m.l_bc) << ',' << fmt(m.l_rec) << ',' << val_cell << '\n'
            << std::flush;
    if (it % config.checkpoint_every == 0 || last) write_checkpoint(ckpt_path, trainer->checkpoint());
  }
  if (!validated) summary.final_validation = trainer->validate();
  summary.iterations = trainer->iteration();
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

}  // namespace burgan::train
