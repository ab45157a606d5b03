#include "burgan/train/minibatch.hpp"

#include "burgan/common/errors.hpp"
#include "burgan/model/model.hpp"

#include <algorithm>
#include <numeric>

namespace burgan::train {

using ad::Matrix;

Matrix Minibatch::noise_rows(std::span<const Eigen::Index> owner) const {
  Matrix out(static_cast<Eigen::Index>(owner.size()), noise.cols());
  for (std::size_t r = 0; r < owner.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = noise.row(owner[r]);
  return out;
}

Minibatch sample_minibatch(const Dataset& dataset, std::span<const std::size_t> pool, std::size_t z_dim,
                           std::mt19937_64& rng) {
  if (pool.empty()) throw ConfigError("training pool is empty");
  for (std::size_t id : pool) {
    if (id >= dataset.fields.size()) throw ConfigError("training index " + std::to_string(id) + " out of range");
  }
  const Grid& g = dataset.grid();
  if (g.nx != kIcDim) throw ConfigError("training needs 512-point fields");

  Minibatch mb;
  if (pool.size() >= kIcsPerBatch) {
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = 0; k < kIcsPerBatch; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, order.size() - 1);
      std::swap(order[k], order[pick(rng)]);
      mb.field_ids.push_back(pool[order[k]]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t k = 0; k < kIcsPerBatch; ++k) mb.field_ids.push_back(pool[pick(rng)]);
  }

  const auto slots = static_cast<Eigen::Index>(kIcsPerBatch);
  mb.ics.resize(slots, static_cast<Eigen::Index>(kIcDim));
  mb.noise.resize(slots, static_cast<Eigen::Index>(z_dim));

  std::uniform_real_distribution<double> ux(g.x_min, g.x_max());
  std::uniform_real_distribution<double> ut(0.0, g.t_end);
  std::uniform_int_distribution<std::size_t> pick_n(0, g.nt - 1);
  std::uniform_int_distribution<std::size_t> pick_j(0, g.nx - 1);

  mb.init_u.resize(static_cast<Eigen::Index>(kIcsPerBatch * kInitialPerIc), 1);
  mb.real_u.resize(static_cast<Eigen::Index>(kIcsPerBatch * kRealPerIc), 1);

  for (Eigen::Index k = 0; k < slots; ++k) {
    const SolutionField& f = dataset.fields[mb.field_ids[static_cast<std::size_t>(k)]];
    mb.ic_params.push_back(f.ic);
    mb.ics.row(k) = f.u.row(0);
    const NoiseVector z = draw_noise(rng, z_dim);
    for (std::size_t q = 0; q < z_dim; ++q) mb.noise(k, static_cast<Eigen::Index>(q)) = z[q];

    std::vector<std::pair<double, double>> tx(kCollocationPerIc);
    for (auto& p : tx) {
      p.second = ux(rng);
      p.first = ut(rng);
    }
    std::sort(tx.begin(), tx.end());
    for (const auto& [t, x] : tx) {
      mb.col_x.push_back(x);
      mb.col_t.push_back(t);
      mb.col_ic.push_back(k);
    }

    for (std::size_t q = 0; q < kInitialPerIc; ++q) {
      const double x = ux(rng);
      mb.init_u(static_cast<Eigen::Index>(mb.init_x.size()), 0) = f.ic(x);
      mb.init_x.push_back(x);
      mb.init_ic.push_back(k);
    }

    for (std::size_t q = 0; q < kBoundaryPerIc; ++q) {
      mb.bc_t.push_back(ut(rng));
      mb.bc_ic.push_back(k);
    }

    for (std::size_t q = 0; q < kRealPerIc; ++q) {
      const std::size_t n = pick_n(rng);
      const std::size_t j = pick_j(rng);
      mb.real_u(static_cast<Eigen::Index>(mb.real_x.size()), 0) = f.at(n, j);
      mb.real_x.push_back(g.x(j));
      mb.real_t.push_back(g.t(n));
      mb.real_ic.push_back(k);
    }
  }
  return mb;
}

}  // namespace burgan::train
