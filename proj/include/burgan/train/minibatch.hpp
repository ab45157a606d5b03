#pragma once

#include "burgan/autodiff/tape.hpp"
#include "burgan/oracle/dataset.hpp"

#include <random>
#include <span>
#include <vector>

namespace burgan::train {

inline constexpr std::size_t kIcsPerBatch = 8;
inline constexpr std::size_t kCollocationPerIc = 64;
inline constexpr std::size_t kInitialPerIc = 8;
inline constexpr std::size_t kBoundaryPerIc = 8;
inline constexpr std::size_t kRealPerIc = 64;

/// Point sets for one iteration. Every per-point list is IC-major: the entries of IC k occupy
/// rows [k * per_ic, (k + 1) * per_ic), and `*_ic` gives that row's IC slot.
struct Minibatch {
  std::vector<std::size_t> field_ids;  // dataset indices, one per slot
  std::vector<ICParams> ic_params;
  ad::Matrix ics;    // slots x 512, the stored t = 0 rows
  ad::Matrix noise;  // slots x z_dim, one draw per slot

  // collocation points, sorted by (t, x) within each slot; they double as the fake tuples and
  // as the reconstructor samples
  std::vector<double> col_x, col_t;
  std::vector<Eigen::Index> col_ic;

  std::vector<double> init_x;
  std::vector<Eigen::Index> init_ic;
  ad::Matrix init_u;  // exact IC values, N x 1

  std::vector<double> bc_t;
  std::vector<Eigen::Index> bc_ic;

  // real tuples: grid entries of the stored oracle fields
  std::vector<double> real_x, real_t;
  std::vector<Eigen::Index> real_ic;
  ad::Matrix real_u;  // N x 1

  [[nodiscard]] std::size_t slots() const { return field_ids.size(); }
  /// Noise rows repeated per point: row r is noise of slot owner[r].
  [[nodiscard]] ad::Matrix noise_rows(std::span<const Eigen::Index> owner) const;
};

/// Draws 8 ICs from `pool` (without replacement when the pool has at least 8, else with),
/// one noise vector per IC and all point sets. Consumes `rng` in a fixed order.
Minibatch sample_minibatch(const Dataset& dataset, std::span<const std::size_t> pool, std::size_t z_dim,
                           std::mt19937_64& rng);

}  // namespace burgan::train
