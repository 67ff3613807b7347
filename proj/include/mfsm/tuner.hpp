#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfsm/gpr.hpp"
#include "mfsm/mlp.hpp"
#include "mfsm/preprocess.hpp"
#include "mfsm/surrogate.hpp"

namespace mfsm::tune {

struct GprGrid {
  std::vector<gpr::KernelSpec> kernels;
  gpr::OptimizeOptions optimize;

  /// Constant*RBF and Constant*Matern with nu in {0.5, 1.5, 2.5}.
  static GprGrid defaults();
};

struct MlpGrid {
  std::vector<int> layer_counts{1, 2, 3};
  std::vector<int> widths{16, 32, 64, 128};
  mlp::Activation activation = mlp::Activation::tanh;
  mlp::TrainConfig train;

  /// Layer count major, width minor.
  std::vector<std::vector<Eigen::Index>> hidden_layouts() const;
};

/// Which family to fit and the grid to sweep for it.
struct ModelSpec {
  ModelKind kind = ModelKind::gpr;
  GprGrid gpr = GprGrid::defaults();
  MlpGrid mlp;
};

struct CandidateResult {
  std::string description;
  std::string hyperparameters;
  double val_rmse = 0.0;  // original units
  std::optional<double> val_r2;
  std::size_t param_count = 0;
  double fit_seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::vector<CandidateResult> candidates;
  std::size_t selected = 0;

  std::string to_csv() const;
};

/// RMSE values within this absolute distance count as tied.
inline constexpr double kTieTolerance = 1e-12;

/// Argmin validation RMSE over non-failed candidates; ties go to the smaller
/// parameter count, then the earlier grid index. Throws NumericError if every
/// candidate failed.
std::size_t select_winner(const std::vector<CandidateResult>& candidates);

struct TuneOutcome {
  SweepResult sweep;
  FittedSurrogate winner;
};

/// Each kernel is optimized on the training bin and scored on the validation
/// bin in original units.
TuneOutcome tune_gpr(const prep::PreparedData& p, const GprGrid& grid);
/// Each architecture is trained with the shared config and seed.
TuneOutcome tune_mlp(const prep::PreparedData& p, const MlpGrid& grid);
TuneOutcome tune(const prep::PreparedData& p, const ModelSpec& spec);

struct ConvergencePoint {
  std::size_t size = 0;
  double test_rmse = 0.0;
  std::optional<double> test_r2;
  std::vector<std::size_t> subset;  // dataset row indices
};

struct ConvergenceCurve {
  std::vector<ConvergencePoint> points;

  std::string to_csv() const;
};

/// Learning curve over training-set size. The dataset is split once; each
/// subset is a prefix of a seeded permutation of the training bin, so larger
/// subsets contain smaller ones. Each subset is scaled, tuned against the
/// fixed validation bin, and scored on the fixed test bin.
ConvergenceCurve convergence_study(const data::FidelityDataset& d, const ModelSpec& spec,
                                   std::vector<std::size_t> sizes, const prep::SplitSpec& split);

}  // namespace mfsm::tune
