#pragma once

// Leaky-integrator echo state network with a ridge-regression readout, and
// the per-user mobility predictor built on top of it.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <nlohmann/json_fwd.hpp>

#include "aeronet/geo_mobility.hpp"

namespace aeronet {

struct EsnConfig {
  std::size_t reservoir_size = 500;
  double sparsity = 0.1;         // fraction of nonzero recurrent weights
  double spectral_radius = 0.9;
  double leak_rate = 1.0;
  double input_scaling = 0.3;
  double ridge_lambda = 1.0;
  std::size_t washout = 10;
  std::size_t input_dim = 2;
  std::size_t output_dim = 2;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Reservoir weights are fixed at construction; only the readout and the
/// running state change afterwards. The readout acts on [1; u; x] where u is
/// the most recent input.
class EsnModel {
public:
  EsnModel(EsnConfig config, Eigen::MatrixXd w_in, SparseMatrix w);

  [[nodiscard]] const EsnConfig& config() const noexcept { return config_; }
  [[nodiscard]] const Eigen::MatrixXd& w_in() const noexcept { return w_in_; }
  [[nodiscard]] const SparseMatrix& w() const noexcept { return w_; }
  [[nodiscard]] const Eigen::MatrixXd& w_out() const noexcept { return w_out_; }
  [[nodiscard]] const Eigen::VectorXd& state() const noexcept { return x_; }
  [[nodiscard]] const Eigen::VectorXd& last_input() const noexcept { return u_; }
  [[nodiscard]] bool trained() const noexcept { return trained_; }
  [[nodiscard]] std::size_t feature_dim() const noexcept;

  /// x <- (1 - a) x + a tanh(W_in [1; u] + W x)
  void step(const Eigen::VectorXd& u);
  /// y = W_out [1; u; x]
  [[nodiscard]] Eigen::VectorXd readout() const;
  /// [1; u; x] for the current state.
  [[nodiscard]] Eigen::VectorXd features() const;

  void reset_state();
  void set_w_out(Eigen::MatrixXd w_out);
  void set_state(Eigen::VectorXd x);

private:
  EsnConfig config_;
  Eigen::MatrixXd w_in_;
  SparseMatrix w_;
  Eigen::MatrixXd w_out_;
  Eigen::VectorXd x_;
  Eigen::VectorXd u_;
  bool trained_ = false;
};

/// Draws W_in ~ U(-s, s) and a sparse W ~ U(-1, 1) with exactly
/// round(sparsity * N^2) nonzeros, then rescales W to the configured
/// spectral radius.
EsnModel build_reservoir(const EsnConfig& config);

/// Largest eigenvalue modulus of a square matrix.
double spectral_radius(const SparseMatrix& w);

/// Feeds every column of `inputs` (input_dim x T) from the current state and
/// returns the feature vectors [1; u; x] from step `washout` onwards as
/// columns (feature_dim x (T - washout)).
Eigen::MatrixXd harvest_states(EsnModel& model, const Eigen::MatrixXd& inputs, std::size_t washout);

struct RidgeFit {
  Eigen::MatrixXd w_out;
  double relative_residual = 0.0;  // ||W (Z Z' + l I) - Y Z'|| / ||Y Z'||
};

/// argmin_W ||W Z - Y||^2 + lambda ||W||^2. Throws ValidationError when the
/// normal matrix is singular (lambda = 0 with rank-deficient Z).
RidgeFit fit_ridge(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets, double lambda);

double ridge_residual(const Eigen::MatrixXd& w_out, const Eigen::MatrixXd& features,
                      const Eigen::MatrixXd& targets, double lambda);

/// Resets the state, harvests features over `inputs`, fits the readout to
/// `targets` (output_dim x T, column t is the target after input t) and
/// installs it. The model state is left at the end of the input sequence.
RidgeFit train_readout(EsnModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                       double lambda);

/// Maps positions in the extent to [-1, 1]^2 and back.
class PositionScaler {
public:
  explicit PositionScaler(WorldExtent extent) : extent_(extent) {}
  [[nodiscard]] Eigen::VectorXd encode(Point2 p) const;
  [[nodiscard]] Point2 decode(const Eigen::VectorXd& v) const;
  [[nodiscard]] const WorldExtent& extent() const noexcept { return extent_; }

private:
  WorldExtent extent_;
};

/// Trains `model` for one-step-ahead prediction on a position sequence:
/// input slot n, target slot n + 1.
RidgeFit fit_positions(EsnModel& model, const PositionScaler& scaler, std::span<const Point2> train);

/// Teacher-forced prediction. Feeds each observed position in turn and
/// returns the predicted next position after each, clamped to the extent.
/// Only the first `horizon` observations are used.
std::vector<Point2> predict_trace(EsnModel& model, const PositionScaler& scaler,
                                  std::span<const Point2> observed, std::size_t horizon);

/// Mean over users of the per-user root-mean-square position error.
double mean_user_rmse(std::span<const std::vector<Point2>> predicted,
                 std::span<const std::vector<Point2>> target);

// Reference predictors for the same one-step-ahead task.
std::vector<Point2> zero_order_hold(std::span<const Point2> trace, std::size_t first, std::size_t count);
std::vector<Point2> historical_average(std::span<const Point2> trace, std::size_t first,
                                       std::size_t count);

enum class ReservoirSharing {
  shared,    // one reservoir draw per cohort, copied into each user's model
  per_user,  // independent reservoir per user from a derived seed
};

struct CohortPrediction {
  std::size_t first_slot = 0;                   // first predicted slot (= train slot count)
  std::vector<std::vector<Point2>> predicted;   // per user, slots [first_slot, n_slots)
  std::vector<std::vector<Point2>> actual;
  double mse = 0.0;
  double max_ridge_residual = 0.0;
};

/// Trains one model per user on the first 75% of the slots and predicts the
/// remaining slots one step ahead.
CohortPrediction predict_cohort(const TraceSet& traces, const EsnConfig& config, const WorldExtent& extent,
                                ReservoirSharing sharing = ReservoirSharing::shared);

nlohmann::json esn_model_to_json(const EsnModel& model);
nlohmann::json esn_config_to_json(const EsnConfig& config);

}  // namespace aeronet
