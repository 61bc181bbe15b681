#include "aeronet/esn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "aeronet/error.hpp"
#include "aeronet/log.hpp"
#include "aeronet/rng.hpp"

namespace aeronet {

void EsnConfig::validate() const {
  if (reservoir_size == 0) throw ValidationError("reservoir size must be positive");
  if (!(sparsity > 0.0 && sparsity <= 1.0)) throw ValidationError("sparsity must lie in (0, 1]");
  if (!(spectral_radius > 0.0)) throw ValidationError("spectral radius must be positive");
  if (!(leak_rate > 0.0 && leak_rate <= 1.0)) throw ValidationError("leak rate must lie in (0, 1]");
  if (!(input_scaling > 0.0)) throw ValidationError("input scaling must be positive");
  if (ridge_lambda < 0.0) throw ValidationError("ridge lambda must be non-negative");
  if (input_dim == 0 || output_dim == 0) throw ValidationError("ESN input/output dimensions must be positive");
}

EsnModel::EsnModel(EsnConfig config, Eigen::MatrixXd w_in, SparseMatrix w)
    : config_(config), w_in_(std::move(w_in)), w_(std::move(w)) {
  const auto n = static_cast<Eigen::Index>(config_.reservoir_size);
  if (w_in_.rows() != n || w_in_.cols() != static_cast<Eigen::Index>(config_.input_dim + 1) ||
      w_.rows() != n || w_.cols() != n) {
    throw ValidationError("reservoir matrices do not match the configuration");
  }
  w_out_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(config_.output_dim),
                                 static_cast<Eigen::Index>(feature_dim()));
  x_ = Eigen::VectorXd::Zero(n);
  u_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config_.input_dim));
}

std::size_t EsnModel::feature_dim() const noexcept {
  return 1 + config_.input_dim + config_.reservoir_size;
}

void EsnModel::step(const Eigen::VectorXd& u) {
  if (u.size() != static_cast<Eigen::Index>(config_.input_dim)) {
    throw ValidationError("ESN input has the wrong dimension");
  }
  if (!u.allFinite()) throw ValidationError("ESN input contains NaN or infinity");
  Eigen::VectorXd pre = w_in_.col(0) + w_in_.rightCols(u.size()) * u;
  pre.noalias() += w_ * x_;
  const double a = config_.leak_rate;
  if (a == 1.0) {
    x_ = pre.array().tanh();
  } else {
    x_ = (1.0 - a) * x_.array() + a * pre.array().tanh();
  }
  u_ = u;
}

Eigen::VectorXd EsnModel::features() const {
  Eigen::VectorXd z(static_cast<Eigen::Index>(feature_dim()));
  z << 1.0, u_, x_;
  return z;
}

Eigen::VectorXd EsnModel::readout() const { return w_out_ * features(); }

void EsnModel::reset_state() {
  x_.setZero();
  u_.setZero();
}

void EsnModel::set_w_out(Eigen::MatrixXd w_out) {
  if (w_out.rows() != w_out_.rows() || w_out.cols() != w_out_.cols()) {
    throw ValidationError("readout matrix has the wrong shape");
  }
  w_out_ = std::move(w_out);
  trained_ = true;
}

void EsnModel::set_state(Eigen::VectorXd x) {
  if (x.size() != x_.size()) throw ValidationError("reservoir state has the wrong size");
  x_ = std::move(x);
}

double spectral_radius(const SparseMatrix& w) {
  if (w.nonZeros() == 0) return 0.0;
  const Eigen::MatrixXd dense(w);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(dense, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw Error("eigenvalue computation did not converge");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

EsnModel build_reservoir(const EsnConfig& config) {
  config.validate();
  Rng rng(config.rng_seed);
  const auto n = config.reservoir_size;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  Eigen::MatrixXd w_in(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(config.input_dim + 1));
  for (Eigen::Index j = 0; j < w_in.cols(); ++j) {
    for (Eigen::Index i = 0; i < w_in.rows(); ++i) w_in(i, j) = config.input_scaling * unit(rng);
  }

  // Exactly round(sparsity * n^2) positions, chosen by a partial shuffle.
  const std::size_t cells = n * n;
  const auto nnz = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.sparsity * static_cast<double>(cells))), 1, cells);
  std::vector<std::uint32_t> idx(cells);
  std::iota(idx.begin(), idx.end(), 0U);
  for (std::size_t i = 0; i < nnz; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, cells - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(nnz);
  for (std::size_t i = 0; i < nnz; ++i) {
    double v = unit(rng);
    while (v == 0.0) v = unit(rng);
    triplets.emplace_back(static_cast<int>(idx[i] / n), static_cast<int>(idx[i] % n), v);
  }
  SparseMatrix w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  w.setFromTriplets(triplets.begin(), triplets.end());

  const double radius = spectral_radius(w);
  if (radius > 0.0) {
    w *= config.spectral_radius / radius;
  } else {
    logger().warn("reservoir has zero spectral radius; leaving W unscaled");
  }
  return EsnModel(config, std::move(w_in), std::move(w));
}

Eigen::MatrixXd harvest_states(EsnModel& model, const Eigen::MatrixXd& inputs, std::size_t washout) {
  const auto steps = static_cast<std::size_t>(inputs.cols());
  if (washout >= steps) throw ValidationError("washout must be shorter than the input sequence");
  Eigen::MatrixXd z(static_cast<Eigen::Index>(model.feature_dim()),
                    static_cast<Eigen::Index>(steps - washout));
  for (std::size_t t = 0; t < steps; ++t) {
    model.step(inputs.col(static_cast<Eigen::Index>(t)));
    if (t >= washout) z.col(static_cast<Eigen::Index>(t - washout)) = model.features();
  }
  return z;
}

double ridge_residual(const Eigen::MatrixXd& w_out, const Eigen::MatrixXd& features,
                      const Eigen::MatrixXd& targets, double lambda) {
  const Eigen::MatrixXd rhs = targets * features.transpose();
  const Eigen::MatrixXd lhs = (w_out * features) * features.transpose() + lambda * w_out;
  const double scale = rhs.norm();
  const double diff = (lhs - rhs).norm();
  return scale > 0.0 ? diff / scale : diff;
}

RidgeFit fit_ridge(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets, double lambda) {
  if (features.cols() != targets.cols() || features.cols() < 2) {
    throw ValidationError("ridge fit needs matching feature/target columns (at least 2)");
  }
  if (lambda < 0.0) throw ValidationError("ridge lambda must be non-negative");
  const auto dim = features.rows();
  const auto samples = features.cols();

  RidgeFit fit;
  if (lambda > 0.0 && samples < dim) {
    // Dual form: W = Y (Z'Z + l I)^-1 Z', an (samples x samples) system.
    Eigen::MatrixXd gram = features.transpose() * features;
    gram.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw ValidationError("ridge normal matrix is not positive definite");
    const Eigen::MatrixXd yt = targets.transpose();
    Eigen::MatrixXd alpha = llt.solve(yt);
    alpha += llt.solve(yt - gram * alpha);  // one step of iterative refinement
    fit.w_out = alpha.transpose() * features.transpose();
  } else {
    Eigen::MatrixXd normal = features * features.transpose();
    normal.diagonal().array() += lambda;
    const Eigen::MatrixXd rhs = (targets * features.transpose()).transpose();
    Eigen::MatrixXd solution;
    if (lambda > 0.0) {
      Eigen::LLT<Eigen::MatrixXd> llt(normal);
      if (llt.info() != Eigen::Success) throw ValidationError("ridge normal matrix is not positive definite");
      solution = llt.solve(rhs);
      solution += llt.solve(rhs - normal * solution);
    } else {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
      if (!lu.isInvertible()) {
        throw ValidationError("normal matrix is singular with ridge_lambda = 0; use ridge_lambda > 0");
      }
      solution = lu.solve(rhs);
      solution += lu.solve(rhs - normal * solution);
    }
    fit.w_out = solution.transpose();
  }
  fit.relative_residual = ridge_residual(fit.w_out, features, targets, lambda);
  return fit;
}

RidgeFit train_readout(EsnModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                       double lambda) {
  if (inputs.cols() != targets.cols()) throw ValidationError("inputs and targets differ in length");
  if (inputs.cols() < 2) throw ValidationError("readout training needs at least 2 samples");
  const std::size_t washout = model.config().washout;
  if (washout >= static_cast<std::size_t>(inputs.cols())) {
    throw ValidationError("washout must be shorter than the training sequence");
  }
  model.reset_state();
  const Eigen::MatrixXd z = harvest_states(model, inputs, washout);
  const Eigen::MatrixXd y = targets.rightCols(z.cols());
  RidgeFit fit = fit_ridge(z, y, lambda);
  model.set_w_out(fit.w_out);
  return fit;
}

Eigen::VectorXd PositionScaler::encode(Point2 p) const {
  Eigen::VectorXd v(2);
  v << 2.0 * p.x / extent_.x_max - 1.0, 2.0 * p.y / extent_.y_max - 1.0;
  return v;
}

Point2 PositionScaler::decode(const Eigen::VectorXd& v) const {
  return {(v(0) + 1.0) * 0.5 * extent_.x_max, (v(1) + 1.0) * 0.5 * extent_.y_max};
}

RidgeFit fit_positions(EsnModel& model, const PositionScaler& scaler, std::span<const Point2> train) {
  if (train.size() < 3) throw ValidationError("position training needs at least 3 slots");
  const auto steps = static_cast<Eigen::Index>(train.size() - 1);
  Eigen::MatrixXd inputs(2, steps);
  Eigen::MatrixXd targets(2, steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    inputs.col(t) = scaler.encode(train[static_cast<std::size_t>(t)]);
    targets.col(t) = scaler.encode(train[static_cast<std::size_t>(t) + 1]);
  }
  return train_readout(model, inputs, targets, model.config().ridge_lambda);
}

std::vector<Point2> predict_trace(EsnModel& model, const PositionScaler& scaler,
                                  std::span<const Point2> observed, std::size_t horizon) {
  if (!model.trained()) throw ValidationError("ESN readout has not been trained");
  if (horizon > observed.size()) throw ValidationError("prediction horizon exceeds the observed sequence");
  std::vector<Point2> out;
  out.reserve(horizon);
  for (std::size_t i = 0; i < horizon; ++i) {
    model.step(scaler.encode(observed[i]));
    out.push_back(scaler.extent().clamp(scaler.decode(model.readout())));
  }
  return out;
}

double mean_user_rmse(std::span<const std::vector<Point2>> predicted,
                 std::span<const std::vector<Point2>> target) {
  if (predicted.size() != target.size() || predicted.empty()) {
    throw ValidationError("prediction and target cohorts differ in shape");
  }
  double total = 0.0;
  for (std::size_t u = 0; u < predicted.size(); ++u) {
    const auto& p = predicted[u];
    const auto& t = target[u];
    if (p.size() != t.size() || p.empty()) throw ValidationError("prediction and target traces differ in length");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double dx = p[i].x - t[i].x;
      const double dy = p[i].y - t[i].y;
      acc += dx * dx + dy * dy;
    }
    total += std::sqrt(acc / static_cast<double>(p.size()));
  }
  return total / static_cast<double>(predicted.size());
}

std::vector<Point2> zero_order_hold(std::span<const Point2> trace, std::size_t first, std::size_t count) {
  if (first == 0 || first + count > trace.size()) throw ValidationError("baseline range out of bounds");
  std::vector<Point2> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(trace[first + i - 1]);
  return out;
}

std::vector<Point2> historical_average(std::span<const Point2> trace, std::size_t first, std::size_t count) {
  if (first == 0 || first + count > trace.size()) throw ValidationError("baseline range out of bounds");
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < first; ++i) {
    sx += trace[i].x;
    sy += trace[i].y;
  }
  std::vector<Point2> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto seen = static_cast<double>(first + i);
    out.push_back({sx / seen, sy / seen});
    sx += trace[first + i].x;
    sy += trace[first + i].y;
  }
  return out;
}

CohortPrediction predict_cohort(const TraceSet& traces, const EsnConfig& config, const WorldExtent& extent,
                                ReservoirSharing sharing) {
  if (traces.users.empty()) throw ValidationError("empty cohort");
  const PositionScaler scaler(extent);
  const std::size_t n = traces.n_slots;
  const std::size_t first = train_slot_count(n);

  CohortPrediction out;
  out.first_slot = first;
  std::optional<EsnModel> shared;
  if (sharing == ReservoirSharing::shared) shared.emplace(build_reservoir(config));

  for (std::size_t u = 0; u < traces.users.size(); ++u) {
    const auto& trace = traces.users[u];
    const auto split = split_train_test(trace);
    EsnModel model = [&] {
      if (shared) return *shared;
      EsnConfig c = config;
      c.rng_seed = derive_seed(config.rng_seed, u);
      return build_reservoir(c);
    }();
    const RidgeFit fit = fit_positions(model, scaler, split.train);
    out.max_ridge_residual = std::max(out.max_ridge_residual, fit.relative_residual);
    // The readout was fit up to input slot first-2; feed slot first-1 onwards.
    const std::span<const Point2> observed(trace.positions.data() + first - 1, n - first);
    out.predicted.push_back(predict_trace(model, scaler, observed, n - first));
    out.actual.emplace_back(trace.positions.begin() + static_cast<std::ptrdiff_t>(first), trace.positions.end());
  }
  out.mse = mean_user_rmse(out.predicted, out.actual);
  return out;
}

nlohmann::json esn_config_to_json(const EsnConfig& c) {
  return {{"reservoir_size", c.reservoir_size}, {"sparsity", c.sparsity},
          {"spectral_radius", c.spectral_radius}, {"leak_rate", c.leak_rate},
          {"input_scaling", c.input_scaling},   {"ridge_lambda", c.ridge_lambda},
          {"washout", c.washout},               {"input_dim", c.input_dim},
          {"output_dim", c.output_dim},         {"rng_seed", c.rng_seed}};
}

nlohmann::json esn_model_to_json(const EsnModel& model) {
  auto dense = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  nlohmann::json triplets = nlohmann::json::array();
  const auto& w = model.w();
  for (Eigen::Index r = 0; r < w.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(w, r); it; ++it) triplets.push_back({it.row(), it.col(), it.value()});
  }
  return {{"config", esn_config_to_json(model.config())},
          {"w_in", dense(model.w_in())},
          {"w", std::move(triplets)},
          {"w_out", dense(model.w_out())}};
}

}  // namespace aeronet
