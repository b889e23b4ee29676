#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "glue/adam.hpp"
#include "glue/dataset.hpp"
#include "glue/matrix.hpp"

namespace glue {

// The four comparison models. pca/knn/ae score a window directly
// (reconstruction error or neighbor distance); var forecasts the next
// reading and its errors route through the same Max Robust Error path as the
// graph models.
enum class BaselineKind { pca, knn, ae, var };

std::string to_string(BaselineKind kind);
BaselineKind baseline_kind_from_string(const std::string& s);

// ---- Window flattening (shared input convention) --------------------------

// One row per batch element: the window *ending at* the target time,
// flattened sensor-major — [s0(t-w+1..t), s1(t-w+1..t), ...]. Reconstruction
// models score this row, so an anomaly at time t shows up at time t.
Matrix reconstruction_rows(const WindowBatch& batch);

// One regression row per batch element: [1, lag1 (all sensors), lag2, ...]
// where lag 1 is the newest history column. Shape B x (N*w + 1).
Matrix regression_design(const WindowBatch& batch);

// ---- PCA -------------------------------------------------------------------

struct PcaModel {
    std::vector<double> mean;       // D
    Matrix axes;                    // D x m, orthonormal columns, descending variance
    std::vector<double> variances;  // all D eigenvalues of the covariance, descending
    std::size_t n_components() const { return axes.cols(); }
};

// Principal axes of the row cloud by descending variance, sign-fixed
// (largest-magnitude coordinate positive). n_components = 0 selects the
// smallest count explaining at least `variance_fraction` of total variance.
// Throws NumericError when the rows are all identical (no variance at all).
PcaModel pca_fit(const Matrix& rows, std::size_t n_components = 0,
                 double variance_fraction = 0.95);

// Squared norm of (x - reconstruct(x)).
double pca_score(const PcaModel& model, std::span<const double> x);
std::vector<double> pca_scores(const PcaModel& model, const Matrix& rows);

// ---- k-nearest-neighbors ----------------------------------------------------

// Sum of Euclidean distances from x to its k nearest training rows, by exact
// scan. Requires 1 <= k <= #train rows.
double knn_score(const Matrix& train_rows, std::span<const double> x, std::size_t k);
std::vector<double> knn_scores(const Matrix& train_rows, const Matrix& rows, std::size_t k);

// ---- Autoencoder ------------------------------------------------------------

struct AeConfig {
    std::size_t bottleneck = 0;  // 0 = ceil(D / 4)
    std::size_t hidden = 0;      // 0 = ceil((D + bottleneck) / 2)
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

struct AeModel {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    std::size_t bottleneck = 0;
    ParamSet blocks;  // enc1.W/b, enc2.W/b, dec1.W/b, dec2.W/b
};

// Symmetric fully-connected autoencoder (one ReLU hidden layer on each side
// of the bottleneck) trained with MSE on the toolkit tape; deterministic for
// a fixed seed. epochs = 0 returns the untrained initialization. Throws
// NumericError if the loss turns non-finite.
AeModel ae_fit(const Matrix& rows, const AeConfig& cfg = {});

// Squared reconstruction error of one row.
double ae_score(const AeModel& model, std::span<const double> x);
std::vector<double> ae_scores(const AeModel& model, const Matrix& rows);

// ---- Vector autoregression --------------------------------------------------

struct VarModel {
    std::size_t n_sensors = 0;
    std::size_t order = 0;  // p, the window length it was fitted on
    Matrix coef;            // (N*p + 1) x N; row 0 is the intercept
    bool ridge_applied = false;
};

// Ordinary least squares on the stacked regression (intercept included),
// one equation system shared by all sensors. A singular design falls back to
// ridge (lambda = 1e-6) automatically, with a warning on stderr and the
// ridge_applied flag set. Requires more batch rows than N*p + 1.
VarModel var_fit(const WindowBatch& batch);

// Linear prediction for one window (N x p, oldest column first).
std::vector<double> var_forecast(const VarModel& model, const Matrix& history);
// All batch elements at once; rows align with batch targets.
Matrix var_forecast_batch(const VarModel& model, const WindowBatch& batch);

}  // namespace glue
