#pragma once

#include <span>

#include "glue/adam.hpp"
#include "glue/matrix.hpp"
#include "glue/model.hpp"

namespace glue {

// Batch-mean Gaussian negative log likelihood:
//   mean over rows of  sum_i [ log(sigma2_i)/2 + (y_i - mu_i)^2 / (2 sigma2_i) ].
// Throws NumericError on non-finite inputs.
double gaussian_nll(const Matrix& mu, const Matrix& sigma2, const Matrix& y);

// Mean over batch rows and sensors of (y - point)^2.
double mse_loss(const Matrix& point, const Matrix& y);

// Appends the per-element loss to an element graph and returns the scalar
// root node. The gaussian root is the sum over sensors of the NLL terms; the
// point root is the sum over sensors of squared errors. Batch averaging
// (1/B, and 1/(B*N) for point mode) happens at accumulation time.
NodeId attach_gaussian_nll(ElementGraph& g, std::span<const double> y);
NodeId attach_mse(ElementGraph& g, std::span<const double> y);

// Forward/backward over a whole batch: builds one element graph per window
// (in parallel), then folds gradients in fixed element order so results are
// bit-identical for any thread count. Gradients for the batch-mean loss are
// accumulated into `grads` (which must be zeros_like the parameters);
// returns the batch-mean loss. The loss kind follows params.head_mode.
double batch_loss_and_grad(const GlueParams& params, const Adjacency& adj,
                           const WindowBatch& batch, ParamSet& grads, unsigned threads = 1);

// Loss only, no gradients (evaluation passes).
double batch_loss(const GlueParams& params, const Adjacency& adj, const WindowBatch& batch,
                  unsigned threads = 1);

}  // namespace glue
