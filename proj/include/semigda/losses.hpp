#pragma once

#include <cstdint>

#include "semigda/autodiff.hpp"
#include "semigda/tensor.hpp"

namespace semigda {

// Gaussian warm-up for the unsupervised loss weight:
//   lambda(t) = beta * exp(-5 * (1 - t/t_max)^2),
// ramping from beta*e^-5 at t=0 to beta at t=t_max.
double lambda_schedule(std::int64_t t, std::int64_t t_max, double beta);

struct LossReport {
    double sup_prior = 0.0;
    double sup_seg = 0.0;
    double unsup_prior = 0.0;
    double unsup_seg = 0.0;
    double lambda_u = 0.0;
    double total = 0.0;
};

namespace losses {

// 1 - (2*sum(pred*target) + smooth) / (sum(pred) + sum(target) + smooth)
// over soft maps in [0,1]; sums run over the whole tensors.
ad::Var dice_loss(const ad::Var& pred, const ad::Var& target, double smooth);

// Element-mean MSE of both trainable latent means against the mask prior mean.
ad::Var prior_sup(const ad::Var& ztilde_v, const ad::Var& z_r, const ad::Var& z_g);
// Element-mean MSE between the two branch latent means.
ad::Var prior_unsup(const ad::Var& ztilde_v, const ad::Var& z_r);

// Both predictions are decoder outputs in [-1,1] value space, shape (N,1,H,W);
// fg is the (N,1,H,W) binary foreground target. Per-sample Dice losses are
// averaged over the batch.
ad::Var seg_sup(const ad::Var& yhat_v, const ad::Var& yhat_r, const Tensor& fg, int num_classes,
                double smooth);

// Cross-branch consistency: dice(p_v, stop(p_r)) + dice(p_r, stop(p_v)),
// per-sample, batch-averaged. stop_gradient=false keeps both sides live
// (value identical either way).
ad::Var seg_unsup(const ad::Var& yhat_v, const ad::Var& yhat_r, int num_classes, double smooth,
                  bool stop_gradient);

}  // namespace losses

struct TotalLoss {
    ad::Var value;
    LossReport report;
};

// Assembles total = sup_prior + sup_seg + lambda*(unsup_prior + unsup_seg).
// Null components count as zero. Throws TrainingError (with every component
// spelled out) if any term is non-finite.
TotalLoss total_loss(const ad::Var& sup_prior, const ad::Var& sup_seg,
                     const ad::Var& unsup_prior, const ad::Var& unsup_seg, std::int64_t t,
                     std::int64_t t_max, double beta);

// Plain-tensor convenience wrappers (tests, bindings).
double dice_loss_value(const Tensor& pred, const Tensor& target, double smooth);

}  // namespace semigda
