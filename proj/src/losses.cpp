#include "semigda/losses.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "semigda/common.hpp"
#include "semigda/mask_codec.hpp"

namespace semigda {

double lambda_schedule(std::int64_t t, std::int64_t t_max, double beta) {
    if (t_max <= 0) throw ConfigError("lambda_schedule: t_max must be > 0");
    if (t < 0 || t > t_max) throw ConfigError("lambda_schedule: t outside [0, t_max]");
    const double r = 1.0 - static_cast<double>(t) / static_cast<double>(t_max);
    return beta * std::exp(-5.0 * r * r);
}

namespace losses {

ad::Var dice_loss(const ad::Var& pred, const ad::Var& target, double smooth) {
    check_same_shape(pred->value, target->value, "dice_loss");
    ad::Var inter = ad::sum_all(ad::mul(pred, target));
    ad::Var denom = ad::add_scalar(ad::add(ad::sum_all(pred), ad::sum_all(target)), smooth);
    ad::Var num = ad::add_scalar(ad::mul_scalar(inter, 2.0), smooth);
    return ad::add_scalar(ad::neg(ad::div(num, denom)), 1.0);
}

ad::Var prior_sup(const ad::Var& ztilde_v, const ad::Var& z_r, const ad::Var& z_g) {
    return ad::add(ad::mse(ztilde_v, z_g), ad::mse(z_r, z_g));
}

ad::Var prior_unsup(const ad::Var& ztilde_v, const ad::Var& z_r) {
    return ad::mse(ztilde_v, z_r);
}

namespace {

int64_t batch_size_of(const ad::Var& yhat, const char* where) {
    if (yhat->value.ndim() != 4 || yhat->value.dim(1) != 1)
        throw ShapeError(std::string(where) + ": expected (N,1,H,W) prediction maps");
    return yhat->value.dim(0);
}

ad::Var batch_mean(std::vector<ad::Var> terms) {
    ad::Var acc = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) acc = ad::add(acc, terms[i]);
    return ad::mul_scalar(acc, 1.0 / static_cast<double>(terms.size()));
}

}  // namespace

ad::Var seg_sup(const ad::Var& yhat_v, const ad::Var& yhat_r, const Tensor& fg, int num_classes,
                double smooth) {
    const int64_t n = batch_size_of(yhat_v, "seg_sup");
    check_same_shape(yhat_v->value, yhat_r->value, "seg_sup");
    check_same_shape(yhat_v->value, fg, "seg_sup targets");
    ad::Var pv = soft_foreground(yhat_v, num_classes);
    ad::Var pr = soft_foreground(yhat_r, num_classes);
    ad::Var target = ad::make_leaf(fg, false);
    std::vector<ad::Var> terms;
    for (int64_t i = 0; i < n; ++i) {
        ad::Var ti = ad::narrow0(target, i, 1);
        terms.push_back(ad::add(dice_loss(ad::narrow0(pv, i, 1), ti, smooth),
                                dice_loss(ad::narrow0(pr, i, 1), ti, smooth)));
    }
    return batch_mean(std::move(terms));
}

ad::Var seg_unsup(const ad::Var& yhat_v, const ad::Var& yhat_r, int num_classes, double smooth,
                  bool stop_gradient) {
    const int64_t n = batch_size_of(yhat_v, "seg_unsup");
    check_same_shape(yhat_v->value, yhat_r->value, "seg_unsup");
    ad::Var pv = soft_foreground(yhat_v, num_classes);
    ad::Var pr = soft_foreground(yhat_r, num_classes);
    std::vector<ad::Var> terms;
    for (int64_t i = 0; i < n; ++i) {
        ad::Var pvi = ad::narrow0(pv, i, 1);
        ad::Var pri = ad::narrow0(pr, i, 1);
        ad::Var tv = stop_gradient ? ad::detach(pri) : pri;
        ad::Var tr = stop_gradient ? ad::detach(pvi) : pvi;
        terms.push_back(ad::add(dice_loss(pvi, tv, smooth), dice_loss(pri, tr, smooth)));
    }
    return batch_mean(std::move(terms));
}

}  // namespace losses

TotalLoss total_loss(const ad::Var& sup_prior, const ad::Var& sup_seg,
                     const ad::Var& unsup_prior, const ad::Var& unsup_seg, std::int64_t t,
                     std::int64_t t_max, double beta) {
    const double lambda_u = lambda_schedule(t, t_max, beta);

    ad::Var sup;
    for (const ad::Var& v : {sup_prior, sup_seg})
        if (v) sup = sup ? ad::add(sup, v) : v;
    ad::Var unsup;
    for (const ad::Var& v : {unsup_prior, unsup_seg})
        if (v) unsup = unsup ? ad::add(unsup, v) : v;

    ad::Var value;
    if (sup && unsup) value = ad::add(sup, ad::mul_scalar(unsup, lambda_u));
    else if (sup) value = sup;
    else if (unsup) value = ad::mul_scalar(unsup, lambda_u);
    else throw TrainingError("total_loss: no loss components given");

    TotalLoss out;
    out.value = value;
    out.report.sup_prior = sup_prior ? sup_prior->value.item() : 0.0;
    out.report.sup_seg = sup_seg ? sup_seg->value.item() : 0.0;
    out.report.unsup_prior = unsup_prior ? unsup_prior->value.item() : 0.0;
    out.report.unsup_seg = unsup_seg ? unsup_seg->value.item() : 0.0;
    out.report.lambda_u = lambda_u;
    out.report.total = value->value.item();

    for (const double v : {out.report.sup_prior, out.report.sup_seg, out.report.unsup_prior,
                           out.report.unsup_seg, out.report.total})
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "non-finite loss: sup_prior=" << out.report.sup_prior
               << " sup_seg=" << out.report.sup_seg << " unsup_prior=" << out.report.unsup_prior
               << " unsup_seg=" << out.report.unsup_seg << " lambda=" << lambda_u
               << " total=" << out.report.total;
            throw TrainingError(os.str());
        }
    return out;
}

double dice_loss_value(const Tensor& pred, const Tensor& target, double smooth) {
    return losses::dice_loss(ad::make_leaf(pred, false), ad::make_leaf(target, false), smooth)
        ->value.item();
}

}  // namespace semigda
