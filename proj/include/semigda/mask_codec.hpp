#pragma once

#include "semigda/autodiff.hpp"
#include "semigda/tensor.hpp"

namespace semigda {

// Conversion between K-class integer masks and the generator's continuous
// value space, plus the differentiable foreground map used by the Dice losses.
//
//   to continuous:   c = 2*(g/K) - 1            (class g in [0,K) -> [-1, 1-2/K])
//   back to classes: g = clamp(round((c+1)*K/2), 0, K-1)
//   soft foreground: clamp((c+1)*K/2, 0, 1)     (binary tasks: class K-1 -> 1)
//
// The reversion is a total function (decoder outputs may overshoot [-1,1])
// and is the exact inverse of the conversion on valid masks.

Tensor mask_to_continuous(const Tensor& mask, int num_classes);
Tensor continuous_to_mask(const Tensor& cont, int num_classes);

Tensor soft_foreground(const Tensor& cont, int num_classes);
ad::Var soft_foreground(const ad::Var& cont, int num_classes);

// 1 where mask == num_classes-1, else 0.
Tensor foreground_indicator(const Tensor& mask, int num_classes);

// (N,1,H,W) -> (N,3,H,W); mask-derived single-channel images are replicated
// before entering the 3-channel encoder.
Tensor replicate3(const Tensor& x);

}  // namespace semigda
