#pragma once

#include <cstddef>
#include <vector>

#include "adsorbkit/linalg.hpp"

namespace adsorbkit {

// Scalar loss value plus partial derivatives with respect to the
// differentiable inputs (predictions, logits, or the two sub-losses).
struct LossValue {
    double value = 0.0;
    std::vector<double> partials;
};

// Mean absolute error; partials are sign(residual)/n (0 at exact ties).
LossValue mae_loss(const std::vector<double>& preds, const std::vector<double>& targets);

// -log softmax(logits)[label], computed via max-shifted log-sum-exp.
// partials = softmax - onehot.
LossValue ce_loss(const std::vector<double>& logits, std::size_t label);

// lambda * Lm + Lc; partials (lambda, 1) w.r.t. (Lm, Lc).
LossValue plain_combined(double mae, double ce, double lambda);

// Max-min tanh-gated combination: with M = max(Lm, Lc), m = min(Lm, Lc),
// value = M * (2 - lambda * tanh(m)). Ties route the max branch to Lm.
// partials[0] is d/dLm, partials[1] is d/dLc.
LossValue mmtg_combined(double mae, double ce, double lambda);

struct InfoNceValue {
    double value = 0.0;
    Matrix grad_geo;   // d value / d geo_emb
    Matrix grad_text;  // d value / d text_emb
};

// Symmetric temperature-scaled contrastive alignment. Rows are L2-normalized
// internally; value is the mean of row-wise and column-wise cross-entropy
// against the diagonal.
InfoNceValue info_nce(const Matrix& geo_emb, const Matrix& text_emb, double temperature);

}  // namespace adsorbkit
