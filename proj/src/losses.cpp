#include "adsorbkit/losses.hpp"

#include <algorithm>
#include <cmath>

#include "adsorbkit/errors.hpp"

namespace adsorbkit {

LossValue mae_loss(const std::vector<double>& preds, const std::vector<double>& targets) {
    if (preds.size() != targets.size()) {
        throw ShapeMismatchError("mae: " + std::to_string(preds.size()) + " predictions vs " +
                                 std::to_string(targets.size()) + " targets");
    }
    if (preds.empty()) throw EmptyInputError("mae: empty input");

    LossValue out;
    out.partials.resize(preds.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        double r = preds[i] - targets[i];
        sum += std::abs(r);
        out.partials[i] = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) / preds.size();
    }
    out.value = sum / preds.size();
    return out;
}

LossValue ce_loss(const std::vector<double>& logits, std::size_t label) {
    if (label >= logits.size()) {
        throw IndexOutOfRangeError("ce: label " + std::to_string(label) + " out of range");
    }
    double m = *std::max_element(logits.begin(), logits.end());
    double lse = 0.0;
    for (double z : logits) lse += std::exp(z - m);
    double log_denom = m + std::log(lse);

    LossValue out;
    out.value = log_denom - logits[label];
    out.partials.resize(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        double p = std::exp(logits[k] - log_denom);
        out.partials[k] = p - (k == label ? 1.0 : 0.0);
    }
    return out;
}

LossValue plain_combined(double mae, double ce, double lambda) {
    LossValue out;
    out.value = lambda * mae + ce;
    out.partials = {lambda, 1.0};
    return out;
}

LossValue mmtg_combined(double mae, double ce, double lambda) {
    const bool mae_is_max = mae >= ce;  // ties route the max branch to the regression loss
    const double big = mae_is_max ? mae : ce;
    const double small = mae_is_max ? ce : mae;

    const double t = std::tanh(small);
    const double sech2 = 1.0 - t * t;

    LossValue out;
    out.value = big * (2.0 - lambda * t);
    const double d_big = 2.0 - lambda * t;
    const double d_small = -lambda * big * sech2;
    out.partials = mae_is_max ? std::vector<double>{d_big, d_small}
                              : std::vector<double>{d_small, d_big};
    return out;
}

InfoNceValue info_nce(const Matrix& geo_emb, const Matrix& text_emb, double temperature) {
    if (!geo_emb.same_shape(text_emb)) {
        throw ShapeMismatchError("info_nce: embedding shapes differ");
    }
    if (!(temperature > 0.0)) throw InvalidArgumentError("info_nce: temperature must be positive");

    const std::size_t b = geo_emb.rows();
    const std::size_t d = geo_emb.cols();
    if (b == 0 || d == 0) throw EmptyInputError("info_nce: empty embeddings");

    Matrix gn(b, d), tn(b, d);
    std::vector<double> g_norm(b), t_norm(b);
    for (std::size_t i = 0; i < b; ++i) {
        double sg = 0.0, st = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            sg += geo_emb(i, k) * geo_emb(i, k);
            st += text_emb(i, k) * text_emb(i, k);
        }
        g_norm[i] = std::sqrt(sg);
        t_norm[i] = std::sqrt(st);
        if (g_norm[i] == 0.0 || t_norm[i] == 0.0) throw ZeroNormRowError(i);
        for (std::size_t k = 0; k < d; ++k) {
            gn(i, k) = geo_emb(i, k) / g_norm[i];
            tn(i, k) = text_emb(i, k) / t_norm[i];
        }
    }

    Matrix sim(b, b);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += gn(i, k) * tn(j, k);
            sim(i, j) = s / temperature;
        }
    }

    // Row- and column-wise softmax cross-entropy against the diagonal.
    double loss = 0.0;
    Matrix dsim(b, b);  // d loss / d sim
    for (std::size_t i = 0; i < b; ++i) {
        double m = sim(i, 0);
        for (std::size_t j = 1; j < b; ++j) m = std::max(m, sim(i, j));
        double lse = 0.0;
        for (std::size_t j = 0; j < b; ++j) lse += std::exp(sim(i, j) - m);
        double log_denom = m + std::log(lse);
        loss += (log_denom - sim(i, i)) / (2.0 * b);
        for (std::size_t j = 0; j < b; ++j) {
            dsim(i, j) += (std::exp(sim(i, j) - log_denom) - (i == j ? 1.0 : 0.0)) / (2.0 * b);
        }
    }
    for (std::size_t j = 0; j < b; ++j) {
        double m = sim(0, j);
        for (std::size_t i = 1; i < b; ++i) m = std::max(m, sim(i, j));
        double lse = 0.0;
        for (std::size_t i = 0; i < b; ++i) lse += std::exp(sim(i, j) - m);
        double log_denom = m + std::log(lse);
        loss += (log_denom - sim(j, j)) / (2.0 * b);
        for (std::size_t i = 0; i < b; ++i) {
            dsim(i, j) += (std::exp(sim(i, j) - log_denom) - (i == j ? 1.0 : 0.0)) / (2.0 * b);
        }
    }

    InfoNceValue out;
    out.value = loss;
    out.grad_geo = Matrix(b, d);
    out.grad_text = Matrix(b, d);

    // d/d gn = dsim * tn / tau, then back through row normalization:
    // d/dg = (I - gn gn^T) / |g| * (d/d gn).
    for (std::size_t i = 0; i < b; ++i) {
        std::vector<double> dgn(d, 0.0), dtn(d, 0.0);
        for (std::size_t j = 0; j < b; ++j) {
            double wg = dsim(i, j) / temperature;
            double wt = dsim(j, i) / temperature;
            for (std::size_t k = 0; k < d; ++k) {
                dgn[k] += wg * tn(j, k);
                dtn[k] += wt * gn(j, k);
            }
        }
        double gdot = 0.0, tdot = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            gdot += dgn[k] * gn(i, k);
            tdot += dtn[k] * tn(i, k);
        }
        for (std::size_t k = 0; k < d; ++k) {
            out.grad_geo(i, k) = (dgn[k] - gdot * gn(i, k)) / g_norm[i];
            out.grad_text(i, k) = (dtn[k] - tdot * tn(i, k)) / t_norm[i];
        }
    }
    return out;
}

}  // namespace adsorbkit
