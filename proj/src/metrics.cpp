#include "adsorbkit/metrics.hpp"

#include <cmath>
#include <sstream>

#include "adsorbkit/errors.hpp"

namespace adsorbkit {

namespace {

Matrix normalized_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < m.cols(); ++k) s += m(i, k) * m(i, k);
        double n = std::sqrt(s);
        if (n == 0.0) throw ZeroNormRowError(i);
        for (std::size_t k = 0; k < m.cols(); ++k) out(i, k) = m(i, k) / n;
    }
    return out;
}

}  // namespace

MaeR2 mae_r2(const std::vector<double>& preds, const std::vector<double>& targets) {
    if (preds.size() != targets.size()) {
        throw ShapeMismatchError("mae_r2: length mismatch");
    }
    if (preds.empty()) throw EmptyInputError("mae_r2: empty input");

    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= targets.size();

    double abs_sum = 0.0, ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        double r = preds[i] - targets[i];
        abs_sum += std::abs(r);
        ss_res += r * r;
        ss_tot += (targets[i] - mean) * (targets[i] - mean);
    }
    if (ss_tot == 0.0) throw ConstantTargetsError();

    MaeR2 out;
    out.mae = abs_sum / preds.size();
    out.r2 = 1.0 - ss_res / ss_tot;
    return out;
}

double pir(const std::vector<double>& preds, const std::vector<EnergyRange>& ranges) {
    if (preds.size() != ranges.size()) throw ShapeMismatchError("pir: length mismatch");
    if (preds.empty()) throw EmptyInputError("pir: empty input");
    std::size_t in_range = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] >= ranges[i].lo && preds[i] <= ranges[i].hi) ++in_range;
    }
    return 100.0 * static_cast<double>(in_range) / static_cast<double>(preds.size());
}

Matrix similarity_matrix(const Matrix& geo_embs, const Matrix& text_embs) {
    if (!geo_embs.same_shape(text_embs)) {
        throw ShapeMismatchError("similarity_matrix: shapes differ");
    }
    Matrix g = normalized_rows(geo_embs);
    Matrix t = normalized_rows(text_embs);
    Matrix s(g.rows(), g.rows());
    for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.rows(); ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < g.cols(); ++k) v += g(i, k) * t(j, k);
            s(i, j) = v;
        }
    }
    return s;
}

double diagonal_dominance(const Matrix& s) {
    if (s.rows() != s.cols()) throw ShapeMismatchError("diagonal_dominance: matrix not square");
    const std::size_t n = s.rows();
    if (n < 2) throw InvalidArgumentError("diagonal_dominance: need at least a 2x2 matrix");
    double diag = 0.0, off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) diag += s(i, j);
            else off += s(i, j);
        }
    }
    return diag / n - off / (static_cast<double>(n) * (n - 1));
}

double retrieval_top1(const Matrix& s) {
    if (s.rows() != s.cols()) throw ShapeMismatchError("retrieval_top1: matrix not square");
    const std::size_t n = s.rows();
    if (n == 0) throw EmptyInputError("retrieval_top1: empty matrix");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < n; ++j) {
            if (s(i, j) > s(i, best)) best = j;
        }
        if (best == i) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

Matrix autocorrelation_heatmap(const Matrix& embs) {
    Matrix n = normalized_rows(embs);
    Matrix s(n.rows(), n.rows());
    for (std::size_t i = 0; i < n.rows(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < n.cols(); ++k) v += n(i, k) * n(j, k);
            s(i, j) = v;
            s(j, i) = v;
        }
        s(i, i) = 1.0;
    }
    return s;
}

std::string matrix_to_csv(const Matrix& m) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (j) out << ",";
        out << j;
    }
    out << "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ",";
            out << m(i, j);
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace adsorbkit
