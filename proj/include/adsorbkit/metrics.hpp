#pragma once

#include <string>
#include <vector>

#include "adsorbkit/linalg.hpp"

namespace adsorbkit {

struct MaeR2 {
    double mae = 0.0;
    double r2 = 0.0;
};

MaeR2 mae_r2(const std::vector<double>& preds, const std::vector<double>& targets);

// Per-prediction inclusive target energy range, in eV.
struct EnergyRange {
    double lo = 0.0;
    double hi = 0.0;
};

// Percentage of predictions falling inside their target range (inclusive).
double pir(const std::vector<double>& preds, const std::vector<EnergyRange>& ranges);

// Cosine similarity; rows index geo embeddings, columns text embeddings.
Matrix similarity_matrix(const Matrix& geo_embs, const Matrix& text_embs);

// mean(diagonal) - mean(off-diagonal); requires N >= 2.
double diagonal_dominance(const Matrix& s);

// Percentage of rows whose argmax sits on the diagonal; ties break to the
// lowest column index.
double retrieval_top1(const Matrix& s);

// Cosine self-similarity (symmetric, unit diagonal).
Matrix autocorrelation_heatmap(const Matrix& embs);

// Row-major CSV with a header row of column indices.
std::string matrix_to_csv(const Matrix& m);

}  // namespace adsorbkit
