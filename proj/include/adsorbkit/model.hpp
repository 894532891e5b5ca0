#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adsorbkit/dataset.hpp"
#include "adsorbkit/linalg.hpp"
#include "adsorbkit/neighbors.hpp"
#include "adsorbkit/stringify.hpp"

namespace adsorbkit {

// Count cap used when tokenizing element-count groups; larger counts clamp
// to the cap so coarse coordination stays in-vocabulary.
constexpr int kTokenCountCap = 30;

struct ModelConfig {
    int embed_dim = 64;
    int geo_hidden = 96;
    int text_hidden = 96;
    int trunk_hidden = 96;
    int rbf_count = 16;
    double rbf_lo = 0.0;   // Angstrom
    double rbf_hi = 6.0;
    int bin_count = 32;
    double energy_lo = -10.0;  // eV, classification bin range
    double energy_hi = 0.0;
    double temperature = 0.07;  // contrastive alignment
    double lambda_mmtg = 0.5;   // gating strength
    double lambda_plain = 1.0;  // linear combination weight
    double beta = 0.5;          // stage-2 alignment weight
    double modality_dropout = 0.3;
    double learning_rate = 0.05;
    int epochs = 30;
    int batch_size = 32;
    std::uint64_t seed = 0;
    std::vector<std::string> elements;  // ordered one-hot basis
    std::vector<std::string> vocab;     // index 0 must be "<unk>"

    void validate() const;

    int energy_bin(double e) const;
    double bin_midpoint(int bin) const;
};

// Grammar-derived vocabulary: adsorbate names, catalyst element and count
// tokens, facet tokens, and per-role element-count tokens up to the cap.
std::vector<std::string> make_vocab(const std::vector<std::string>& elements,
                                    const std::vector<std::string>& adsorbate_names);

struct TokenizedText {
    std::vector<int> ids;
    std::size_t unk_count = 0;
};

TokenizedText tokenize(const ModelConfig& config, const ConfigString& text);

struct Linear {
    Matrix w;
    std::vector<double> b;
};

enum class ParamGroup : int {
    GeoMlp = 0,
    Projection = 1,
    TextEncoder = 2,
    Trunk = 3,
    HeadReg = 4,
    HeadCls = 5,
    MissingVec = 6,
};
constexpr int kParamGroupCount = 7;

struct ModelState {
    ModelConfig config;

    Linear geo1, geo2;   // per-atom feature MLP
    Matrix proj;         // embed_dim x embed_dim linear mapping head
    Matrix token_embed;  // vocab x embed_dim
    Linear text1, text2;
    Linear trunk1, trunk2;
    Linear head_reg;  // 1 x trunk_hidden
    Linear head_cls;  // bin_count x trunk_hidden
    std::vector<double> missing;  // learned missing-modality vector

    std::array<bool, kParamGroupCount> trainable{};

    // Seeded init: weights uniform in +-1/sqrt(fan_in), biases zero, token
    // embeddings uniform in +-1/sqrt(embed_dim).
    static ModelState init(const ModelConfig& config);

    std::size_t parameter_count() const;

    // Visits every parameter block in checkpoint order.
    template <typename F>
    void for_each_block(F&& f) {
        f(ParamGroup::GeoMlp, geo1.w.data());
        f(ParamGroup::GeoMlp, geo1.b);
        f(ParamGroup::GeoMlp, geo2.w.data());
        f(ParamGroup::GeoMlp, geo2.b);
        f(ParamGroup::Projection, proj.data());
        f(ParamGroup::TextEncoder, token_embed.data());
        f(ParamGroup::TextEncoder, text1.w.data());
        f(ParamGroup::TextEncoder, text1.b);
        f(ParamGroup::TextEncoder, text2.w.data());
        f(ParamGroup::TextEncoder, text2.b);
        f(ParamGroup::Trunk, trunk1.w.data());
        f(ParamGroup::Trunk, trunk1.b);
        f(ParamGroup::Trunk, trunk2.w.data());
        f(ParamGroup::Trunk, trunk2.b);
        f(ParamGroup::HeadReg, head_reg.w.data());
        f(ParamGroup::HeadReg, head_reg.b);
        f(ParamGroup::HeadCls, head_cls.w.data());
        f(ParamGroup::HeadCls, head_cls.b);
        f(ParamGroup::MissingVec, missing);
    }
    template <typename F>
    void for_each_block(F&& f) const {
        const_cast<ModelState*>(this)->for_each_block(
            [&](ParamGroup g, const std::vector<double>& v) { f(g, v); });
    }
};

// Per-atom input features: element one-hot, tag one-hot, summed Gaussian
// radial basis over strict neighbors. Model-independent, cacheable.
Matrix geo_features(const ModelConfig& config, const Structure& structure,
                    const NeighborList& nl_strict);

std::vector<double> encode_structure(const ModelState& state, const Structure& structure,
                                     const NeighborList& nl_strict);

std::vector<double> encode_text(const ModelState& state, const ConfigString& text);

struct Prediction {
    double e_reg = 0.0;
    std::vector<double> logits;
    double e_cls = 0.0;    // midpoint of the argmax bin
    double e_final = 0.0;  // (e_reg + e_cls) / 2
};

// geo_emb may be absent; the learned missing-modality vector is used then,
// and the structure input is never touched.
Prediction predict(const ModelState& state, const std::optional<std::vector<double>>& geo_emb,
                   const std::vector<double>& text_emb);

// Pre-encoded training record: geometry features plus the tokenized text
// variants used across stages (full, prompt-only, permissive-derived).
struct EncodedSample {
    Matrix features;
    std::vector<int> tokens_full;
    std::vector<int> tokens_prompt;      // segments 1-2 only
    std::vector<int> tokens_permissive;  // empty when unavailable
    double energy = 0.0;
};

struct EncodedDataset {
    std::vector<EncodedSample> samples;
    std::size_t unk_tokens = 0;

    std::size_t size() const { return samples.size(); }
};

EncodedDataset encode_dataset(const ModelConfig& config, const std::vector<Sample>& samples,
                              const RadiiTable& radii = RadiiTable::bundled());

enum class LossKind { Mmtg, Plain };

struct TrainingLog {
    struct Epoch {
        int epoch = 0;
        double l_mae = 0.0;
        double l_ce = 0.0;
        double combined = 0.0;
        double retrieval_top1 = 0.0;
    };
    std::vector<Epoch> epochs;
    std::size_t unk_tokens = 0;

    std::string to_csv() const;
};

// Runs one training stage in place. Stage 1 aligns the geometric channel to
// the frozen text channel; stage 2 trains everything on the gated multitask
// objective plus the alignment term; stage 3 freezes the geometric channel
// and tunes the text path with forced-missing batches.
TrainingLog train_stage(ModelState& state, int stage, const EncodedDataset& data,
                        LossKind loss_kind);

// Max relative error between analytic stage-2 gradients and central finite
// differences over up to 200 sampled parameters.
double gradient_check(const ModelState& state, const EncodedDataset& data,
                      std::size_t batch_size, double epsilon = 1e-5);

void save_checkpoint(const ModelState& state, const std::string& path);
ModelState load_checkpoint(const std::string& path);

}  // namespace adsorbkit
