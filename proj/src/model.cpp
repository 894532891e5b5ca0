#include "adsorbkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "adsorbkit/errors.hpp"
#include "adsorbkit/losses.hpp"
#include "adsorbkit/metrics.hpp"
#include "adsorbkit/rng.hpp"
#include "adsorbkit/synth.hpp"

namespace adsorbkit {

void ModelConfig::validate() const {
    if (embed_dim < 1 || geo_hidden < 1 || text_hidden < 1 || trunk_hidden < 1 || rbf_count < 2) {
        throw InvalidArgumentError("model: dimensions must be positive (rbf_count >= 2)");
    }
    if (bin_count < 2) throw InvalidArgumentError("model: bin_count must be >= 2");
    if (!(energy_lo < energy_hi)) throw InvalidArgumentError("model: energy_lo must be < energy_hi");
    if (!(rbf_lo < rbf_hi)) throw InvalidArgumentError("model: rbf_lo must be < rbf_hi");
    if (!(temperature > 0.0)) throw InvalidArgumentError("model: temperature must be positive");
    if (!(lambda_mmtg > 0.0 && lambda_mmtg <= 1.0)) {
        throw InvalidArgumentError("model: lambda_mmtg must lie in (0, 1]");
    }
    if (!(lambda_plain > 0.0)) throw InvalidArgumentError("model: lambda_plain must be positive");
    if (!(modality_dropout >= 0.0 && modality_dropout < 1.0)) {
        throw InvalidArgumentError("model: modality_dropout must lie in [0, 1)");
    }
    if (!(learning_rate > 0.0)) throw InvalidArgumentError("model: learning rate must be positive");
    if (epochs < 1 || batch_size < 1) throw InvalidArgumentError("model: epochs/batch_size >= 1");
    if (elements.empty()) throw InvalidArgumentError("model: element list is empty");
    if (vocab.empty() || vocab[0] != "<unk>") {
        throw InvalidArgumentError("model: vocab must start with <unk>");
    }
}

int ModelConfig::energy_bin(double e) const {
    double t = (e - energy_lo) / (energy_hi - energy_lo) * bin_count;
    int bin = static_cast<int>(std::floor(t));
    return std::clamp(bin, 0, bin_count - 1);
}

double ModelConfig::bin_midpoint(int bin) const {
    return energy_lo + (bin + 0.5) * (energy_hi - energy_lo) / bin_count;
}

std::vector<std::string> make_vocab(const std::vector<std::string>& elements,
                                    const std::vector<std::string>& adsorbate_names) {
    std::vector<std::string> vocab = {"<unk>"};
    for (const auto& name : adsorbate_names) vocab.push_back("ads:" + name);
    for (const auto& el : elements) vocab.push_back("cat:" + el);
    for (int h = 0; h <= 3; ++h) {
        for (int k = 0; k <= 3; ++k) {
            for (int l = 0; l <= 3; ++l) {
                if (h == 0 && k == 0 && l == 0) continue;
                vocab.push_back("m:" + std::to_string(h) + " " + std::to_string(k) + " " +
                                std::to_string(l));
            }
        }
    }
    vocab.push_back("p:none");
    vocab.push_back("s:none");
    for (const char* role : {"p", "s"}) {
        for (const auto& el : elements) {
            for (int n = 1; n <= kTokenCountCap; ++n) {
                vocab.push_back(std::string(role) + ":" + el + ":" + std::to_string(n));
            }
        }
    }
    return vocab;
}

namespace {

class Tokenizer {
public:
    explicit Tokenizer(const ModelConfig& config) {
        for (std::size_t i = 0; i < config.vocab.size(); ++i) {
            ids_.emplace(config.vocab[i], static_cast<int>(i));
        }
    }

    void push(const std::string& token, TokenizedText& out) const {
        auto it = ids_.find(token);
        if (it == ids_.end()) {
            out.ids.push_back(0);
            out.unk_count += 1;
        } else {
            out.ids.push_back(it->second);
        }
    }

    TokenizedText run(const ConfigString& text) const {
        TokenizedText out;
        push("ads:" + text.segments[0], out);

        // segment 2: "<formula> (h k l)"
        bool seg2_ok = false;
        std::size_t paren = text.segments[1].find(" (");
        if (paren != std::string::npos && text.segments[1].back() == ')') {
            try {
                auto counts = parse_formula(text.segments[1].substr(0, paren));
                std::istringstream miller(text.segments[1].substr(
                    paren + 2, text.segments[1].size() - paren - 3));
                int h, k, l;
                if (miller >> h >> k >> l) {
                    // formula counts are a fixed function of the species set
                    // and slab dims, so species tokens carry the signal
                    for (const auto& [el, n] : counts) {
                        (void)n;
                        push("cat:" + el, out);
                    }
                    push("m:" + std::to_string(h) + " " + std::to_string(k) + " " +
                             std::to_string(l),
                         out);
                    seg2_ok = true;
                }
            } catch (const Error&) {
            }
        }
        if (!seg2_ok) push("\x01unparseable", out);

        if (!text.segments[2].empty()) {
            try {
                std::map<std::string, int> primary, secondary;
                parse_config_segment(text.segments[2], primary, secondary);
                if (primary.empty()) push("p:none", out);
                for (const auto& [el, n] : primary) {
                    push("p:" + el + ":" + std::to_string(std::min(n, kTokenCountCap)), out);
                }
                if (secondary.empty()) push("s:none", out);
                for (const auto& [el, n] : secondary) {
                    push("s:" + el + ":" + std::to_string(std::min(n, kTokenCountCap)), out);
                }
            } catch (const Error&) {
                push("\x01unparseable", out);
            }
        }
        return out;
    }

private:
    std::unordered_map<std::string, int> ids_;
};

void init_linear(Linear& lin, std::size_t out_dim, std::size_t in_dim, Rng& rng) {
    lin.w = Matrix(out_dim, in_dim);
    double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (auto& v : lin.w.data()) v = rng.uniform(-scale, scale);
    lin.b.assign(out_dim, 0.0);
}

// out = W x + b
void linear_forward(const Linear& lin, const std::vector<double>& x, std::vector<double>& out) {
    const std::size_t rows = lin.w.rows(), cols = lin.w.cols();
    out.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = lin.b[i];
        const double* w = lin.w.row(i);
        for (std::size_t j = 0; j < cols; ++j) acc += w[j] * x[j];
        out[i] = acc;
    }
}

// Accumulates dW += dout x^T, db += dout, dx += W^T dout (dx may be null).
void linear_backward(const Linear& lin, const std::vector<double>& x,
                     const std::vector<double>& dout, Linear& grad, std::vector<double>* dx) {
    const std::size_t rows = lin.w.rows(), cols = lin.w.cols();
    for (std::size_t i = 0; i < rows; ++i) {
        grad.b[i] += dout[i];
        double* gw = grad.w.row(i);
        for (std::size_t j = 0; j < cols; ++j) gw[j] += dout[i] * x[j];
    }
    if (dx != nullptr) {
        dx->assign(cols, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            const double* w = lin.w.row(i);
            for (std::size_t j = 0; j < cols; ++j) (*dx)[j] += w[j] * dout[i];
        }
    }
}

void tanh_inplace(std::vector<double>& v) {
    for (auto& x : v) x = std::tanh(x);
}

struct GeoCache {
    Matrix h1;                        // atoms x geo_hidden, post-tanh
    Matrix h2;                        // atoms x embed_dim, linear
    std::vector<std::size_t> argmax;  // per output dim
    std::vector<double> pool;
    std::vector<double> z;  // after projection
};

void geo_forward(const ModelState& s, const Matrix& features, GeoCache& c) {
    const std::size_t atoms = features.rows();
    const std::size_t hg = s.geo1.w.rows();
    const std::size_t d = s.geo2.w.rows();

    c.h1 = Matrix(atoms, hg);
    c.h2 = Matrix(atoms, d);
    for (std::size_t a = 0; a < atoms; ++a) {
        for (std::size_t i = 0; i < hg; ++i) {
            double acc = s.geo1.b[i];
            const double* w = s.geo1.w.row(i);
            const double* x = features.row(a);
            for (std::size_t j = 0; j < features.cols(); ++j) acc += w[j] * x[j];
            c.h1(a, i) = std::tanh(acc);
        }
        for (std::size_t i = 0; i < d; ++i) {
            double acc = s.geo2.b[i];
            const double* w = s.geo2.w.row(i);
            for (std::size_t j = 0; j < hg; ++j) acc += w[j] * c.h1(a, j);
            c.h2(a, i) = acc;
        }
    }
    c.pool.assign(d, 0.0);
    c.argmax.assign(d, 0);
    for (std::size_t i = 0; i < d; ++i) {
        double best = c.h2(0, i);
        std::size_t arg = 0;
        for (std::size_t a = 1; a < atoms; ++a) {
            if (c.h2(a, i) > best) {
                best = c.h2(a, i);
                arg = a;
            }
        }
        c.pool[i] = best;
        c.argmax[i] = arg;
    }
    c.z.assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        const double* w = s.proj.row(i);
        for (std::size_t j = 0; j < d; ++j) acc += w[j] * c.pool[j];
        c.z[i] = acc;
    }
}

void geo_backward(const ModelState& s, const Matrix& features, const GeoCache& c,
                  const std::vector<double>& dz, ModelState& g) {
    const std::size_t d = s.geo2.w.rows();
    const std::size_t hg = s.geo1.w.rows();

    std::vector<double> dpool(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        double* gp = g.proj.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            gp[j] += dz[i] * c.pool[j];
            dpool[j] += s.proj(i, j) * dz[i];
        }
    }
    // max-pool routes each output dim to its argmax atom
    for (std::size_t i = 0; i < d; ++i) {
        const std::size_t a = c.argmax[i];
        const double dh2 = dpool[i];
        g.geo2.b[i] += dh2;
        double* gw2 = g.geo2.w.row(i);
        for (std::size_t j = 0; j < hg; ++j) gw2[j] += dh2 * c.h1(a, j);
        for (std::size_t j = 0; j < hg; ++j) {
            double dh1 = s.geo2.w(i, j) * dh2;
            double dpre = dh1 * (1.0 - c.h1(a, j) * c.h1(a, j));
            g.geo1.b[j] += dpre;
            double* gw1 = g.geo1.w.row(j);
            const double* x = features.row(a);
            for (std::size_t k = 0; k < features.cols(); ++k) gw1[k] += dpre * x[k];
        }
    }
}

struct TextCache {
    std::vector<double> mean;
    std::vector<double> pre1;  // unused after tanh, kept size only
    std::vector<double> h;     // post-tanh
    std::vector<double> z;
};

void text_forward(const ModelState& s, const std::vector<int>& tokens, TextCache& c) {
    const std::size_t d = static_cast<std::size_t>(s.config.embed_dim);
    c.mean.assign(d, 0.0);
    for (int id : tokens) {
        const double* row = s.token_embed.row(static_cast<std::size_t>(id));
        for (std::size_t k = 0; k < d; ++k) c.mean[k] += row[k];
    }
    const double inv = tokens.empty() ? 0.0 : 1.0 / static_cast<double>(tokens.size());
    for (auto& v : c.mean) v *= inv;
    linear_forward(s.text1, c.mean, c.h);
    tanh_inplace(c.h);
    linear_forward(s.text2, c.h, c.z);
}

void text_backward(const ModelState& s, const std::vector<int>& tokens, const TextCache& c,
                   const std::vector<double>& dz, ModelState& g) {
    std::vector<double> dh;
    linear_backward(s.text2, c.h, dz, g.text2, &dh);
    for (std::size_t i = 0; i < dh.size(); ++i) dh[i] *= 1.0 - c.h[i] * c.h[i];
    std::vector<double> dmean;
    linear_backward(s.text1, c.mean, dh, g.text1, &dmean);
    if (tokens.empty()) return;
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (int id : tokens) {
        double* row = g.token_embed.row(static_cast<std::size_t>(id));
        for (std::size_t k = 0; k < dmean.size(); ++k) row[k] += dmean[k] * inv;
    }
}

struct TrunkCache {
    std::vector<double> input;  // [geo or missing | text]
    std::vector<double> u1, u2;
    double e_reg = 0.0;
    std::vector<double> logits;
    bool geo_present = true;
};

void trunk_forward(const ModelState& s, const std::vector<double>& geo_or_missing,
                   const std::vector<double>& text, bool geo_present, TrunkCache& c) {
    c.geo_present = geo_present;
    c.input.clear();
    c.input.insert(c.input.end(), geo_or_missing.begin(), geo_or_missing.end());
    c.input.insert(c.input.end(), text.begin(), text.end());
    linear_forward(s.trunk1, c.input, c.u1);
    tanh_inplace(c.u1);
    linear_forward(s.trunk2, c.u1, c.u2);
    tanh_inplace(c.u2);
    std::vector<double> reg;
    linear_forward(s.head_reg, c.u2, reg);
    c.e_reg = reg[0];
    linear_forward(s.head_cls, c.u2, c.logits);
}

// d_e_reg and d_logits feed back through both heads; returns gradients for
// the two trunk inputs.
void trunk_backward(const ModelState& s, const TrunkCache& c, double d_e_reg,
                    const std::vector<double>& d_logits, ModelState& g,
                    std::vector<double>& d_geo, std::vector<double>& d_text) {
    std::vector<double> du2(c.u2.size(), 0.0);
    {
        std::vector<double> dreg = {d_e_reg};
        std::vector<double> tmp;
        linear_backward(s.head_reg, c.u2, dreg, g.head_reg, &tmp);
        for (std::size_t i = 0; i < du2.size(); ++i) du2[i] += tmp[i];
        linear_backward(s.head_cls, c.u2, d_logits, g.head_cls, &tmp);
        for (std::size_t i = 0; i < du2.size(); ++i) du2[i] += tmp[i];
    }
    for (std::size_t i = 0; i < du2.size(); ++i) du2[i] *= 1.0 - c.u2[i] * c.u2[i];
    std::vector<double> du1;
    linear_backward(s.trunk2, c.u1, du2, g.trunk2, &du1);
    for (std::size_t i = 0; i < du1.size(); ++i) du1[i] *= 1.0 - c.u1[i] * c.u1[i];
    std::vector<double> dinput;
    linear_backward(s.trunk1, c.input, du1, g.trunk1, &dinput);
    const std::size_t d = static_cast<std::size_t>(s.config.embed_dim);
    d_geo.assign(dinput.begin(), dinput.begin() + d);
    d_text.assign(dinput.begin() + d, dinput.end());
}

ModelState zeros_like(const ModelState& s) {
    ModelState g = s;
    g.for_each_block([](ParamGroup, std::vector<double>& v) {
        std::fill(v.begin(), v.end(), 0.0);
    });
    return g;
}

std::vector<std::pair<ParamGroup, std::vector<double>*>> blocks_of(ModelState& s) {
    std::vector<std::pair<ParamGroup, std::vector<double>*>> out;
    s.for_each_block([&](ParamGroup g, std::vector<double>& v) { out.emplace_back(g, &v); });
    return out;
}

}  // namespace

ModelState ModelState::init(const ModelConfig& config) {
    config.validate();
    ModelState s;
    s.config = config;
    Rng rng(hash_combine(config.seed, 0x10171ULL));

    const std::size_t d = static_cast<std::size_t>(config.embed_dim);
    const std::size_t feat = config.elements.size() + 3 + static_cast<std::size_t>(config.rbf_count);
    init_linear(s.geo1, static_cast<std::size_t>(config.geo_hidden), feat, rng);
    init_linear(s.geo2, d, static_cast<std::size_t>(config.geo_hidden), rng);

    s.proj = Matrix(d, d);
    {
        double scale = 1.0 / std::sqrt(static_cast<double>(d));
        for (auto& v : s.proj.data()) v = rng.uniform(-scale, scale);
    }

    s.token_embed = Matrix(config.vocab.size(), d);
    {
        double scale = 1.0 / std::sqrt(static_cast<double>(d));
        for (auto& v : s.token_embed.data()) v = rng.uniform(-scale, scale);
    }
    init_linear(s.text1, static_cast<std::size_t>(config.text_hidden), d, rng);
    init_linear(s.text2, d, static_cast<std::size_t>(config.text_hidden), rng);

    init_linear(s.trunk1, static_cast<std::size_t>(config.trunk_hidden), 2 * d, rng);
    init_linear(s.trunk2, static_cast<std::size_t>(config.trunk_hidden),
                static_cast<std::size_t>(config.trunk_hidden), rng);
    init_linear(s.head_reg, 1, static_cast<std::size_t>(config.trunk_hidden), rng);
    init_linear(s.head_cls, static_cast<std::size_t>(config.bin_count),
                static_cast<std::size_t>(config.trunk_hidden), rng);

    s.missing.resize(d);
    {
        double scale = 1.0 / std::sqrt(static_cast<double>(d));
        for (auto& v : s.missing) v = rng.uniform(-scale, scale);
    }
    s.trainable.fill(true);
    return s;
}

std::size_t ModelState::parameter_count() const {
    std::size_t n = 0;
    for_each_block([&](ParamGroup, const std::vector<double>& v) { n += v.size(); });
    return n;
}

Matrix geo_features(const ModelConfig& config, const Structure& structure,
                    const NeighborList& nl_strict) {
    const std::size_t n_el = config.elements.size();
    const std::size_t rbf = static_cast<std::size_t>(config.rbf_count);
    const std::size_t cols = n_el + 3 + rbf;
    const double spacing = (config.rbf_hi - config.rbf_lo) / (config.rbf_count - 1);

    Matrix out(structure.size(), cols);
    for (std::size_t a = 0; a < structure.size(); ++a) {
        const Site& site = structure.sites[a];
        auto it = std::find(config.elements.begin(), config.elements.end(), site.element);
        if (it == config.elements.end()) throw UnknownElementError(site.element);
        out(a, static_cast<std::size_t>(it - config.elements.begin())) = 1.0;
        out(a, n_el + static_cast<std::size_t>(site.tag)) = 1.0;
        for (const auto& [j, dist] : nl_strict.neighbors_of(a)) {
            (void)j;
            for (std::size_t k = 0; k < rbf; ++k) {
                double mu = config.rbf_lo + k * spacing;
                double t = (dist - mu) / spacing;
                out(a, n_el + 3 + k) += std::exp(-0.5 * t * t);
            }
        }
    }
    return out;
}

std::vector<double> encode_structure(const ModelState& state, const Structure& structure,
                                     const NeighborList& nl_strict) {
    Matrix features = geo_features(state.config, structure, nl_strict);
    GeoCache cache;
    geo_forward(state, features, cache);
    return cache.z;
}

std::vector<double> encode_text(const ModelState& state, const ConfigString& text) {
    Tokenizer tok(state.config);
    TokenizedText t = tok.run(text);
    TextCache cache;
    text_forward(state, t.ids, cache);
    return cache.z;
}

TokenizedText tokenize(const ModelConfig& config, const ConfigString& text) {
    return Tokenizer(config).run(text);
}

Prediction predict(const ModelState& state, const std::optional<std::vector<double>>& geo_emb,
                   const std::vector<double>& text_emb) {
    TrunkCache cache;
    trunk_forward(state, geo_emb ? *geo_emb : state.missing, text_emb, geo_emb.has_value(),
                  cache);
    Prediction p;
    p.e_reg = cache.e_reg;
    p.logits = cache.logits;
    int best = 0;
    for (int k = 1; k < state.config.bin_count; ++k) {
        if (cache.logits[static_cast<std::size_t>(k)] > cache.logits[static_cast<std::size_t>(best)]) {
            best = k;
        }
    }
    p.e_cls = state.config.bin_midpoint(best);
    p.e_final = 0.5 * (p.e_reg + p.e_cls);
    return p;
}

EncodedDataset encode_dataset(const ModelConfig& config, const std::vector<Sample>& samples,
                              const RadiiTable& radii) {
    config.validate();
    Tokenizer tok(config);
    EncodedDataset out;
    out.samples.reserve(samples.size());
    for (const auto& sample : samples) {
        EncodedSample enc;
        NeighborList nl = build_neighbor_list(sample.structure, radii, 1.0);
        enc.features = geo_features(config, sample.structure, nl);

        TokenizedText full = tok.run(sample.config_string);
        out.unk_tokens += full.unk_count;
        enc.tokens_full = std::move(full.ids);

        ConfigString prompt = sample.config_string;
        prompt.segments[2].clear();
        TokenizedText prompt_tok = tok.run(prompt);
        enc.tokens_prompt = std::move(prompt_tok.ids);

        try {
            Structure padded = embed_in_box(sample.structure, kPermissiveBoxSide);
            ConfigString permissive = permissive_config_string(padded, sample.meta, radii);
            TokenizedText perm_tok = tok.run(permissive);
            out.unk_tokens += perm_tok.unk_count;
            enc.tokens_permissive = std::move(perm_tok.ids);
        } catch (const Error&) {
            enc.tokens_permissive.clear();
        }

        enc.energy = sample.energy_ev;
        out.samples.push_back(std::move(enc));
    }
    return out;
}

namespace {

struct BatchStats {
    double l_mae = 0.0;
    double l_ce = 0.0;
    double l_main = 0.0;
    double l_align = 0.0;
    double total = 0.0;
};

struct BatchPlan {
    std::vector<std::size_t> indices;
    std::vector<int> text_variant;   // 0 full, 1 prompt, 2 permissive
    std::vector<bool> geo_present;   // fusion input choice
    bool with_main = true;
    bool with_align = false;
    double align_weight = 0.0;
    LossKind kind = LossKind::Mmtg;
};

const std::vector<int>& tokens_for(const EncodedSample& s, int variant) {
    if (variant == 1) return s.tokens_prompt;
    if (variant == 2 && !s.tokens_permissive.empty()) return s.tokens_permissive;
    return s.tokens_full;
}

// Computes the batch objective; accumulates parameter gradients when grads
// is non-null. The align term always uses the true geometric embedding.
BatchStats run_batch(const ModelState& state, const EncodedDataset& data, const BatchPlan& plan,
                     ModelState* grads) {
    const std::size_t b = plan.indices.size();
    const double inv_b = 1.0 / static_cast<double>(b);
    const ModelConfig& cfg = state.config;

    std::vector<GeoCache> geo_caches(b);
    std::vector<TextCache> text_caches(b);
    std::vector<TrunkCache> trunk_caches(b);
    const bool need_geo_forward_all = plan.with_align;

    for (std::size_t s = 0; s < b; ++s) {
        const EncodedSample& sample = data.samples[plan.indices[s]];
        if (need_geo_forward_all || plan.geo_present[s]) {
            geo_forward(state, sample.features, geo_caches[s]);
        }
        text_forward(state, tokens_for(sample, plan.text_variant[s]), text_caches[s]);
        if (plan.with_main) {
            trunk_forward(state, plan.geo_present[s] ? geo_caches[s].z : state.missing,
                          text_caches[s].z, plan.geo_present[s], trunk_caches[s]);
        }
    }

    BatchStats stats;
    LossValue main_grads;  // partials w.r.t. (l_mae, l_ce)

    std::vector<std::vector<double>> d_logits(b);
    std::vector<double> d_ereg(b, 0.0);

    if (plan.with_main) {
        std::vector<double> err_sign(b);
        for (std::size_t s = 0; s < b; ++s) {
            const EncodedSample& sample = data.samples[plan.indices[s]];
            double r = trunk_caches[s].e_reg - sample.energy;
            stats.l_mae += std::abs(r) * inv_b;
            err_sign[s] = (r > 0.0) ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
            LossValue ce = ce_loss(trunk_caches[s].logits,
                                   static_cast<std::size_t>(cfg.energy_bin(sample.energy)));
            stats.l_ce += ce.value * inv_b;
            d_logits[s] = std::move(ce.partials);
        }
        main_grads = (plan.kind == LossKind::Mmtg)
                         ? mmtg_combined(stats.l_mae, stats.l_ce, cfg.lambda_mmtg)
                         : plain_combined(stats.l_mae, stats.l_ce, cfg.lambda_plain);
        stats.l_main = main_grads.value;
        for (std::size_t s = 0; s < b; ++s) {
            d_ereg[s] = main_grads.partials[0] * err_sign[s] * inv_b;
            for (auto& v : d_logits[s]) v *= main_grads.partials[1] * inv_b;
        }
    }

    InfoNceValue align;
    if (plan.with_align) {
        const std::size_t d = static_cast<std::size_t>(cfg.embed_dim);
        Matrix zg(b, d), zt(b, d);
        for (std::size_t s = 0; s < b; ++s) {
            for (std::size_t k = 0; k < d; ++k) {
                zg(s, k) = geo_caches[s].z[k];
                zt(s, k) = text_caches[s].z[k];
            }
        }
        align = info_nce(zg, zt, cfg.temperature);
        stats.l_align = align.value;
    }

    stats.total = stats.l_main + plan.align_weight * stats.l_align;
    if (!std::isfinite(stats.total)) {
        throw NonFiniteLossError("non-finite batch objective (mae=" + std::to_string(stats.l_mae) +
                                 " ce=" + std::to_string(stats.l_ce) + ")");
    }
    if (grads == nullptr) return stats;

    const std::size_t d = static_cast<std::size_t>(cfg.embed_dim);
    for (std::size_t s = 0; s < b; ++s) {
        const EncodedSample& sample = data.samples[plan.indices[s]];
        std::vector<double> dz_geo(d, 0.0), dz_text(d, 0.0);

        if (plan.with_main) {
            std::vector<double> d_geo_in, d_text_in;
            trunk_backward(state, trunk_caches[s], d_ereg[s], d_logits[s], *grads, d_geo_in,
                           d_text_in);
            if (plan.geo_present[s]) {
                for (std::size_t k = 0; k < d; ++k) dz_geo[k] += d_geo_in[k];
            } else {
                for (std::size_t k = 0; k < d; ++k) grads->missing[k] += d_geo_in[k];
            }
            for (std::size_t k = 0; k < d; ++k) dz_text[k] += d_text_in[k];
        }
        if (plan.with_align) {
            for (std::size_t k = 0; k < d; ++k) {
                dz_geo[k] += plan.align_weight * align.grad_geo(s, k);
                dz_text[k] += plan.align_weight * align.grad_text(s, k);
            }
        }

        bool geo_was_forwarded = need_geo_forward_all || plan.geo_present[s];
        if (geo_was_forwarded) {
            bool any = false;
            for (double v : dz_geo) {
                if (v != 0.0) {
                    any = true;
                    break;
                }
            }
            if (any) geo_backward(state, sample.features, geo_caches[s], dz_geo, *grads);
        }
        text_backward(state, tokens_for(sample, plan.text_variant[s]), text_caches[s], dz_text,
                      *grads);
    }
    return stats;
}

void apply_update(ModelState& state, ModelState& grads, double lr) {
    auto sblocks = blocks_of(state);
    auto gblocks = blocks_of(grads);
    for (std::size_t i = 0; i < sblocks.size(); ++i) {
        if (!state.trainable[static_cast<int>(sblocks[i].first)]) continue;
        auto& sv = *sblocks[i].second;
        auto& gv = *gblocks[i].second;
        for (std::size_t k = 0; k < sv.size(); ++k) sv[k] -= lr * gv[k];
    }
    grads.for_each_block([](ParamGroup, std::vector<double>& v) {
        std::fill(v.begin(), v.end(), 0.0);
    });
}

double epoch_retrieval_top1(const ModelState& state, const EncodedDataset& data) {
    const std::size_t n = std::min<std::size_t>(128, data.size());
    if (n < 2) return 100.0;
    const std::size_t d = static_cast<std::size_t>(state.config.embed_dim);
    Matrix zg(n, d), zt(n, d);
    for (std::size_t s = 0; s < n; ++s) {
        GeoCache gc;
        geo_forward(state, data.samples[s].features, gc);
        TextCache tc;
        text_forward(state, data.samples[s].tokens_full, tc);
        for (std::size_t k = 0; k < d; ++k) {
            zg(s, k) = gc.z[k];
            zt(s, k) = tc.z[k];
        }
    }
    return retrieval_top1(similarity_matrix(zg, zt));
}

}  // namespace

TrainingLog train_stage(ModelState& state, int stage, const EncodedDataset& data,
                        LossKind loss_kind) {
    if (stage < 1 || stage > 3) throw InvalidArgumentError("train: stage must be 1, 2 or 3");
    if (data.size() == 0) throw EmptyInputError("train: empty dataset");
    state.config.validate();

    switch (stage) {
        case 1:
            state.trainable = {true, true, false, false, false, false, false};
            break;
        case 2:
            state.trainable = {true, true, true, true, true, true, true};
            break;
        case 3:
            // geometric channel frozen; text path, fusion, heads and the
            // missing-modality vector keep learning
            state.trainable = {false, false, true, true, true, true, true};
            break;
    }

    const ModelConfig& cfg = state.config;
    TrainingLog log;
    log.unk_tokens = data.unk_tokens;
    ModelState grads = zeros_like(state);

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(hash_combine(hash_combine(cfg.seed, 0x0e90cULL),
                                     hash_combine(static_cast<std::uint64_t>(stage),
                                                  static_cast<std::uint64_t>(epoch))));
        shuffle_rng.shuffle(order);

        double sum_mae = 0.0, sum_ce = 0.0, sum_main = 0.0, sum_align = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            Rng batch_rng(hash_combine(shuffle_rng.next_u64(), start));

            BatchPlan plan;
            plan.indices.assign(order.begin() + start, order.begin() + end);
            const std::size_t b = plan.indices.size();
            plan.text_variant.assign(b, 0);
            plan.geo_present.assign(b, true);
            plan.kind = loss_kind;

            if (stage == 1) {
                plan.with_main = false;
                plan.with_align = true;
                plan.align_weight = 1.0;
            } else if (stage == 2) {
                plan.with_main = true;
                plan.with_align = true;
                plan.align_weight = cfg.beta;
                for (std::size_t s = 0; s < b; ++s) {
                    if (batch_rng.uniform() < cfg.modality_dropout) plan.geo_present[s] = false;
                }
            } else {
                plan.with_main = true;
                plan.with_align = false;
                // alternate between text-forced and multimodal batches
                const bool geo_missing_batch = (batches % 2 == 0);
                for (std::size_t s = 0; s < b; ++s) {
                    plan.geo_present[s] = !geo_missing_batch;
                    double u = batch_rng.uniform();
                    if (u < 0.25) plan.text_variant[s] = 1;
                    else if (u < 0.5) plan.text_variant[s] = 2;
                }
            }

            BatchStats stats;
            try {
                stats = run_batch(state, data, plan, &grads);
            } catch (const NonFiniteLossError& e) {
                throw NonFiniteLossError(std::string(e.what()) + " at stage " +
                                         std::to_string(stage) + " epoch " +
                                         std::to_string(epoch));
            }
            apply_update(state, grads, cfg.learning_rate);

            sum_mae += stats.l_mae;
            sum_ce += stats.l_ce;
            sum_main += stats.total;
            sum_align += stats.l_align;
            ++batches;
        }

        TrainingLog::Epoch e;
        e.epoch = epoch;
        e.l_mae = sum_mae / batches;
        e.l_ce = sum_ce / batches;
        e.combined = sum_main / batches;
        e.retrieval_top1 = epoch_retrieval_top1(state, data);
        log.epochs.push_back(e);
    }
    return log;
}

std::string TrainingLog::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "epoch,l_mae,l_ce,combined,retrieval_top1\n";
    for (const auto& e : epochs) {
        out << e.epoch << "," << e.l_mae << "," << e.l_ce << "," << e.combined << ","
            << e.retrieval_top1 << "\n";
    }
    return out.str();
}

double gradient_check(const ModelState& state, const EncodedDataset& data,
                      std::size_t batch_size, double epsilon) {
    if (data.size() == 0) throw EmptyInputError("gradient_check: empty dataset");
    const std::size_t b = std::min(batch_size, data.size());

    BatchPlan plan;
    for (std::size_t i = 0; i < b; ++i) plan.indices.push_back(i);
    plan.text_variant.assign(b, 0);
    plan.geo_present.assign(b, true);
    Rng mask_rng(hash_combine(state.config.seed, 0x9cadULL));
    for (std::size_t i = 0; i < b; ++i) {
        plan.geo_present[i] = mask_rng.uniform() >= state.config.modality_dropout;
    }
    plan.with_main = true;
    plan.with_align = true;
    plan.align_weight = state.config.beta;
    plan.kind = LossKind::Mmtg;

    ModelState work = state;
    ModelState grads = zeros_like(state);
    run_batch(work, data, plan, &grads);

    auto wblocks = blocks_of(work);
    auto gblocks = blocks_of(grads);
    std::size_t total = 0;
    for (auto& [g, v] : wblocks) {
        (void)g;
        total += v->size();
    }

    Rng pick(hash_combine(state.config.seed, 0xfdc3ULL));
    const std::size_t samples = std::min<std::size_t>(200, total);
    double max_rel = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        std::size_t flat = pick.uniform_index(total);
        std::size_t block = 0;
        while (flat >= wblocks[block].second->size()) {
            flat -= wblocks[block].second->size();
            ++block;
        }
        double& theta = (*wblocks[block].second)[flat];
        const double saved = theta;

        theta = saved + epsilon;
        double up = run_batch(work, data, plan, nullptr).total;
        theta = saved - epsilon;
        double down = run_batch(work, data, plan, nullptr).total;
        theta = saved;

        double fd = (up - down) / (2.0 * epsilon);
        double analytic = (*gblocks[block].second)[flat];
        double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
        max_rel = std::max(max_rel, std::abs(fd - analytic) / denom);
    }
    return max_rel;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}
void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw CheckpointMismatchError("checkpoint truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        std::uint32_t n = u32();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_checkpoint(const ModelState& state, const std::string& path) {
    std::string out;
    out += "ADK1";
    put_u32(out, 1);  // format version

    const ModelConfig& c = state.config;
    put_u32(out, static_cast<std::uint32_t>(c.embed_dim));
    put_u32(out, static_cast<std::uint32_t>(c.geo_hidden));
    put_u32(out, static_cast<std::uint32_t>(c.text_hidden));
    put_u32(out, static_cast<std::uint32_t>(c.trunk_hidden));
    put_u32(out, static_cast<std::uint32_t>(c.rbf_count));
    put_u32(out, static_cast<std::uint32_t>(c.bin_count));
    put_u32(out, static_cast<std::uint32_t>(c.epochs));
    put_u32(out, static_cast<std::uint32_t>(c.batch_size));
    put_f64(out, c.rbf_lo);
    put_f64(out, c.rbf_hi);
    put_f64(out, c.energy_lo);
    put_f64(out, c.energy_hi);
    put_f64(out, c.temperature);
    put_f64(out, c.lambda_mmtg);
    put_f64(out, c.lambda_plain);
    put_f64(out, c.beta);
    put_f64(out, c.modality_dropout);
    put_f64(out, c.learning_rate);
    put_u64(out, c.seed);
    put_u32(out, static_cast<std::uint32_t>(c.elements.size()));
    for (const auto& e : c.elements) put_str(out, e);
    put_u32(out, static_cast<std::uint32_t>(c.vocab.size()));
    for (const auto& v : c.vocab) put_str(out, v);

    state.for_each_block([&](ParamGroup, const std::vector<double>& v) {
        for (double x : v) put_f64(out, x);
    });

    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open " + path + " for writing");
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw IoError("write failed for " + path);
}

ModelState load_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    if (buf.size() < 8 || buf.compare(0, 4, "ADK1") != 0) {
        throw CheckpointMismatchError("bad checkpoint magic");
    }
    Reader r{buf, 4};
    std::uint32_t version = r.u32();
    if (version != 1) throw CheckpointMismatchError("unsupported checkpoint version");

    ModelConfig c;
    c.embed_dim = static_cast<int>(r.u32());
    c.geo_hidden = static_cast<int>(r.u32());
    c.text_hidden = static_cast<int>(r.u32());
    c.trunk_hidden = static_cast<int>(r.u32());
    c.rbf_count = static_cast<int>(r.u32());
    c.bin_count = static_cast<int>(r.u32());
    c.epochs = static_cast<int>(r.u32());
    c.batch_size = static_cast<int>(r.u32());
    c.rbf_lo = r.f64();
    c.rbf_hi = r.f64();
    c.energy_lo = r.f64();
    c.energy_hi = r.f64();
    c.temperature = r.f64();
    c.lambda_mmtg = r.f64();
    c.lambda_plain = r.f64();
    c.beta = r.f64();
    c.modality_dropout = r.f64();
    c.learning_rate = r.f64();
    c.seed = r.u64();
    std::uint32_t n_el = r.u32();
    for (std::uint32_t i = 0; i < n_el; ++i) c.elements.push_back(r.str());
    std::uint32_t n_vocab = r.u32();
    for (std::uint32_t i = 0; i < n_vocab; ++i) c.vocab.push_back(r.str());

    ModelState s = ModelState::init(c);
    s.for_each_block([&](ParamGroup, std::vector<double>& v) {
        for (auto& x : v) x = r.f64();
    });
    if (r.pos != buf.size()) throw CheckpointMismatchError("checkpoint has trailing bytes");
    return s;
}

}  // namespace adsorbkit
