#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adsorbkit/cif.hpp"
#include "adsorbkit/dataset.hpp"
#include "adsorbkit/errors.hpp"
#include "adsorbkit/eval.hpp"
#include "adsorbkit/metrics.hpp"
#include "adsorbkit/model.hpp"
#include "adsorbkit/rng.hpp"
#include "adsorbkit/stringify.hpp"
#include "adsorbkit/synth.hpp"

namespace fs = std::filesystem;
using namespace adsorbkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct GenOptions {
    int n = 4096;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int configs_per_system = 4;
};

struct StringifyOptions {
    std::string cif_path;
    bool permissive = false;
    bool raw_stream = false;
    std::vector<int> miller = {1, 1, 1};
    std::string adsorbate;  // needed when tags are absent
};

struct TrainOptions {
    int stage = 1;
    std::string data_path;
    std::string ckpt_path;
    std::string init_ckpt;
    std::string log_path;
    std::string loss = "mmtg";
    std::uint64_t seed = 0;
    int epochs = -1;  // -1: per-stage default
    double learning_rate = -1.0;
    int batch_size = -1;
    int embed_dim = 64;
};

struct EvalOptions {
    std::string ckpt_path;
    std::string data_path;
    bool text_only = false;
    bool with_pir = false;
    std::string heatmaps_dir;
    double delta = 0.1;
    int pir_pairs = 20;
    int pir_configs = 30;
    int pir_cifs = 5;
    std::uint64_t seed = 0;
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("write failed for " + path);
}

int run_gen(const GenOptions& opt) {
    GenSpec spec;
    spec.seed = opt.seed;
    spec.configs_per_system = opt.configs_per_system;
    OracleParams params(RadiiTable::bundled());
    spec.validate(params.radii());

    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(opt.n));
    for (int i = 0; i < opt.n; ++i) {
        samples.push_back(generate_system(spec, static_cast<std::uint64_t>(i), params));
    }

    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(hash_combine(opt.seed, 0x59717ULL));
    rng.shuffle(order);

    const std::size_t n_train = static_cast<std::size_t>(opt.n) * 8 / 10;
    const std::size_t n_val = static_cast<std::size_t>(opt.n) / 10;
    auto subset = [&](std::size_t begin, std::size_t end) {
        std::vector<Sample> out;
        out.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) out.push_back(samples[order[i]]);
        return out;
    };

    fs::create_directories(opt.out_dir);
    std::vector<Sample> train = subset(0, n_train);
    std::vector<Sample> val = subset(n_train, n_train + n_val);
    std::vector<Sample> test = subset(n_train + n_val, samples.size());
    write_jsonl((fs::path(opt.out_dir) / "train.jsonl").string(), train);
    write_jsonl((fs::path(opt.out_dir) / "val.jsonl").string(), val);
    write_jsonl((fs::path(opt.out_dir) / "test.jsonl").string(), test);

    std::cout << "gen n=" << opt.n << " seed=" << opt.seed << " train=" << train.size()
              << " val=" << val.size() << " test=" << test.size() << "\n";
    return kExitOk;
}

int run_stringify(const StringifyOptions& opt) {
    std::ifstream in(opt.cif_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + opt.cif_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (opt.raw_stream) text = truncate_at_double_newline(text);

    const RadiiTable& radii = RadiiTable::bundled();
    ParsedCif parsed = parse_cif(text, radii);

    SystemMeta meta;
    meta.miller = {opt.miller[0], opt.miller[1], opt.miller[2]};
    if (!opt.adsorbate.empty()) {
        meta.adsorbate_symbols = parse_adsorbate_symbols(opt.adsorbate);
    } else {
        for (const auto& site : parsed.structure.sites) {
            if (site.tag == Tag::Adsorbate) meta.adsorbate_symbols.push_back(site.element);
        }
        if (meta.adsorbate_symbols.empty()) {
            throw NoAdsorbateError();
        }
    }
    {
        std::map<std::string, int> counts;
        std::map<std::string, int> adsorbate_budget;
        for (const auto& s : meta.adsorbate_symbols) adsorbate_budget[s] += 1;
        for (const auto& site : parsed.structure.sites) {
            if (site.tag == Tag::Adsorbate) continue;
            // tag-free files count every site here; subtract the adsorbate
            // composition so the formula covers the catalyst only
            counts[site.element] += 1;
        }
        if (parsed.tag_column_missing) {
            for (const auto& [el, n] : adsorbate_budget) {
                counts[el] -= n;
                if (counts[el] <= 0) counts.erase(el);
            }
        }
        meta.catalyst_formula = composition_formula(counts);
    }

    ConfigString cs;
    if (opt.permissive) {
        cs = permissive_config_string(parsed.structure, meta, radii);
    } else {
        NeighborList nl = build_neighbor_list(parsed.structure, radii, 1.0);
        cs = three_part_string(parsed.structure, meta, nl);
    }
    std::cout << cs.text << "\n";
    return kExitOk;
}

ModelConfig fresh_config(const TrainOptions& opt, const std::vector<Sample>& data) {
    GenSpec spec;
    ModelConfig config;
    config.embed_dim = opt.embed_dim;
    config.seed = opt.seed;

    std::vector<std::string> elements = spec.palette;
    std::sort(elements.begin(), elements.end());
    config.elements = elements;

    std::vector<std::string> names;
    for (const auto& group : spec.adsorbate_menu) names.push_back(render_adsorbate_symbols(group));
    config.vocab = make_vocab(elements, names);

    double lo = data.front().energy_ev, hi = lo;
    for (const auto& s : data) {
        lo = std::min(lo, s.energy_ev);
        hi = std::max(hi, s.energy_ev);
    }
    double margin = 0.05 * (hi - lo) + 1e-9;
    config.energy_lo = lo - margin;
    config.energy_hi = hi + margin;
    return config;
}

int run_train(const TrainOptions& opt) {
    std::vector<Sample> data = read_jsonl(opt.data_path);
    if (data.empty()) throw EmptyInputError("train: dataset is empty");

    ModelState state = [&]() {
        if (!opt.init_ckpt.empty()) {
            ModelState s = load_checkpoint(opt.init_ckpt);
            s.config.seed = opt.seed;
            return s;
        }
        return ModelState::init(fresh_config(opt, data));
    }();

    if (opt.epochs > 0) state.config.epochs = opt.epochs;
    else state.config.epochs = (opt.stage == 1) ? 60 : 40;
    if (opt.learning_rate > 0.0) state.config.learning_rate = opt.learning_rate;
    if (opt.batch_size > 0) state.config.batch_size = opt.batch_size;

    EncodedDataset encoded = encode_dataset(state.config, data);
    if (encoded.unk_tokens > 0) {
        std::cerr << "note: " << encoded.unk_tokens << " unknown tokens in the dataset\n";
    }

    LossKind kind = (opt.loss == "plain") ? LossKind::Plain : LossKind::Mmtg;
    TrainingLog log = train_stage(state, opt.stage, encoded, kind);

    save_checkpoint(state, opt.ckpt_path);
    std::string log_path = opt.log_path.empty()
                               ? opt.ckpt_path + ".stage" + std::to_string(opt.stage) + ".csv"
                               : opt.log_path;
    write_file(log_path, log.to_csv());

    const auto& last = log.epochs.back();
    std::cout << "stage=" << opt.stage << " mae=" << last.l_mae << " ce=" << last.l_ce
              << " top1=" << last.retrieval_top1 << "\n";
    return kExitOk;
}

int run_eval(const EvalOptions& opt) {
    ModelState state = load_checkpoint(opt.ckpt_path);
    std::vector<Sample> data = read_jsonl(opt.data_path);
    if (data.empty()) throw EmptyInputError("eval: dataset is empty");

    EvalResult result = evaluate(state, data);

    std::ostringstream line;
    line.precision(10);
    if (opt.text_only) {
        line << "eval mode=text_only mae=" << result.mae_text << " r2=" << result.r2_text;
    } else {
        line << "eval mode=multimodal mae=" << result.mae << " r2=" << result.r2
             << " mae_text=" << result.mae_text << " r2_text=" << result.r2_text;
    }

    if (opt.with_pir) {
        GenSpec spec;
        spec.seed = opt.seed;
        OracleParams params(RadiiTable::bundled());
        PirResult pir = pir_experiment(state, spec, params, opt.pir_pairs, opt.pir_configs,
                                       opt.pir_cifs, opt.delta);
        line << " pir_with=" << pir.with_config << " pir_without=" << pir.without_config;
    }

    if (!opt.heatmaps_dir.empty()) {
        fs::create_directories(opt.heatmaps_dir);
        Matrix geo, text;
        embedding_matrices(state, data, 64, geo, text);
        write_file((fs::path(opt.heatmaps_dir) / "similarity.csv").string(),
                   matrix_to_csv(similarity_matrix(geo, text)));
        write_file((fs::path(opt.heatmaps_dir) / "autocorrelation.csv").string(),
                   matrix_to_csv(autocorrelation_heatmap(geo)));
    }

    std::cout << line.str() << "\n";
    return kExitOk;
}

}  // namespace

namespace {

// Expands "--config FILE" into the key=value pairs the file holds, so every
// subcommand accepts an optional config file of plain key=value lines.
std::vector<std::string> expand_config_args(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            std::ifstream in(argv[++i]);
            if (!in) throw adsorbkit::IoError(std::string("cannot open config file ") + argv[i]);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '#') continue;
                std::size_t eq = line.find('=');
                if (eq == std::string::npos) {
                    throw adsorbkit::IoError("config file lines must be key=value: " + line);
                }
                args.push_back("--" + line.substr(0, eq));
                args.push_back(line.substr(eq + 1));
            }
        } else {
            args.push_back(std::move(arg));
        }
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adsorption-energy toolkit: synthetic data, structure-to-text "
                 "conversion, multimodal training and evaluation"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a dataset split into train/val/test");
    gen_cmd->add_option("--n", gen.n, "number of samples")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen.seed, "generator seed");
    gen_cmd->add_option("--out-dir", gen.out_dir, "output directory");
    gen_cmd->add_option("--configs-per-system", gen.configs_per_system)
        ->check(CLI::PositiveNumber);

    StringifyOptions str_opt;
    auto* str_cmd = app.add_subcommand("stringify", "convert a CIF file to a config string");
    str_cmd->add_option("--cif", str_opt.cif_path, "input CIF path")->required();
    str_cmd->add_flag("--permissive", str_opt.permissive, "wide-cutoff extraction");
    str_cmd->add_flag("--raw-stream", str_opt.raw_stream,
                      "truncate the input at the first blank line first");
    str_cmd->add_option("--miller", str_opt.miller, "facet indices h k l")->expected(3);
    str_cmd->add_option("--adsorbate", str_opt.adsorbate,
                        "adsorbate symbols (required for tag-free files)");

    TrainOptions train_opt;
    auto* train_cmd = app.add_subcommand("train", "run one training stage");
    train_cmd->add_option("--stage", train_opt.stage)->check(CLI::Range(1, 3))->required();
    train_cmd->add_option("--data", train_opt.data_path)->required();
    train_cmd->add_option("--ckpt", train_opt.ckpt_path, "output checkpoint")->required();
    train_cmd->add_option("--init-ckpt", train_opt.init_ckpt, "checkpoint to continue from");
    train_cmd->add_option("--log", train_opt.log_path, "training log CSV path");
    train_cmd->add_option("--loss", train_opt.loss)->check(CLI::IsMember({"mmtg", "plain"}));
    train_cmd->add_option("--seed", train_opt.seed);
    train_cmd->add_option("--epochs", train_opt.epochs);
    train_cmd->add_option("--lr", train_opt.learning_rate);
    train_cmd->add_option("--batch-size", train_opt.batch_size);
    train_cmd->add_option("--embed-dim", train_opt.embed_dim);

    EvalOptions eval_opt;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval_cmd->add_option("--ckpt", eval_opt.ckpt_path)->required();
    eval_cmd->add_option("--data", eval_opt.data_path)->required();
    eval_cmd->add_flag("--text-only", eval_opt.text_only);
    eval_cmd->add_flag("--pir", eval_opt.with_pir);
    eval_cmd->add_option("--heatmaps", eval_opt.heatmaps_dir);
    eval_cmd->add_option("--delta", eval_opt.delta, "target range half-width, eV");
    eval_cmd->add_option("--pir-pairs", eval_opt.pir_pairs);
    eval_cmd->add_option("--pir-configs", eval_opt.pir_configs);
    eval_cmd->add_option("--pir-cifs", eval_opt.pir_cifs);
    eval_cmd->add_option("--seed", eval_opt.seed);

    try {
        std::vector<std::string> args = expand_config_args(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            std::cout << app.help() << std::flush;
            return kExitOk;
        }
        std::cerr << e.what() << "\n" << app.help() << std::flush;
        return kExitUsage;
    }

    try {
        if (gen_cmd->parsed()) return run_gen(gen);
        if (str_cmd->parsed()) return run_stringify(str_opt);
        if (train_cmd->parsed()) return run_train(train_opt);
        if (eval_cmd->parsed()) return run_eval(eval_opt);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
