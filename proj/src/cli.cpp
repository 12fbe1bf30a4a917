#include "pipegrad/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "pipegrad/data.hpp"
#include "pipegrad/error.hpp"
#include "pipegrad/eval.hpp"
#include "pipegrad/finetune.hpp"
#include "pipegrad/mlp.hpp"
#include "pipegrad/net_json.hpp"
#include "pipegrad/pipeline_json.hpp"
#include "pipegrad/runtime.hpp"
#include "pipegrad/scenarios.hpp"
#include "pipegrad/synthetic.hpp"
#include "pipegrad/translator.hpp"

namespace pipegrad {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// ---- config access --------------------------------------------------------

const json* lookup(const json& root, std::string_view dotted) {
    const json* cur = &root;
    std::size_t start = 0;
    while (start <= dotted.size()) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key(dotted.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
        if (!cur->is_object() || !cur->contains(key)) return nullptr;
        cur = &cur->at(key);
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    return cur;
}

template <class T>
T get_or(const json& cfg, std::string_view key, T fallback) {
    const json* v = lookup(cfg, key);
    if (!v || v->is_null()) return fallback;
    try {
        return v->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config field '" + std::string(key) + "' has the wrong type");
    }
}

template <class T>
T require(const json& cfg, std::string_view key) {
    const json* v = lookup(cfg, key);
    if (!v || v->is_null()) throw ConfigError("config field '" + std::string(key) + "' is required");
    return get_or<T>(cfg, key, T{});
}

struct Context {
    json config;
    fs::path base;  // directory of the config file; relative paths resolve here
    fs::path out;
    std::ostream& log;
};

fs::path resolve(const Context& ctx, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : ctx.base / path;
}

fs::path existing_file(const Context& ctx, std::string_view key) {
    const fs::path p = resolve(ctx, require<std::string>(ctx.config, key));
    if (!fs::exists(p)) throw ConfigError("config field '" + std::string(key) + "': file '" + p.string() + "' does not exist");
    return p;
}

// ---- typed sections ------------------------------------------------------

struct Splits {
    Dataset train, valid, test;
    SchemaFile schema;
};

Splits load_data(const Context& ctx) {
    const json& cfg = ctx.config;
    if (!lookup(cfg, "data")) throw ConfigError("config field 'data' is required");
    Dataset all;
    SchemaFile schema;
    if (lookup(cfg, "data.synthetic")) {
        FixtureConfig fc;
        fc.rows = get_or<std::size_t>(cfg, "data.synthetic.rows", fc.rows);
        fc.seed = get_or<std::uint64_t>(cfg, "data.synthetic.seed", fc.seed);
        all = make_fixture(fc);
        schema = fixture_schema();
    } else {
        const fs::path csv = existing_file(ctx, "data.csv");
        const fs::path schema_path = existing_file(ctx, "data.schema");
        schema = read_schema(schema_path);
        all = load_csv(csv, schema.columns, schema.label_column);
    }
    SplitSpec spec;
    spec.train_fraction = get_or(cfg, "data.split.train", spec.train_fraction);
    spec.valid_fraction = get_or(cfg, "data.split.valid", spec.valid_fraction);
    spec.test_fraction = get_or(cfg, "data.split.test", spec.test_fraction);
    spec.seed = get_or<std::uint64_t>(cfg, "data.split.seed", spec.seed);
    auto [train, valid, test] = split(all, spec);
    return {std::move(train), std::move(valid), std::move(test), std::move(schema)};
}

ScenarioConfig scenario_config(const json& cfg) {
    ScenarioConfig sc;
    const auto name = get_or<std::string>(cfg, "scenario", "s1_onehot");
    const auto kind = scenario_from_string(name);
    if (!kind) throw ConfigError("config field 'scenario': unknown scenario '" + name + "'");
    sc.kind = *kind;
    sc.numeric = get_or(cfg, "features.numeric", sc.numeric);
    sc.categorical = get_or(cfg, "features.categorical", sc.categorical);
    sc.gbdt.num_trees = get_or(cfg, "gbdt.num_trees", sc.gbdt.num_trees);
    sc.gbdt.max_leaves = get_or(cfg, "gbdt.max_leaves", sc.gbdt.max_leaves);
    sc.gbdt.learning_rate = get_or(cfg, "gbdt.learning_rate", sc.gbdt.learning_rate);
    sc.gbdt.seed = get_or<std::uint64_t>(cfg, "gbdt.seed", sc.gbdt.seed);
    sc.gbdt.min_samples_leaf = get_or(cfg, "gbdt.min_samples_leaf", sc.gbdt.min_samples_leaf);
    sc.gbdt.l2 = get_or(cfg, "gbdt.l2", sc.gbdt.l2);
    if (sc.kind == ScenarioKind::s1_hash && !lookup(cfg, "hash_bits"))
        throw ConfigError("config field 'hash_bits' is required for scenario s1_hash");
    sc.hash_bits = get_or(cfg, "hash_bits", sc.hash_bits);
    sc.count_select_min = get_or(cfg, "count_select_min", sc.count_select_min);
    sc.lda.topics = get_or(cfg, "lda.topics", sc.lda.topics);
    sc.lda.alpha = get_or(cfg, "lda.alpha", sc.lda.alpha);
    sc.lda.beta = get_or(cfg, "lda.beta", sc.lda.beta);
    sc.lda.iterations = get_or(cfg, "lda.iterations", sc.lda.iterations);
    sc.lda.seed = get_or<std::uint64_t>(cfg, "lda.seed", sc.lda.seed);
    sc.pca_k = get_or(cfg, "pca.k", sc.pca_k);
    sc.pca.seed = get_or<std::uint64_t>(cfg, "pca.seed", sc.pca.seed);
    sc.sdca.regularization = get_or(cfg, "sdca.regularization", sc.sdca.regularization);
    sc.sdca.epochs = get_or(cfg, "sdca.epochs", sc.sdca.epochs);
    sc.sdca.seed = get_or<std::uint64_t>(cfg, "sdca.seed", sc.sdca.seed);
    return sc;
}

TranslationConfig translation_config(const json& cfg) {
    TranslationConfig tc;
    const auto level = get_or<std::string>(cfg, "translation.level", "L1");
    const auto lv = level_from_string(level);
    if (!lv) throw ConfigError("config field 'translation.level': expected L1..L4, got '" + level + "'");
    tc.level = *lv;
    tc.gamma1 = get_or(cfg, "translation.gamma1", tc.gamma1);
    tc.gamma2 = get_or(cfg, "translation.gamma2", tc.gamma2);
    const auto start = get_or<std::string>(cfg, "translation.start", "warm");
    if (start != "warm" && start != "cold")
        throw ConfigError("config field 'translation.start': expected warm or cold, got '" + start + "'");
    tc.start = start == "cold" ? Start::cold : Start::warm;
    tc.cold_seed = get_or<std::uint64_t>(cfg, "translation.cold_seed", tc.cold_seed);
    tc.dropout_p = get_or(cfg, "translation.dropout_p", tc.dropout_p);
    tc.train_encoders = get_or(cfg, "translation.train_encoders", tc.train_encoders);
    tc.embedding_dim = get_or(cfg, "translation.embedding_dim", tc.embedding_dim);
    tc.train_dense = get_or(cfg, "translation.train_dense", tc.train_dense);
    tc.train_standardizer = get_or(cfg, "translation.train_standardizer", tc.train_standardizer);
    tc.check();
    return tc;
}

TrainConfig train_config(const json& cfg) {
    TrainConfig t;
    t.batch_size = get_or(cfg, "train.batch_size", t.batch_size);
    t.lr = get_or(cfg, "train.lr", t.lr);
    t.weight_decay = get_or(cfg, "train.weight_decay", t.weight_decay);
    t.max_epochs = get_or(cfg, "train.max_epochs", t.max_epochs);
    t.patience = get_or(cfg, "train.patience", t.patience);
    t.seed = get_or<std::uint64_t>(cfg, "train.seed", t.seed);
    t.eval_every = get_or(cfg, "train.eval_every", t.eval_every);
    if (t.batch_size < 1) throw ConfigError("config field 'train.batch_size' must be at least 1");
    if (t.patience < 1) throw ConfigError("config field 'train.patience' must be at least 1");
    return t;
}

// ---- helpers -------------------------------------------------------------

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << doc.dump(1) << '\n';
}

std::vector<double> pipeline_scores(const Pipeline& p, const Dataset& ds) { return pipeline_predict_all(p, ds); }

std::vector<double> net_logits(const NeuralGraph& net, const Dataset& ds) {
    const Eigen::VectorXd l = predict_logits(net, ds, Mode::eval);
    return {l.data(), l.data() + l.size()};
}

double auc_of(const std::vector<double>& scores, const Dataset& ds) { return auc(scores, ds.labels()); }

const Dataset& split_named(const Splits& s, const std::string& name, std::string_view key) {
    if (name == "train") return s.train;
    if (name == "valid") return s.valid;
    if (name == "test") return s.test;
    throw ConfigError("config field '" + std::string(key) + "': expected train, valid or test, got '" + name + "'");
}

// Logits of the classical pipeline (undoing a final sigmoid) for log loss.
std::vector<double> as_logits(const Pipeline& p, std::vector<double> scores) {
    if (std::holds_alternative<SigmoidOp>(p.graph().nodes[p.sink_index()].payload))
        for (double& s : scores) s = std::log(s / (1.0 - s));
    return scores;
}

// ---- commands ------------------------------------------------------------

Pipeline do_fit(Context& ctx, const Splits& data) {
    const Pipeline p = fit_scenario(data.train, scenario_config(ctx.config));
    save_pipeline(ctx.out / "pipeline.json", p);
    write_schema(ctx.out / "schema.json", data.schema);
    json metrics;
    metrics["scenario"] = get_or<std::string>(ctx.config, "scenario", "s1_onehot");
    for (const auto& [name, ds] : {std::pair<const char*, const Dataset*>{"train", &data.train},
                                   {"valid", &data.valid},
                                   {"test", &data.test}}) {
        const double a = auc_of(pipeline_scores(p, *ds), *ds);
        metrics[std::string(name) + "_auc"] = a;
        ctx.log << name << " AUC " << fmt(a) << '\n';
    }
    write_json(ctx.out / "fit_metrics.json", metrics);
    return p;
}

int cmd_fit(Context& ctx) {
    const Splits data = load_data(ctx);
    do_fit(ctx, data);
    return kExitOk;
}

Pipeline input_pipeline(const Context& ctx) {
    if (lookup(ctx.config, "pipeline")) return load_pipeline(existing_file(ctx, "pipeline"));
    const fs::path p = ctx.out / "pipeline.json";
    if (!fs::exists(p)) throw ConfigError("config field 'pipeline' is required (no " + p.string() + " to reuse)");
    return load_pipeline(p);
}

NeuralGraph input_net(const Context& ctx, std::string_view key, const fs::path& fallback) {
    if (lookup(ctx.config, key)) return load_net(existing_file(ctx, key));
    if (!fs::exists(fallback))
        throw ConfigError("config field '" + std::string(key) + "' is required (no " + fallback.string() + " to reuse)");
    return load_net(fallback);
}

int translate_and_report(Context& ctx, const Pipeline& p, const Splits& data, NeuralGraph* out_net) {
    const TranslationConfig tc = translation_config(ctx.config);
    NeuralGraph net = translate_pipeline(p, tc);
    save_net(ctx.out / "net.json", net);

    // Fidelity is a property of the warm translation; a cold network is
    // checked through its warm twin.
    TranslationConfig warm = tc;
    warm.start = Start::warm;
    const NeuralGraph warm_net = tc.start == Start::warm ? net : translate_pipeline(p, warm);
    const double margin = get_or(ctx.config, "fidelity.margin", 1e-9);
    const std::string split_name = get_or<std::string>(ctx.config, "fidelity.split", "test");
    const FidelityReport rep = fidelity_check(p, warm_net, split_named(data, split_name, "fidelity.split"), margin);
    json fid = to_json(rep);
    fid["split"] = split_name;
    fid["margin"] = margin;
    write_json(ctx.out / "fidelity.json", fid);

    json params;
    params["level"] = to_string(tc.level);
    params["start"] = tc.start == Start::warm ? "warm" : "cold";
    params["cold_seed"] = tc.cold_seed;
    params["counts"] = to_json(count_parameters(net, true));
    write_json(ctx.out / "params.json", params);

    ctx.log << "translated " << net.layers.size() << " layers, " << count_parameters(net).total_trainable
            << " trainable parameters (" << to_string(tc.level) << ")\n";
    ctx.log << "fidelity: " << rep.hard_mismatches << " hard mismatches over " << rep.rows_checked << " rows ("
            << rep.rows_excluded << " excluded at margin " << margin << ")\n";
    if (out_net) *out_net = std::move(net);
    return rep.hard_mismatches > 0 ? kExitFidelity : kExitOk;
}

int cmd_translate(Context& ctx) {
    const Splits data = load_data(ctx);
    return translate_and_report(ctx, input_pipeline(ctx), data, nullptr);
}

struct TuneSummary {
    double frozen_valid = 0, frozen_test = 0, valid = 0, test = 0;
};

TuneSummary tune(Context& ctx, const NeuralGraph& net, const Splits& data, const fs::path& net_out,
                 const fs::path& history_out) {
    const TrainConfig tc = train_config(ctx.config);
    TuneSummary s;
    s.frozen_valid = auc_of(net_logits(net, data.valid), data.valid);
    s.frozen_test = auc_of(net_logits(net, data.test), data.test);
    const FinetuneResult res = finetune(net, data.train, data.valid, tc);
    save_net(net_out, res.net);
    write_history_csv(history_out, res.history);
    s.valid = auc_of(net_logits(res.net, data.valid), data.valid);
    s.test = auc_of(net_logits(res.net, data.test), data.test);
    return s;
}

int cmd_finetune(Context& ctx) {
    const Splits data = load_data(ctx);
    const NeuralGraph net = input_net(ctx, "net", ctx.out / "net.json");
    const TuneSummary s = tune(ctx, net, data, ctx.out / "net_tuned.json", ctx.out / "history.csv");
    json doc{{"frozen_valid_auc", s.frozen_valid}, {"frozen_test_auc", s.frozen_test},
             {"valid_auc", s.valid},               {"test_auc", s.test},
             {"delta_valid_auc", s.valid - s.frozen_valid}, {"delta_test_auc", s.test - s.frozen_test}};
    write_json(ctx.out / "finetune.json", doc);
    ctx.log << "valid AUC " << fmt(s.valid) << " (delta " << fmt(s.valid - s.frozen_valid) << ")\n";
    ctx.log << "test AUC " << fmt(s.test) << " (delta " << fmt(s.test - s.frozen_test) << ")\n";
    return kExitOk;
}

int cmd_eval(Context& ctx) {
    const Splits data = load_data(ctx);
    const std::string split_name = get_or<std::string>(ctx.config, "eval_split", "test");
    const Dataset& ds = split_named(data, split_name, "eval_split");
    const fs::path artifact = lookup(ctx.config, "artifact") ? existing_file(ctx, "artifact") : ctx.out / "net_tuned.json";
    if (!fs::exists(artifact)) throw ConfigError("config field 'artifact' is required");
    std::ifstream in(artifact);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("artifact '" + artifact.string() + "': " + e.what());
    }
    const std::string version = doc.value("version", "");
    std::vector<double> logits;
    std::string kind;
    if (version == kPipelineVersion) {
        const Pipeline p = deserialize_pipeline(doc);
        logits = as_logits(p, pipeline_scores(p, ds));
        kind = "pipeline";
    } else if (version == kNetVersion) {
        logits = net_logits(deserialize_net(doc), ds);
        kind = "network";
    } else {
        throw ConfigError("artifact '" + artifact.string() + "' has unknown version '" + version + "'");
    }
    const double a = auc(logits, ds.labels());
    const double ll = log_loss(logits, ds.labels());
    write_json(ctx.out / "eval.json",
               json{{"artifact", kind}, {"split", split_name}, {"rows", ds.rows()}, {"auc", a}, {"logloss", ll}});
    ctx.log << kind << " " << split_name << " AUC " << fmt(a) << " logloss " << fmt(ll) << '\n';
    return kExitOk;
}

int cmd_compare(Context& ctx) {
    const Splits data = load_data(ctx);
    const Pipeline p = do_fit(ctx, data);
    NeuralGraph warm_net;
    const int fid = translate_and_report(ctx, p, data, &warm_net);
    if (fid != kExitOk) return fid;

    TranslationConfig tc = translation_config(ctx.config);
    tc.start = Start::warm;
    warm_net = translate_pipeline(p, tc);
    TranslationConfig cold_cfg = tc;
    cold_cfg.start = Start::cold;
    const NeuralGraph cold_net = translate_pipeline(p, cold_cfg);

    TranslationConfig l4 = tc;
    l4.level = Level::L4;
    const std::size_t l4_count = count_parameters(translate_pipeline(p, l4)).total_trainable;
    MlpConfig mc;
    mc.dropout = get_or(ctx.config, "mlp.dropout", mc.dropout);
    mc.seed = get_or<std::uint64_t>(ctx.config, "mlp.seed", mc.seed);
    const std::size_t d = mlp_input_dim(data.train);
    mc.hidden = mlp_hidden_for_budget(d, l4_count);
    const NeuralGraph mlp = build_mlp_baseline(data.train, mc);

    struct Row {
        std::string model, init, seed;
        std::size_t params;
        double valid, test;
    };
    std::vector<Row> rows;
    rows.push_back({"classical", "greedy", "-", 0, auc_of(pipeline_scores(p, data.valid), data.valid),
                    auc_of(pipeline_scores(p, data.test), data.test)});
    const TuneSummary w = tune(ctx, warm_net, data, ctx.out / "net_warm_tuned.json", ctx.out / "history.csv");
    rows.push_back({"translated-" + to_string(tc.level), "warm", "-", count_parameters(warm_net).total_trainable,
                    w.valid, w.test});
    const TuneSummary c = tune(ctx, cold_net, data, ctx.out / "net_cold_tuned.json", ctx.out / "history_cold.csv");
    rows.push_back({"translated-" + to_string(tc.level), "cold", std::to_string(tc.cold_seed),
                    count_parameters(cold_net).total_trainable, c.valid, c.test});
    const TuneSummary m = tune(ctx, mlp, data, ctx.out / "net_mlp_tuned.json", ctx.out / "history_mlp.csv");
    rows.push_back({"mlp-" + std::to_string(mc.hidden[0]) + "x" + std::to_string(mc.hidden[1]), "random",
                    std::to_string(mc.seed), count_parameters(mlp).total_trainable, m.valid, m.test});

    std::ostringstream md, csv;
    md << "| model | init | init_seed | trainable_params | valid_auc | test_auc |\n";
    md << "|---|---|---|---:|---:|---:|\n";
    csv << "model,init,init_seed,trainable_params,valid_auc,test_auc\n";
    for (const auto& r : rows) {
        md << "| " << r.model << " | " << r.init << " | " << r.seed << " | " << r.params << " | " << fmt(r.valid)
           << " | " << fmt(r.test) << " |\n";
        csv << r.model << ',' << r.init << ',' << r.seed << ',' << r.params << ',' << fmt(r.valid) << ','
            << fmt(r.test) << '\n';
    }
    md << "\nMLP sized against the L4 translation: " << l4_count << " trainable parameters.\n";
    std::ofstream(ctx.out / "compare.md") << md.str();
    std::ofstream(ctx.out / "compare.csv") << csv.str();
    ctx.log << md.str();
    return kExitOk;
}

int cmd_synth(Context& ctx) {
    FixtureConfig fc;
    fc.rows = get_or<std::size_t>(ctx.config, "data.synthetic.rows", fc.rows);
    fc.seed = get_or<std::uint64_t>(ctx.config, "data.synthetic.seed", fc.seed);
    const Dataset ds = make_fixture(fc);
    const SchemaFile schema = fixture_schema();
    write_csv(ctx.out / "fixture.csv", ds, schema.label_column);
    write_schema(ctx.out / "fixture_schema.json", schema);
    ctx.log << "wrote " << ds.rows() << " rows to " << (ctx.out / "fixture.csv").string() << '\n';
    return kExitOk;
}

}  // namespace

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override '" + assignment + "' must look like key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        value = raw;
    }
    json* cur = &config;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
        if (!cur->is_object()) {
            if (!cur->is_null()) throw ConfigError("override key '" + key + "' descends into a non-object");
            *cur = json::object();
        }
        if (dot == std::string::npos) {
            (*cur)[part] = std::move(value);
            return;
        }
        cur = &(*cur)[part];
        start = dot + 1;
    }
}

json load_config(const fs::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config '" + path.string() + "' must be a JSON object");
    for (const auto& o : overrides) apply_override(cfg, o);
    return cfg;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Train classical pipelines, compile them to networks and fine-tune them."};
    app.name("pipegrad");
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"fit", "train the scenario pipeline greedily and write pipeline.json"},
        {"translate", "compile pipeline.json into net.json with fidelity and parameter reports"},
        {"finetune", "fine-tune net.json and write net_tuned.json and history.csv"},
        {"eval", "report AUC and log loss of a pipeline or network artifact"},
        {"compare", "classical vs warm-tuned vs cold-tuned vs MLP baseline table"},
        {"synth", "write the bundled synthetic fixture as CSV plus schema"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--set", overrides, "override a config key, dotted path: key=value");
        sub->add_option("--out", out_dir, "output directory")->required();
    }

    std::vector<const char*> argv{"pipegrad"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const fs::path cfg_path(config_path);
        Context ctx{load_config(cfg_path, overrides), fs::absolute(cfg_path).parent_path(), fs::path(out_dir), out};
        fs::create_directories(ctx.out);
        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "fit") return cmd_fit(ctx);
        if (name == "translate") return cmd_translate(ctx);
        if (name == "finetune") return cmd_finetune(ctx);
        if (name == "eval") return cmd_eval(ctx);
        if (name == "compare") return cmd_compare(ctx);
        return cmd_synth(ctx);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DivergenceError& e) {
        err << "training diverged: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace pipegrad
