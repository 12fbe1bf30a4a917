#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pipegrad/cli.hpp"
#include "pipegrad/error.hpp"
#include "pipegrad/mlp.hpp"
#include "pipegrad/pipeline_json.hpp"
#include "support.hpp"

using namespace pipegrad;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Run {
    int code = 0;
    std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

json small_config() {
    return json::parse(R"({
        "data": {"synthetic": {"rows": 1200, "seed": 3}, "split": {"seed": 3}},
        "scenario": "s1_onehot",
        "gbdt": {"num_trees": 5, "max_leaves": 6},
        "pca": {"k": 4},
        "sdca": {"epochs": 5},
        "translation": {"level": "L2"},
        "train": {"batch_size": 128, "max_epochs": 2, "lr": 0.001, "seed": 1, "eval_every": 4}
    })");
}

fs::path write_config(const fs::path& dir, const json& cfg, const std::string& name = "config.json") {
    const fs::path p = dir / name;
    std::ofstream(p) << cfg.dump(1);
    return p;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("overrides use dotted paths and parse json values") {
    json cfg = json::object();
    apply_override(cfg, "train.lr=0.01");
    apply_override(cfg, "translation.level=L3");
    apply_override(cfg, "features.numeric=[\"x0\",\"x1\"]");
    apply_override(cfg, "translation.train_encoders=true");
    CHECK(cfg["train"]["lr"].get<double>() == 0.01);
    CHECK(cfg["translation"]["level"] == "L3");
    CHECK(cfg["features"]["numeric"].size() == 2);
    CHECK(cfg["translation"]["train_encoders"] == true);
    CHECK_THROWS_AS(apply_override(cfg, "novalue"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "a..b=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "train.lr.x=1"), ConfigError);
}

TEST_CASE("synth writes the fixture and fit reads it back through a schema") {
    const fs::path dir = testsupport::scratch_dir("cli_synth");
    json cfg = small_config();
    const fs::path synth_cfg = write_config(dir, cfg, "synth.json");
    Run r = cli({"synth", "--config", synth_cfg.string(), "--out", (dir / "data").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(fs::exists(dir / "data" / "fixture.csv"));
    CHECK(fs::exists(dir / "data" / "fixture_schema.json"));

    cfg["data"] = json::parse(R"({"csv": "data/fixture.csv", "schema": "data/fixture_schema.json"})");
    const fs::path fit_cfg = write_config(dir, cfg, "fit.json");
    r = cli({"fit", "--config", fit_cfg.string(), "--out", (dir / "run").string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    CHECK(contains(r.out, "train AUC"));
    CHECK(contains(r.out, "test AUC"));
    CHECK(fs::exists(dir / "run" / "pipeline.json"));
    const json metrics = read_json(dir / "run" / "fit_metrics.json");
    CHECK(metrics["valid_auc"].get<double>() > 0.5);
}

TEST_CASE("config errors exit with code 2 and name the field") {
    const fs::path dir = testsupport::scratch_dir("cli_errors");
    json cfg = small_config();
    cfg["data"] = json::parse(R"({"csv": "missing.csv"})");
    std::ofstream(dir / "missing.csv") << "x\n";
    Run r = cli({"fit", "--config", write_config(dir, cfg).string(), "--out", (dir / "o").string()});
    CHECK(r.code == kExitConfig);
    CHECK(contains(r.err, "data.schema"));

    cfg = small_config();
    cfg["scenario"] = "s1_hash";
    r = cli({"fit", "--config", write_config(dir, cfg).string(), "--out", (dir / "o").string()});
    CHECK(r.code == kExitConfig);
    CHECK(contains(r.err, "hash_bits"));

    cfg = small_config();
    r = cli({"fit", "--config", write_config(dir, cfg).string(), "--set", "translation.level=L9", "--out",
             (dir / "o").string()});
    CHECK(r.code == kExitOk);  // fit does not read the translation section
    r = cli({"compare", "--config", write_config(dir, cfg).string(), "--set", "translation.level=L9", "--out",
             (dir / "o").string()});
    CHECK(r.code == kExitConfig);
    CHECK(contains(r.err, "translation.level"));

    r = cli({"fit", "--config", (dir / "nope.json").string(), "--out", (dir / "o").string()});
    CHECK(r.code == kExitConfig);
    r = cli({"frobnicate"});
    CHECK(r.code == kExitConfig);
    r = cli({"fit", "--out", (dir / "o").string()});
    CHECK(r.code == kExitConfig);
}

TEST_CASE("s2 fit orders pca, gbdt, leaf indicators, concat and linear") {
    const fs::path dir = testsupport::scratch_dir("cli_s2");
    json cfg = small_config();
    cfg["scenario"] = "s2";
    REQUIRE(cli({"fit", "--config", write_config(dir, cfg).string(), "--out", dir.string()}).code == kExitOk);
    const Pipeline p = load_pipeline(dir / "pipeline.json");
    std::vector<std::size_t> kinds;
    for (std::size_t i : p.topo_order()) kinds.push_back(p.graph().nodes[i].payload.index());
    auto position = [&](std::size_t kind) {
        return std::find(kinds.begin(), kinds.end(), kind) - kinds.begin();
    };
    const OpPayload pca = PcaOp{}, gbdt = TreeEnsembleOp{}, leaves = LeafOneHotOp{}, concat = ConcatOp{},
                    linear = LinearOp{};
    CHECK(position(pca.index()) < position(gbdt.index()));
    CHECK(position(gbdt.index()) < position(leaves.index()));
    // The feature front has its own concat; the one joining leaves and features comes last.
    const long last_concat = static_cast<long>(kinds.rend() - std::find(kinds.rbegin(), kinds.rend(), concat.index())) - 1;
    CHECK(position(leaves.index()) < last_concat);
    CHECK(last_concat < position(linear.index()));
    CHECK(position(linear.index()) < static_cast<long>(kinds.size()));
}

TEST_CASE("translate reports fidelity and level-dependent parameter counts") {
    const fs::path dir = testsupport::scratch_dir("cli_translate");
    const fs::path cfg = write_config(dir, small_config());
    REQUIRE(cli({"fit", "--config", cfg.string(), "--out", dir.string()}).code == kExitOk);

    std::map<std::string, std::size_t> totals;
    for (const std::string level : {"L1", "L4"}) {
        const Run r = cli({"translate", "--config", cfg.string(), "--set", "translation.level=" + level, "--out",
                           dir.string()});
        REQUIRE_MESSAGE(r.code == kExitOk, r.err);
        CHECK(contains(r.out, "0 hard mismatches"));
        CHECK(read_json(dir / "fidelity.json")["hard_mismatches"] == 0);
        const json params = read_json(dir / "params.json");
        CHECK(params["level"] == level);
        totals[level] = params["counts"]["total_trainable"].get<std::size_t>();
    }
    const Pipeline p = load_pipeline(dir / "pipeline.json");
    std::size_t leaves = 0;
    for (const auto& node : p.graph().nodes)
        if (const auto* op = std::get_if<TreeEnsembleOp>(&node.payload)) leaves = op->ensemble.total_leaves();
    CHECK(totals["L1"] == leaves);
    CHECK(totals["L4"] > totals["L1"]);

    const Run r = cli({"translate", "--config", cfg.string(), "--set", "translation.start=cold", "--set",
                       "translation.cold_seed=42", "--out", dir.string()});
    CHECK(r.code == kExitOk);
    const json params = read_json(dir / "params.json");
    CHECK(params["start"] == "cold");
    CHECK(params["cold_seed"] == 42);
}

TEST_CASE("finetune with lr 0 has zero delta and runs are reproducible") {
    const fs::path dir = testsupport::scratch_dir("cli_finetune");
    const fs::path cfg = write_config(dir, small_config());
    REQUIRE(cli({"fit", "--config", cfg.string(), "--out", dir.string()}).code == kExitOk);
    REQUIRE(cli({"translate", "--config", cfg.string(), "--out", dir.string()}).code == kExitOk);

    Run r = cli({"finetune", "--config", cfg.string(), "--set", "train.lr=0", "--out", dir.string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    const json zero = read_json(dir / "finetune.json");
    CHECK(zero["delta_valid_auc"].get<double>() == 0.0);
    CHECK(zero["delta_test_auc"].get<double>() == 0.0);

    r = cli({"finetune", "--config", cfg.string(), "--out", dir.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(contains(r.out, "valid AUC"));
    const std::string first = slurp(dir / "history.csv");
    CHECK(first.rfind("step,loss,valid_auc\n", 0) == 0);
    CHECK(std::count(first.begin(), first.end(), '\n') > 1);
    const std::string net_first = slurp(dir / "net_tuned.json");
    REQUIRE(cli({"finetune", "--config", cfg.string(), "--out", dir.string()}).code == kExitOk);
    CHECK(slurp(dir / "history.csv") == first);
    CHECK(slurp(dir / "net_tuned.json") == net_first);
}

TEST_CASE("eval accepts pipelines, warm networks and tuned networks") {
    const fs::path dir = testsupport::scratch_dir("cli_eval");
    const fs::path cfg = write_config(dir, small_config());
    REQUIRE(cli({"fit", "--config", cfg.string(), "--out", dir.string()}).code == kExitOk);
    REQUIRE(cli({"translate", "--config", cfg.string(), "--out", dir.string()}).code == kExitOk);
    REQUIRE(cli({"finetune", "--config", cfg.string(), "--out", dir.string()}).code == kExitOk);
    std::map<std::string, double> aucs;
    for (const std::string artifact : {"pipeline.json", "net.json", "net_tuned.json"}) {
        const Run r = cli({"eval", "--config", cfg.string(), "--set", "artifact=" + (dir / artifact).string(),
                           "--out", dir.string()});
        REQUIRE_MESSAGE(r.code == kExitOk, r.err);
        const json rep = read_json(dir / "eval.json");
        CHECK(rep["split"] == "test");
        CHECK(rep["logloss"].get<double>() > 0.0);
        aucs[artifact] = rep["auc"].get<double>();
    }
    CHECK(aucs["pipeline.json"] > 0.5);
    // The warm network agrees with the pipeline up to the soft relaxation.
    CHECK(std::abs(aucs["net.json"] - aucs["pipeline.json"]) < 0.02);

    const Run bad = cli({"eval", "--config", cfg.string(), "--set", "artifact=" + (dir / "fit_metrics.json").string(),
                         "--out", dir.string()});
    CHECK(bad.code == kExitConfig);
}

TEST_CASE("compare emits four rows with a budget-matched MLP") {
    const fs::path dir = testsupport::scratch_dir("cli_compare");
    const fs::path cfg = write_config(dir, small_config());
    const Run r = cli({"compare", "--config", cfg.string(), "--out", dir.string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    const std::string csv = slurp(dir / "compare.csv");
    std::istringstream lines(csv);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(lines, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"model", "init", "init_seed", "trainable_params", "valid_auc", "test_auc"});
    CHECK(rows[1][0] == "classical");
    CHECK(rows[2][1] == "warm");
    CHECK(rows[3][1] == "cold");
    CHECK(rows[2][0] == rows[3][0]);
    CHECK(rows[2][3] == rows[3][3]);
    CHECK(rows[4][0].rfind("mlp-", 0) == 0);
    CHECK(fs::exists(dir / "compare.md"));

    // The MLP budget is the L4 translation of the same pipeline.
    const json l4 = read_json(dir / "params.json");  // written at the configured level
    const Pipeline p = load_pipeline(dir / "pipeline.json");
    std::size_t leaves = 0, internal = 0;
    for (const auto& node : p.graph().nodes)
        if (const auto* op = std::get_if<TreeEnsembleOp>(&node.payload))
            for (const auto& t : op->ensemble.trees) {
                leaves += t.leaf_count();
                internal += t.nodes.size() - t.leaf_count();
            }
    CHECK(l4["counts"]["total_trainable"].get<std::size_t>() == leaves + internal);  // L2 config
    const double mlp = std::stod(rows[4][3]);
    const std::string md = slurp(dir / "compare.md");
    const auto at = md.find("translation: ");
    REQUIRE(at != std::string::npos);
    const double budget = std::stod(md.substr(at + 13));
    CHECK(std::abs(mlp - budget) <= 0.1 * budget);
}

TEST_CASE("the executable returns the documented exit codes") {
    const char* exe = std::getenv("PIPEGRAD_EXE");
    if (!exe) return;
    const fs::path dir = testsupport::scratch_dir("cli_exe");
    const fs::path cfg = write_config(dir, small_config());
    const std::string base = std::string("\"") + exe + "\" ";
    auto status = [](const std::string& cmd) {
        const int raw = std::system((cmd + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(raw);
    };
    CHECK(status(base + "synth --config \"" + cfg.string() + "\" --out \"" + dir.string() + "\"") == kExitOk);
    CHECK(status(base + "fit --config \"" + (dir / "absent.json").string() + "\" --out \"" + dir.string() + "\"") ==
          kExitConfig);
}
