#include "pipegrad/pipeline_json.hpp"

#include <fstream>
#include <string>

#include "pipegrad/detail/overloaded.hpp"
#include "pipegrad/error.hpp"

namespace pipegrad {

using json = nlohmann::ordered_json;
using detail::overloaded;

namespace {

const json& field(const json& doc, const char* key, const std::string& where) {
    if (!doc.is_object() || !doc.contains(key)) throw Error(where + ": missing field '" + key + "'");
    return doc.at(key);
}

std::vector<double> vec(const json& doc) { return doc.get<std::vector<double>>(); }

json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const json& doc) {
    const auto v = doc.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json node_to_json(const OperatorNode& node) {
    json j;
    j["id"] = node.id;
    j["kind"] = to_string(node.kind());
    j["inputs"] = node.inputs;
    std::visit(overloaded{
                   [&](const OneHotOp& op) {
                       j["column"] = op.column;
                       j["vocabulary"] = op.vocab.categories();
                   },
                   [&](const HashEncodeOp& op) {
                       j["column"] = op.column;
                       j["bits"] = op.bits;
                   },
                   [&](const LdaOp& op) {
                       j["column"] = op.column;
                       j["vocabulary"] = op.model.vocabulary();
                       j["doc_topic"] = matrix_to_json(op.model.doc_topic());
                   },
                   [&](const StandardizeOp& op) {
                       j["mean"] = op.mean;
                       j["scale"] = op.scale;
                   },
                   [&](const PcaOp& op) {
                       j["mean"] = vector_to_json(op.model.mean);
                       j["components"] = matrix_to_json(op.model.components);
                       j["eigenvalues"] = vector_to_json(op.model.eigenvalues);
                   },
                   [&](const TreeEnsembleOp& op) { j["ensemble"] = ensemble_to_json(op.ensemble); },
                   [&](const LinearOp& op) {
                       j["weights"] = vector_to_json(op.model.weights);
                       j["bias"] = op.model.bias;
                   },
                   [&](const LeafOneHotOp&) {},
                   [&](const ConcatOp&) {},
                   [&](const SigmoidOp&) {},
                   [&](const ColumnSelectOp& op) {
                       if (op.is_entry())
                           j["columns"] = op.columns;
                       else
                           j["indices"] = op.indices;
                   },
               },
               node.payload);
    return j;
}

OperatorNode node_from_json(const json& j) {
    OperatorNode node;
    node.id = field(j, "id", "pipeline node").get<std::string>();
    const std::string where = "pipeline node '" + node.id + "'";
    const std::string kind_name = field(j, "kind", where).get<std::string>();
    const auto kind = op_kind_from_string(kind_name);
    if (!kind) throw Error(where + ": unknown kind '" + kind_name + "'");
    if (j.contains("inputs")) node.inputs = j.at("inputs").get<std::vector<std::string>>();
    switch (*kind) {
        case OpKind::onehot:
            node.payload = OneHotOp{field(j, "column", where).get<std::string>(),
                                    OneHotVocab(field(j, "vocabulary", where).get<std::vector<std::string>>())};
            break;
        case OpKind::hash_encode:
            node.payload = HashEncodeOp{field(j, "column", where).get<std::string>(), field(j, "bits", where).get<int>()};
            break;
        case OpKind::lda:
            node.payload = LdaOp{field(j, "column", where).get<std::string>(),
                                 LdaModel(field(j, "vocabulary", where).get<std::vector<std::string>>(),
                                          matrix_from_json(field(j, "doc_topic", where)))};
            break;
        case OpKind::standardize:
            node.payload = StandardizeOp{vec(field(j, "mean", where)), vec(field(j, "scale", where))};
            break;
        case OpKind::pca: {
            PcaModel m;
            m.mean = vector_from_json(field(j, "mean", where));
            m.components = matrix_from_json(field(j, "components", where));
            if (j.contains("eigenvalues")) m.eigenvalues = vector_from_json(j.at("eigenvalues"));
            node.payload = PcaOp{std::move(m)};
            break;
        }
        case OpKind::tree_ensemble:
            node.payload = TreeEnsembleOp{ensemble_from_json(field(j, "ensemble", where))};
            break;
        case OpKind::linear:
            node.payload = LinearOp{LinearModel{vector_from_json(field(j, "weights", where)),
                                                field(j, "bias", where).get<double>()}};
            break;
        case OpKind::leaf_onehot: node.payload = LeafOneHotOp{}; break;
        case OpKind::concat: node.payload = ConcatOp{}; break;
        case OpKind::sigmoid: node.payload = SigmoidOp{}; break;
        case OpKind::column_select: {
            ColumnSelectOp op;
            if (j.contains("columns")) op.columns = j.at("columns").get<std::vector<std::string>>();
            if (j.contains("indices")) op.indices = j.at("indices").get<std::vector<std::size_t>>();
            node.payload = std::move(op);
            break;
        }
    }
    return node;
}

}  // namespace

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) r[static_cast<std::size_t>(c)] = m(i, c);
        rows.push_back(std::move(r));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& doc) {
    if (!doc.is_array()) throw Error("matrix must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(doc.size());
    const Eigen::Index cols = rows == 0 ? 0 : static_cast<Eigen::Index>(doc[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto r = doc[static_cast<std::size_t>(i)].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(r.size()) != cols) throw Error("ragged matrix in JSON");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)];
    }
    return m;
}

json tree_to_json(const Tree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
        if (n.is_leaf)
            nodes.push_back({{"leaf", true}, {"value", n.value}});
        else
            nodes.push_back({{"leaf", false},
                             {"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right}});
    }
    return {{"root", tree.root}, {"nodes", std::move(nodes)}};
}

Tree tree_from_json(const json& doc) {
    Tree t;
    t.root = field(doc, "root", "tree").get<int>();
    for (const auto& n : field(doc, "nodes", "tree")) {
        if (field(n, "leaf", "tree node").get<bool>())
            t.nodes.push_back(TreeNode::leaf(field(n, "value", "leaf").get<double>()));
        else
            t.nodes.push_back(TreeNode::split(field(n, "feature", "split").get<int>(),
                                              field(n, "threshold", "split").get<double>(),
                                              field(n, "left", "split").get<int>(),
                                              field(n, "right", "split").get<int>()));
    }
    return t;
}

json ensemble_to_json(const TreeEnsemble& ens) {
    json trees = json::array();
    for (const auto& t : ens.trees) trees.push_back(tree_to_json(t));
    return {{"num_features", ens.num_features}, {"base_score", ens.base_score}, {"trees", std::move(trees)}};
}

TreeEnsemble ensemble_from_json(const json& doc) {
    TreeEnsemble ens;
    ens.num_features = field(doc, "num_features", "ensemble").get<std::size_t>();
    ens.base_score = field(doc, "base_score", "ensemble").get<double>();
    for (const auto& t : field(doc, "trees", "ensemble")) ens.trees.push_back(tree_from_json(t));
    return ens;
}

json serialize(const Pipeline& pipeline) {
    json doc;
    doc["version"] = kPipelineVersion;
    doc["sink"] = pipeline.graph().sink;
    json nodes = json::array();
    for (const auto& n : pipeline.graph().nodes) nodes.push_back(node_to_json(n));
    doc["nodes"] = std::move(nodes);
    return doc;
}

Pipeline deserialize_pipeline(const json& doc) {
    if (!doc.is_object() || !doc.contains("version")) throw Error("pipeline document missing \"version\"");
    const std::string version = doc.at("version").get<std::string>();
    if (version != kPipelineVersion) throw Error("unsupported pipeline version '" + version + "'");
    PipelineGraph g;
    g.sink = field(doc, "sink", "pipeline").get<std::string>();
    for (const auto& n : field(doc, "nodes", "pipeline")) g.nodes.push_back(node_from_json(n));
    return validate(std::move(g));
}

void save_pipeline(const std::filesystem::path& path, const Pipeline& pipeline) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << serialize(pipeline).dump(1) << '\n';
}

Pipeline load_pipeline(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open pipeline file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("pipeline file '" + path.string() + "': " + e.what());
    }
    return deserialize_pipeline(doc);
}

}  // namespace pipegrad
