#include "pipegrad/net_json.hpp"

#include <fstream>
#include <unordered_map>

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

json param_ref(const NeuralGraph& net, std::size_t p) {
    if (p == kNoParam) return nullptr;
    return net.params.at(p).id;
}

json layer_to_json(const NeuralGraph& net, const Layer& layer) {
    json j;
    j["id"] = layer.id;
    j["kind"] = layer_kind(layer.op);
    json inputs = json::array();
    for (std::size_t in : layer.inputs) inputs.push_back(net.layers[in].id);
    j["inputs"] = std::move(inputs);
    j["out_dim"] = layer.out_dim;
    std::visit(overloaded{
                   [&](const NumericInputLayer& op) { j["columns"] = op.columns; },
                   [&](const EmbeddingLayer& op) {
                       j["column"] = op.column();
                       if (op.key() == EmbeddingKey::hash) {
                           j["key"] = "hash";
                           j["bits"] = op.bits();
                       } else {
                           j["key"] = "vocabulary";
                           j["vocabulary"] = op.vocabulary();
                           j["fallback"] = std::vector<double>(op.fallback().data(),
                                                               op.fallback().data() + op.fallback().size());
                       }
                       j["table"] = param_ref(net, op.table());
                   },
                   [&](const DenseLayer& op) {
                       j["weight"] = param_ref(net, op.weight);
                       j["bias"] = param_ref(net, op.bias);
                   },
                   [&](const AffineLayer& op) {
                       j["scale"] = param_ref(net, op.scale);
                       j["shift"] = param_ref(net, op.shift);
                   },
                   [&](const TreeEnsembleLayer& op) {
                       j["base_score"] = op.base_score;
                       j["gamma1"] = op.gamma1;
                       j["gamma2"] = op.gamma2;
                       j["dropout"] = op.dropout;
                       j["leaf_output"] = op.leaf_output;
                       json trees = json::array();
                       for (const auto& b : op.trees)
                           trees.push_back({{"internal", b.internal},
                                            {"leaves", b.leaves},
                                            {"W1", param_ref(net, b.w1)},
                                            {"b1", param_ref(net, b.b1)},
                                            {"W2", param_ref(net, b.w2)},
                                            {"b2", param_ref(net, b.b2)},
                                            {"w3", param_ref(net, b.w3)}});
                       j["trees"] = std::move(trees);
                   },
                   [&](const ConcatLayer&) {},
                   [&](const SelectLayer& op) { j["indices"] = op.indices; },
                   [&](const ActivationLayer&) {},
                   [&](const DropoutLayer& op) { j["p"] = op.p; },
               },
               layer.op);
    return j;
}

json param_to_json(const Parameter& p) {
    std::vector<double> values(p.size());
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
        for (Eigen::Index c = 0; c < p.value.cols(); ++c) values[k++] = p.value(r, c);
    return {{"id", p.id},
            {"shape", {p.value.rows(), p.value.cols()}},
            {"trainable", p.trainable},
            {"fan_in", p.fan_in},
            {"values", std::move(values)}};
}

}  // namespace

json serialize(const NeuralGraph& net) {
    json doc;
    doc["version"] = kNetVersion;
    doc["output"] = net.layers.at(net.output).id;
    doc["sink_sigmoid"] = net.sink_sigmoid;
    json frozen = json::array();
    for (const auto& c : net.frozen_inputs) frozen.push_back({{"column", c.name}, {"kind", to_string(c.kind)}});
    doc["frozen_preprocessors"] = std::move(frozen);
    json layers = json::array();
    for (const auto& l : net.layers) layers.push_back(layer_to_json(net, l));
    doc["layers"] = std::move(layers);
    json params = json::array();
    for (const auto& p : net.params) params.push_back(param_to_json(p));
    doc["parameters"] = std::move(params);
    return doc;
}

NeuralGraph deserialize_net(const json& doc) {
    if (!doc.is_object() || !doc.contains("version")) throw Error("network document missing \"version\"");
    const std::string version = doc.at("version").get<std::string>();
    if (version != kNetVersion) throw Error("unsupported network version '" + version + "'");

    NeuralGraph net;
    std::unordered_map<std::string, std::size_t> param_ids;
    for (const auto& p : field(doc, "parameters", "network")) {
        const std::string id = field(p, "id", "parameter").get<std::string>();
        const std::string where = "parameter '" + id + "'";
        const auto shape = field(p, "shape", where).get<std::vector<Eigen::Index>>();
        const auto values = field(p, "values", where).get<std::vector<double>>();
        if (shape.size() != 2 || shape[0] * shape[1] != static_cast<Eigen::Index>(values.size()))
            throw Error(where + ": shape does not match the number of values");
        Eigen::MatrixXd v(shape[0], shape[1]);
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < shape[0]; ++r)
            for (Eigen::Index c = 0; c < shape[1]; ++c) v(r, c) = values[k++];
        if (!param_ids.emplace(id, net.params.size()).second) throw Error("duplicate " + where);
        net.add_param(id, std::move(v), field(p, "trainable", where).get<bool>(),
                      p.value("fan_in", std::size_t{1}));
    }
    auto ref = [&](const json& j, const char* key, const std::string& where) -> std::size_t {
        const json& v = field(j, key, where);
        if (v.is_null()) return kNoParam;
        const auto it = param_ids.find(v.get<std::string>());
        if (it == param_ids.end()) throw Error(where + ": unknown parameter '" + v.get<std::string>() + "'");
        return it->second;
    };

    std::unordered_map<std::string, std::size_t> layer_ids;
    for (const auto& j : field(doc, "layers", "network")) {
        Layer layer;
        layer.id = field(j, "id", "layer").get<std::string>();
        const std::string where = "layer '" + layer.id + "'";
        for (const auto& in : field(j, "inputs", where)) {
            const auto it = layer_ids.find(in.get<std::string>());
            if (it == layer_ids.end()) throw Error(where + ": unknown input '" + in.get<std::string>() + "'");
            layer.inputs.push_back(it->second);
        }
        layer.out_dim = field(j, "out_dim", where).get<std::size_t>();
        const std::string kind = field(j, "kind", where).get<std::string>();
        if (kind == "numeric_input") {
            layer.op = NumericInputLayer{field(j, "columns", where).get<std::vector<std::string>>()};
        } else if (kind == "embedding") {
            const std::string column = field(j, "column", where).get<std::string>();
            const std::string key = field(j, "key", where).get<std::string>();
            if (key == "hash") {
                layer.op = EmbeddingLayer(column, field(j, "bits", where).get<int>(), ref(j, "table", where));
            } else if (key == "vocabulary") {
                const auto fb = field(j, "fallback", where).get<std::vector<double>>();
                layer.op = EmbeddingLayer(column, field(j, "vocabulary", where).get<std::vector<std::string>>(),
                                          ref(j, "table", where),
                                          Eigen::Map<const Eigen::RowVectorXd>(fb.data(), static_cast<Eigen::Index>(fb.size())));
            } else {
                throw Error(where + ": unknown embedding key '" + key + "'");
            }
        } else if (kind == "dense") {
            layer.op = DenseLayer{ref(j, "weight", where), ref(j, "bias", where)};
        } else if (kind == "affine") {
            layer.op = AffineLayer{ref(j, "scale", where), ref(j, "shift", where)};
        } else if (kind == "tree_ensemble") {
            TreeEnsembleLayer op;
            op.base_score = field(j, "base_score", where).get<double>();
            op.gamma1 = field(j, "gamma1", where).get<double>();
            op.gamma2 = field(j, "gamma2", where).get<double>();
            op.dropout = field(j, "dropout", where).get<double>();
            op.leaf_output = field(j, "leaf_output", where).get<bool>();
            for (const auto& t : field(j, "trees", where)) {
                TreeBlock b;
                b.internal = field(t, "internal", where).get<std::size_t>();
                b.leaves = field(t, "leaves", where).get<std::size_t>();
                b.w1 = ref(t, "W1", where);
                b.b1 = ref(t, "b1", where);
                b.w2 = ref(t, "W2", where);
                b.b2 = ref(t, "b2", where);
                b.w3 = ref(t, "w3", where);
                op.trees.push_back(b);
            }
            layer.op = std::move(op);
        } else if (kind == "concat") {
            layer.op = ConcatLayer{};
        } else if (kind == "select") {
            layer.op = SelectLayer{field(j, "indices", where).get<std::vector<std::size_t>>()};
        } else if (kind == "sigmoid" || kind == "relu") {
            layer.op = ActivationLayer{kind == "sigmoid" ? Activation::sigmoid : Activation::relu};
        } else if (kind == "dropout") {
            layer.op = DropoutLayer{field(j, "p", where).get<double>()};
        } else {
            throw Error(where + ": unknown kind '" + kind + "'");
        }
        layer_ids.emplace(layer.id, net.layers.size());
        net.add_layer(std::move(layer));
    }
    const std::string output = field(doc, "output", "network").get<std::string>();
    const auto it = layer_ids.find(output);
    if (it == layer_ids.end()) throw Error("network output '" + output + "' is not a layer");
    net.output = it->second;
    net.sink_sigmoid = doc.value("sink_sigmoid", false);
    if (doc.contains("frozen_preprocessors"))
        for (const auto& c : doc.at("frozen_preprocessors")) {
            const std::string kind = field(c, "kind", "frozen preprocessor").get<std::string>();
            net.frozen_inputs.push_back(ColumnSchema{field(c, "column", "frozen preprocessor").get<std::string>(),
                                                     kind == "categorical" ? ColumnKind::categorical
                                                                           : ColumnKind::numeric,
                                                     MissingPolicy::fill_zero});
        }
    net.check();
    return net;
}

void save_net(const std::filesystem::path& path, const NeuralGraph& net) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << serialize(net).dump(1) << '\n';
}

NeuralGraph load_net(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open network file '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("network file '" + path.string() + "': " + e.what());
    }
    return deserialize_net(doc);
}

}  // namespace pipegrad
