#include "pipegrad/lda.hpp"

#include <algorithm>
#include <cmath>

#include "pipegrad/encoders.hpp"
#include "pipegrad/error.hpp"
#include "pipegrad/random.hpp"

namespace pipegrad {

LdaModel::LdaModel(std::vector<std::string> vocabulary, Eigen::MatrixXd doc_topic)
    : vocabulary_(std::move(vocabulary)), doc_topic_(std::move(doc_topic)) {
    if (static_cast<Eigen::Index>(vocabulary_.size()) != doc_topic_.rows())
        throw Error("lda: vocabulary size does not match doc-topic rows");
    for (std::size_t i = 0; i < vocabulary_.size(); ++i)
        if (!index_.emplace(vocabulary_[i], i).second) throw Error("lda: duplicate category '" + vocabulary_[i] + "'");
}

std::optional<std::size_t> LdaModel::index_of(std::string_view value) const {
    auto it = index_.find(std::string(value));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<double> LdaModel::lookup(std::string_view value) const {
    const auto k = static_cast<std::size_t>(doc_topic_.cols());
    if (auto idx = index_of(value)) {
        std::vector<double> out(k);
        for (std::size_t j = 0; j < k; ++j)
            out[j] = doc_topic_(static_cast<Eigen::Index>(*idx), static_cast<Eigen::Index>(j));
        return out;
    }
    return std::vector<double>(k, 1.0 / static_cast<double>(k));
}

Eigen::MatrixXd fit_lda_gibbs(const std::vector<std::vector<int>>& docs, int vocab_size, const LdaConfig& cfg) {
    const int K = cfg.topics;
    if (K < 2) throw Error("fit_lda_gibbs: need at least 2 topics");
    if (docs.empty()) throw Error("fit_lda_gibbs: no documents");
    if (cfg.iterations < 1) throw Error("fit_lda_gibbs: iterations must be >= 1");
    const auto D = static_cast<Eigen::Index>(docs.size());

    Rng rng(cfg.seed);
    std::vector<std::vector<int>> z(docs.size());
    Eigen::MatrixXi n_dk = Eigen::MatrixXi::Zero(D, K);
    Eigen::MatrixXi n_kw = Eigen::MatrixXi::Zero(K, vocab_size);
    Eigen::VectorXi n_k = Eigen::VectorXi::Zero(K);
    for (std::size_t d = 0; d < docs.size(); ++d) {
        z[d].resize(docs[d].size());
        for (std::size_t i = 0; i < docs[d].size(); ++i) {
            const int w = docs[d][i];
            if (w < 0 || w >= vocab_size) throw Error("fit_lda_gibbs: word id out of range");
            const int k = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(K)));
            z[d][i] = k;
            ++n_dk(static_cast<Eigen::Index>(d), k);
            ++n_kw(k, w);
            ++n_k[k];
        }
    }

    const double v_beta = static_cast<double>(vocab_size) * cfg.beta;
    const int averaged = std::max(1, cfg.iterations / 10);
    Eigen::MatrixXd accum = Eigen::MatrixXd::Zero(D, K);
    std::vector<double> cdf(static_cast<std::size_t>(K));
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        for (std::size_t d = 0; d < docs.size(); ++d) {
            const auto di = static_cast<Eigen::Index>(d);
            for (std::size_t i = 0; i < docs[d].size(); ++i) {
                const int w = docs[d][i];
                const int old = z[d][i];
                --n_dk(di, old);
                --n_kw(old, w);
                --n_k[old];
                double total = 0.0;
                for (int k = 0; k < K; ++k) {
                    total += (n_dk(di, k) + cfg.alpha) * (n_kw(k, w) + cfg.beta) / (n_k[k] + v_beta);
                    cdf[static_cast<std::size_t>(k)] = total;
                }
                const double u = uniform01(rng) * total;
                int k_new = 0;
                while (k_new < K - 1 && cdf[static_cast<std::size_t>(k_new)] <= u) ++k_new;
                z[d][i] = k_new;
                ++n_dk(di, k_new);
                ++n_kw(k_new, w);
                ++n_k[k_new];
            }
        }
        if (iter >= cfg.iterations - averaged) {
            for (Eigen::Index d = 0; d < D; ++d) {
                const double len = static_cast<double>(docs[static_cast<std::size_t>(d)].size());
                for (int k = 0; k < K; ++k) accum(d, k) += (n_dk(d, k) + cfg.alpha) / (len + K * cfg.alpha);
            }
        }
    }
    Eigen::MatrixXd theta = accum / static_cast<double>(averaged);
    for (Eigen::Index d = 0; d < D; ++d) {
        if (docs[static_cast<std::size_t>(d)].empty()) {
            theta.row(d).setConstant(1.0 / K);
        } else {
            theta.row(d) /= theta.row(d).sum();
        }
    }
    return theta;
}

LdaModel fit_lda_for_column(const Dataset& ds, const std::string& key_column,
                            const std::vector<std::string>& companion_columns, const LdaConfig& cfg) {
    if (companion_columns.empty()) throw Error("lda for '" + key_column + "': no companion columns");
    const auto& keys = ds.categorical(key_column);
    const OneHotVocab docs_vocab = fit_onehot(keys);

    std::unordered_map<std::string, int> word_ids;
    std::vector<std::vector<int>> docs(docs_vocab.cardinality());
    std::vector<const std::vector<std::string>*> companions;
    for (const auto& c : companion_columns) companions.push_back(&ds.categorical(c));
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        const std::size_t d = *docs_vocab.index_of(keys[r]);
        for (std::size_t c = 0; c < companions.size(); ++c) {
            const std::string token = companion_columns[c] + "=" + (*companions[c])[r];
            auto [it, inserted] = word_ids.emplace(token, static_cast<int>(word_ids.size()));
            docs[d].push_back(it->second);
        }
    }
    Eigen::MatrixXd theta = fit_lda_gibbs(docs, static_cast<int>(std::max<std::size_t>(1, word_ids.size())), cfg);
    return LdaModel(docs_vocab.categories(), std::move(theta));
}

}  // namespace pipegrad
