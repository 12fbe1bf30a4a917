#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "pipegrad/data.hpp"

namespace pipegrad {

struct LdaConfig {
    int topics = 4;
    double alpha = 0.1;
    double beta = 0.01;
    int iterations = 200;
    std::uint64_t seed = 0;
};

// Per-category topic distributions. Categories outside the vocabulary map to
// the uniform distribution.
class LdaModel {
public:
    LdaModel() = default;
    LdaModel(std::vector<std::string> vocabulary, Eigen::MatrixXd doc_topic);

    const std::vector<std::string>& vocabulary() const { return vocabulary_; }
    const Eigen::MatrixXd& doc_topic() const { return doc_topic_; }
    int topics() const { return static_cast<int>(doc_topic_.cols()); }
    std::optional<std::size_t> index_of(std::string_view value) const;
    std::vector<double> lookup(std::string_view value) const;

private:
    std::vector<std::string> vocabulary_;
    std::unordered_map<std::string, std::size_t> index_;
    Eigen::MatrixXd doc_topic_;
};

// Collapsed Gibbs sampling over documents of word ids in [0, vocab_size).
// Row d of the result is (n_dk + alpha) / (len_d + K alpha), averaged over the
// final 10% of sweeps; empty documents get the uniform row.
Eigen::MatrixXd fit_lda_gibbs(const std::vector<std::vector<int>>& docs, int vocab_size, const LdaConfig& cfg);

// Tabular LDA: each distinct value of `key_column` is a document whose tokens
// are the co-occurring values of `companion_columns` (prefixed by column name).
LdaModel fit_lda_for_column(const Dataset& ds, const std::string& key_column,
                            const std::vector<std::string>& companion_columns, const LdaConfig& cfg);

}  // namespace pipegrad
