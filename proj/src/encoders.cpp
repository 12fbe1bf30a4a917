#include "pipegrad/encoders.hpp"

#include "pipegrad/data.hpp"
#include "pipegrad/error.hpp"

namespace pipegrad {

OneHotVocab::OneHotVocab(std::vector<std::string> categories) : categories_(std::move(categories)) {
    for (std::size_t i = 0; i < categories_.size(); ++i) {
        if (!index_.emplace(categories_[i], i).second)
            throw Error("duplicate category '" + categories_[i] + "' in vocabulary");
    }
}

std::optional<std::size_t> OneHotVocab::index_of(std::string_view value) const {
    auto it = index_.find(std::string(value));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<double> OneHotVocab::encode(std::string_view value) const {
    std::vector<double> out(categories_.size(), 0.0);
    if (auto idx = index_of(value)) out[*idx] = 1.0;
    return out;
}

OneHotVocab fit_onehot(std::span<const std::string> column) {
    std::vector<std::string> cats;
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& v : column) {
        if (seen.emplace(v, cats.size()).second) cats.push_back(v);
    }
    return OneHotVocab(std::move(cats));
}

std::vector<double> hash_encode(std::string_view value, int bits) {
    std::vector<double> out(std::size_t{1} << bits, 0.0);
    out[hash_category(value, bits)] = 1.0;
    return out;
}

}  // namespace pipegrad
