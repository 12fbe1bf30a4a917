#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pipegrad {

// Category -> index in first-appearance order. Unseen values encode to zeros.
class OneHotVocab {
public:
    OneHotVocab() = default;
    explicit OneHotVocab(std::vector<std::string> categories);

    std::size_t cardinality() const { return categories_.size(); }
    const std::vector<std::string>& categories() const { return categories_; }
    std::optional<std::size_t> index_of(std::string_view value) const;
    std::vector<double> encode(std::string_view value) const;

private:
    std::vector<std::string> categories_;
    std::unordered_map<std::string, std::size_t> index_;
};

OneHotVocab fit_onehot(std::span<const std::string> column);

// Hash-encoder width is 2^bits; encode sets slot hash_category(value, bits).
std::vector<double> hash_encode(std::string_view value, int bits);

}  // namespace pipegrad
