#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

namespace pipegrad {

enum class ColumnKind { numeric, categorical };
enum class MissingPolicy { fill_zero, fill_mean };

inline constexpr std::string_view kMissingToken = "__MISSING__";

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    MissingPolicy missing_policy = MissingPolicy::fill_zero;
};

// Columnar tabular data. columns_[i] belongs to schema[i]; only the member
// matching the column kind is populated.
class Dataset {
public:
    struct Column {
        std::vector<double> numeric;
        std::vector<std::string> categorical;
    };

    Dataset() = default;
    explicit Dataset(std::vector<ColumnSchema> schema);

    const std::vector<ColumnSchema>& schema() const { return schema_; }
    std::size_t rows() const { return labels_.size(); }
    std::size_t num_columns() const { return schema_.size(); }

    // Throws if the name is unknown.
    std::size_t column_index(std::string_view name) const;
    bool has_column(std::string_view name) const;

    const std::vector<double>& numeric(std::size_t col) const;
    const std::vector<double>& numeric(std::string_view name) const { return numeric(column_index(name)); }
    const std::vector<std::string>& categorical(std::size_t col) const;
    const std::vector<std::string>& categorical(std::string_view name) const {
        return categorical(column_index(name));
    }
    const std::vector<int>& labels() const { return labels_; }

    std::vector<std::string> numeric_names() const;
    std::vector<std::string> categorical_names() const;

    // Row-wise append; values are given in schema order, categorical cells as strings.
    void append_row(std::span<const double> numeric_cells, std::span<const std::string> categorical_cells, int label);

    std::vector<double>& mutable_numeric(std::size_t col);
    std::vector<std::string>& mutable_categorical(std::size_t col);
    std::vector<int>& mutable_labels() { return labels_; }

    Dataset subset(std::span<const std::size_t> rows) const;

    // Throws unless every column has rows() entries and no numeric value is NaN.
    void check_invariants() const;

private:
    std::vector<ColumnSchema> schema_;
    std::vector<Column> columns_;
    std::vector<int> labels_;
};

struct SplitSpec {
    double train_fraction = 0.8;
    double valid_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;
};

Dataset load_csv(const std::filesystem::path& path, const std::vector<ColumnSchema>& schema,
                 const std::string& label_column);
void write_csv(const std::filesystem::path& path, const Dataset& ds, const std::string& label_column);

std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

// FNV-1a 64-bit of the bytes of `value`, masked to the low `bits` bits.
std::uint32_t hash_category(std::string_view value, int bits);
std::uint64_t fnv1a64(std::string_view value);

struct Standardizer {
    double mean = 0.0;
    double scale = 1.0;
};
// Population standard deviation; scale falls back to 1 below 1e-12.
Standardizer fit_standardizer(std::span<const double> column);

// Schema sidecar: {"label": "...", "columns": {"name": {"kind": ..., "missing": ...}, ...}}
struct SchemaFile {
    std::vector<ColumnSchema> columns;
    std::string label_column;
};
SchemaFile read_schema(const std::filesystem::path& path);
void write_schema(const std::filesystem::path& path, const SchemaFile& schema);
nlohmann::ordered_json schema_to_json(const SchemaFile& schema);
SchemaFile schema_from_json(const nlohmann::ordered_json& doc);

std::string to_string(ColumnKind kind);
std::string to_string(MissingPolicy policy);

}  // namespace pipegrad
