#include "pipegrad/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "pipegrad/error.hpp"
#include "pipegrad/random.hpp"

namespace pipegrad {

namespace {

// Splits one CSV record. Handles quoted fields with embedded commas, doubled
// quotes and newlines. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Dataset::Dataset(std::vector<ColumnSchema> schema) : schema_(std::move(schema)), columns_(schema_.size()) {
    std::unordered_set<std::string> seen;
    for (const auto& c : schema_) {
        if (!seen.insert(c.name).second) throw Error("duplicate column name '" + c.name + "' in schema");
    }
}

std::size_t Dataset::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < schema_.size(); ++i) {
        if (schema_[i].name == name) return i;
    }
    throw Error("unknown column '" + std::string(name) + "'");
}

bool Dataset::has_column(std::string_view name) const {
    return std::any_of(schema_.begin(), schema_.end(), [&](const ColumnSchema& c) { return c.name == name; });
}

const std::vector<double>& Dataset::numeric(std::size_t col) const {
    if (schema_.at(col).kind != ColumnKind::numeric) throw Error("column '" + schema_[col].name + "' is not numeric");
    return columns_[col].numeric;
}

const std::vector<std::string>& Dataset::categorical(std::size_t col) const {
    if (schema_.at(col).kind != ColumnKind::categorical)
        throw Error("column '" + schema_[col].name + "' is not categorical");
    return columns_[col].categorical;
}

std::vector<double>& Dataset::mutable_numeric(std::size_t col) {
    if (schema_.at(col).kind != ColumnKind::numeric) throw Error("column '" + schema_[col].name + "' is not numeric");
    return columns_[col].numeric;
}

std::vector<std::string>& Dataset::mutable_categorical(std::size_t col) {
    if (schema_.at(col).kind != ColumnKind::categorical)
        throw Error("column '" + schema_[col].name + "' is not categorical");
    return columns_[col].categorical;
}

std::vector<std::string> Dataset::numeric_names() const {
    std::vector<std::string> out;
    for (const auto& c : schema_)
        if (c.kind == ColumnKind::numeric) out.push_back(c.name);
    return out;
}

std::vector<std::string> Dataset::categorical_names() const {
    std::vector<std::string> out;
    for (const auto& c : schema_)
        if (c.kind == ColumnKind::categorical) out.push_back(c.name);
    return out;
}

void Dataset::append_row(std::span<const double> numeric_cells, std::span<const std::string> categorical_cells,
                         int label) {
    std::size_t ni = 0, ci = 0;
    for (std::size_t i = 0; i < schema_.size(); ++i) {
        if (schema_[i].kind == ColumnKind::numeric) {
            if (ni >= numeric_cells.size()) throw Error("append_row: too few numeric cells");
            columns_[i].numeric.push_back(numeric_cells[ni++]);
        } else {
            if (ci >= categorical_cells.size()) throw Error("append_row: too few categorical cells");
            columns_[i].categorical.push_back(categorical_cells[ci++]);
        }
    }
    if (ni != numeric_cells.size() || ci != categorical_cells.size()) throw Error("append_row: too many cells");
    labels_.push_back(label);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out(schema_);
    for (std::size_t i = 0; i < schema_.size(); ++i) {
        if (schema_[i].kind == ColumnKind::numeric) {
            auto& dst = out.columns_[i].numeric;
            dst.reserve(rows.size());
            for (std::size_t r : rows) dst.push_back(columns_[i].numeric.at(r));
        } else {
            auto& dst = out.columns_[i].categorical;
            dst.reserve(rows.size());
            for (std::size_t r : rows) dst.push_back(columns_[i].categorical.at(r));
        }
    }
    out.labels_.reserve(rows.size());
    for (std::size_t r : rows) out.labels_.push_back(labels_.at(r));
    return out;
}

void Dataset::check_invariants() const {
    const std::size_t n = labels_.size();
    for (std::size_t i = 0; i < schema_.size(); ++i) {
        const std::size_t len = schema_[i].kind == ColumnKind::numeric ? columns_[i].numeric.size()
                                                                       : columns_[i].categorical.size();
        if (len != n) throw Error("column '" + schema_[i].name + "' has " + std::to_string(len) + " values, expected " +
                                  std::to_string(n));
        if (schema_[i].kind == ColumnKind::numeric) {
            for (double v : columns_[i].numeric)
                if (std::isnan(v)) throw Error("column '" + schema_[i].name + "' contains NaN");
        }
    }
    for (int y : labels_)
        if (y != 0 && y != 1) throw Error("invalid label " + std::to_string(y));
}

Dataset load_csv(const std::filesystem::path& path, const std::vector<ColumnSchema>& schema,
                 const std::string& label_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open CSV file '" + path.string() + "'");

    std::vector<std::string> header;
    if (!read_record(in, header)) throw Error("CSV file '" + path.string() + "' has no header row");
    if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) position.emplace(header[i], i);

    std::vector<std::size_t> source(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        auto it = position.find(schema[i].name);
        if (it == position.end())
            throw Error("unknown column '" + schema[i].name + "' in schema: not present in '" + path.string() + "'");
        source[i] = it->second;
    }
    auto label_it = position.find(label_column);
    if (label_it == position.end()) throw Error("label column '" + label_column + "' not present in CSV header");
    const std::size_t label_pos = label_it->second;

    Dataset ds(schema);
    std::vector<std::vector<char>> missing(schema.size());
    std::vector<std::string> fields;
    std::size_t row = 0;
    while (read_record(in, fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
        ++row;
        if (fields.size() != header.size())
            throw Error("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
        for (std::size_t i = 0; i < schema.size(); ++i) {
            const std::string& cell = fields[source[i]];
            if (schema[i].kind == ColumnKind::numeric) {
                double v = 0.0;
                const bool blank = cell.find_first_not_of(" \t") == std::string::npos;
                if (blank) {
                    missing[i].push_back(1);
                } else if (!parse_double(cell, v)) {
                    throw Error("row " + std::to_string(row) + ", column '" + schema[i].name +
                                "': cannot parse '" + cell + "' as a number");
                } else {
                    missing[i].push_back(std::isnan(v) ? 1 : 0);
                }
                ds.mutable_numeric(i).push_back(std::isnan(v) ? 0.0 : v);
            } else {
                ds.mutable_categorical(i).push_back(cell.empty() ? std::string(kMissingToken) : cell);
            }
        }
        double label = 0.0;
        if (!parse_double(fields[label_pos], label) || (label != 0.0 && label != 1.0))
            throw Error("invalid label '" + fields[label_pos] + "' at row " + std::to_string(row));
        ds.mutable_labels().push_back(label == 1.0 ? 1 : 0);
    }

    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].kind != ColumnKind::numeric || schema[i].missing_policy != MissingPolicy::fill_mean) continue;
        auto& col = ds.mutable_numeric(i);
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < col.size(); ++r) {
            if (!missing[i][r]) {
                sum += col[r];
                ++count;
            }
        }
        const double mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
        for (std::size_t r = 0; r < col.size(); ++r)
            if (missing[i][r]) col[r] = mean;
    }
    ds.check_invariants();
    return ds;
}

void write_csv(const std::filesystem::path& path, const Dataset& ds, const std::string& label_column) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write CSV file '" + path.string() + "'");
    const auto& schema = ds.schema();
    for (const auto& c : schema) out << quote_if_needed(c.name) << ',';
    out << quote_if_needed(label_column) << '\n';
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        for (std::size_t i = 0; i < schema.size(); ++i) {
            if (schema[i].kind == ColumnKind::numeric)
                out << format_double(ds.numeric(i)[r]);
            else
                out << quote_if_needed(ds.categorical(i)[r]);
            out << ',';
        }
        out << ds.labels()[r] << '\n';
    }
}

std::tuple<Dataset, Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    const double total = spec.train_fraction + spec.valid_fraction + spec.test_fraction;
    if (std::abs(total - 1.0) > 1e-9) throw Error("fractions must sum to 1");
    for (double f : {spec.train_fraction, spec.valid_fraction, spec.test_fraction})
        if (!(f > 0.0 && f < 1.0)) throw Error("split fractions must lie in (0,1)");
    const std::size_t n = ds.rows();
    if (n < 3) throw Error("split requires at least 3 rows");

    const auto n_valid = static_cast<std::size_t>(std::floor(spec.valid_fraction * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::floor(spec.test_fraction * static_cast<double>(n)));
    const auto n_train_floor = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n)));
    const std::size_t n_train = n - n_valid - n_test;
    if (n_valid == 0 || n_test == 0 || n_train_floor == 0) throw Error("split would leave an empty partition");

    Rng rng(spec.seed);
    const auto perm = permutation(n, rng);
    std::span<const std::size_t> all(perm);
    return {ds.subset(all.subspan(0, n_train)), ds.subset(all.subspan(n_train, n_valid)),
            ds.subset(all.subspan(n_train + n_valid, n_test))};
}

std::uint64_t fnv1a64(std::string_view value) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : value) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint32_t hash_category(std::string_view value, int bits) {
    if (bits < 1 || bits > 30) throw Error("hash bits must be in [1,30], got " + std::to_string(bits));
    return static_cast<std::uint32_t>(fnv1a64(value) & ((std::uint64_t{1} << bits) - 1));
}

Standardizer fit_standardizer(std::span<const double> column) {
    if (column.empty()) throw Error("fit_standardizer: empty column");
    double sum = 0.0;
    for (double v : column) sum += v;
    const double mean = sum / static_cast<double>(column.size());
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(column.size()));
    return {mean, sd < 1e-12 ? 1.0 : sd};
}

std::string to_string(ColumnKind kind) { return kind == ColumnKind::numeric ? "numeric" : "categorical"; }

std::string to_string(MissingPolicy policy) {
    return policy == MissingPolicy::fill_zero ? "fill_zero" : "fill_mean";
}

nlohmann::ordered_json schema_to_json(const SchemaFile& schema) {
    nlohmann::ordered_json doc;
    doc["label"] = schema.label_column;
    nlohmann::ordered_json cols = nlohmann::ordered_json::object();
    for (const auto& c : schema.columns) cols[c.name] = {{"kind", to_string(c.kind)}, {"missing", to_string(c.missing_policy)}};
    doc["columns"] = std::move(cols);
    return doc;
}

SchemaFile schema_from_json(const nlohmann::ordered_json& doc) {
    SchemaFile out;
    if (!doc.contains("label") || !doc["label"].is_string()) throw ConfigError("schema: missing string field 'label'");
    out.label_column = doc["label"].get<std::string>();
    if (!doc.contains("columns") || !doc["columns"].is_object())
        throw ConfigError("schema: missing object field 'columns'");
    for (const auto& [name, spec] : doc["columns"].items()) {
        ColumnSchema c;
        c.name = name;
        const std::string kind = spec.value("kind", "numeric");
        if (kind == "numeric")
            c.kind = ColumnKind::numeric;
        else if (kind == "categorical")
            c.kind = ColumnKind::categorical;
        else
            throw ConfigError("schema: column '" + name + "' has unknown kind '" + kind + "'");
        const std::string policy = spec.value("missing", "fill_zero");
        if (policy == "fill_zero")
            c.missing_policy = MissingPolicy::fill_zero;
        else if (policy == "fill_mean")
            c.missing_policy = MissingPolicy::fill_mean;
        else
            throw ConfigError("schema: column '" + name + "' has unknown missing policy '" + policy + "'");
        out.columns.push_back(std::move(c));
    }
    return out;
}

SchemaFile read_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schema file '" + path.string() + "'");
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("schema file '" + path.string() + "': " + e.what());
    }
    return schema_from_json(doc);
}

void write_schema(const std::filesystem::path& path, const SchemaFile& schema) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write schema file '" + path.string() + "'");
    out << schema_to_json(schema).dump(2) << '\n';
}

}  // namespace pipegrad
