#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "altrade/dataset.hpp"
#include "altrade/errors.hpp"
#include "altrade/types.hpp"

namespace altrade {

struct CategoricalColumn {
    std::string name;
    // Empty means: learn categories from the file in first-seen order.
    std::vector<std::string> categories;
};

struct TabularSchema {
    std::vector<CategoricalColumn> categorical_columns;
    std::vector<std::string> numeric_columns;
    std::string target_column;
};

struct NumericScaler {
    std::string name;
    double mean = 0.0;
    double scale = 1.0;  // 0 marks a constant column (encoded as all zeros)
};

struct EncodedTable {
    PointList x;
    Eigen::VectorXd y;
    std::vector<std::string> feature_names;
    std::vector<CategoricalColumn> categories;  // resolved lists, schema order
    std::vector<NumericScaler> scalers;
    std::vector<std::size_t> source_rows;       // 1-based file line of each kept row
    std::size_t rejected_rows = 0;
    std::vector<std::string> warnings;
};

namespace csv_detail {

inline std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

// Comma-separated fields; double quotes group commas and "" escapes a quote.
inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline bool is_missing(const std::string& cell) {
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null";
}

inline bool parse_real(const std::string& cell, double& out) {
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

}  // namespace csv_detail

inline void validate(const TabularSchema& schema) {
    if (schema.target_column.empty()) throw SchemaError("schema: target column is required");
    std::vector<std::string> names;
    for (const auto& c : schema.categorical_columns) names.push_back(c.name);
    names.insert(names.end(), schema.numeric_columns.begin(), schema.numeric_columns.end());
    if (names.empty()) throw SchemaError("schema: at least one predictor column is required");
    for (const auto& n : names) {
        if (n == schema.target_column) throw SchemaError("schema: target column '" + n + "' is listed as a predictor");
    }
    auto sorted = names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw SchemaError("schema: predictor columns must be distinct");
}

/// Parses a header-first CSV, one-hot encodes categorical columns and
/// standardizes numeric ones (population moments over the kept rows).
/// Rows with a missing cell are dropped and counted.
inline EncodedTable parse_csv(std::istream& in, const TabularSchema& schema, const std::string& source = "<stream>") {
    validate(schema);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw SchemaError(source + ": empty file");
    ++line_no;
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF && static_cast<unsigned char>(line[1]) == 0xBB &&
        static_cast<unsigned char>(line[2]) == 0xBF)
        line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = csv_detail::split_line(line);
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError(source + ": header has no column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::size_t> cat_col, num_col;
    for (const auto& c : schema.categorical_columns) cat_col.push_back(column(c.name));
    for (const auto& n : schema.numeric_columns) num_col.push_back(column(n));
    const std::size_t target_col = column(schema.target_column);

    EncodedTable table;
    table.categories = schema.categorical_columns;
    std::vector<bool> learn(schema.categorical_columns.size());
    for (std::size_t c = 0; c < learn.size(); ++c) learn[c] = table.categories[c].categories.empty();
    std::vector<std::vector<std::size_t>> cat_codes;  // per kept row
    std::vector<std::vector<double>> numeric;
    std::vector<double> target;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (csv_detail::trim(line).empty()) continue;
        const auto cells = csv_detail::split_line(line);
        if (cells.size() != header.size())
            throw SchemaError(source + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                              " fields, header has " + std::to_string(header.size()));
        bool missing = csv_detail::is_missing(cells[target_col]);
        for (auto c : cat_col) missing = missing || csv_detail::is_missing(cells[c]);
        for (auto c : num_col) missing = missing || csv_detail::is_missing(cells[c]);
        if (missing) {
            ++table.rejected_rows;
            continue;
        }
        std::vector<std::size_t> codes;
        for (std::size_t c = 0; c < cat_col.size(); ++c) {
            auto& cats = table.categories[c].categories;
            const std::string& v = cells[cat_col[c]];
            auto it = std::find(cats.begin(), cats.end(), v);
            if (it == cats.end()) {
                if (!learn[c])
                    throw SchemaError(source + ": row " + std::to_string(line_no) + ": unknown category '" + v +
                                      "' in column '" + table.categories[c].name + "'");
                cats.push_back(v);
                it = cats.end() - 1;
            }
            codes.push_back(static_cast<std::size_t>(it - cats.begin()));
        }
        std::vector<double> nums;
        for (std::size_t c = 0; c < num_col.size(); ++c) {
            double v = 0.0;
            if (!csv_detail::parse_real(cells[num_col[c]], v))
                throw SchemaError(source + ": row " + std::to_string(line_no) + ": column '" + schema.numeric_columns[c] +
                                  "' is not a finite number: '" + cells[num_col[c]] + "'");
            nums.push_back(v);
        }
        double t = 0.0;
        if (!csv_detail::parse_real(cells[target_col], t))
            throw SchemaError(source + ": row " + std::to_string(line_no) + ": target is not a finite number: '" +
                              cells[target_col] + "'");
        cat_codes.push_back(std::move(codes));
        numeric.push_back(std::move(nums));
        target.push_back(t);
        table.source_rows.push_back(line_no);
    }
    if (target.empty()) throw SchemaError(source + ": no complete data rows");

    // Category lists are deduplicated by construction; reject duplicate schema entries.
    for (const auto& c : table.categories) {
        auto s = c.categories;
        std::sort(s.begin(), s.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end())
            throw SchemaError("schema: column '" + c.name + "' lists a category twice");
    }

    const std::size_t rows = target.size();
    std::size_t width = num_col.size();
    for (const auto& c : table.categories) width += c.categories.size();
    table.x = PointList::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
    table.y = Eigen::Map<Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(rows));

    Eigen::Index offset = 0;
    for (std::size_t c = 0; c < table.categories.size(); ++c) {
        for (const auto& cat : table.categories[c].categories) table.feature_names.push_back(table.categories[c].name + "=" + cat);
        for (std::size_t r = 0; r < rows; ++r)
            table.x(static_cast<Eigen::Index>(r), offset + static_cast<Eigen::Index>(cat_codes[r][c])) = 1.0;
        offset += static_cast<Eigen::Index>(table.categories[c].categories.size());
    }
    for (std::size_t c = 0; c < num_col.size(); ++c) {
        NumericScaler s;
        s.name = schema.numeric_columns[c];
        double sum = 0.0;
        for (std::size_t r = 0; r < rows; ++r) sum += numeric[r][c];
        s.mean = sum / static_cast<double>(rows);
        double ss = 0.0;
        for (std::size_t r = 0; r < rows; ++r) ss += (numeric[r][c] - s.mean) * (numeric[r][c] - s.mean);
        const double sd = std::sqrt(ss / static_cast<double>(rows));
        s.scale = sd > 0.0 ? sd : 0.0;
        if (s.scale == 0.0) table.warnings.push_back("column '" + s.name + "' is constant; encoded as zeros");
        for (std::size_t r = 0; r < rows; ++r)
            table.x(static_cast<Eigen::Index>(r), offset) = s.scale > 0.0 ? (numeric[r][c] - s.mean) / s.scale : 0.0;
        table.feature_names.push_back(s.name);
        table.scalers.push_back(s);
        ++offset;
    }
    if (table.rejected_rows > 0)
        table.warnings.push_back(std::to_string(table.rejected_rows) + " row(s) with missing values were skipped");
    return table;
}

inline EncodedTable load_csv(const std::string& path, const TabularSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parse_csv(in, schema, path);
}

/// Recovers the category of every categorical column for every row.
inline std::vector<std::vector<std::string>> decode_categories(const EncodedTable& table) {
    std::vector<std::vector<std::string>> out(static_cast<std::size_t>(table.x.rows()));
    for (Eigen::Index r = 0; r < table.x.rows(); ++r) {
        Eigen::Index offset = 0;
        for (const auto& c : table.categories) {
            const auto width = static_cast<Eigen::Index>(c.categories.size());
            Eigen::Index hot = 0;
            table.x.row(r).segment(offset, width).maxCoeff(&hot);
            out[static_cast<std::size_t>(r)].push_back(c.categories[static_cast<std::size_t>(hot)]);
            offset += width;
        }
    }
    return out;
}

/// Recovers raw numeric values from their standardized encoding.
inline Eigen::MatrixXd decode_numeric(const EncodedTable& table) {
    Eigen::Index offset = 0;
    for (const auto& c : table.categories) offset += static_cast<Eigen::Index>(c.categories.size());
    Eigen::MatrixXd out(table.x.rows(), static_cast<Eigen::Index>(table.scalers.size()));
    for (std::size_t c = 0; c < table.scalers.size(); ++c) {
        const auto& s = table.scalers[c];
        out.col(static_cast<Eigen::Index>(c)) =
            (table.x.col(offset + static_cast<Eigen::Index>(c)).array() * s.scale + s.mean).matrix();
    }
    return out;
}

/// Labels `n_initial` random rows; the rest form the unlabeled pool.
inline Dataset split_pool(const EncodedTable& table, std::size_t n_initial, Rng& rng) {
    const auto rows = static_cast<std::size_t>(table.x.rows());
    if (n_initial < 1 || n_initial >= rows)
        throw InputError("split_pool: n_initial must lie in [1, " + std::to_string(rows - 1) + "], got " +
                         std::to_string(n_initial));
    Dataset d = make_pool_dataset(table.x);
    const auto positions = draw_pool_positions(rows, n_initial, rng);
    for (std::size_t p : positions) d.label_candidate(p, table.y(static_cast<Eigen::Index>(p)));
    return d;
}

}  // namespace altrade
