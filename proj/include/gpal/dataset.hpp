#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpal/util.hpp"

namespace gpal {

using FeatureMatrix = Eigen::MatrixXd;  // one sample per row
using LabelVector = Eigen::VectorXd;

/// Disjoint bookkeeping of labeled and unlabeled pool indices.
/// `labeled` keeps labeling order; `unlabeled` iterates ascending.
struct IndexSets {
    std::vector<int> labeled;
    std::set<int> unlabeled;

    void move_to_labeled(int idx) {
        auto it = unlabeled.find(idx);
        if (it == unlabeled.end())
            throw std::invalid_argument("move_to_labeled: index " + std::to_string(idx) +
                                        " is not unlabeled");
        unlabeled.erase(it);
        labeled.push_back(idx);
    }
};

struct CsvData {
    FeatureMatrix features;
    std::optional<LabelVector> labels;
    std::vector<std::string> feature_names;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace detail

/// Load a CSV with one header line. All columns must be numeric; if
/// label_column is given, that column becomes the label vector and the
/// remaining columns, in file order, the features.
inline CsvData load_csv(const std::string& path,
                        const std::optional<std::string>& label_column = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
    const auto header = detail::split_csv_line(detail::strip_cr(line));
    if (header.empty()) throw std::runtime_error("empty header in " + path);

    int label_col = -1;
    if (label_column) {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == *label_column) label_col = static_cast<int>(c);
        if (label_col < 0)
            throw std::runtime_error("label column '" + *label_column + "' not found in " + path);
        if (header.size() < 2)
            throw std::runtime_error("no feature columns left after label column in " + path);
    }

    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error(path + ": row " + std::to_string(lineno - 1) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        std::vector<double> row;
        row.reserve(header.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v;
            try {
                v = parse_double(cells[c]);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ": non-numeric cell at row " +
                                         std::to_string(lineno - 1) + ", column \"" + header[c] +
                                         "\"");
            }
            if (!std::isfinite(v))
                throw std::runtime_error(path + ": non-finite value at row " +
                                         std::to_string(lineno - 1) + ", column \"" + header[c] +
                                         "\"");
            if (static_cast<int>(c) == label_col)
                labels.push_back(v);
            else
                row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("no data rows in " + path);

    CsvData out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            out.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    if (label_col >= 0) {
        out.labels = Eigen::Map<LabelVector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
    }
    for (std::size_t c = 0; c < header.size(); ++c)
        if (static_cast<int>(c) != label_col) out.feature_names.push_back(header[c]);
    return out;
}

/// Draw init_set_size distinct indices uniformly without replacement.
/// Pure function of (n, init_set_size, rng state); draw order is kept.
inline IndexSets draw_initial_set(int n, int init_set_size, std::mt19937_64& rng) {
    if (init_set_size < 1 || init_set_size >= n)
        throw std::invalid_argument("init_set_size must satisfy 1 <= init_set_size < n (got " +
                                    std::to_string(init_set_size) + ", n=" + std::to_string(n) +
                                    ")");
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;

    IndexSets sets;
    // partial Fisher-Yates
    for (int i = 0; i < init_set_size; ++i) {
        const auto j = i + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        sets.labeled.push_back(pool[static_cast<std::size_t>(i)]);
    }
    for (int i = init_set_size; i < n; ++i) sets.unlabeled.insert(pool[static_cast<std::size_t>(i)]);
    return sets;
}

}  // namespace gpal
