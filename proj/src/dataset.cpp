#include "fkd/dataset.hpp"

#include "fkd/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

namespace fkd {

namespace {

// RFC-4180 state machine: quoted fields may contain commas, doubled quotes,
// and line breaks. Accepts both LF and CRLF endings and a missing final
// newline.
std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& path) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    std::size_t line = 1;

    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        field_was_quoted = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(row);
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field.empty() && !field_was_quoted) {
                    in_quotes = true;
                    field_was_quoted = true;
                } else {
                    throw IoError(path + ": stray quote in unquoted field at line " +
                                  std::to_string(line));
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_row();
                ++line;
                break;
            default:
                field.push_back(c);
        }
    }
    if (in_quotes) throw IoError(path + ": unterminated quoted field");
    if (!field.empty() || field_was_quoted || !row.empty()) end_row();
    return rows;
}

std::string trimmed(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& raw, std::size_t row, const std::string& column,
                    const std::string& path) {
    const std::string s = trimmed(raw);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw IoError(path + ": cannot parse '" + raw + "' as a number (row " +
                      std::to_string(row) + ", column '" + column + "')");
    }
    return value;
}

std::size_t column_index(const std::vector<std::string>& names, const std::string& wanted,
                         const std::string& path) {
    const auto it = std::find(names.begin(), names.end(), wanted);
    if (it == names.end()) {
        throw ValidationError(path + ": column '" + wanted + "' not found");
    }
    return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

std::vector<Eigen::Index> FoldPlan::test_indices(int fold) const {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] == fold) out.push_back(static_cast<Eigen::Index>(i));
    }
    return out;
}

std::vector<Eigen::Index> FoldPlan::train_indices(int fold) const {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] != fold) out.push_back(static_cast<Eigen::Index>(i));
    }
    return out;
}

TabularDataset load_csv(const DatasetSpec& spec) {
    if (spec.protected_columns.empty()) {
        throw ValidationError("dataset spec needs at least one protected column");
    }
    for (const std::string& name : spec.protected_columns) {
        if (name == spec.target_column) {
            throw ValidationError("column '" + name + "' cannot be both target and protected");
        }
    }

    std::ifstream file(spec.path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + spec.path + "'");
    std::stringstream buffer;
    buffer << file.rdbuf();
    const std::vector<std::vector<std::string>> rows = parse_csv(buffer.str(), spec.path);
    if (rows.empty()) throw IoError(spec.path + ": file contains no rows");

    std::vector<std::string> names;
    std::size_t first_data_row = 0;
    if (spec.has_header) {
        names = rows.front();
        first_data_row = 1;
    } else {
        names.resize(rows.front().size());
        for (std::size_t i = 0; i < names.size(); ++i) names[i] = std::to_string(i);
    }
    const std::size_t width = names.size();
    for (std::size_t r = first_data_row; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            throw IoError(spec.path + ": row " + std::to_string(r + 1) + " has " +
                          std::to_string(rows[r].size()) + " fields, expected " +
                          std::to_string(width));
        }
    }

    const std::size_t target_idx = column_index(names, spec.target_column, spec.path);
    std::vector<std::size_t> protected_idx;
    for (const std::string& name : spec.protected_columns) {
        protected_idx.push_back(column_index(names, name, spec.path));
    }

    std::vector<std::size_t> feature_idx;
    if (spec.feature_columns.empty()) {
        for (std::size_t c = 0; c < width; ++c) {
            if (c == target_idx) continue;
            const bool is_protected =
                std::find(protected_idx.begin(), protected_idx.end(), c) != protected_idx.end();
            if (is_protected && !spec.include_protected) continue;
            feature_idx.push_back(c);
        }
    } else {
        for (const std::string& name : spec.feature_columns) {
            const std::size_t c = column_index(names, name, spec.path);
            if (c == target_idx) {
                throw ValidationError(spec.path + ": target column '" + name +
                                      "' cannot be a feature");
            }
            feature_idx.push_back(c);
        }
    }
    if (feature_idx.empty()) throw ValidationError(spec.path + ": no feature columns remain");

    // First pass: keep rows whose target and protected cells are present.
    std::vector<std::size_t> kept;
    for (std::size_t r = first_data_row; r < rows.size(); ++r) {
        bool usable = trimmed(rows[r][target_idx]) != spec.missing_marker;
        for (const std::size_t c : protected_idx) {
            usable = usable && trimmed(rows[r][c]) != spec.missing_marker;
        }
        if (usable) kept.push_back(r);
    }
    TabularDataset out{Eigen::MatrixXd(),
                       Eigen::VectorXd(),
                       ProtectedAttributes(Eigen::MatrixXd::Zero(1, 1)),
                       {},
                       spec.protected_columns,
                       spec.target_column,
                       {},
                       {}};
    const std::size_t dropped = rows.size() - first_data_row - kept.size();
    if (dropped > 0) {
        out.warnings.push_back(std::to_string(dropped) +
                               " rows dropped due to missing target or protected values");
    }
    if (kept.empty()) throw IoError(spec.path + ": no usable rows after filtering");

    const Eigen::Index n = static_cast<Eigen::Index>(kept.size());
    out.y.resize(n);
    Eigen::MatrixXd p(n, static_cast<Eigen::Index>(protected_idx.size()));
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(feature_idx.size()));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t r = kept[static_cast<std::size_t>(i)];
        out.y[i] = parse_number(rows[r][target_idx], r + 1, names[target_idx], spec.path);
        for (std::size_t c = 0; c < protected_idx.size(); ++c) {
            p(i, static_cast<Eigen::Index>(c)) =
                parse_number(rows[r][protected_idx[c]], r + 1, names[protected_idx[c]], spec.path);
        }
        for (std::size_t c = 0; c < feature_idx.size(); ++c) {
            const std::string cell = trimmed(rows[r][feature_idx[c]]);
            x(i, static_cast<Eigen::Index>(c)) =
                cell == spec.missing_marker
                    ? nan
                    : parse_number(rows[r][feature_idx[c]], r + 1, names[feature_idx[c]],
                                   spec.path);
        }
    }

    // Mean imputation, then drop columns that end up constant.
    std::vector<Eigen::Index> retained;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        double sum = 0.0;
        Eigen::Index present = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!std::isnan(x(i, c))) {
                sum += x(i, c);
                ++present;
            }
        }
        const std::string& name = names[feature_idx[static_cast<std::size_t>(c)]];
        if (present == 0) {
            out.warnings.push_back("column '" + name + "' has no observed values and was dropped");
            continue;
        }
        if (present < n) {
            const double mean = sum / static_cast<double>(present);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (std::isnan(x(i, c))) x(i, c) = mean;
            }
        }
        const double mean = x.col(c).mean();
        const double sd = std::sqrt((x.col(c).array() - mean).square().sum() /
                                    static_cast<double>(n));
        if (sd <= 1e-12 * (1.0 + std::abs(mean))) {
            out.warnings.push_back("column '" + name + "' has zero variance and was dropped");
            continue;
        }
        retained.push_back(c);
    }
    if (retained.empty()) throw ValidationError(spec.path + ": every feature column was dropped");

    out.x.resize(n, static_cast<Eigen::Index>(retained.size()));
    for (std::size_t c = 0; c < retained.size(); ++c) {
        out.x.col(static_cast<Eigen::Index>(c)) = x.col(retained[c]);
        out.column_names.push_back(names[feature_idx[static_cast<std::size_t>(retained[c])]]);
    }
    out.standardization = standardize_fit(out.x);
    out.x = standardize_apply(out.standardization, out.x);
    out.p = ProtectedAttributes(std::move(p));
    return out;
}

FoldPlan kfold(Eigen::Index n, int k, std::uint64_t seed) {
    if (k < 2) throw ValidationError("kfold: need at least two folds");
    if (static_cast<Eigen::Index>(k) > n) {
        throw ValidationError("kfold: more folds than rows (" + std::to_string(k) + " > " +
                              std::to_string(n) + ")");
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        plan.assignments[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
            static_cast<int>(i % k);
    }
    return plan;
}

StandardizationStats standardize_fit(const Eigen::MatrixXd& x) {
    if (x.size() == 0) throw ValidationError("standardize_fit: empty matrix");
    StandardizationStats stats;
    stats.mean = x.colwise().mean();
    stats.std_dev.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double sd = std::sqrt((x.col(c).array() - stats.mean[c]).square().sum() /
                                    static_cast<double>(x.rows()));
        stats.std_dev[c] = sd <= 1e-12 * (1.0 + std::abs(stats.mean[c])) ? 1.0 : sd;
    }
    return stats;
}

Eigen::MatrixXd standardize_apply(const StandardizationStats& stats, const Eigen::MatrixXd& x) {
    if (x.cols() != stats.mean.size()) {
        throw ValidationError("standardize_apply: matrix has " + std::to_string(x.cols()) +
                              " columns but the statistics cover " +
                              std::to_string(stats.mean.size()));
    }
    Eigen::MatrixXd out = x;
    out.rowwise() -= stats.mean.transpose();
    out.array().rowwise() /= stats.std_dev.transpose().array();
    return out;
}

}  // namespace fkd
