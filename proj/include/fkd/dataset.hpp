#pragma once

#include "fkd/fair_decomposition.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace fkd {

/// Where and how to read a tabular CSV file. Column references use header
/// names when has_header is true, otherwise zero-based column indices written
/// as decimal strings. An empty feature_columns list means every column that
/// is neither the target nor protected (protected columns join the features
/// only with include_protected, for ablation runs).
struct DatasetSpec {
    std::string path;
    std::string target_column;
    std::vector<std::string> protected_columns;
    std::vector<std::string> feature_columns;
    std::string missing_marker = "?";
    bool has_header = true;
    bool include_protected = false;
};

/// Per-column standardization parameters fitted on some training matrix.
struct StandardizationStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd std_dev;
};

/// A loaded, cleaned dataset: features standardized column-wise, targets and
/// protected attributes kept raw. Rows with missing target or protected
/// values are gone and every remaining feature cell is filled.
struct TabularDataset {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    ProtectedAttributes p;
    std::vector<std::string> column_names;
    std::vector<std::string> protected_names;
    std::string target_name;
    StandardizationStats standardization;
    std::vector<std::string> warnings;

    Eigen::Index n() const { return y.size(); }
};

/// Balanced assignment of rows to cross-validation folds.
struct FoldPlan {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<int> assignments;

    std::vector<Eigen::Index> test_indices(int fold) const;
    std::vector<Eigen::Index> train_indices(int fold) const;
};

/// Reads and cleans a CSV file. Drops rows with missing target or protected
/// entries, imputes missing feature cells with the column mean, drops
/// zero-variance columns with a warning, and standardizes the rest.
TabularDataset load_csv(const DatasetSpec& spec);

/// Shuffled balanced fold assignment, deterministic per seed. Fold sizes
/// differ by at most one.
FoldPlan kfold(Eigen::Index n, int k, std::uint64_t seed);

/// Column means and standard deviations (population convention). Columns
/// whose deviation is indistinguishable from zero get a unit divisor so that
/// applying the stats never divides by zero.
StandardizationStats standardize_fit(const Eigen::MatrixXd& x);

/// Applies training statistics to new rows: (x - mean) / std per column.
Eigen::MatrixXd standardize_apply(const StandardizationStats& stats, const Eigen::MatrixXd& x);

}  // namespace fkd
