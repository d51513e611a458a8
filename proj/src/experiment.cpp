#include "fkd/experiment.hpp"

#include "fkd/common.hpp"
#include "fkd/kernels.hpp"
#include "fkd/regressors.hpp"
#include "fkd/serialization.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace fkd {
namespace {

using nlohmann::json;

class PhaseTimer {
public:
    double lap_ms() {
        const auto now = Clock::now();
        const double ms = std::chrono::duration<double, std::milli>(now - mark_).count();
        mark_ = now;
        return ms;
    }

private:
    using Clock = std::chrono::steady_clock;
    Clock::time_point mark_ = Clock::now();
};

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
}

Eigen::VectorXd take_entries(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
    return out;
}

void validate_config(const ExperimentConfig& config) {
    const auto& d = config.decomposition;
    if (d.m_values.empty()) {
        throw ValidationError("decomposition.m_values must not be empty");
    }
    for (std::size_t i = 0; i < d.m_values.size(); ++i) {
        if (d.m_values[i] < 0) throw ValidationError("decomposition.m_values must be non-negative");
        if (i > 0 && d.m_values[i] <= d.m_values[i - 1]) {
            throw ValidationError("decomposition.m_values must be strictly ascending");
        }
    }
    if (!(d.ridge_alpha > 0.0)) throw ValidationError("decomposition.ridge_alpha must be positive");
    if (!(d.max_normalization > 0.0)) {
        throw ValidationError("decomposition.max_normalization must be positive");
    }
    if (d.inverse_mode == InverseMode::nystroem &&
        !(d.landmark_fraction > 0.0 && d.landmark_fraction <= 1.0)) {
        throw ValidationError("decomposition.landmark_fraction must lie in (0, 1]");
    }
    if (!(config.kernel.gamma > 0.0)) throw ValidationError("kernel.gamma must be positive");
    switch (config.model.kind) {
        case ModelKind::krr:
            if (!(config.model.krr_alpha > 0.0)) {
                throw ValidationError("model.alpha must be positive");
            }
            break;
        case ModelKind::svr:
            if (config.model.svr_epsilon < 0.0) {
                throw ValidationError("model.epsilon must be non-negative");
            }
            if (!(config.model.svr_cost > 0.0)) throw ValidationError("model.C must be positive");
            break;
        case ModelKind::dummy:
            break;
    }
    if (config.cv.k < 2) throw ValidationError("cv.k must be at least 2");
    if (config.threads < 1) throw ValidationError("threads must be at least 1");
}

std::vector<std::string> metric_names_for(const std::vector<std::string>& protected_names) {
    std::vector<std::string> names = {"mae"};
    const char* bases[] = {"gdp", "hgr", "pairwise_fairness"};
    if (protected_names.size() <= 1) {
        for (const char* base : bases) names.emplace_back(base);
        return names;
    }
    for (const char* base : bases) {
        for (const auto& attr : protected_names) names.push_back(std::string(base) + "." + attr);
    }
    return names;
}

std::vector<double> flatten_cell(const CellResult& cell) {
    std::vector<double> values;
    values.push_back(cell.attribute_reports.front().mae);
    for (const auto& rep : cell.attribute_reports) values.push_back(rep.gdp);
    for (const auto& rep : cell.attribute_reports) values.push_back(rep.hgr);
    for (const auto& rep : cell.attribute_reports) values.push_back(rep.pairwise_fairness);
    return values;
}

struct FoldOutput {
    std::vector<CellResult> cells;
    PhaseRuntimes times;
};

FoldOutput process_fold(const ExperimentConfig& config, const TabularDataset& data,
                        const FoldPlan& plan, int fold) {
    FoldOutput out;
    PhaseTimer timer;
    const std::vector<Eigen::Index> train_idx = plan.train_indices(fold);
    const std::vector<Eigen::Index> test_idx = plan.test_indices(fold);

    const Eigen::MatrixXd x_train_raw = take_rows(data.x, train_idx);
    const Eigen::MatrixXd x_test_raw = take_rows(data.x, test_idx);
    const Eigen::VectorXd y_train = take_entries(data.y, train_idx);
    const Eigen::VectorXd y_test = take_entries(data.y, test_idx);
    const Eigen::MatrixXd p_train = take_rows(data.p.data(), train_idx);
    const Eigen::MatrixXd p_test = take_rows(data.p.data(), test_idx);

    const StandardizationStats stats = standardize_fit(x_train_raw);
    const Eigen::MatrixXd x_train = standardize_apply(stats, x_train_raw);
    const Eigen::MatrixXd x_test = standardize_apply(stats, x_test_raw);

    std::vector<DecompositionResult> decomposed;
    KernelMatrix cross = [&] {
        try {
            const KernelMatrix k_train = rbf_kernel(x_train, {config.kernel.gamma});
            KernelMatrix k_cross = rbf_cross_kernel(x_test, x_train, {config.kernel.gamma});
            out.times.kernel_ms += timer.lap_ms();

            DecompositionParams dp;
            dp.iterations = config.decomposition.m_values.back();
            dp.ridge_alpha = config.decomposition.ridge_alpha;
            dp.lazy_updates = true;
            dp.stop_on_degenerate = true;
            dp.max_normalization = config.decomposition.max_normalization;
            if (config.decomposition.inverse_mode == InverseMode::nystroem) {
                const auto n_train = static_cast<double>(x_train.rows());
                const auto count = static_cast<Eigen::Index>(
                    std::llround(config.decomposition.landmark_fraction * n_train));
                NystroemParams np;
                np.landmark_count = std::clamp<Eigen::Index>(count, 1, x_train.rows());
                np.seed = derive_seed(config.cv.seed, 1 + static_cast<std::uint64_t>(fold));
                dp.nystroem = np;
            }
            decomposed = decompose_checkpoints(k_train, ProtectedAttributes(p_train), dp,
                                               config.decomposition.m_values);
            out.times.decompose_ms += timer.lap_ms();
            return k_cross;
        } catch (const ExperimentError&) {
            throw;
        } catch (const Error& e) {
            throw ExperimentError("fold " + std::to_string(fold) + ": " + e.what(), fold, -1);
        }
    }();

    for (std::size_t mi = 0; mi < config.decomposition.m_values.size(); ++mi) {
        const int m = config.decomposition.m_values[mi];
        try {
            const DecompositionResult& step = decomposed[mi];
            timer.lap_ms();
            const KernelMatrix cross_m = apply_transform(cross, step.transform);
            Eigen::VectorXd yhat;
            switch (config.model.kind) {
                case ModelKind::krr: {
                    const KrrModel model = krr_fit(step.kernel, y_train, config.model.krr_alpha);
                    out.times.fit_ms += timer.lap_ms();
                    yhat = krr_predict(model, cross_m);
                    break;
                }
                case ModelKind::svr: {
                    SvrParams sp;
                    sp.epsilon = config.model.svr_epsilon;
                    sp.cost = config.model.svr_cost;
                    const SvrModel model = svr_fit(step.kernel, y_train, sp);
                    out.times.fit_ms += timer.lap_ms();
                    yhat = svr_predict(model, cross_m);
                    break;
                }
                case ModelKind::dummy: {
                    const DummyModel model = dummy_fit(y_train);
                    out.times.fit_ms += timer.lap_ms();
                    yhat = dummy_predict(model, y_test.size());
                    break;
                }
            }
            out.times.predict_ms += timer.lap_ms();

            CellResult cell;
            cell.m = m;
            cell.fold = fold;
            cell.iterations_completed = std::min(step.transform.iterations(), m);
            for (Eigen::Index j = 0; j < p_test.cols(); ++j) {
                cell.attribute_reports.push_back(
                    score_predictions(y_test, yhat, p_test.col(j), config.metrics));
            }
            out.times.score_ms += timer.lap_ms();

            if (config.save_transforms) {
                save_transform(step.transform,
                               (std::filesystem::path(config.output_path) /
                                ("transform_fold" + std::to_string(fold) + "_m" +
                                 std::to_string(m) + ".bin"))
                                   .string());
            }
            out.cells.push_back(std::move(cell));
        } catch (const ExperimentError&) {
            throw;
        } catch (const Error& e) {
            throw ExperimentError("fold " + std::to_string(fold) + ", m " + std::to_string(m) +
                                      ": " + e.what(),
                                  fold, m);
        }
    }
    return out;
}

std::string format_double(double value) { return json(value).dump(); }

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void append_aggregate_csv(std::string& csv, const std::string& prefix,
                          const ExperimentResult& result, const std::string& suffix_for_rows) {
    for (const auto& row : result.aggregates) {
        for (const auto& [name, summary] : row.metrics) {
            csv += prefix + std::to_string(row.m) + "," + name + "," +
                   format_double(summary.mean) + "," + format_double(summary.std_dev) +
                   suffix_for_rows + "\n";
        }
    }
}

const json* find_key(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& item : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) {
            return item.key() == k;
        });
        if (!known) {
            throw ValidationError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

const json& require_object(const json& parent, const char* key, const std::string& where) {
    const json* child = find_key(parent, key);
    if (child == nullptr || !child->is_object()) {
        throw ValidationError("config needs an object '" + std::string(key) + "' in " + where);
    }
    return *child;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
    const json* value = find_key(obj, key);
    if (value == nullptr) return fallback;
    if (!value->is_number()) {
        throw ValidationError("'" + std::string(key) + "' in " + where + " must be a number");
    }
    return value->get<double>();
}

std::int64_t integer_or(const json& obj, const char* key, std::int64_t fallback,
                        const std::string& where) {
    const json* value = find_key(obj, key);
    if (value == nullptr) return fallback;
    if (!value->is_number_integer()) {
        throw ValidationError("'" + std::string(key) + "' in " + where + " must be an integer");
    }
    return value->get<std::int64_t>();
}

bool boolean_or(const json& obj, const char* key, bool fallback, const std::string& where) {
    const json* value = find_key(obj, key);
    if (value == nullptr) return fallback;
    if (!value->is_boolean()) {
        throw ValidationError("'" + std::string(key) + "' in " + where + " must be a boolean");
    }
    return value->get<bool>();
}

std::string string_or(const json& obj, const char* key, const std::string& fallback,
                      const std::string& where) {
    const json* value = find_key(obj, key);
    if (value == nullptr) return fallback;
    if (!value->is_string()) {
        throw ValidationError("'" + std::string(key) + "' in " + where + " must be a string");
    }
    return value->get<std::string>();
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json* value = find_key(obj, key);
    if (value == nullptr || !value->is_string()) {
        throw ValidationError("'" + std::string(key) + "' in " + where + " must be a string");
    }
    return value->get<std::string>();
}

std::vector<std::string> string_list_or(const json& obj, const char* key,
                                        const std::string& where) {
    const json* value = find_key(obj, key);
    std::vector<std::string> out;
    if (value == nullptr) return out;
    if (!value->is_array()) {
        throw ValidationError("'" + std::string(key) + "' in " + where + " must be an array");
    }
    for (const auto& item : *value) {
        if (!item.is_string()) {
            throw ValidationError("'" + std::string(key) + "' in " + where +
                                  " must hold only strings");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}

std::vector<double> number_list_or(const json& obj, const char* key, const std::string& where) {
    const json* value = find_key(obj, key);
    std::vector<double> out;
    if (value == nullptr) return out;
    if (!value->is_array()) {
        throw ValidationError("'" + std::string(key) + "' in " + where + " must be an array");
    }
    for (const auto& item : *value) {
        if (!item.is_number()) {
            throw ValidationError("'" + std::string(key) + "' in " + where +
                                  " must hold only numbers");
        }
        out.push_back(item.get<double>());
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ValidationError("config root must be a JSON object");
    check_keys(doc,
               {"dataset", "model", "kernel", "decomposition", "cv", "metrics", "output_path",
                "save_transforms", "threads", "sweep"},
               "config root");
    ExperimentConfig config;

    const json& dataset = require_object(doc, "dataset", "config root");
    check_keys(dataset,
               {"path", "target", "protected", "features", "missing_marker", "has_header",
                "include_protected"},
               "dataset");
    config.dataset.path = require_string(dataset, "path", "dataset");
    config.dataset.target_column = require_string(dataset, "target", "dataset");
    config.dataset.protected_columns = string_list_or(dataset, "protected", "dataset");
    if (config.dataset.protected_columns.empty()) {
        throw ValidationError("dataset.protected must list at least one column");
    }
    config.dataset.feature_columns = string_list_or(dataset, "features", "dataset");
    config.dataset.missing_marker = string_or(dataset, "missing_marker", "?", "dataset");
    config.dataset.has_header = boolean_or(dataset, "has_header", true, "dataset");
    config.dataset.include_protected = boolean_or(dataset, "include_protected", false, "dataset");

    const json& model = require_object(doc, "model", "config root");
    const std::string model_type = require_string(model, "type", "model");
    if (model_type == "krr") {
        check_keys(model, {"type", "alpha"}, "model");
        config.model.kind = ModelKind::krr;
        config.model.krr_alpha = number_or(model, "alpha", 0.25, "model");
    } else if (model_type == "svr") {
        check_keys(model, {"type", "epsilon", "C"}, "model");
        config.model.kind = ModelKind::svr;
        config.model.svr_epsilon = number_or(model, "epsilon", 0.01, "model");
        config.model.svr_cost = number_or(model, "C", 0.75, "model");
    } else if (model_type == "dummy") {
        check_keys(model, {"type"}, "model");
        config.model.kind = ModelKind::dummy;
    } else {
        throw ValidationError("model.type must be one of 'krr', 'svr', 'dummy'");
    }

    if (const json* kernel = find_key(doc, "kernel")) {
        check_keys(*kernel, {"type", "gamma"}, "kernel");
        const std::string kernel_type = string_or(*kernel, "type", "rbf", "kernel");
        if (kernel_type != "rbf") throw ValidationError("kernel.type must be 'rbf'");
        config.kernel.gamma = number_or(*kernel, "gamma", 0.05, "kernel");
    }

    if (const json* dec = find_key(doc, "decomposition")) {
        check_keys(*dec,
                   {"ridge_alpha", "m_values", "inverse_mode", "landmark_fraction",
                    "max_normalization"},
                   "decomposition");
        config.decomposition.ridge_alpha = number_or(*dec, "ridge_alpha", 0.1, "decomposition");
        if (const json* m_values = find_key(*dec, "m_values")) {
            if (!m_values->is_array()) {
                throw ValidationError("decomposition.m_values must be an array");
            }
            config.decomposition.m_values.clear();
            for (const auto& item : *m_values) {
                if (!item.is_number_integer()) {
                    throw ValidationError("decomposition.m_values must hold integers");
                }
                config.decomposition.m_values.push_back(item.get<int>());
            }
        }
        const std::string mode = string_or(*dec, "inverse_mode", "exact", "decomposition");
        if (mode == "exact") {
            config.decomposition.inverse_mode = InverseMode::exact;
        } else if (mode == "nystroem") {
            config.decomposition.inverse_mode = InverseMode::nystroem;
        } else {
            throw ValidationError("decomposition.inverse_mode must be 'exact' or 'nystroem'");
        }
        config.decomposition.landmark_fraction =
            number_or(*dec, "landmark_fraction", 1.0, "decomposition");
        config.decomposition.max_normalization =
            number_or(*dec, "max_normalization", 1e12, "decomposition");
    }

    if (const json* cv = find_key(doc, "cv")) {
        check_keys(*cv, {"k", "seed"}, "cv");
        config.cv.k = static_cast<int>(integer_or(*cv, "k", 5, "cv"));
        const json* seed = find_key(*cv, "seed");
        if (seed != nullptr) {
            if (!seed->is_number_integer() && !seed->is_number_unsigned()) {
                throw ValidationError("'seed' in cv must be an integer");
            }
            config.cv.seed = seed->get<std::uint64_t>();
        }
    }

    if (const json* metrics = find_key(doc, "metrics")) {
        check_keys(*metrics, {"bandwidth", "grid_size"}, "metrics");
        if (find_key(*metrics, "bandwidth") != nullptr) {
            config.metrics.bandwidth = number_or(*metrics, "bandwidth", 0.0, "metrics");
        }
        config.metrics.grid_size =
            static_cast<Eigen::Index>(integer_or(*metrics, "grid_size", 64, "metrics"));
    }

    config.output_path = string_or(doc, "output_path", "", "config root");
    config.save_transforms = boolean_or(doc, "save_transforms", false, "config root");
    config.threads = static_cast<int>(integer_or(doc, "threads", 1, "config root"));

    if (const json* sweep = find_key(doc, "sweep")) {
        check_keys(*sweep, {"alpha_values", "fractions"}, "sweep");
        config.sweep_alpha_values = number_list_or(*sweep, "alpha_values", "sweep");
        config.sweep_fractions = number_list_or(*sweep, "fractions", "sweep");
    }

    validate_config(config);
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw IoError("config file '" + path + "' is not valid JSON");
    return parse_config(doc);
}

json config_to_json(const ExperimentConfig& config) {
    json j;
    j["dataset"] = {{"path", config.dataset.path},
                    {"target", config.dataset.target_column},
                    {"protected", config.dataset.protected_columns},
                    {"features", config.dataset.feature_columns},
                    {"missing_marker", config.dataset.missing_marker},
                    {"has_header", config.dataset.has_header},
                    {"include_protected", config.dataset.include_protected}};
    switch (config.model.kind) {
        case ModelKind::krr:
            j["model"] = {{"type", "krr"}, {"alpha", config.model.krr_alpha}};
            break;
        case ModelKind::svr:
            j["model"] = {{"type", "svr"},
                          {"epsilon", config.model.svr_epsilon},
                          {"C", config.model.svr_cost}};
            break;
        case ModelKind::dummy:
            j["model"] = {{"type", "dummy"}};
            break;
    }
    j["kernel"] = {{"type", "rbf"}, {"gamma", config.kernel.gamma}};
    j["decomposition"] = {
        {"ridge_alpha", config.decomposition.ridge_alpha},
        {"m_values", config.decomposition.m_values},
        {"inverse_mode",
         config.decomposition.inverse_mode == InverseMode::exact ? "exact" : "nystroem"},
        {"landmark_fraction", config.decomposition.landmark_fraction},
        {"max_normalization", config.decomposition.max_normalization}};
    j["cv"] = {{"k", config.cv.k}, {"seed", config.cv.seed}};
    j["metrics"] = {{"bandwidth",
                     config.metrics.bandwidth ? json(*config.metrics.bandwidth) : json(nullptr)},
                    {"grid_size", static_cast<std::int64_t>(config.metrics.grid_size)}};
    return j;
}

ExperimentResult run_experiment_on(const ExperimentConfig& config, const TabularDataset& data) {
    validate_config(config);
    if (config.cv.k > data.n()) {
        throw ValidationError("cv.k exceeds the number of rows (" + std::to_string(data.n()) +
                              ")");
    }
    PhaseTimer total_timer;
    ExperimentResult result;
    result.config = config;
    result.protected_names = data.protected_names;
    if (result.protected_names.empty()) {
        for (Eigen::Index j = 0; j < data.p.attributes(); ++j) {
            result.protected_names.push_back("p" + std::to_string(j));
        }
    }
    result.metric_names = metric_names_for(result.protected_names);
    result.warnings = data.warnings;

    if (config.save_transforms) {
        if (config.output_path.empty()) {
            throw ValidationError("save_transforms needs a non-empty output_path");
        }
        std::filesystem::create_directories(config.output_path);
    }

    const FoldPlan plan = kfold(data.n(), config.cv.k, derive_seed(config.cv.seed, 0));

    std::vector<FoldOutput> outputs(static_cast<std::size_t>(plan.k));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(plan.k));
    std::atomic<int> next_fold{0};
    const auto worker = [&] {
        for (;;) {
            const int fold = next_fold.fetch_add(1);
            if (fold >= plan.k) return;
            try {
                outputs[static_cast<std::size_t>(fold)] = process_fold(config, data, plan, fold);
            } catch (...) {
                failures[static_cast<std::size_t>(fold)] = std::current_exception();
            }
        }
    };
    const int worker_count = std::min(std::max(config.threads, 1), plan.k);
    if (worker_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(worker_count));
        for (int t = 0; t < worker_count; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    for (const auto& failure : failures) {
        if (failure) std::rethrow_exception(failure);
    }

    for (std::size_t mi = 0; mi < config.decomposition.m_values.size(); ++mi) {
        for (int fold = 0; fold < plan.k; ++fold) {
            result.cells.push_back(outputs[static_cast<std::size_t>(fold)].cells[mi]);
        }
    }
    for (const auto& fold_output : outputs) {
        result.runtime.kernel_ms += fold_output.times.kernel_ms;
        result.runtime.decompose_ms += fold_output.times.decompose_ms;
        result.runtime.fit_ms += fold_output.times.fit_ms;
        result.runtime.predict_ms += fold_output.times.predict_ms;
        result.runtime.score_ms += fold_output.times.score_ms;
    }

    const std::size_t metric_count = result.metric_names.size();
    const auto folds = static_cast<double>(plan.k);
    for (std::size_t mi = 0; mi < config.decomposition.m_values.size(); ++mi) {
        AggregateRow row;
        row.m = config.decomposition.m_values[mi];
        std::vector<std::vector<double>> samples(metric_count);
        for (int fold = 0; fold < plan.k; ++fold) {
            const auto values =
                flatten_cell(result.cells[mi * static_cast<std::size_t>(plan.k) +
                                          static_cast<std::size_t>(fold)]);
            for (std::size_t v = 0; v < metric_count; ++v) samples[v].push_back(values[v]);
        }
        for (std::size_t v = 0; v < metric_count; ++v) {
            MetricSummary summary;
            for (double s : samples[v]) summary.mean += s;
            summary.mean /= folds;
            double accum = 0.0;
            for (double s : samples[v]) accum += (s - summary.mean) * (s - summary.mean);
            summary.std_dev = std::sqrt(accum / (folds - 1.0));
            row.metrics.emplace_back(result.metric_names[v], summary);
        }
        result.aggregates.push_back(std::move(row));
    }

    result.runtime.total_ms = total_timer.lap_ms();
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    validate_config(config);
    PhaseTimer timer;
    const TabularDataset data = load_csv(config.dataset);
    const double load_ms = timer.lap_ms();
    ExperimentResult result = run_experiment_on(config, data);
    result.runtime.load_ms = load_ms;
    result.runtime.total_ms += load_ms;
    return result;
}

AlphaSweepResult sweep_alpha_tilde(const ExperimentConfig& config,
                                   std::span<const double> alpha_values) {
    if (alpha_values.empty()) {
        throw ValidationError("alpha sweep needs at least one regularization value");
    }
    for (double a : alpha_values) {
        if (!(a > 0.0)) throw ValidationError("alpha sweep values must be positive");
    }
    validate_config(config);
    const TabularDataset data = load_csv(config.dataset);
    AlphaSweepResult sweep;
    for (double a : alpha_values) {
        ExperimentConfig run_config = config;
        run_config.decomposition.ridge_alpha = a;
        sweep.alpha_values.push_back(a);
        sweep.runs.push_back(run_experiment_on(run_config, data));
    }
    return sweep;
}

NystroemSweepResult sweep_nystroem(const ExperimentConfig& config,
                                   std::span<const double> fractions) {
    if (fractions.empty()) {
        throw ValidationError("landmark sweep needs at least one fraction");
    }
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) {
            throw ValidationError("landmark fractions must lie in (0, 1]");
        }
    }
    validate_config(config);
    const TabularDataset data = load_csv(config.dataset);

    ExperimentConfig exact_config = config;
    exact_config.decomposition.inverse_mode = InverseMode::exact;
    NystroemSweepResult sweep{run_experiment_on(exact_config, data), {}, {}};
    for (double f : fractions) {
        ExperimentConfig run_config = config;
        run_config.decomposition.inverse_mode = InverseMode::nystroem;
        run_config.decomposition.landmark_fraction = f;
        sweep.fractions.push_back(f);
        sweep.runs.push_back(run_experiment_on(run_config, data));
    }
    return sweep;
}

json result_to_json(const ExperimentResult& result) {
    json j;
    j["config"] = config_to_json(result.config);
    j["protected"] = result.protected_names;
    j["metrics"] = result.metric_names;
    json folds = json::array();
    for (const auto& cell : result.cells) {
        const auto values = flatten_cell(cell);
        json metrics;
        for (std::size_t v = 0; v < values.size(); ++v) {
            metrics[result.metric_names[v]] = values[v];
        }
        folds.push_back({{"m", cell.m},
                         {"fold", cell.fold},
                         {"iterations_completed", cell.iterations_completed},
                         {"metrics", metrics}});
    }
    j["folds"] = folds;
    json aggregates = json::array();
    for (const auto& row : result.aggregates) {
        json metrics;
        for (const auto& [name, summary] : row.metrics) {
            metrics[name] = {{"mean", summary.mean}, {"std", summary.std_dev}};
        }
        aggregates.push_back({{"m", row.m}, {"metrics", metrics}});
    }
    j["aggregates"] = aggregates;
    j["warnings"] = result.warnings;
    return j;
}

std::string result_to_csv(const ExperimentResult& result) {
    std::string csv = "m,metric,mean,std\n";
    append_aggregate_csv(csv, "", result, "");
    return csv;
}

void emit_results(const ExperimentResult& result, const std::string& directory) {
    const std::filesystem::path dir(directory);
    std::filesystem::create_directories(dir);
    write_text_file(dir / "results.json", result_to_json(result).dump(2) + "\n");
    write_text_file(dir / "results.csv", result_to_csv(result));
}

void emit_alpha_sweep(const AlphaSweepResult& sweep, const std::string& directory) {
    const std::filesystem::path dir(directory);
    std::filesystem::create_directories(dir);
    json j;
    j["alpha_values"] = sweep.alpha_values;
    json runs = json::array();
    for (const auto& run : sweep.runs) runs.push_back(result_to_json(run));
    j["runs"] = runs;
    write_text_file(dir / "sweep_alpha.json", j.dump(2) + "\n");

    std::string csv = "alpha_tilde,m,metric,mean,std\n";
    for (std::size_t i = 0; i < sweep.runs.size(); ++i) {
        append_aggregate_csv(csv, format_double(sweep.alpha_values[i]) + ",", sweep.runs[i], "");
    }
    write_text_file(dir / "sweep_alpha.csv", csv);
}

void emit_nystroem_sweep(const NystroemSweepResult& sweep, const std::string& directory) {
    const std::filesystem::path dir(directory);
    std::filesystem::create_directories(dir);
    json j;
    j["exact"] = result_to_json(sweep.exact);
    j["fractions"] = sweep.fractions;
    json runs = json::array();
    for (const auto& run : sweep.runs) runs.push_back(result_to_json(run));
    j["runs"] = runs;
    write_text_file(dir / "sweep_nystroem.json", j.dump(2) + "\n");

    std::string csv = "fraction,m,metric,mean,std,exact_mean,delta_vs_exact\n";
    for (std::size_t i = 0; i < sweep.runs.size(); ++i) {
        const ExperimentResult& run = sweep.runs[i];
        for (std::size_t r = 0; r < run.aggregates.size(); ++r) {
            const auto& row = run.aggregates[r];
            const auto& exact_row = sweep.exact.aggregates.at(r);
            for (std::size_t c = 0; c < row.metrics.size(); ++c) {
                const auto& [name, summary] = row.metrics[c];
                const double exact_mean = exact_row.metrics.at(c).second.mean;
                csv += format_double(sweep.fractions[i]) + "," + std::to_string(row.m) + "," +
                       name + "," + format_double(summary.mean) + "," +
                       format_double(summary.std_dev) + "," + format_double(exact_mean) + "," +
                       format_double(std::abs(summary.mean - exact_mean)) + "\n";
            }
        }
    }
    write_text_file(dir / "sweep_nystroem.csv", csv);
}

}  // namespace fkd
