#include "fkd/serialization.hpp"

#include "fkd/common.hpp"
#include "fkd/errors.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <utility>
#include <vector>

namespace fkd {
namespace {

using nlohmann::json;

constexpr const char* container_format = "fkd-matrix-container";
constexpr int container_version = 1;

json base_header(const char* type, Eigen::Index rows, Eigen::Index cols) {
    json header;
    header["format"] = container_format;
    header["version"] = container_version;
    header["type"] = type;
    header["rows"] = static_cast<std::int64_t>(rows);
    header["cols"] = static_cast<std::int64_t>(cols);
    return header;
}

void write_container(const std::string& path, const json& header,
                     const Eigen::Ref<const Eigen::MatrixXd>& payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    out << header.dump() << '\n';
    std::vector<unsigned char> row_bytes(static_cast<std::size_t>(payload.cols()) * 8);
    for (Eigen::Index i = 0; i < payload.rows(); ++i) {
        std::size_t off = 0;
        for (Eigen::Index j = 0; j < payload.cols(); ++j) {
            const auto bits = std::bit_cast<std::uint64_t>(payload(i, j));
            for (int b = 0; b < 8; ++b) {
                row_bytes[off++] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
            }
        }
        out.write(reinterpret_cast<const char*>(row_bytes.data()),
                  static_cast<std::streamsize>(row_bytes.size()));
    }
    if (!out) {
        throw IoError("write to '" + path + "' failed");
    }
}

json parse_header_line(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("'" + path + "' is empty or unreadable");
    }
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.is_object()) {
        throw IoError("'" + path + "' does not start with a JSON header line");
    }
    if (header.value("format", std::string()) != container_format) {
        throw IoError("'" + path + "' is not a matrix container file");
    }
    if (header.value("version", 0) != container_version) {
        throw IoError("'" + path + "' has unsupported container version");
    }
    return header;
}

Eigen::Index header_index(const json& header, const char* key, const std::string& path) {
    if (!header.contains(key) || !header[key].is_number_integer()) {
        throw IoError("'" + path + "' header lacks integer field '" + key + "'");
    }
    const auto value = header[key].get<std::int64_t>();
    if (value < 0) {
        throw IoError("'" + path + "' header field '" + key + "' is negative");
    }
    return static_cast<Eigen::Index>(value);
}

json read_container(const std::string& path, const char* expected_type,
                    Eigen::MatrixXd& payload) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    json header = parse_header_line(in, path);
    const std::string type = header.value("type", std::string());
    if (type != expected_type) {
        throw IoError("'" + path + "' holds a '" + type + "' container, expected '" +
                      expected_type + "'");
    }
    const Eigen::Index rows = header_index(header, "rows", path);
    const Eigen::Index cols = header_index(header, "cols", path);
    constexpr std::int64_t max_entries = INT64_C(1) << 32;
    if (static_cast<std::int64_t>(rows) * static_cast<std::int64_t>(cols) > max_entries) {
        throw IoError("'" + path + "' header declares an implausibly large payload");
    }

    const std::size_t expected_bytes = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 8;
    std::vector<unsigned char> bytes(expected_bytes);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(expected_bytes));
    if (static_cast<std::size_t>(in.gcount()) != expected_bytes) {
        throw IoError("'" + path + "' payload is truncated");
    }
    in.peek();
    if (!in.eof()) {
        throw IoError("'" + path + "' has trailing bytes after the payload");
    }

    payload.resize(rows, cols);
    std::size_t off = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) {
                bits |= static_cast<std::uint64_t>(bytes[off++]) << (8 * b);
            }
            payload(i, j) = std::bit_cast<double>(bits);
        }
    }
    if (payload.size() > 0 && !all_finite(payload)) {
        throw IoError("'" + path + "' payload contains non-finite values");
    }
    return header;
}

double header_double(const json& header, const char* key, const std::string& path) {
    if (!header.contains(key) || !header[key].is_number()) {
        throw IoError("'" + path + "' header lacks numeric field '" + key + "'");
    }
    return header[key].get<double>();
}

std::uint64_t header_fingerprint(const json& header, const char* key, const std::string& path) {
    if (!header.contains(key) || !header[key].is_string()) {
        throw IoError("'" + path + "' header lacks fingerprint field '" + key + "'");
    }
    try {
        return fingerprint_from_hex(header[key].get<std::string>());
    } catch (const Error& e) {
        throw IoError("'" + path + "' field '" + key + "': " + e.what());
    }
}

Eigen::VectorXd header_vector(const json& header, const char* key, const std::string& path) {
    if (!header.contains(key) || !header[key].is_array()) {
        throw IoError("'" + path + "' header lacks array field '" + key + "'");
    }
    const auto& arr = header[key];
    Eigen::VectorXd out(static_cast<Eigen::Index>(arr.size()));
    Eigen::Index i = 0;
    for (const auto& item : arr) {
        if (!item.is_number()) {
            throw IoError("'" + path + "' field '" + key + "' holds a non-numeric entry");
        }
        out(i++) = item.get<double>();
    }
    return out;
}

}  // namespace

void save_transform(const FairTransform& transform, const std::string& path) {
    json header = base_header("fair_transform", transform.size(), transform.size());
    header["n"] = static_cast<std::int64_t>(transform.size());
    header["m"] = transform.iterations();
    header["ridge_alpha"] = transform.ridge_alpha();
    header["fingerprint"] = fingerprint_hex(transform.result_fingerprint());
    header["source_fingerprint"] = fingerprint_hex(transform.source_fingerprint());
    header["protected_mean"] = std::vector<double>(
        transform.protected_mean().data(),
        transform.protected_mean().data() + transform.protected_mean().size());
    header["protected_std"] = std::vector<double>(
        transform.protected_std().data(),
        transform.protected_std().data() + transform.protected_std().size());
    json log = json::array();
    for (const auto& it : transform.per_iteration()) {
        log.push_back({{"iteration", it.iteration},
                       {"normalization", it.normalization},
                       {"residual_norm", it.residual_norm}});
    }
    header["iteration_log"] = log;
    write_container(path, header, transform.matrix());
}

FairTransform load_transform(const std::string& path) {
    Eigen::MatrixXd t_total;
    json header = read_container(path, "fair_transform", t_total);
    if (t_total.size() == 0 || t_total.rows() != t_total.cols()) {
        throw IoError("'" + path + "' transform payload must be a non-empty square matrix");
    }
    if (!header.contains("m") || !header["m"].is_number_integer()) {
        throw IoError("'" + path + "' header lacks integer field 'm'");
    }
    const int iterations = header["m"].get<int>();
    if (iterations < 0) {
        throw IoError("'" + path + "' header field 'm' is negative");
    }
    std::vector<IterationDiagnostics> log;
    if (header.contains("iteration_log")) {
        if (!header["iteration_log"].is_array()) {
            throw IoError("'" + path + "' field 'iteration_log' is not an array");
        }
        for (const auto& item : header["iteration_log"]) {
            IterationDiagnostics diag;
            diag.iteration = item.value("iteration", 0);
            diag.normalization = item.value("normalization", 0.0);
            diag.residual_norm = item.value("residual_norm", 0.0);
            log.push_back(diag);
        }
    }
    return FairTransform(std::move(t_total), iterations,
                         header_double(header, "ridge_alpha", path),
                         header_fingerprint(header, "source_fingerprint", path),
                         header_fingerprint(header, "fingerprint", path), std::move(log),
                         header_vector(header, "protected_mean", path),
                         header_vector(header, "protected_std", path));
}

void save_krr_model(const KrrModel& model, const std::string& path) {
    json header = base_header("krr_model", model.dual_coefficients.size(), 1);
    header["alpha"] = model.alpha;
    header["train_fingerprint"] = fingerprint_hex(model.train_fingerprint);
    write_container(path, header, model.dual_coefficients);
}

KrrModel load_krr_model(const std::string& path) {
    Eigen::MatrixXd payload;
    json header = read_container(path, "krr_model", payload);
    KrrModel model;
    model.dual_coefficients = payload.col(0);
    model.alpha = header_double(header, "alpha", path);
    model.train_fingerprint = header_fingerprint(header, "train_fingerprint", path);
    return model;
}

void save_svr_model(const SvrModel& model, const std::string& path) {
    json header = base_header("svr_model", model.dual_coefficients.size(), 1);
    header["bias"] = model.bias;
    header["epsilon"] = model.epsilon;
    header["cost"] = model.cost;
    header["train_fingerprint"] = fingerprint_hex(model.train_fingerprint);
    std::vector<std::int64_t> support(model.support_indices.begin(), model.support_indices.end());
    header["support_indices"] = support;
    write_container(path, header, model.dual_coefficients);
}

SvrModel load_svr_model(const std::string& path) {
    Eigen::MatrixXd payload;
    json header = read_container(path, "svr_model", payload);
    SvrModel model;
    model.dual_coefficients = payload.col(0);
    model.bias = header_double(header, "bias", path);
    model.epsilon = header_double(header, "epsilon", path);
    model.cost = header_double(header, "cost", path);
    model.train_fingerprint = header_fingerprint(header, "train_fingerprint", path);
    if (!header.contains("support_indices") || !header["support_indices"].is_array()) {
        throw IoError("'" + path + "' header lacks array field 'support_indices'");
    }
    for (const auto& item : header["support_indices"]) {
        if (!item.is_number_integer()) {
            throw IoError("'" + path + "' field 'support_indices' holds a non-integer entry");
        }
        const auto idx = item.get<std::int64_t>();
        if (idx < 0 || idx >= model.dual_coefficients.size()) {
            throw IoError("'" + path + "' support index out of range");
        }
        model.support_indices.push_back(static_cast<Eigen::Index>(idx));
    }
    return model;
}

void save_dummy_model(const DummyModel& model, const std::string& path) {
    json header = base_header("dummy_model", 1, 1);
    Eigen::MatrixXd payload(1, 1);
    payload(0, 0) = model.mean;
    write_container(path, header, payload);
}

DummyModel load_dummy_model(const std::string& path) {
    Eigen::MatrixXd payload;
    json header = read_container(path, "dummy_model", payload);
    if (payload.rows() != 1 || payload.cols() != 1) {
        throw IoError("'" + path + "' dummy model payload must be a single value");
    }
    DummyModel model;
    model.mean = payload(0, 0);
    return model;
}

nlohmann::json read_container_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "'");
    }
    return parse_header_line(in, path);
}

}  // namespace fkd
