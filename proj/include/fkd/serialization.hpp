#pragma once

#include "fkd/fair_decomposition.hpp"
#include "fkd/regressors.hpp"

#include <json.hpp>

#include <string>

namespace fkd {

// Container format shared by transforms and fitted models: one UTF-8 JSON
// header line terminated by '\n', then the payload matrix as row-major 8-byte
// little-endian IEEE doubles. The header carries the payload shape plus the
// object's scalar fields; fingerprints are stored as 16-digit hex strings so
// readers without 64-bit unsigned JSON support stay compatible.

void save_transform(const FairTransform& transform, const std::string& path);
FairTransform load_transform(const std::string& path);

void save_krr_model(const KrrModel& model, const std::string& path);
KrrModel load_krr_model(const std::string& path);

void save_svr_model(const SvrModel& model, const std::string& path);
SvrModel load_svr_model(const std::string& path);

void save_dummy_model(const DummyModel& model, const std::string& path);
DummyModel load_dummy_model(const std::string& path);

/// Parses and returns only the JSON header line of a container file, without
/// reading the payload.
nlohmann::json read_container_header(const std::string& path);

}  // namespace fkd
