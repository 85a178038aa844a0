#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pmor/common.hpp"
#include "pmor/features.hpp"
#include "pmor/manifold.hpp"

namespace pmor {

using Json = nlohmann::json;

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

/// Matrix embedded in JSON as base64 of its SMAT encoding.
std::string matrix_to_b64(const Matrix& m);
Matrix matrix_from_b64(std::string_view text);

Json table_to_json(const MonomialTable& t);
MonomialTable table_from_json(const Json& j);

Json manifold_to_json(const PolynomialManifold& m);
/// Rejects bases whose orthonormality error exceeds 1e-6 and warns on
/// stderr above 1e-8.
PolynomialManifold manifold_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
void write_json(const Json& j, const std::filesystem::path& path);

}  // namespace pmor
