#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "slcd/evaluation.hpp"

namespace slcd {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

/// Malformed or unreadable input file.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Wire formats. Variable indices are 0-based.
[[nodiscard]] Json to_json(const StructuralMatrix& d);
[[nodiscard]] Json to_json(const Distribution& dist);
[[nodiscard]] Json to_json(const ScmSpec& spec);
[[nodiscard]] Json to_json(const ObjectiveBreakdown& b);
[[nodiscard]] Json to_json(const MetricBundle& m);
[[nodiscard]] Json to_json(const Hyperparams& hp);
[[nodiscard]] Json to_json(const SolverControls& c);
[[nodiscard]] Json to_json(const RestartRecord& r);
[[nodiscard]] Json to_json(const DiscoveryResult& r);
[[nodiscard]] Json to_json(const SweepResult& s);

[[nodiscard]] StructuralMatrix structural_matrix_from_json(const Json& j);
[[nodiscard]] Distribution distribution_from_json(const Json& j);
[[nodiscard]] ScmSpec spec_from_json(const Json& j);

/// Overlays the keys present in `j` onto `hp` / `c`; unknown keys throw.
void apply_json(const Json& j, Hyperparams& hp);
void apply_json(const Json& j, SolverControls& c);

/// The estimated matrix of a result document ("d_opt").
[[nodiscard]] Matrix estimate_from_result_json(const Json& j);

/// Recursively drops every "wall_ms" key.
[[nodiscard]] Json strip_wall_clock(Json j);

/// Header x1..xn, then one sample per line at 17 significant digits.
void write_csv(std::ostream& os, const Matrix& x);
/// Reads samples (rows) x variables (columns) into an n x m matrix. A first
/// line with any non-numeric field is taken as a header.
[[nodiscard]] Matrix read_csv(std::istream& is);

/// `path` holds the CSV and `path` + ".json" the sidecar. `spec`, when
/// given, is embedded in the sidecar with its true edges.
void write_dataset(const std::filesystem::path& path, const Dataset& ds, const std::optional<ScmSpec>& spec);
/// Reads the CSV and, if present, its sidecar.
[[nodiscard]] Dataset read_dataset(const std::filesystem::path& path);
/// The spec embedded in a dataset sidecar, if any.
[[nodiscard]] std::optional<ScmSpec> read_sidecar_spec(const std::filesystem::path& path);

[[nodiscard]] Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace slcd
