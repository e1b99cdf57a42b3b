#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "empcn/graph.hpp"

namespace empcn {

/// Raised when a document violates the graph schema. `pointer()` is a JSON
/// pointer to the offending field (e.g. "/positions/3/1").
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string pointer, const std::string& what)
        : std::runtime_error(pointer + ": " + what), pointer_(std::move(pointer)), reason_(what) {}
    const std::string& pointer() const { return pointer_; }
    const std::string& reason() const { return reason_; }

private:
    std::string pointer_;
    std::string reason_;
};

inline constexpr int kGraphFormatVersion = 1;

nlohmann::json graph_to_json(const GeometricGraph& g);
GeometricGraph graph_from_json(const nlohmann::json& j);

/// Serializes with sorted keys, two-space indentation and every real printed
/// with 17 significant digits, so save(load(save(g))) is byte-identical.
std::string canonical_dump(const nlohmann::json& j);

GeometricGraph load_graph(const std::filesystem::path& path);
void save_graph(const std::filesystem::path& path, const GeometricGraph& g);

/// A dataset file: {"format_version": 1, "graphs": [...]}.
std::vector<GeometricGraph> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const std::vector<GeometricGraph>& graphs);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace empcn
