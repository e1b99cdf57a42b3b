#include "empcn/graph_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace empcn {

using nlohmann::json;

namespace {

std::string ptr(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

double read_real(const json& j, const std::string& at) {
    if (!j.is_number()) throw SchemaError(at, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(at, "value is not finite");
    return v;
}

std::vector<double> read_real_array(const json& j, const std::string& at) {
    if (!j.is_array()) throw SchemaError(at, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_real(j[i], ptr(at, i)));
    return out;
}

std::vector<geom::Point> read_points(const json& j, const std::string& at, std::size_t expect_dim) {
    if (!j.is_array()) throw SchemaError(at, "expected an array of points");
    std::vector<geom::Point> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        auto coords = read_real_array(j[i], ptr(at, i));
        if (coords.empty()) throw SchemaError(ptr(at, i), "point must have at least one coordinate");
        if (expect_dim != 0 && coords.size() != expect_dim)
            throw SchemaError(ptr(at, i), "point dimension " + std::to_string(coords.size()) +
                                              " does not match " + std::to_string(expect_dim));
        if (expect_dim == 0) expect_dim = coords.size();
        out.emplace_back(std::move(coords));
    }
    return out;
}

std::uint32_t read_index(const json& j, const std::string& at, std::size_t n) {
    if (!j.is_number_integer()) throw SchemaError(at, "expected a non-negative integer");
    const auto v = j.get<std::int64_t>();
    if (v < 0 || static_cast<std::size_t>(v) >= n)
        throw SchemaError(at, "index " + std::to_string(v) + " out of range [0," + std::to_string(n) + ")");
    return static_cast<std::uint32_t>(v);
}

json points_to_json(const std::vector<geom::Point>& pts) {
    json arr = json::array();
    for (const auto& p : pts) {
        json row = json::array();
        for (double c : p.coords()) row.push_back(c);
        arr.push_back(std::move(row));
    }
    return arr;
}

bool all_scalars(const json& arr) {
    for (const auto& e : arr)
        if (e.is_structured()) return false;
    return true;
}

void dump_value(const json& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string pad_in(static_cast<std::size_t>(indent + 1) * 2, ' ');
    if (j.is_object()) {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ",\n";
            first = false;
            out += pad_in + json(it.key()).dump() + ": ";
            dump_value(it.value(), out, indent + 1);
        }
        out += "\n" + pad + "}";
    } else if (j.is_array()) {
        if (j.empty()) {
            out += "[]";
            return;
        }
        if (all_scalars(j)) {
            out += "[";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ", ";
                dump_value(j[i], out, indent + 1);
            }
            out += "]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out += ",\n";
            out += pad_in;
            dump_value(j[i], out, indent + 1);
        }
        out += "\n" + pad + "]";
    } else if (j.is_number_float()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
        out += buf;
    } else {
        out += j.dump();
    }
}

}  // namespace

json graph_to_json(const GeometricGraph& g) {
    json j;
    j["positions"] = points_to_json(g.positions);
    if (g.velocities) j["velocities"] = points_to_json(*g.velocities);
    j["node_features"] = json::array();
    for (const auto& f : g.node_features) j["node_features"].push_back(f);
    j["edges"] = json::array();
    for (const auto& e : g.edges) j["edges"].push_back({e.u, e.v});
    if (g.two_cells) {
        j["two_cells"] = json::array();
        for (const auto& c : *g.two_cells) j["two_cells"].push_back(c);
    }
    if (const auto* s = std::get_if<double>(&g.target)) j["target"] = *s;
    if (const auto* p = std::get_if<std::vector<geom::Point>>(&g.target)) j["target"] = points_to_json(*p);
    if (!g.meta.is_null()) j["meta"] = g.meta;
    return j;
}

GeometricGraph graph_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("", "graph document must be an object");
    static const char* known[] = {"positions", "velocities", "node_features", "edges",
                                  "two_cells", "target",     "meta"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw SchemaError("/" + it.key(), "unknown key");
    }
    for (const char* required : {"positions", "node_features", "edges"})
        if (!j.contains(required)) throw SchemaError(std::string("/") + required, "missing required field");

    GeometricGraph g;
    g.positions = read_points(j["positions"], "/positions", 0);
    const std::size_t n = g.positions.size();
    const std::size_t d = g.dim();
    if (j.contains("velocities")) {
        g.velocities = read_points(j["velocities"], "/velocities", d);
        if (g.velocities->size() != n)
            throw SchemaError("/velocities", "expected " + std::to_string(n) + " entries");
    }

    const json& nf = j["node_features"];
    if (!nf.is_array()) throw SchemaError("/node_features", "expected an array");
    if (nf.size() != n) throw SchemaError("/node_features", "expected " + std::to_string(n) + " entries");
    for (std::size_t i = 0; i < nf.size(); ++i) {
        g.node_features.push_back(read_real_array(nf[i], ptr("/node_features", i)));
        if (g.node_features.back().size() != g.node_features.front().size())
            throw SchemaError(ptr("/node_features", i), "inconsistent feature width");
    }

    const json& ej = j["edges"];
    if (!ej.is_array()) throw SchemaError("/edges", "expected an array of index pairs");
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (std::size_t i = 0; i < ej.size(); ++i) {
        const std::string at = ptr("/edges", i);
        if (!ej[i].is_array() || ej[i].size() != 2) throw SchemaError(at, "expected a pair of node indices");
        Edge e{read_index(ej[i][0], ptr(at, 0), n), read_index(ej[i][1], ptr(at, 1), n)};
        if (e.u == e.v) throw SchemaError(at, "self-loop");
        if (!seen.insert({std::min(e.u, e.v), std::max(e.u, e.v)}).second) throw SchemaError(at, "duplicate edge");
        g.edges.push_back(e);
    }

    if (j.contains("two_cells")) {
        const json& cj = j["two_cells"];
        if (!cj.is_array()) throw SchemaError("/two_cells", "expected an array of vertex cycles");
        g.two_cells.emplace();
        for (std::size_t i = 0; i < cj.size(); ++i) {
            const std::string at = ptr("/two_cells", i);
            if (!cj[i].is_array() || cj[i].size() < 3) throw SchemaError(at, "expected a cycle of >= 3 vertices");
            VertexCycle cyc;
            for (std::size_t k = 0; k < cj[i].size(); ++k) cyc.push_back(read_index(cj[i][k], ptr(at, k), n));
            g.two_cells->push_back(std::move(cyc));
        }
    }

    if (j.contains("target")) {
        const json& t = j["target"];
        if (t.is_number())
            g.target = read_real(t, "/target");
        else if (t.is_array()) {
            auto pts = read_points(t, "/target", d);
            if (pts.size() != n) throw SchemaError("/target", "expected " + std::to_string(n) + " entries");
            g.target = std::move(pts);
        } else if (!t.is_null())
            throw SchemaError("/target", "expected a number or an array of points");
    }
    if (j.contains("meta")) {
        if (!j["meta"].is_object() && !j["meta"].is_null()) throw SchemaError("/meta", "expected an object");
        g.meta = j["meta"];
    }
    g.validate();
    return g;
}

std::string canonical_dump(const json& j) {
    std::string out;
    dump_value(j, out, 0);
    out += "\n";
    return out;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("", path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

GeometricGraph load_graph(const std::filesystem::path& path) { return graph_from_json(read_json_file(path)); }

void save_graph(const std::filesystem::path& path, const GeometricGraph& g) {
    write_text_file(path, canonical_dump(graph_to_json(g)));
}

std::vector<GeometricGraph> load_dataset(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    if (!j.is_object() || !j.contains("graphs") || !j["graphs"].is_array())
        throw SchemaError("/graphs", "dataset must contain a \"graphs\" array");
    if (j.value("format_version", 0) != kGraphFormatVersion)
        throw SchemaError("/format_version", "unsupported dataset format version");
    std::vector<GeometricGraph> out;
    for (std::size_t i = 0; i < j["graphs"].size(); ++i) {
        try {
            out.push_back(graph_from_json(j["graphs"][i]));
        } catch (const SchemaError& e) {
            throw SchemaError(ptr("/graphs", i) + e.pointer(), e.reason());
        }
    }
    return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<GeometricGraph>& graphs) {
    json j;
    j["format_version"] = kGraphFormatVersion;
    j["graphs"] = json::array();
    for (const auto& g : graphs) j["graphs"].push_back(graph_to_json(g));
    write_text_file(path, canonical_dump(j));
}

}  // namespace empcn
