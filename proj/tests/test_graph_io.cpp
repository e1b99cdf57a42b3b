#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"

#include "empcn/datagen.hpp"
#include "empcn/graph_io.hpp"

using namespace empcn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    auto p = fs::temp_directory_path() / "empcn_graph_io_test";
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json minimal() {
    return {{"positions", {{0.0, 0.0}, {1.0, 0.5}}}, {"node_features", {{1.0}, {2.0}}}, {"edges", {{0, 1}}}};
}

std::string pointer_of(const json& j) {
    try {
        graph_from_json(j);
    } catch (const SchemaError& e) {
        return e.pointer();
    }
    return "<accepted>";
}

}  // namespace

TEST_CASE("minimal graph round trips byte for byte") {
    const auto dir = temp_dir();
    const auto g = graph_from_json(minimal());
    save_graph(dir / "a.json", g);
    const auto back = load_graph(dir / "a.json");
    save_graph(dir / "b.json", back);
    CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));
    CHECK(back.positions == g.positions);
    CHECK(back.edges == g.edges);
}

TEST_CASE("full graph round trips, including awkward reals") {
    const auto dir = temp_dir();
    auto t = data::simulate_nbody(data::NBodyConfig{}, 5).initial;
    t.positions[0][0] = 0.1 + 0.2;
    t.positions[1][2] = -1e-300;
    t.two_cells = std::vector<VertexCycle>{{0, 1, 2}};
    save_graph(dir / "c.json", t);
    const auto back = load_graph(dir / "c.json");
    CHECK(back.positions == t.positions);
    CHECK(back.velocities == t.velocities);
    CHECK(back.target == t.target);
    CHECK(back.two_cells == t.two_cells);
    CHECK(back.meta == t.meta);
    save_graph(dir / "d.json", back);
    CHECK(read_file(dir / "c.json") == read_file(dir / "d.json"));
}

TEST_CASE("scalar targets round trip") {
    auto j = minimal();
    j["target"] = -3.25;
    const auto g = graph_from_json(j);
    CHECK(std::get<double>(g.target) == -3.25);
    CHECK(graph_to_json(g)["target"] == -3.25);
}

TEST_CASE("schema violations point at the offending field") {
    auto j = minimal();
    j.erase("positions");
    CHECK(pointer_of(j) == "/positions");

    j = minimal();
    j["positions"][1][1] = std::nan("");
    CHECK(pointer_of(j) == "/positions/1/1");

    j = minimal();
    j["positions"][1][0] = "1.0";
    CHECK(pointer_of(j) == "/positions/1/0");

    j = minimal();
    j["edges"] = {{0, 2}};
    CHECK(pointer_of(j) == "/edges/0/1");

    j = minimal();
    j["edges"] = {{1, 1}};
    CHECK(pointer_of(j) == "/edges/0");

    j = minimal();
    j["edges"] = {{0, 1}, {1, 0}};
    CHECK(pointer_of(j) == "/edges/1");

    j = minimal();
    j["velocities"] = {{0.0, 0.0}};
    CHECK(pointer_of(j) == "/velocities");

    j = minimal();
    j["node_features"] = {{1.0}, {2.0, 3.0}};
    CHECK(pointer_of(j) == "/node_features/1");

    j = minimal();
    j["colour"] = "red";
    CHECK(pointer_of(j) == "/colour");

    j = minimal();
    j["positions"] = {{0.0, 0.0}, {1.0}};
    CHECK(pointer_of(j).rfind("/positions/1", 0) == 0);
}

TEST_CASE("loader errors name the file") {
    try {
        load_graph("/definitely/not/here.json");
        FAIL("expected an error");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("/definitely/not/here.json") != std::string::npos);
    }
}

TEST_CASE("datasets round trip and report the failing graph") {
    const auto dir = temp_dir();
    const auto splits = data::make_nbody_dataset(3, 1, 1, 1, data::NBodyConfig{});
    save_dataset(dir / "set.json", splits.train);
    const auto back = load_dataset(dir / "set.json");
    REQUIRE(back.size() == 3);
    CHECK(back[2].positions == splits.train[2].positions);

    json bad = read_json_file(dir / "set.json");
    bad["graphs"][1].erase("edges");
    std::ofstream(dir / "bad.json") << bad.dump();
    try {
        load_dataset(dir / "bad.json");
        FAIL("expected an error");
    } catch (const SchemaError& e) {
        CHECK(e.pointer() == "/graphs/1/edges");
    }
    bad = read_json_file(dir / "set.json");
    bad["format_version"] = 7;
    std::ofstream(dir / "ver.json") << bad.dump();
    CHECK_THROWS_AS(load_dataset(dir / "ver.json"), SchemaError);
}

TEST_CASE("fuzzed documents are rejected or load as valid graphs") {
    std::mt19937_64 rng(17);
    const json base = graph_to_json(data::simulate_nbody(data::NBodyConfig{}, 9).initial);
    const std::vector<json> junk{nullptr, -1, 99, 0.5, "x", json::array(), json::object(), {1, 2}, {{0, 0}}, 1e308};
    int rejected = 0, accepted = 0;
    for (int trial = 0; trial < 200; ++trial) {
        json j = base;
        const int edits = 1 + static_cast<int>(rng() % 3);
        for (int e = 0; e < edits; ++e) {
            auto flat = j.flatten();
            auto it = flat.begin();
            std::advance(it, static_cast<long>(rng() % flat.size()));
            switch (rng() % 3) {
                case 0: it.value() = junk[rng() % junk.size()]; break;
                case 1: flat.erase(it); break;
                default:
                    if (it.value().is_number()) it.value() = -it.value().get<double>();
                    break;
            }
            try {
                j = flat.unflatten();
            } catch (const json::exception&) {
            }
        }
        try {
            const auto g = graph_from_json(j);
            CHECK_NOTHROW(g.validate());
            ++accepted;
        } catch (const SchemaError&) {
            ++rejected;
        } catch (const std::invalid_argument&) {
            ++rejected;
        }
    }
    CHECK(rejected + accepted == 200);
    CHECK(rejected > 50);
}

TEST_CASE("canonical dump prints reals with 17 significant digits and sorted keys") {
    const json j{{"b", 0.1}, {"a", 1}, {"c", {{"z", true}, {"y", nullptr}}}};
    const auto s = canonical_dump(j);
    CHECK(s.find("0.10000000000000001") != std::string::npos);
    CHECK(s.find("\"a\"") < s.find("\"b\""));
    CHECK(s.find("\"y\"") < s.find("\"z\""));
    CHECK(json::parse(s) == j);
}

TEST_CASE("shipped schema lists exactly the accepted keys") {
    const auto schema = read_json_file(fs::path(EMPCN_SOURCE_DIR) / "schemas" / "graph.schema.json");
    std::set<std::string> keys;
    for (auto it = schema.at("properties").begin(); it != schema.at("properties").end(); ++it) keys.insert(it.key());
    CHECK(keys == std::set<std::string>{"positions", "velocities", "node_features", "edges", "two_cells", "target",
                                        "meta"});
    std::set<std::string> required;
    for (const auto& r : schema.at("required")) required.insert(r.get<std::string>());
    CHECK(required == std::set<std::string>{"positions", "node_features", "edges"});
}
