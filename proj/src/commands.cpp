#include "empcn/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "empcn/checks.hpp"
#include "empcn/datagen.hpp"
#include "empcn/graph_io.hpp"
#include "empcn/invariants.hpp"
#include "empcn/lifting.hpp"
#include "empcn/model.hpp"
#include "empcn/train.hpp"

namespace empcn::cli {

using nlohmann::json;
namespace fs = std::filesystem;

json default_run_config() {
    json model = model::to_json(model::ModelConfig{});
    model.erase("messages");
    model.erase("init_seed");
    json train = model::to_json(model::TrainConfig{});
    train.erase("seed");
    json check = checks::to_json(checks::CheckSettings{});
    check.erase("seed");
    json simulate = data::to_json(data::NBodyConfig{});
    simulate["n_train"] = 500;
    simulate["n_val"] = 100;
    simulate["n_test"] = 100;
    return {{"seed", 0},
            {"input", ""},
            {"output", "."},
            {"checkpoint", ""},
            {"train_data", ""},
            {"val_data", ""},
            {"eval_data", ""},
            {"invariant_channel", "2->0:point"},
            {"lift", to_json(LiftConfig{})},
            {"model", model},
            {"train", train},
            {"simulate", simulate},
            {"check", check}};
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("--set expects dotted.key=value, got \"" + assignment + "\"");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &config;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].empty()) throw std::invalid_argument("empty key segment in \"" + path + "\"");
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) throw std::invalid_argument("\"" + path + "\" goes through a non-object value");
        if (i + 1 == parts.size()) (*node)[parts[i]] = value;
        else node = &(*node)[parts[i]];
    }
}

namespace {

void validate_sections(const json& c) {
    const json defaults = default_run_config();
    for (auto it = c.begin(); it != c.end(); ++it)
        if (!defaults.contains(it.key()) && it.key() != "task")
            throw std::invalid_argument("unknown config key \"" + it.key() + "\"");
    lift_config_from_json(c.at("lift"));
    model::model_config_from_json(c.at("model"));
    model::train_config_from_json(c.at("train"));
    checks::check_settings_from_json(c.at("check"));
    json sim = c.at("simulate");
    for (const char* k : {"n_train", "n_val", "n_test", "seed"}) sim.erase(k);
    data::nbody_config_from_json(sim);
}

fs::path out_path(const json& c, const std::string& name) { return fs::path(c.at("output").get<std::string>()) / name; }

std::string required_path(const json& c, const std::string& key) {
    const auto p = c.at(key).get<std::string>();
    if (p.empty()) throw std::invalid_argument("config key \"" + key + "\" must name a file");
    return p;
}

json report_header(const json& c) { return {{"version", kVersion}, {"config", c}}; }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int cmd_lift(const json& c, std::ostream& log) {
    GeometricGraph g = load_graph(required_path(c, "input"));
    const auto rings = lift(g, lift_config_from_json(c.at("lift")));
    g.two_cells = rings;
    const auto path = out_path(c, "lifted.json");
    save_graph(path, g);
    log << "cells: rank0=" << g.num_nodes() << " rank1=" << g.edges.size() << " rank2=" << rings.size() << " -> "
        << path.string() << "\n";
    return kExitOk;
}

int cmd_invariants(const json& c, std::ostream& log) {
    GeometricGraph g = load_graph(required_path(c, "input"));
    std::vector<VertexCycle> rings = g.two_cells ? *g.two_cells : lift(g, lift_config_from_json(c.at("lift")));
    const auto complex = build_complex(g, rings);
    const auto kind = inv::message_kind_from_string(c.at("invariant_channel").get<std::string>());
    const auto mc = model::model_config_from_json(c.at("model"));
    const auto schema = mc.invariants.schema(kind);
    for (auto i : schema) inv::check_applicable(i, kind);

    std::ostringstream csv;
    csv << "kind,receiver,sender";
    for (auto i : schema) csv << "," << inv::to_string(i);
    csv << "\n";
    std::size_t rows = 0;
    for (std::uint32_t r = 0; r < complex.num_cells(kind.receiver_rank); ++r) {
        const CellId recv{kind.receiver_rank, r};
        for (const auto& in : incoming(complex, kind.adjacency, recv, kind.sender_rank)) {
            const auto v = inv::compute_invariants(kind, recv, in.sender, complex, g.positions, schema);
            csv << inv::to_string(kind) << "," << r << "," << in.sender.index;
            for (double x : v.values) csv << "," << fmt(x);
            csv << "\n";
            ++rows;
        }
    }
    const auto path = out_path(c, "invariants.csv");
    write_text_file(path, csv.str());
    log << rows << " rows for " << inv::to_string(kind) << " -> " << path.string() << "\n";
    return kExitOk;
}

int cmd_simulate(const json& c, std::ostream& log) {
    json sim = c.at("simulate");
    const auto n_train = sim.at("n_train").get<std::size_t>();
    const auto n_val = sim.at("n_val").get<std::size_t>();
    const auto n_test = sim.at("n_test").get<std::size_t>();
    const auto seed = sim.at("seed").get<std::uint64_t>();
    for (const char* k : {"n_train", "n_val", "n_test", "seed"}) sim.erase(k);
    const auto cfg = data::nbody_config_from_json(sim);
    const auto splits = data::make_nbody_dataset(n_train, n_val, n_test, seed, cfg);
    save_dataset(out_path(c, "train.json"), splits.train);
    save_dataset(out_path(c, "val.json"), splits.val);
    save_dataset(out_path(c, "test.json"), splits.test);
    json report = report_header(c);
    report["counts"] = {{"train", n_train}, {"val", n_val}, {"test", n_test}};
    write_text_file(out_path(c, "simulate.json"), canonical_dump(report));
    log << "simulated " << n_train << "/" << n_val << "/" << n_test << " trajectories -> "
        << c.at("output").get<std::string>() << "\n";
    return kExitOk;
}

std::vector<model::Plan> load_plans(const std::string& path, const json& c, const model::ModelConfig& mc) {
    const auto graphs = load_dataset(path);
    if (graphs.empty()) throw std::invalid_argument(path + ": dataset is empty");
    const auto lc = lift_config_from_json(c.at("lift"));
    std::vector<model::Plan> plans;
    for (const auto& g : graphs) plans.push_back(model::prepare_sample(g, lc, mc));
    return plans;
}

const char* metric_name(const model::Model& m) { return m.config.readout == model::Readout::Positions ? "mse" : "mae"; }

int cmd_train(const json& c, std::ostream& log) {
    const auto mc = model::model_config_from_json(c.at("model"));
    const auto tc = model::train_config_from_json(c.at("train"));
    const auto train_set = load_plans(required_path(c, "train_data"), c, mc);
    std::vector<model::Plan> val_set;
    if (!c.at("val_data").get<std::string>().empty()) val_set = load_plans(c.at("val_data"), c, mc);
    auto m = model::build_model(mc, train_set.front().feature_width, train_set.front().dim);

    std::ostringstream curve;
    curve << "epoch,train_loss,val_metric\n";
    model::TrainResult result;
    try {
        result = model::train(m, train_set, val_set, tc, [&](const model::EpochRecord& r) {
            curve << r.epoch << "," << fmt(r.train_loss) << "," << fmt(r.val_metric) << "\n";
        });
    } catch (const std::runtime_error& e) {
        throw RunFailed(std::string("training aborted: ") + e.what());
    }
    json ckpt = model::checkpoint_to_json(m);
    ckpt["target_stats"] = {{"mean", result.stats.mean}, {"mad", result.stats.mad}};
    write_text_file(out_path(c, "checkpoint.json"), canonical_dump(ckpt));
    write_text_file(out_path(c, "curve.csv"), curve.str());

    json report = report_header(c);
    report["parameters"] = m.params.total_count();
    report["widths"] = m.width;
    if (!val_set.empty()) {
        report[metric_name(m)] = result.history.empty() ? result.initial_val_metric : result.history.back().val_metric;
        report["initial_" + std::string(metric_name(m))] = result.initial_val_metric;
        if (mc.readout == model::Readout::Positions) report["identity_mse"] = model::identity_mse(val_set);
    }
    write_text_file(out_path(c, "metrics.json"), canonical_dump(report));
    log << "trained " << tc.epochs << " epochs, " << m.params.total_count() << " parameters";
    if (!val_set.empty()) log << ", val " << metric_name(m) << " " << report[metric_name(m)].get<double>();
    log << "\n";
    return kExitOk;
}

int cmd_eval(const json& c, std::ostream& log) {
    const json ckpt = read_json_file(required_path(c, "checkpoint"));
    const auto m = model::model_from_checkpoint(ckpt);
    model::TargetStats stats;
    if (ckpt.contains("target_stats")) {
        stats.mean = ckpt["target_stats"].at("mean").get<double>();
        stats.mad = ckpt["target_stats"].at("mad").get<double>();
    }
    std::string data = c.at("eval_data").get<std::string>();
    if (data.empty()) data = required_path(c, "input");
    const auto plans = load_plans(data, c, m.config);
    const double metric = model::evaluate(m, plans, stats, model::train_config_from_json(c.at("train")).batch_size);
    json report = report_header(c);
    report[metric_name(m)] = metric;
    write_text_file(out_path(c, "eval.json"), canonical_dump(report));
    log << metric_name(m) << " " << fmt(metric) << "\n";
    return kExitOk;
}

int cmd_check(const json& c, std::ostream& log) {
    const auto mc = model::model_config_from_json(c.at("model"));
    const auto lc = lift_config_from_json(c.at("lift"));
    const auto s = checks::check_settings_from_json(c.at("check"));
    const auto results = checks::run_all_checks(mc, lc, s);
    json report = report_header(c);
    report["checks"] = json::array();
    bool ok = true;
    for (const auto& r : results) {
        report["checks"].push_back(checks::to_json(r));
        ok = ok && r.passed;
        log << (r.passed ? "PASS " : "FAIL ") << r.name << " error=" << r.error << " tolerance=" << r.tolerance
            << " trials=" << r.trials << "\n";
    }
    report["passed"] = ok;
    write_text_file(out_path(c, "check_report.json"), canonical_dump(report));
    return ok ? kExitOk : kExitFailed;
}

}  // namespace

json resolve_config(const json& file_config, const std::vector<std::string>& overrides,
                    std::optional<std::uint64_t> seed, std::optional<std::string> out_dir) {
    json c = default_run_config();
    if (!file_config.is_null()) {
        if (!file_config.is_object()) throw std::invalid_argument("config file must hold a JSON object");
        c.merge_patch(file_config);
    }
    for (const auto& o : overrides) apply_override(c, o);
    if (seed) c["seed"] = *seed;
    if (out_dir) c["output"] = *out_dir;
    const auto s = c.at("seed").get<std::uint64_t>();
    if (!c["model"].contains("init_seed")) c["model"]["init_seed"] = s;
    if (!c["train"].contains("seed")) c["train"]["seed"] = s;
    if (!c["check"].contains("seed")) c["check"]["seed"] = s;
    if (!c["simulate"].contains("seed")) c["simulate"]["seed"] = s;
    validate_sections(c);
    return c;
}

int run_command(const std::string& task, const json& config, std::ostream& log) {
    json c = config;
    c["task"] = task;
    if (task == "lift") return cmd_lift(c, log);
    if (task == "invariants") return cmd_invariants(c, log);
    if (task == "simulate") return cmd_simulate(c, log);
    if (task == "train") return cmd_train(c, log);
    if (task == "eval") return cmd_eval(c, log);
    if (task == "check") return cmd_check(c, log);
    throw std::invalid_argument("unknown task \"" + task + "\"");
}

}  // namespace empcn::cli
