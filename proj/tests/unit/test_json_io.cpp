#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "properpo/json_io.hpp"

using namespace properpo;
using io::json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fixture_path(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

}  // namespace

TEST_CASE("config hash is FNV-1a of the canonical dump") {
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);  // published test vector
    const json a = json::parse(R"({"b": 1, "a": [1, 2]})");
    const json b = json::parse(R"({"a": [1, 2], "b": 1})");
    CHECK(io::config_hash(a) == io::config_hash(b));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(a.dump())));
    CHECK(io::config_hash(a) == std::string(buf));
    CHECK(io::config_hash(a) != io::config_hash(json::parse(R"({"a": [2, 1], "b": 1})")));
}

TEST_CASE("parse errors carry line and column") {
    try {
        io::parse_text("{\n  \"a\": 1\n  \"b\": 2\n}");
        FAIL("expected ParseError");
    } catch (const io::ParseError& e) {
        CHECK(e.line == 3);
        CHECK(e.column >= 3);
    }
    try {
        io::read_file(fixture_path("malformed.json"));
        FAIL("expected ParseError");
    } catch (const io::ParseError& e) {
        CHECK(e.line == 4);
        CHECK(std::string(e.what()).find("malformed.json") != std::string::npos);
    }
    CHECK_THROWS_AS(io::read_file(fixture_path("does_not_exist.json")), InvalidArgument);
}

TEST_CASE("choice tables round trip") {
    const auto t = io::table_from_json(io::read_file(fixture_path("btl_table.json")));
    CHECK(t.m() == 2);
    CHECK(t.n() == 2);
    CHECK(t.actions == std::vector<std::string>{"a", "b"});
    const auto back = io::table_from_json(io::to_json(t));
    CHECK(back.probs == t.probs);
    CHECK_THROWS_AS(io::table_from_json(json::parse(R"({"probs": [[[0.5, "x"], [0.5, 0.5]]]})")), io::SchemaError);
    CHECK_THROWS_AS(io::table_from_json(json::parse(R"({"schema_version": 7, "probs": [[[0.5]]]})")),
                    io::SchemaError);
    try {
        io::table_from_json(json::parse(R"({"probs": [[[0.5, 0.9], [0.5, 0.5]]]})"));
        FAIL("expected SchemaError");
    } catch (const io::SchemaError& e) {
        CHECK(e.path.rfind("table", 0) == 0);
    }
}

TEST_CASE("certificates encode infinities as strings") {
    ProperCertificate c;
    c.loss_id = "x";
    c.margin = kInf;
    const json j = io::to_json(c);
    CHECK(j["margin"] == "inf");
    CHECK(j["pass"] == true);
    c.proper = false;
    c.margin = -0.25;
    c.worst_p = {1.0, 0.0};
    c.worst_q = {0.5, 0.5};
    const json w = io::to_json(c);
    CHECK(w["witness"]["regret"] == -0.25);
    CHECK(w["witness"]["p"] == json::array({1.0, 0.0}));
    AxiomVerdict v;
    v.axiom = "wedge";
    v.pass = false;
    v.witness = {2, 0, 1};
    v.values = {std::nan("")};
    const json vj = io::to_json(v);
    CHECK(vj["values"][0] == "nan");
    CHECK(vj["witness"] == json::array({2, 0, 1}));
}

TEST_CASE("pipeline specs from JSON") {
    const auto dpo = io::spec_from_json(json::parse(R"({"recipe": "dpo", "n": 3})"));
    CHECK(dpo.lb.n == 3);
    CHECK(dpo.psi(0.0) == doctest::Approx(std::log(2.0)));
    const auto pppo = io::spec_from_json(json::parse(
        R"({"recipe": "pppo", "n": 3, "loss_a": {"id": "matsushita", "tau": 1, "mu": 1}, "loss_b": "log",
            "margin": {"a": 2, "c": 0.5}, "length_mode": "kl_geometric", "lengths": [1, 2, 3]})"));
    CHECK(pppo.recipe == Recipe::pppo);
    CHECK(pppo.a == 2.0);
    CHECK(pppo.c == 0.5);
    CHECK(pppo.length_mode == LengthMode::kl_geometric);
    CHECK(pppo.lengths == std::vector<double>{1, 2, 3});
    const auto pmpo = io::spec_from_json(json::parse(R"({"recipe": "pmpo", "n": 2, "psi": "exp", "loss_b": "log"})"));
    CHECK(pmpo.recipe == Recipe::pmpo);
    CHECK(pmpo.psi(1.0) == doctest::Approx(std::exp(1.0)));
    const auto phi = io::spec_from_json(json::parse(R"({"recipe": "phi_po", "n": 3, "potential": "square"})"));
    CHECK(phi.recipe == Recipe::phi_po);

    auto path_of = [](const char* text) {
        try {
            io::spec_from_json(json::parse(text));
        } catch (const io::SchemaError& e) {
            return e.path;
        }
        return std::string("<none>");
    };
    CHECK(path_of(R"({"recipe": "ppo", "n": 3})") == "spec.recipe");
    CHECK(path_of(R"({"recipe": "dpo"})") == "spec.n");
    CHECK(path_of(R"({"recipe": "dpo", "n": 3, "margin": {"a": "x"}})") == "spec.margin.a");
    CHECK(path_of(R"({"recipe": "dpo", "n": 3, "margin": {"a": 0}})") == "spec.margin.a");
    CHECK(path_of(R"({"recipe": "dpo", "n": 2, "lengths": [1, 0.5]})") == "spec.lengths[1]");
    CHECK(path_of(R"({"recipe": "phi_po", "n": 3, "potential": "nope"})") == "spec.potential");
    CHECK(path_of(R"({"recipe": "dpo", "n": 3, "length_mode": "cubic"})") == "spec.length_mode");
}

TEST_CASE("task and training options from JSON") {
    const json cfg = io::read_file(fixture_path("train_dpo.json"));
    const auto task = io::task_from_json(cfg["task"]);
    CHECK(task.m == 2);
    CHECK(task.n == 3);
    CHECK(task.samples == 2000);
    CHECK(task.rewards[1][1] == 2.0);
    CHECK(task.F_gen(0.0) == doctest::Approx(0.5));
    const auto opts = io::train_options_from_json(cfg["train"]);
    CHECK(opts.steps == 200);
    CHECK(opts.lr == 1.0);
    CHECK(opts.mode == TrainMode::expected);
    CHECK_THROWS_AS(io::task_from_json(json::parse(R"({"m": -1})")), io::SchemaError);
    CHECK_THROWS_AS(io::train_options_from_json(json::parse(R"({"mode": "online"})")), io::SchemaError);
    const json bad = io::read_file(fixture_path("train_bad_schema.json"));
    CHECK_THROWS_AS(io::spec_from_json(bad["spec"]), io::SchemaError);
}
