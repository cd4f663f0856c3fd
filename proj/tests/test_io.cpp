#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "util.hpp"
#include "xducer/corpus.hpp"
#include "xducer/io.hpp"
#include "xducer/semantics.hpp"

using namespace xducer;
using namespace testutil;

TEST_CASE("machine files round-trip")
{
    for (const auto& [name, m] : corpus::all()) {
        CAPTURE(name);
        auto text = emit_text(m);
        auto back = from_json(json::parse(text));
        CHECK(back.machine == m);
        CHECK(emit_text(back.machine) == text);
    }
    NAutomaton a;
    a.input = {"a"};
    a.states = {"x", "y"};
    a.alpha = {1, 0};
    a.beta = {0, 1};
    a.mu["a"] = {{1, 1}, {0, 1}};
    CHECK(std::get<NAutomaton>(from_json(to_json(a)).machine) == a);

    // Fun tokens and an embedded registry survive.
    SST f;
    f.input = {"a", "b"};
    f.output = {"a", "b", "c"};
    f.states = {"q"};
    f.initial = "q";
    f.registers = {"y"};
    f.functions = {"f"};
    f.init["y"] = {};
    for (const auto& a : f.input) f.delta[{"q", a}] = {"q", {{"y", {Token::fun("f"), Token::reg("y")}}}};
    f.out["q"] = {Token::reg("y")};
    FunctionRegistry reg{{"f", corpus::reverse_sst()}};
    auto j = to_json(f, reg);
    CHECK(j.at("kind") == "sstf");
    CHECK(j.at("transitions")[0].at("update").at("y")[0] == json{{"fun", "f"}});
    auto back = from_json(j);
    CHECK(back.machine == Machine(f));
    CHECK(back.registry.at("f") == Machine(corpus::reverse_sst()));
    // y := f(w[1:m]) y, with f the mirror.
    CHECK(run_machine(back.machine, w("ab"), back.registry).output == w("baa"));
}

TEST_CASE("machine files on disk")
{
    auto dir = std::filesystem::temp_directory_path() / "xducer_io_test";
    std::filesystem::create_directories(dir);
    auto p = dir / "mul.json";
    emit_machine(corpus::mul_sst(), p);
    auto f = parse_machine(p);
    CHECK(run_machine(f.machine, w("ab#00")).output == w("ab#ab#"));
    CHECK_THROWS_AS(parse_machine(dir / "missing.json"), IoError);

    std::ofstream(dir / "bad.json") << "{\"kind\": ";
    CHECK_THROWS_AS(parse_machine(dir / "bad.json"), SchemaError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("schema errors name the field")
{
    auto j = to_json(corpus::exp_marble());
    j["transitions"][0].erase("target");
    try {
        from_json(j);
        FAIL("accepted a transition without target");
    } catch (const SchemaError& e) {
        CHECK(e.path == "/transitions/0/target");
    }
    j = to_json(corpus::reverse_sst());
    j["output"]["q"][0] = json{{"var", "x"}};
    CHECK_THROWS_AS(from_json(j), SchemaError);
    j = to_json(corpus::reverse_sst());
    j["kind"] = "pebble";
    CHECK_THROWS_AS(from_json(j), SchemaError);

    // A right move under a marble is a validation error naming the triple.
    auto t = corpus::mul_marble();
    auto c = t.colors.front();
    t.delta[{t.states.front(), t.input.front(), c}] = {t.states.front(), MarbleAction::right(), {}};
    try {
        from_json(to_json(t));
        FAIL("accepted a right move on a marble");
    } catch (const SchemaError&) {
        FAIL("expected a validation error");
    } catch (const ModelError& e) {
        CHECK(std::string(e.what()).find("(" + t.states.front() + "," + t.input.front() + "," + c + ")") !=
              std::string::npos);
    }
}

TEST_CASE("word arguments")
{
    CHECK(parse_word_arg({"a", "b"}, "abba") == w("abba"));
    CHECK(parse_word_arg({"a", "b"}, "").empty());
    CHECK(parse_word_arg({"ab", "c"}, "ab,c,ab") == Word{"ab", "c", "ab"});
    CHECK(render_word({"ab", "c"}, Word{"ab", "c"}) == "ab,c");
    CHECK(render_word({"a"}, w("aa")) == "aa");
}
