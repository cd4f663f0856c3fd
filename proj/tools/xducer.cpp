#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "xducer/corpus.hpp"
#include "xducer/growth.hpp"
#include "xducer/io.hpp"
#include "xducer/layering.hpp"
#include "xducer/mt2sst.hpp"
#include "xducer/oracle.hpp"
#include "xducer/pipeline.hpp"
#include "xducer/semantics.hpp"
#include "xducer/sst2mt.hpp"

using namespace xducer;

namespace {

enum Exit { Ok = 0, Invalid = 1, Rejected = 2, Budget = 3, Exponential = 4, Usage = 64, Io = 74 };

struct Globals {
    bool pretty = false;
};

void print(const Globals& g, const json& j) { std::cout << (g.pretty ? j.dump(2) : j.dump()) << "\n"; }

void write_out(const Machine& m, const std::string& path, const FunctionRegistry& reg = {})
{
    if (path.empty() || path == "-") std::cout << emit_text(m, reg);
    else emit_machine(m, path, reg);
}

MarbleTransducer marble_of(const Machine& m)
{
    if (auto* t = std::get_if<MarbleTransducer>(&m)) return *t;
    if (auto* t = std::get_if<TwoWayTransducer>(&m)) return as_marble(*t);
    throw ModelError("expected a two-way or marble transducer, got " + kind_name(m));
}

RunOptions run_options(std::optional<std::uint64_t> budget, bool trace)
{
    RunOptions o;
    o.budget = budget;
    o.trace = trace;
    o.detect_loops = true;
    return o;
}

int cmd_validate(const Globals& g, const std::string& file)
{
    json r;
    r["file"] = file;
    try {
        auto f = parse_machine(file);
        r["valid"] = true;
        r["kind"] = kind_name(f.machine);
        if (auto* s = std::get_if<SST>(&f.machine)) {
            r["copyless"] = check_copyless(*s).empty();
            if (s->layers) r["layered"] = check_layered(*s, *s->layers).empty();
        }
        if (auto* t = std::get_if<MarbleTransducer>(&f.machine))
            if (t->declared_bound) r["declared_marble_bound"] = *t->declared_bound;
        print(g, r);
        return Ok;
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        r["valid"] = false;
        r["problems"] = json::array({e.what()});
        print(g, r);
        return Invalid;
    }
}

int exit_of(Verdict v)
{
    switch (v) {
    case Verdict::Accept: return Ok;
    case Verdict::BudgetExceeded: return Budget;
    default: return Rejected;
    }
}

int cmd_run(const Globals& g, const std::string& file, const std::string& word, std::optional<std::uint64_t> budget,
            bool trace)
{
    auto f = parse_machine(file);
    const auto& in = std::visit([](const auto& x) -> const Alphabet& { return x.input; }, f.machine);
    auto w = parse_word_arg(in, word);
    auto r = run_machine(f.machine, w, f.registry, run_options(budget, trace));
    if (trace) std::cerr << format_trace(r.trace);
    const auto& out = std::visit([](const auto& x) -> const Alphabet& {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, NAutomaton>) return x.input;
        else return x.output;
    }, f.machine);
    if (r.accepted()) std::cout << render_word(out, r.output) << "\n";
    else if (g.pretty) std::cerr << verdict_name(r.verdict) << (r.detail.empty() ? "" : ": " + r.detail) << "\n";
    return exit_of(r.verdict);
}

int cmd_trace(const Globals& g, const std::string& file, const std::string& word, std::optional<std::uint64_t> budget)
{
    auto f = parse_machine(file);
    const auto& in = std::visit([](const auto& x) -> const Alphabet& { return x.input; }, f.machine);
    auto r = run_machine(f.machine, parse_word_arg(in, word), f.registry, run_options(budget, true));
    if (g.pretty) {
        std::cout << format_trace(r.trace) << verdict_name(r.verdict) << "\n";
    } else {
        json steps = json::array();
        for (const auto& s : r.trace) {
            json stack = json::array();
            for (const auto& e : s.stack) stack.push_back({{"color", e.color}, {"pos", e.pos}});
            steps.push_back({{"step", s.step}, {"state", s.state}, {"head", s.head}, {"stack", stack},
                             {"emitted", s.emitted}});
        }
        print(g, {{"verdict", verdict_name(r.verdict)}, {"output", r.output}, {"steps", r.steps},
                  {"max_stack_depth", r.max_stack_depth}, {"trace", steps}});
    }
    return exit_of(r.verdict);
}

int cmd_convert(const std::string& file, const std::string& to, const std::string& out, const std::string& strategy)
{
    auto f = parse_machine(file);
    if (to == "sst") {
        if (std::holds_alternative<SST>(f.machine)) {
            write_out(f.machine, out, f.registry);
            return Ok;
        }
        write_out(marble_to_sst(marble_of(f.machine)), out);
        return Ok;
    }
    if (std::holds_alternative<TwoWayTransducer>(f.machine) || std::holds_alternative<MarbleTransducer>(f.machine)) {
        write_out(marble_of(f.machine), out);
        return Ok;
    }
    auto* s = std::get_if<SST>(&f.machine);
    if (!s) throw ModelError("cannot convert a " + kind_name(f.machine) + " to a marble transducer");
    if (s->layers) {
        auto st = strategy == "aux" ? LayerStrategy::AuxMarble : LayerStrategy::Exact;
        write_out(layered_to_marble(*s, *s->layers, st), out);
    } else {
        write_out(sst_to_marble(*s), out);
    }
    return Ok;
}

FunctionGrowth analyze(const Machine& m)
{
    if (auto* a = std::get_if<NAutomaton>(&m)) {
        auto r = classify(*a);
        std::optional<int> k;
        if (!r.exponential()) k = std::max(r.degree - 1, 0);
        return {r, k};
    }
    if (auto* s = std::get_if<SST>(&m)) return classify_function(*s);
    return classify_function(marble_to_sst(marble_of(m)));
}

void print_growth(const Globals& g, const FunctionGrowth& fg)
{
    if (!g.pretty) {
        print(g, to_json(fg.report, fg.minimal_marbles));
        return;
    }
    const auto& r = fg.report;
    if (r.exponential()) {
        std::cout << "exponential: heavy cycle at " << r.q << " on " << to_string(r.v) << " (u = " << to_string(r.u)
                  << ", z = " << to_string(r.z) << ")\n";
        return;
    }
    std::cout << "polynomial of degree " << r.degree << "\n";
    if (fg.minimal_marbles) std::cout << "minimal marbles: " << *fg.minimal_marbles << "\n";
    for (std::size_t i = 0; i < r.partition.size(); ++i) {
        std::cout << "  S" << i << ":";
        for (const auto& q : r.partition[i]) std::cout << " " << q;
        std::cout << "\n";
    }
}

int cmd_analyze(const Globals& g, const std::string& file)
{
    auto fg = analyze(parse_machine(file).machine);
    print_growth(g, fg);
    return fg.report.exponential() ? Exponential : Ok;
}

int cmd_optimize(const Globals& g, const std::string& file, const std::string& out, const std::string& dump)
{
    auto f = parse_machine(file);
    int n = 0;
    StageHook hook;
    if (!dump.empty()) {
        std::filesystem::create_directories(dump);
        hook = [&](const std::string& stage, const Machine& m) {
            char idx[8];
            std::snprintf(idx, sizeof idx, "%02d", n++);
            emit_machine(m, std::filesystem::path(dump) / (std::string(idx) + "-" + stage + ".json"));
        };
    }
    if (auto* s = std::get_if<SST>(&f.machine)) {
        auto r = to_k_layered(*s, hook);
        if (r.exponential) {
            print_growth(g, {r.report, std::nullopt});
            return Exponential;
        }
        write_out(r.machine, out);
        return Ok;
    }
    auto r = minimize_marbles(marble_of(f.machine), hook);
    if (r.exponential) {
        print_growth(g, {r.report, std::nullopt});
        return Exponential;
    }
    if (auto t = as_two_way(r.machine); t && r.k == 0) write_out(*t, out);
    else write_out(r.machine, out);
    return Ok;
}

int cmd_equiv(const Globals& g, const std::string& a, const std::string& b, std::size_t maxlen,
              std::optional<std::uint64_t> budget)
{
    auto fa = parse_machine(a), fb = parse_machine(b);
    OracleOptions o;
    o.registry = fa.registry;
    o.registry.insert(fb.registry.begin(), fb.registry.end());
    o.run = run_options(budget, false);
    auto v = equiv_check(fa.machine, fb.machine, maxlen, o);
    json j;
    j["maxlen"] = maxlen;
    j["equivalent"] = v.equivalent();
    if (v.word) {
        auto opt = [](const std::optional<Word>& w) { return w ? json(*w) : json(nullptr); };
        j["counterexample"] = {{"word", *v.word}, {"first", opt(v.first)}, {"second", opt(v.second)}};
    }
    if (v.status == EquivalenceVerdict::Status::Inconclusive) j["inconclusive"] = v.detail;
    print(g, j);
    switch (v.status) {
    case EquivalenceVerdict::Status::Equivalent: return Ok;
    case EquivalenceVerdict::Status::Counterexample: return Rejected;
    default: return Budget;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"word transducer toolkit"};
    app.require_subcommand(1);
    Globals g;
    app.add_flag("--pretty", g.pretty, "human-readable output");

    std::string file, file2, word, to = "sst", out, strategy = "exact", dump;
    std::optional<std::uint64_t> budget;
    bool trace = false;
    std::size_t maxlen = 5;

    auto* v = app.add_subcommand("validate", "check a machine file");
    v->add_option("file", file)->required();
    auto* r = app.add_subcommand("run", "run a machine on a word");
    r->add_option("file", file)->required();
    r->add_option("word", word)->required();
    r->add_option("--budget", budget);
    r->add_flag("--trace", trace);
    auto* t = app.add_subcommand("trace", "run a machine and print every configuration");
    t->add_option("file", file)->required();
    t->add_option("word", word)->required();
    t->add_option("--budget", budget);
    auto* c = app.add_subcommand("convert", "convert between marble transducers and SSTs");
    c->add_option("file", file)->required();
    c->add_option("--to", to)->check(CLI::IsMember({"sst", "marble"}));
    c->add_option("-o,--output", out);
    c->add_option("--strategy", strategy)->check(CLI::IsMember({"exact", "aux"}));
    auto* a = app.add_subcommand("analyze", "growth report");
    a->add_option("file", file)->required();
    auto* o = app.add_subcommand("optimize", "least number of marbles or copy layers");
    o->add_option("file", file)->required();
    o->add_option("-o,--output", out);
    o->add_option("--dump-stages", dump);
    auto* e = app.add_subcommand("equiv", "bounded equivalence check");
    e->add_option("a", file)->required();
    e->add_option("b", file2)->required();
    e->add_option("--maxlen", maxlen);
    e->add_option("--budget", budget);
    for (auto* s : {v, r, t, c, a, o, e}) s->add_flag("--pretty", g.pretty, "human-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& x) {
        return app.exit(x);
    } catch (const CLI::ParseError& x) {
        app.exit(x);
        return Usage;
    }

    try {
        if (*v) return cmd_validate(g, file);
        if (*r) return cmd_run(g, file, word, budget, trace);
        if (*t) return cmd_trace(g, file, word, budget);
        if (*c) return cmd_convert(file, to, out, strategy);
        if (*a) return cmd_analyze(g, file);
        if (*o) return cmd_optimize(g, file, out, dump);
        if (*e) return cmd_equiv(g, file, file2, maxlen, budget);
    } catch (const IoError& x) {
        std::cerr << "error: " << x.what() << "\n";
        return Io;
    } catch (const std::filesystem::filesystem_error& x) {
        std::cerr << "error: " << x.what() << "\n";
        return Io;
    } catch (const std::exception& x) {
        std::cerr << "error: " << x.what() << "\n";
        return Invalid;
    }
    return Usage;
}
