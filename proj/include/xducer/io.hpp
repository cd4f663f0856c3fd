#pragma once

#include <filesystem>

#include <json.hpp>

#include "xducer/growth.hpp"
#include "xducer/machines.hpp"

namespace xducer {

using json = nlohmann::json;

// Malformed document; `path` is a JSON pointer to the offending field.
struct SchemaError : ModelError {
    SchemaError(const std::string& path, const std::string& msg) : ModelError(path + ": " + msg), path(path) {}
    std::string path;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MachineFile {
    Machine machine;
    FunctionRegistry registry;  // optional "registry" section, for SST-F and NSST-F
};

json to_json(const Machine& m, const FunctionRegistry& registry = {});
// Throws SchemaError on shape errors and ModelError if validate reports problems.
MachineFile from_json(const json& j);

// Sorted keys, two-space indent, trailing newline.
std::string emit_text(const Machine& m, const FunctionRegistry& registry = {});
MachineFile parse_machine(const std::filesystem::path& p);
void emit_machine(const Machine& m, const std::filesystem::path& p, const FunctionRegistry& registry = {});

json to_json(const Word& w);
json to_json(const GrowthReport& r, std::optional<int> minimal_marbles = std::nullopt);

// Comma-separated when some symbol is longer than one code point, else one symbol per code point.
Word parse_word_arg(const Alphabet& a, const std::string& text);
std::string render_word(const Alphabet& a, const Word& w);

}  // namespace xducer
