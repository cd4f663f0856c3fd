#include <iostream>

#include "xducer/corpus.hpp"
#include "xducer/io.hpp"

// Writes every bundled machine to <dir>/<name>.json.
int main(int argc, char** argv)
{
    if (argc != 2) {
        std::cerr << "usage: gen_corpus <dir>\n";
        return 64;
    }
    std::filesystem::path dir(argv[1]);
    try {
        std::filesystem::create_directories(dir);
        for (const auto& [name, m] : xducer::corpus::all()) xducer::emit_machine(m, dir / (name + ".json"));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 74;
    }
    return 0;
}
