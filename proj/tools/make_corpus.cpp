// Regenerates the bundled synthetic caption corpus. Usage:
//   make_corpus <output.jsonl> [count] [seed]

#include <cstdlib>
#include <iostream>
#include <string>

#include "ham/dataset_io.hpp"
#include "ham/synthetic.hpp"

int main(int argc, char** argv) {
    if (argc < 2 || argc > 4) {
        std::cerr << "usage: make_corpus <output.jsonl> [count] [seed]\n";
        return 1;
    }
    const std::string path = argv[1];
    const size_t count = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 300;
    const uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 7;
    try {
        const auto records = ham::synthetic::generate_captions(count, seed);
        ham::write_captions(records, path);
    } catch (const ham::Error& e) {
        std::cerr << "kind=" << e.kind() << " msg=\"" << e.what() << "\"\n";
        return e.kind() == "io" ? 2 : 1;
    }
    std::cout << "wrote " << count << " captions to " << path << "\n";
    return 0;
}
