// Regenerates data/demo/fixtures/llm.json from data/demo/script.json.
//
//   make_demo_fixtures <demo-dir> [<scratch-dir>]

#include <filesystem>
#include <iostream>

#include "demo_script.hpp"
#include "noteeline/errors.hpp"
#include "noteeline/fsutil.hpp"

int main(int argc, char** argv) {
    namespace fs = std::filesystem;
    if (argc < 2) {
        std::cerr << "usage: make_demo_fixtures <demo-dir> [<scratch-dir>]\n";
        return 2;
    }
    fs::path demo = argv[1];
    fs::path scratch = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "noteeline-demo-record";
    try {
        auto bytes = noteeline::demo::record_demo_fixtures(demo, scratch);
        auto target = demo / "fixtures" / "llm.json";
        noteeline::fsutil::write_file_atomic(target, bytes);
        std::cout << "wrote " << target.string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
