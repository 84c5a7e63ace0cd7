// Regenerates the bundled test images in tests/data. The images are committed
// so tests do not depend on this tool at runtime; rerun it only when the
// recipe changes, then re-commit the outputs.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "gsjbu/io.hpp"
#include "support/fixtures.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generate the bundled test images"};
    std::string out_dir;
    int count = 10;
    int size = 224;
    std::uint64_t seed_base = 1000;
    app.add_option("--out-dir", out_dir, "target directory")->required();
    app.add_option("--count", count, "number of images")->capture_default_str();
    app.add_option("--size", size, "image side length")->capture_default_str();
    app.add_option("--seed-base", seed_base, "seed of the first image")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    for (int i = 0; i < count; ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "natural_%02d.png", i);
        std::string path = out_dir + "/" + name;
        gsjbu::write_image(fixtures::natural_image(seed_base + i, size), path);
        std::printf("wrote %s\n", path.c_str());
    }
    return 0;
}
