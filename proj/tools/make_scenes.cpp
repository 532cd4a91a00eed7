// Writes the demo scene files into a directory.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rna/demo_scenes.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write demo scene JSON files"};
  std::string out = "scenes";
  app.add_option("--out", out, "Output directory");
  CLI11_PARSE(app, argc, argv);
  std::filesystem::create_directories(out);
  auto write = [&](const std::string& name, const nlohmann::json& doc) {
    std::ofstream(std::filesystem::path(out) / name) << doc.dump(1) << "\n";
  };
  write("blocks.json", rna::translucent_blocks_scene());
  write("fibers.json", rna::fiber_clump_scene());
  write("fibers_gain0.json", rna::fiber_clump_scene(20, 10, 0.0));
  std::cout << "wrote scenes to " << out << "\n";
  return 0;
}
