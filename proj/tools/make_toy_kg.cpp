// Writes the 50-entity synthetic KG used by the tests, plus a matching config.
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "adamf/fixtures.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic toy knowledge graph"};
  std::string dir = "toy";
  std::uint64_t seed = 0;
  std::size_t entities = 50;
  app.add_option("dir", dir, "Output directory");
  app.add_option("--seed", seed, "Dataset seed");
  app.add_option("--entities", entities, "Number of entities");
  CLI11_PARSE(app, argc, argv);

  const adamf::ToyKg kg = adamf::make_toy_kg(entities, seed);
  adamf::write_toy_kg(kg, dir);
  std::ofstream config(std::filesystem::path(dir) / "toy.conf");
  config << adamf::toy_config_text();
  std::cout << "wrote " << dir << '\n';
  return 0;
}
