// Regenerates tests/golden from the fixed cases. Run after an intended
// rendering change and review the diff.
#include "../tests/golden_cases.hpp"

#include <iostream>

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: ctree_make_golden <golden-dir>\n";
    return 1;
  }
  std::filesystem::create_directories(argv[1]);
  for (const auto& [name, svg] : ctree::testing::golden_cases()) {
    ctree::csv::write_file((std::filesystem::path(argv[1]) / name).string(), svg);
    std::cout << name << "\n";
  }
  return 0;
}
