#include "cli.hpp"

int main(int argc, char** argv) {
  return lt3lssl::cli::run(std::vector<std::string>(argv, argv + argc));
}
