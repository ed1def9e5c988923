// Stand-alone oracle segmenter speaking the slice plugin protocol:
//   mpseg-oracle --reference <labels header> --input <manifest> --output <dir>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mpseg/error.hpp"
#include "mpseg/segmenter.hpp"
#include "mpseg/volume_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mpseg-oracle: one-hot slice predictions from reference labels"};
  std::string reference, input, output;
  app.add_option("--reference", reference, "Reference label volume header")->required();
  app.add_option("--input", input, "Slice manifest")->required();
  app.add_option("--output", output, "Output directory")->required();
  CLI11_PARSE(app, argc, argv);
  try {
    mpseg::serve_oracle(mpseg::read_labels(reference), input, output);
  } catch (const std::exception& e) {
    std::cerr << "mpseg-oracle: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
