// Writes a seeded synthetic review corpus plus its category list.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "acsa/corpus.hpp"
#include "acsa/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic review corpus"};
  int n_docs = 32;
  unsigned long long seed = 7;
  std::string out = "synthetic.jsonl";
  std::string categories_out;
  app.add_option("--docs", n_docs, "Number of reviews")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--out", out, "Output JSONL path")->required();
  app.add_option("--categories-out", categories_out, "Also write the category list here");
  CLI11_PARSE(app, argc, argv);

  try {
    acsa::CategorySet cats = acsa::synthetic_categories();
    acsa::write_corpus(out, acsa::make_synthetic(n_docs, seed), cats);
    if (!categories_out.empty()) {
      std::ofstream cf(categories_out);
      for (const std::string& name : cats.names) cf << name << "\n";
    }
    std::cout << "wrote " << n_docs << " reviews to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
