// Serves a saved culture model over the line-delimited scorer contract:
// one {"text": ...} request per input line, one {"score": ...} reply per
// output line.
//
//   cdi-scorer <model.json>

#include <iostream>
#include <string>

#include "json.hpp"

#include "cdi/classifier.hpp"
#include "cdi/error.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: cdi-scorer <model.json>\n";
    return 2;
  }
  try {
    const auto model = cdi::classifier::load_model(argv[1]);
    std::string line;
    while (std::getline(std::cin, line)) {
      if (line.empty()) continue;
      nlohmann::json reply;
      try {
        const auto req = nlohmann::json::parse(line);
        reply = {{"score", cdi::classifier::predict_score(model, req.at("text").get<std::string>())}};
      } catch (const std::exception& e) {
        reply = {{"error", e.what()}};
      }
      std::cout << reply.dump() << std::endl;
    }
  } catch (const cdi::Error& e) {
    std::cerr << "cdi-scorer: " << e.what() << "\n";
    return cdi::exit_code(e.kind());
  }
  return 0;
}
