#include <exception>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"plugcast: hierarchical plug-occupancy forecasting pipeline"};
  app.require_subcommand(1);
  app.footer("Subcommands compose through files; every run with the same flags and seeds\n"
             "produces byte-identical outputs.");

  plugcast::cli::register_data_commands(app);
  plugcast::cli::register_model_commands(app);
  plugcast::cli::register_eval_commands(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "plugcast: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
