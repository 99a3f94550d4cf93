#include <iostream>

#include <boost/program_options.hpp>

#include "run.hpp"

namespace po = boost::program_options;

int main(int argc, char** argv) {
  po::options_description desc("spintrace options");
  desc.add_options()("help,h", "show this help")(
      "config", po::value<std::string>()->required(), "run configuration (JSON)")(
      "out-dir", po::value<std::string>()->default_value("."), "directory for outputs")(
      "seed", po::value<std::uint64_t>(), "overrides numeric.seed")(
      "threads", po::value<unsigned>(), "overrides numeric.threads");

  po::variables_map vm;
  try {
    po::store(po::parse_command_line(argc, argv, desc), vm);
    if (vm.count("help")) {
      std::cout << desc << '\n';
      return 0;
    }
    po::notify(vm);
  } catch (const po::error& e) {
    std::cerr << "validation error: " << e.what() << '\n' << desc << '\n';
    return spintrace::cli::kExitValidation;
  }

  spintrace::cli::RunOptions opts;
  opts.config = vm["config"].as<std::string>();
  opts.out_dir = vm["out-dir"].as<std::string>();
  if (vm.count("seed")) opts.seed = vm["seed"].as<std::uint64_t>();
  if (vm.count("threads")) opts.threads = vm["threads"].as<unsigned>();
  return spintrace::cli::run(opts, std::cerr);
}
