#include <fstream>
#include <functional>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "canace/experiments.hpp"

using namespace canace;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 42;
  std::string out;
  int threads = 0;
};

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config file " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config file " + path + ": " + e.what());
  }
}

using Runner = std::function<ExperimentReport(const nlohmann::json&, const RunOptions&)>;

template <class Parse, class Run>
Runner runner(Parse parse, Run run) {
  return [parse, run](const nlohmann::json& j, const RunOptions& o) { return run(parse(j), o); };
}

int execute(const std::string& name, const Common& c, const Runner& fn) {
  ExperimentReport report;
  try {
    report = fn(load_config(c.config), RunOptions{c.seed, c.threads});
  } catch (const std::invalid_argument& e) {
    std::cerr << name << ": invalid input: " << e.what() << "\n";
    return 2;
  }
  const std::string dir = c.out.empty() ? "out/" + name : c.out;
  report.write(dir);
  for (const auto& [check, ok] : report.checks.items())
    std::cout << (ok.get<bool>() ? "PASS " : "FAIL ") << check << "\n";
  std::cout << name << ": " << (report.passed ? "ok" : "check failed") << ", results in " << dir << "\n";
  return report.passed ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Canonical and self-interacting cluster expansions: purification, symmetrization, experiments"};
  app.require_subcommand(1);

  const std::vector<std::tuple<std::string, std::string, Runner>> commands = {
      {"purify-info", "closure and sparsity of a purification operator",
       runner(parse_purify_info_config, run_purify_info)},
      {"cond", "Gram condition numbers of O(3) invariant bases", runner(parse_condition_config, run_condition_experiment)},
      {"decay", "coefficient decay against the Euclidean degree", runner(parse_decay_config, run_decay_experiment)},
      {"fit", "regularized regression learning curves", runner(parse_fit_config, run_regression_experiment)},
      {"invariance-check", "invariant features under random group actions",
       runner(parse_invariance_config, run_invariance_check)},
      {"span-check", "span equivalence of the two bases over an index set", runner(parse_span_config, run_span_check)},
  };

  std::vector<Common> opts(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto* sub = app.add_subcommand(std::get<0>(commands[i]), std::get<1>(commands[i]));
    sub->add_option("--config", opts[i].config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opts[i].seed, "random seed")->capture_default_str();
    sub->add_option("--out", opts[i].out, "output directory (default out/<command>)");
    sub->add_option("--threads", opts[i].threads, "worker threads, 0 = all cores")->capture_default_str();
    subs.push_back(sub);
  }
  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < commands.size(); ++i)
      if (subs[i]->parsed()) return execute(std::get<0>(commands[i]), opts[i], std::get<2>(commands[i]));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
