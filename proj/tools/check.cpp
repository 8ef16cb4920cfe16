#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "cpds/io.hpp"
#include "cpds/pipeline.hpp"
#include "witness_json.hpp"

namespace {

constexpr int kInconclusive = 2;

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reachability checker for alternating collapsible pushdown systems"};
  app.name("check");
  std::string model_path;
  std::string automaton_path;
  std::string witness_path;
  std::string dump_automaton_path;
  std::string dump_graph_path;
  cpds::Engine engine = cpds::Engine::Fast;
  cpds::ForwardMode forward = cpds::ForwardMode::On;
  cpds::SatMode mode = cpds::SatMode::Full;
  bool trace = false;
  double timeout = 0;

  app.add_option("model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  app.add_option("--automaton", automaton_path, "Initial automaton A0 (default: every stack at the model's targets)")
      ->check(CLI::ExistingFile);
  app.add_option("--engine", engine, "Saturation engine")
      ->transform(CLI::CheckedTransformer(std::map<std::string, cpds::Engine>{{"fast", cpds::Engine::Fast}, {"naive", cpds::Engine::Naive}}));
  app.add_option("--forward", forward, "Forward approximation phase")
      ->transform(CLI::CheckedTransformer(std::map<std::string, cpds::ForwardMode>{
          {"on", cpds::ForwardMode::On}, {"prune", cpds::ForwardMode::Prune}, {"off", cpds::ForwardMode::Off}}));
  app.add_option("--mode", mode, "Saturation mode")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, cpds::SatMode>{{"full", cpds::SatMode::Full}, {"nonalt", cpds::SatMode::NonAlternating}}));
  app.add_option("--witness", witness_path, "Write the witness tree as JSON");
  app.add_option("--dump-automaton", dump_automaton_path, "Write the saturated automaton with justifications");
  app.add_option("--dump-graph", dump_graph_path, "Write the approximate reachability graph");
  app.add_flag("--trace", trace, "Log every added transition to stderr");
  app.add_option("--timeout", timeout, "Time limit in seconds (0 for none)")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInconclusive;
  }

  try {
    cpds::ModelFile mf = cpds::parse_model(read_text(model_path));
    cpds::PipelineConfig cfg;
    cfg.engine = engine;
    cfg.forward = forward;
    cfg.mode = mode;
    cfg.timeout_seconds = timeout;
    if (!automaton_path.empty()) cfg.automaton = cpds::parse_automaton(read_text(automaton_path), mf.model);
    if (trace) cfg.trace = &std::cerr;
    std::ostringstream graph;
    if (!dump_graph_path.empty()) cfg.graph_dump = &graph;

    cpds::Verdict v = cpds::run_pipeline(mf, cfg);

    if (!dump_graph_path.empty()) write_text(dump_graph_path, graph.str());
    if (!dump_automaton_path.empty() && v.saturated)
      write_text(dump_automaton_path, cpds::automaton_to_string(*v.saturated, v.saturated_model, true));

    std::cout << "verdict: " << cpds::verdict_name(v.kind) << '\n';
    if (forward != cpds::ForwardMode::Off)
      std::cout << "graph: " << v.graph_heads << " heads, " << v.graph_edges << " edges, " << v.rules_kept << " rules kept\n";
    if (v.saturated) std::cout << "automaton: " << v.transitions << " transitions\n";
    if (v.kind == cpds::VerdictKind::Reachable) {
      if (v.witness.linear()) {
        std::cout << "witness:";
        for (const std::string& r : v.witness.rule_sequence()) std::cout << ' ' << r;
        std::cout << '\n';
      } else {
        std::cout << "witness: tree with " << v.witness.nodes.size() << " nodes and " << v.witness.leaves().size()
                  << " leaves\n";
      }
      if (!witness_path.empty()) write_text(witness_path, cpds::witness_to_json(v.witness, mf.model).dump(2) + "\n");
    }
    if (!v.message.empty()) std::cerr << "check: " << v.message << '\n';
    return v.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "check: " << e.what() << '\n';
    return kInconclusive;
  }
}
