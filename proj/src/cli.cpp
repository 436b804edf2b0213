#include "bearing_flows/cli.hpp"

#include <algorithm>
#include <sstream>

#include <CLI11.hpp>

#include "bearing_flows/error.hpp"
#include "bearing_flows/reproduce.hpp"

namespace bearing_flows {

namespace {

std::vector<CertName> ParseCertList(const std::string& list) {
  std::vector<CertName> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(ParseCertName(item));
  }
  return out;
}

std::vector<std::filesystem::path> ExpandInputs(const std::vector<std::string>& inputs) {
  std::vector<std::filesystem::path> files;
  for (const auto& in : inputs) {
    const std::filesystem::path p(in);
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> found;
      for (const auto& entry : std::filesystem::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bearing-only consensus and formation control: simulation and certificates",
               "bearing-flows"};
  app.require_subcommand(1);

  RunOptions options;
  std::optional<double> dt, tmax;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format = "csv";
  std::string certs;
  std::string scenario;
  std::string name;
  std::vector<std::string> inputs;

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--dt", dt, "Integration step")->check(CLI::PositiveNumber);
    cmd->add_option("--tmax", tmax, "Time limit")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Seed for randomized certificates");
    cmd->add_option("--out", out_dir, "Output directory");
  };
  auto add_law_flags = [&](CLI::App* cmd) {
    cmd->add_option("--controller", options.overrides.controller,
                    "Override the control law")
        ->check(CLI::IsMember({"consensus", "formation"}));
    cmd->add_option("--topology", options.overrides.topology, "Override the topology")
        ->check(CLI::IsMember({"undirected", "directed"}));
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Run a scenario");
  simulate->add_option("scenario", scenario, "Scenario JSON file")->required();
  add_run_flags(simulate);
  simulate->add_option("--format", format, "Trajectory format")
      ->check(CLI::IsMember({"csv", "json"}));
  simulate->add_option("--cert", certs, "Certificates, comma separated");
  add_law_flags(simulate);

  CLI::App* analyze = app.add_subcommand("analyze", "Certificates for a scenario");
  analyze->add_option("scenario", scenario, "Scenario JSON file")->required();
  analyze->add_option("--cert", certs,
                      "Comma separated subset of nu,conjecture,spectrum,rigidity,persistence");
  analyze->add_option("--seed", seed, "Seed for randomized certificates");
  analyze->add_option("--out", out_dir, "Output directory (stdout when omitted)");
  add_law_flags(analyze);

  CLI::App* reproduce = app.add_subcommand("reproduce", "Canned reproductions");
  reproduce->add_option("name", name, "counterexample, fig3, fig4 or persistence-fig1")
      ->required();
  add_run_flags(reproduce);

  CLI::App* batch = app.add_subcommand("batch", "Run many scenarios concurrently");
  batch->add_option("inputs", inputs, "Scenario files or directories")->required();
  add_run_flags(batch);
  batch->add_option("--format", format, "Trajectory format")
      ->check(CLI::IsMember({"csv", "json"}));
  add_law_flags(batch);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e_stream;
    const int code = app.exit(e, o, e_stream);
    out << o.str();
    err << e_stream.str();
    return code == 0 ? 0 : 1;
  }

  try {
    options.dt = dt;
    options.t_max = tmax;
    options.seed = seed;
    options.out_dir = std::filesystem::path(out_dir.empty() ? "." : out_dir);
    options.format = format == "json" ? OutputFormat::kJson : OutputFormat::kCsv;
    if (!certs.empty()) options.certs = ParseCertList(certs);

    if (simulate->parsed()) {
      const RunResult r = RunScenarioFile(scenario, options);
      (r.exit_code == 1 ? err : out) << r.message << '\n';
      for (const auto& p : r.written) out << "wrote " << p.string() << '\n';
      return r.exit_code;
    }
    if (analyze->parsed()) {
      options.out_dir = out_dir;
      if (out_dir.empty()) {
        // Report goes to stdout; nothing else is printed there.
        const RunResult r = AnalyzeScenarioFile(scenario, options);
        if (r.exit_code != 0) err << r.message << '\n';
        out << r.report;
        return r.exit_code;
      }
      const RunResult r = AnalyzeScenarioFile(scenario, options);
      (r.exit_code == 1 ? err : out) << r.message << '\n';
      for (const auto& p : r.written) out << "wrote " << p.string() << '\n';
      return r.exit_code;
    }
    if (reproduce->parsed()) {
      return Reproduce(name, options, out);
    }
    if (batch->parsed()) {
      const auto files = ExpandInputs(inputs);
      const unsigned threads = BatchThreads();
      const auto results = RunBatch(files, options, threads);
      bool any_error = false;
      bool any_timeout = false;
      for (std::size_t k = 0; k < files.size(); ++k) {
        out << files[k].string() << ": exit " << results[k].exit_code << ": "
            << results[k].message << '\n';
        any_error = any_error || results[k].exit_code == 1;
        any_timeout = any_timeout || results[k].exit_code == 2;
      }
      return any_error ? 1 : (any_timeout ? 2 : 0);
    }
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace bearing_flows
