// Batch front-end: one JSON config per run, results as CSV/JSON plus a
// manifest. Exit codes: 0 success, 2 schema violation, 3 numerical failure.

#include <exception>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mv2/errors.hpp"
#include "mv2/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mv2: two-species McKean-Vlasov simulation batch runner"};
    std::string config_path;
    std::string output_dir;
    bool dry_run = false;
    bool verbose = false;
    app.add_option("config", config_path, "experiment config JSON")->required();
    app.add_option("-o,--output-dir", output_dir, "override output directory");
    app.add_flag("--dry-run", dry_run, "print the resolved plan, write nothing");
    app.add_flag("-v,--verbose", verbose, "print the summary to stdout");
    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot open config " << config_path << "\n";
            return 2;
        }
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::parse_error& e) {
            std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
            return 2;
        }
        if (!output_dir.empty() && doc.is_object()) doc["output_dir"] = output_dir;

        mv2::ExperimentSpec spec = mv2::parse_experiment(doc);
        if (dry_run) {
            std::cout << mv2::describe_experiment(spec);
            return 0;
        }
        const nlohmann::json summary = mv2::run_experiment(spec);
        if (verbose) std::cout << summary.dump(2) << "\n";
        std::cout << "ok: results in " << spec.output_dir << "\n";
        return 0;
    } catch (const mv2::SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
