#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bandlab/ensemble.hpp"
#include "bandlab/experiment.hpp"
#include "bandlab/version.hpp"

namespace {

using nlohmann::json;

const char* kUsage = R"(bandlab - random band matrix laboratory

usage:
  bandlab <experiment> [--config FILE] [--key value ...]
  bandlab sample --N <n> --d <d> --W <w> [--dist NAME] [--seed S] --out PREFIX
  bandlab summarize MANIFEST.json [MANIFEST.json ...] [--out FILE]

experiments: identities, localaw, fluctavg, theta, deloc, walk, bootstrap

Every config key can be set from the command line by a flag of the same
name (e.g. --N 64 --W 8 --eta_ladder 0.5,0.25). --config FILE supplies a
JSON file that is merged over the built-in defaults before the flags.

Environment: BANDLAB_THREADS caps the worker pool.

exit status: 0 all checks pass, 1 check failure, 2 usage/config error.
)";

json parse_value(const std::string& raw) {
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (raw.find(',') != std::string::npos) {
    json arr = json::array();
    std::size_t start = 0;
    while (start <= raw.size()) {
      const std::size_t comma = raw.find(',', start);
      const std::string part = raw.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      arr.push_back(parse_value(part));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return arr;
  }
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(raw, &pos);
    if (pos == raw.size()) return i;
  } catch (...) {
  }
  try {
    std::size_t pos = 0;
    const double d = std::stod(raw, &pos);
    if (pos == raw.size()) return d;
  } catch (...) {
  }
  return raw;
}

json parse_overrides(const std::vector<std::string>& args, std::size_t from,
                     std::string* config_path) {
  json overrides = json::object();
  for (std::size_t i = from; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0)
      throw bandlab::ConfigError("expected --key, got: " + a);
    if (i + 1 >= args.size())
      throw bandlab::ConfigError("missing value for " + a);
    const std::string key = a.substr(2);
    const std::string& val = args[++i];
    if (key == "config") {
      *config_path = val;
    } else {
      overrides[key] = parse_value(val);
    }
  }
  return overrides;
}

int cmd_experiment(const std::string& name,
                   const std::vector<std::string>& args) {
  std::string config_path;
  const json overrides = parse_overrides(args, 2, &config_path);
  json file_config = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in)
      throw bandlab::ConfigError("cannot open config file " + config_path);
    file_config = json::parse(in);
  }
  const json cfg = bandlab::effective_config(name, file_config, overrides);
  const bandlab::RunResult result = bandlab::run_experiment(cfg);
  std::cout << "wrote " << result.records_path << " and "
            << result.manifest_path << "\n";
  for (const auto& check : result.manifest.at("checks")) {
    std::cout << (check.at("pass").get<bool>() ? "[PASS] " : "[FAIL] ")
              << check.at("name").get<std::string>() << " (value "
              << check.at("value").get<double>() << ", threshold "
              << check.at("threshold").get<double>() << ")\n";
  }
  return result.pass ? 0 : 1;
}

int cmd_sample(const std::vector<std::string>& args) {
  std::string config_path;
  json o = parse_overrides(args, 2, &config_path);
  for (const char* key : {"N", "d", "W", "out"})
    if (!o.contains(key))
      throw bandlab::ConfigError(std::string("sample: missing --") + key);
  const bandlab::TorusShape shape(o.at("N").get<int>(), o.at("d").get<int>());
  const auto profile =
      bandlab::VarianceProfile::uniform(shape, o.at("W").get<int>());
  const auto dist =
      bandlab::distribution_from_string(o.value("dist", "gaussian"));
  const auto s =
      bandlab::sample(profile, dist, o.value("seed", std::uint64_t{1}));
  const std::string prefix = o.at("out").get<std::string>();
  bandlab::dump_matrix(s, prefix + ".bin", prefix + ".json");
  std::cout << "wrote " << prefix << ".bin and " << prefix << ".json\n";
  return 0;
}

int cmd_summarize(const std::vector<std::string>& args) {
  std::vector<std::string> manifests;
  std::string out_path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--out") {
      if (i + 1 >= args.size())
        throw bandlab::ConfigError("missing value for --out");
      out_path = args[++i];
    } else {
      manifests.push_back(args[i]);
    }
  }
  const json report = bandlab::summarize(manifests);
  if (out_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    out << report.dump(2) << "\n";
    std::cout << "wrote " << out_path << "\n";
  }
  return report.at("pass").get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.size() < 2 || args[1] == "--help" || args[1] == "-h") {
    std::cout << kUsage << "\nversion " << bandlab::kVersion << "\n";
    return args.size() < 2 ? 2 : 0;
  }
  try {
    const std::string& cmd = args[1];
    if (cmd == "sample") return cmd_sample(args);
    if (cmd == "summarize") return cmd_summarize(args);
    return cmd_experiment(cmd, args);
  } catch (const bandlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
