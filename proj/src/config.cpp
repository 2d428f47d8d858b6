#include "stlab/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "stlab/csvio.hpp"

#include <nlohmann/json.hpp>

namespace stlab {

LevelSetSpec ExperimentConfig::parse_level_set() const {
  LevelSetSpec spec;
  std::string s = level_set;
  auto colon = s.find(':');
  std::string kind = s.substr(0, colon);
  std::string args = (colon == std::string::npos) ? "" : s.substr(colon + 1);
  auto comma = args.find(',');
  if (kind == "singleton") {
    spec.kind = LevelSetKind::singleton;
    spec.lo = spec.hi = std::stod(args);
  } else if (kind == "interval" || kind == "cantor") {
    spec.kind = (kind == "interval") ? LevelSetKind::interval : LevelSetKind::cantor;
    if (comma == std::string::npos)
      throw std::invalid_argument("level_set: expected kind:lo,hi");
    spec.lo = std::stod(args.substr(0, comma));
    spec.hi = std::stod(args.substr(comma + 1));
  } else {
    throw std::invalid_argument("level_set: unknown kind '" + kind + "'");
  }
  return spec;
}

std::string ExperimentConfig::print() const {
  std::ostringstream os;
  os << "gamma=" << format_g17(gamma) << "\n";
  os << "generator=" << generator << "\n";
  os << "delta=" << format_g17(delta) << "\n";
  os << "a0=" << format_g17(a0) << "\n";
  os << "horizon=" << format_g17(horizon) << "\n";
  os << "replicates=" << replicates << "\n";
  os << "sample_size=" << sample_size << "\n";
  os << "level_set=" << level_set << "\n";
  os << "seed=" << seed << "\n";
  os << "max_nodes=" << max_nodes << "\n";
  os << "law_resolution=" << law_resolution << "\n";
  os << "law_cache=" << law_cache << "\n";
  os << "out_dir=" << out_dir << "\n";
  os << "trim=" << format_g17(trim) << "\n";
  os << "dump_tree=" << (dump_tree ? 1 : 0) << "\n";
  os << "export_paths=" << (export_paths ? 1 : 0) << "\n";
  return os.str();
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  try {
    if (key == "gamma")
      gamma = std::stod(value);
    else if (key == "generator")
      generator = value;
    else if (key == "delta")
      delta = std::stod(value);
    else if (key == "a0")
      a0 = std::stod(value);
    else if (key == "horizon")
      horizon = std::stod(value);
    else if (key == "replicates")
      replicates = std::stoull(value);
    else if (key == "sample_size")
      sample_size = std::stoull(value);
    else if (key == "level_set")
      level_set = value;
    else if (key == "seed")
      seed = std::stoull(value);
    else if (key == "max_nodes")
      max_nodes = std::stoull(value);
    else if (key == "law_resolution")
      law_resolution = std::stoull(value);
    else if (key == "law_cache")
      law_cache = value;
    else if (key == "out_dir")
      out_dir = value;
    else if (key == "trim")
      trim = std::stod(value);
    else if (key == "dump_tree")
      dump_tree = std::stoi(value) != 0;
    else if (key == "export_paths")
      export_paths = std::stoi(value) != 0;
    else
      throw std::invalid_argument("unknown configuration key '" + key + "'");
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad value for configuration key '" + key +
                                "': " + value);
  }
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig c;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line without '=': " + line);
    c.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse(os.str());
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("config key '" + key + "': " + why);
  };
  if (!(gamma > 1.0) || !(gamma <= 2.0)) fail("gamma", "must lie in (1, 2]");
  if (generator != "slice" && generator != "gw" && generator != "both")
    fail("generator", "must be slice | gw | both");
  if (!(delta > 0.0)) fail("delta", "must be positive");
  if (!(a0 >= delta)) fail("a0", "must be at least delta");
  if (!(horizon >= a0)) fail("horizon", "must be at least a0");
  if (replicates == 0) fail("replicates", "must be positive");
  if (law_resolution < 256) fail("law_resolution", "must be >= 256");
  if (!(trim >= 1.0)) fail("trim", "must be >= 1");
  (void)parse_level_set();
}

void RunManifest::add_file(const std::string& path) {
  files.push_back({path, fnv1a_file(path)});
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["schema"] = 1;
  j["version"] = version;
  j["status"] = status;
  j["config"] = config_echo;
  if (has_calibration) {
    j["calibration"]["c_h"] = c_h;
    j["calibration"]["c_ell"] = c_ell;
  }
  for (const auto& [stage, secs] : timings)
    j["timings"][stage] = secs;
  for (const auto& f : files) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(f.digest));
    j["files"][f.name] = buf;
  }
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const {
  write_file_atomic(path, to_json());
}

}  // namespace stlab
