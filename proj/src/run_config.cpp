#include "repcrash/run_config.hpp"

#include <fstream>
#include <sstream>

#include "repcrash/error.hpp"

namespace repcrash {

namespace {

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    unsigned long long n = std::stoull(v, &used, 0);
    if (used == v.size() && v[0] != '-') return n;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + " expects a non-negative integer, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError(key + " expects a boolean, got '" + v + "'");
}

std::vector<std::string> split_words(const std::string& v) {
  std::istringstream in(v);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

void apply_config_value(RunConfig& cfg, const std::string& key,
                        const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "mode") {
    auto m = parse_mode(v);
    if (!m) throw ConfigError("mode must be POSIX or MMIO, got '" + v + "'");
    cfg.mode = *m;
  } else if (key == "block_size") {
    cfg.analysis.model.block_size = to_uint(key, v);
  } else if (key == "cache_line_size") {
    cfg.analysis.model.cache_line_size = to_uint(key, v);
  } else if (key == "split_writes_at_block_boundary") {
    cfg.analysis.model.split_writes_at_block_boundary = to_bool(key, v);
  } else if (key == "dbscan_eps") {
    cfg.analysis.cluster.eps = to_uint(key, v);
    if (cfg.analysis.cluster.eps == 0) throw ConfigError("dbscan_eps must be positive");
  } else if (key == "dbscan_min_pts") {
    cfg.analysis.cluster.min_pts = to_uint(key, v);
    if (cfg.analysis.cluster.min_pts == 0) {
      throw ConfigError("dbscan_min_pts must be positive");
    }
  } else if (key == "static_key") {
    if (v == "full") {
      cfg.analysis.static_key = StaticKeyMode::kFullStack;
    } else if (v == "innermost") {
      cfg.analysis.static_key = StaticKeyMode::kInnermost;
    } else {
      throw ConfigError("static_key must be full or innermost, got '" + v + "'");
    }
  } else if (key == "checker") {
    cfg.checker = split_words(v);
  } else if (key == "budget") {
    cfg.budget = to_uint(key, v);
  } else if (key == "out") {
    cfg.out_dir = v;
  } else if (key == "timeout") {
    double secs = 0;
    try {
      std::size_t used = 0;
      secs = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ConfigError("timeout expects seconds, got '" + v + "'");
    }
    if (secs <= 0) throw ConfigError("timeout must be positive");
    cfg.timeout = std::chrono::milliseconds(static_cast<long long>(secs * 1000));
  } else if (key == "jobs") {
    cfg.jobs = static_cast<unsigned>(to_uint(key, v));
    if (cfg.jobs == 0) throw ConfigError("jobs must be positive");
  } else if (key == "root_cause") {
    cfg.root_causes.clear();
    std::istringstream in(v);
    for (std::string item; std::getline(in, item, ',');) {
      item = trim(item);
      if (!item.empty()) cfg.root_causes.push_back(parse_source_loc(item));
    }
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void load_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
    }
    apply_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  cfg.analysis.model.validate();
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  load_config_text(cfg, ss.str());
}

TestOptions test_options(const RunConfig& cfg) {
  TestOptions o;
  o.checker.argv = cfg.checker;
  o.checker.timeout = cfg.timeout;
  o.budget = cfg.budget;
  o.jobs = cfg.jobs;
  o.root_causes = cfg.root_causes;
  return o;
}

}  // namespace repcrash
