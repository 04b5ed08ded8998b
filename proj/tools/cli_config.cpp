#include "cli_config.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "actrob/io.hpp"

namespace actrob::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void read_into(const std::string& path, ConfigFile& into, std::vector<std::string>& stack) {
  const std::string canonical = std::filesystem::weakly_canonical(path).string();
  if (std::find(stack.begin(), stack.end(), canonical) != stack.end()) {
    throw UsageError("config include cycle at " + path);
  }
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw UsageError("cannot read config file " + path);
  }
  if (std::find(into.files.begin(), into.files.end(), path) == into.files.end()) into.files.push_back(path);
  stack.push_back(canonical);
  parse_config_text(text, path, into, stack);
  stack.pop_back();
}

}  // namespace

void parse_config_text(const std::string& text, const std::string& origin, ConfigFile& into,
                       std::vector<std::string>& include_stack) {
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);

    if (line.rfind("include", 0) == 0 && (line.size() == 7 || line[7] == ' ' || line[7] == '\t')) {
      const std::string target = trim(line.substr(7));
      if (target.empty()) throw UsageError(where + ": include needs a file name");
      const auto base = std::filesystem::path(origin).parent_path();
      read_into((base / target).lexically_normal().string(), into, include_stack);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(where + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw UsageError(where + ": empty key");
    into.values[key] = value;
  }
}

ConfigFile read_config_file(const std::string& path) {
  ConfigFile cfg;
  std::vector<std::string> stack;
  read_into(path, cfg, stack);
  return cfg;
}

}  // namespace actrob::cli
