#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace actrob::cli {

/// Bad invocation: unknown flag, malformed config, invalid parameter.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` settings read from a config file.
///
///   # comment
///   include base.conf      (relative to the including file)
///   env = runner-lite
///   hidden = 16,16
///
/// Later assignments override earlier ones, including those pulled in by
/// an earlier include.
struct ConfigFile {
  std::map<std::string, std::string> values;
  /// Every file read, in the order first opened.
  std::vector<std::string> files;
};

ConfigFile read_config_file(const std::string& path);

/// Parses config text; `origin` names the source in diagnostics and anchors
/// relative includes.
void parse_config_text(const std::string& text, const std::string& origin, ConfigFile& into,
                       std::vector<std::string>& include_stack);

}  // namespace actrob::cli
