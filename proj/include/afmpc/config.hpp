#pragma once

#include <map>
#include <string>

#include "afmpc/runner.hpp"

namespace afmpc {

// Parsed experiment description from a flat "key = value" config file.
struct ConfigFile {
  ExperimentConfig experiment;
  int matrix_repeats = 5;  // consumed only by the matrix sweep
};

// Tokenizes "key = value" lines. '#' starts a comment; blank lines are
// skipped; keys may use dotted prefixes ("plant.gain"). A duplicate key or a
// line without '=' is an error.
std::map<std::string, std::string> parse_config_pairs(const std::string& text);

// Builds a ConfigFile from raw text. Unknown keys throw std::invalid_argument
// so typos never silently fall back to defaults.
ConfigFile parse_config(const std::string& text);

// Reads and parses a config file from disk.
ConfigFile load_config(const std::string& path);

}  // namespace afmpc
