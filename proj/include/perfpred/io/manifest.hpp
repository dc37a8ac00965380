// Copyright (c) 2026 The perfpred Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run manifests: every command records its effective configuration and the
// SHA-256 of each artifact it read and wrote.  Manifests contain no wall
// time, so identical config + seed reproduce byte-identical manifests; that
// property is the pipeline's determinism check.

#include <map>
#include <string>

#include "perfpred/errors.hpp"
#include "perfpred/io/hash.hpp"
#include "perfpred/io/jsonl.hpp"

namespace perfpred {

class RunManifest {
 public:
  RunManifest(std::string command, Json effective_config)
      : command_(std::move(command)), config_(std::move(effective_config)) {}

  void add_input(const std::string& path) { inputs_[path] = sha256_file_hex(path); }
  void add_output(const std::string& path) { outputs_[path] = sha256_file_hex(path); }

  Json to_json() const {
    return Json{{"command", command_},
                {"config", config_},
                {"config_hash", sha256_hex(config_.dump())},
                {"inputs", inputs_},
                {"outputs", outputs_}};
  }

  /// Writes <dir>/manifest.json.
  void write(const std::string& dir) const { save_json(dir + "/manifest.json", to_json()); }

 private:
  std::string command_;
  Json config_;
  std::map<std::string, std::string> inputs_;   // path -> sha256
  std::map<std::string, std::string> outputs_;  // path -> sha256
};

/// Fails with a message naming the command that produces the missing file.
inline void require_artifact(const std::string& path, const std::string& producer_command) {
  if (!std::filesystem::exists(path))
    throw DataError("missing artifact " + path + "; run `perfpred " + producer_command +
                    "` first");
}

}  // namespace perfpred
