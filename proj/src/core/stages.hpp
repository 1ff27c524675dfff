#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"

namespace cml {

enum class LogLevel { Info = 0, Warning = 1 };

using LogSink = std::function<void(LogLevel, std::string_view)>;

// Subcommand names accepted by run_stage, pipeline last.
const std::vector<std::string>& stage_names();

// Runs one subcommand against `config`, writing artifacts under
// config.output_dir. Log lines go to `sink` and to <output_dir>/run.log.
// Errors propagate as cml::Error whose message names the failing step; the
// output directory then holds a FAILED marker next to any partial artifacts.
void run_stage(std::string_view stage, const RunConfig& config, const LogSink& sink = {});

}  // namespace cml
