#pragma once

#include <string>

#include "ottd/io.hpp"

namespace ottd {

// Subcommand entry points; each returns a process exit code:
// 0 ok, 2 validation, 3 nonexistence, 4 I/O.
int cmd_run(const ConfigMap& cfg);
int cmd_diagnose(const ConfigMap& cfg);
int cmd_fixed_point(const ConfigMap& cfg);
int cmd_bound(const ConfigMap& cfg);
int cmd_collect(const ConfigMap& cfg, const std::string& out_path);
int cmd_plot(const std::string& results_path, const std::string& out_dir);
int cmd_table1(const ConfigMap& cfg);

// Maps library errors onto the exit-code contract.
int exit_code_for(const Error& e);

}  // namespace ottd
