// tools/bargein-cli.cc

// Copyright 2026  The bargein Authors

// See ../COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line front end; talks to the library through the C API only.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bargein/bargein.h"

namespace {

struct Sub {
  std::string name;
  CLI::App *app = nullptr;
  std::string config_file;
  std::string out_dir;
  std::map<std::string, std::string> values;  // key -> flag value
};

int ExitFor(bg_status s) {
  return s == BG_ERR_CONFIG || s == BG_ERR_ARGUMENT ? 2 : 1;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"bargein: barge-in verification from audio and dialogue context"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(
      "Keys are read from --config (flat key = value) and overridden by flags.\n"
      "Runs land in --out, or under $BARGEIN_RUN_ROOT (default ./runs).\n"
      "Exit status: 0 success, 1 runtime failure, 2 usage or config error.");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress messages");

  std::vector<Sub> subs(bg_command_count());
  for (size_t c = 0; c < subs.size(); ++c) {
    Sub &s = subs[c];
    s.name = bg_command_name(c);
    s.app = app.add_subcommand(s.name, bg_command_help(c));
    s.app->add_option("--config", s.config_file, "config file")->check(CLI::ExistingFile);
    s.app->add_option("--out", s.out_dir, "fresh run directory");
    for (size_t k = 0; k < bg_key_count(); ++k) {
      if (!bg_key_applies(k, s.name.c_str())) continue;
      const char *name, *def, *help;
      bg_key_info(k, &name, &def, &help);
      std::string desc = help;
      desc += def ? std::string(" [default: ") + def + "]" : std::string(" [required]");
      s.app->add_option(std::string("--") + name, s.values[name], desc);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }
  bg_set_verbose(quiet ? 0 : 1);

  for (Sub &s : subs) {
    if (!s.app->parsed()) continue;
    bg_config *cfg = nullptr;
    bg_config_create(&cfg);
    bg_status st = BG_OK;
    if (!s.config_file.empty()) st = bg_config_load(cfg, s.config_file.c_str());
    for (const auto &[key, value] : s.values) {
      if (st != BG_OK) break;
      if (s.app->get_option("--" + key)->count() > 0)
        st = bg_config_set(cfg, key.c_str(), value.c_str());
    }
    char dir[4096] = {0};
    if (st == BG_OK)
      st = bg_run(s.name.c_str(), cfg, s.out_dir.empty() ? nullptr : s.out_dir.c_str(), dir,
                  sizeof(dir));
    bg_config_destroy(cfg);
    if (st != BG_OK) {
      std::cerr << "bargein " << s.name << ": " << bg_last_error() << "\n";
      const int code = ExitFor(st);
      if (code == 2) std::cerr << s.app->help();
      return code;
    }
    std::cout << dir << "\n";
    return 0;
  }
  return 2;
}
