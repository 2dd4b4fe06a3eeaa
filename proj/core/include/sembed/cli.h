// Copyright (c) 2026 The sembed Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SEMBED_CLI_H_
#define SEMBED_CLI_H_

#include <string>
#include <vector>

namespace sembed {

// The experiment driver behind the `sembed` binary. args excludes argv[0].
//
//   sembed train   --config c.json [overrides]   -> checkpoint.bin,
//                                                   loss_log.csv, config.json
//   sembed embed   --checkpoint m --data s.txt   -> embeddings.txt
//   sembed eval    --eval-data task.json ...     -> report.csv
//   sembed sweep   --config c.json ...           -> sweep.csv
//   sembed analyze --checkpoint m --data t.jsonl -> attribution.csv, pos.csv
//
// Flags override config fields. Inputs are validated before any compute;
// outputs are written atomically into --out. Returns the process exit code
// and prints diagnostics for failures to stderr.
int run_command(const std::vector<std::string>& args);

}  // namespace sembed

#endif  // SEMBED_CLI_H_
