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

#ifndef SEMBED_IO_H_
#define SEMBED_IO_H_

#include <string>
#include <vector>

namespace sembed {

// Shortest decimal with 9 significant digits ("%.9g"); the one float format
// used in every text artifact, so outputs are byte-stable.
std::string format_g9(double v);

std::string read_text_file(const std::string& path);

// Lines split on '\n' with trailing '\r' stripped; a final newline does not
// produce an empty last line.
std::vector<std::string> read_lines(const std::string& path);

// Writes via a temp file in the same directory plus rename, so readers never
// observe a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

bool file_exists(const std::string& path);

// Directory part of a path ("." when there is none).
std::string path_dirname(const std::string& path);

// Joins with '/' unless `rel` is absolute.
std::string path_join(const std::string& dir, const std::string& rel);

// RFC-4180 style: fields containing comma, quote, or newline are quoted with
// embedded quotes doubled.
std::string csv_escape(const std::string& field);

}  // namespace sembed

#endif  // SEMBED_IO_H_
