// SPDX-License-Identifier: Apache-2.0
//
// misac - multistatic asynchronous ISAC sensing toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace misac {

/// Invalid configuration (scene, manifest, parameter overrides). CLI exit code 2.
class config_error : public std::runtime_error {
  public:
    explicit config_error(const std::string &msg) : std::runtime_error(msg) {}
};

/// A processing stage failed on otherwise valid input. CLI exit code 3.
class stage_error : public std::runtime_error {
  public:
    explicit stage_error(const std::string &msg) : std::runtime_error(msg) {}
};

/// File read/write failure (missing file, bad magic, truncation). CLI exit code 4.
class io_error : public std::runtime_error {
  public:
    explicit io_error(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace misac
