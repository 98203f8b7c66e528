/*
 * Copyright 2026 The ultr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef ULTR_LOG_H_
#define ULTR_LOG_H_

#include <functional>
#include <string>

namespace ultr {

using WarningSink = std::function<void(const std::string&)>;

// Installs a sink for warnings; passing nullptr restores the stderr sink.
// Returns the previous sink.
WarningSink SetWarningSink(WarningSink sink);

void Warn(const std::string& message);

}  // namespace ultr

#endif  // ULTR_LOG_H_
