// Copyright 2026 The LayerLock Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LAYERLOCK_NUMCORE_FORMAT_HPP_
#define LAYERLOCK_NUMCORE_FORMAT_HPP_

#include <string>

namespace layerlock {

// Locale-independent "%.*g" rendering used for every CSV/markdown number.
std::string format_real(double v, int digits = 12);

}  // namespace layerlock

#endif  // LAYERLOCK_NUMCORE_FORMAT_HPP_
