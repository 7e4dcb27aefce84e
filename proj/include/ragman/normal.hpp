// Copyright 2026 The RAGMan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

namespace ragman::stats {

/// Standard normal quantile, Acklam's rational approximation (relative
/// error below 1.15e-9 over (0, 1)). Throws InvalidArgument outside (0, 1).
double normal_quantile(double p);

/// Upper tail P(Z > z).
double normal_sf(double z);

}  // namespace ragman::stats
