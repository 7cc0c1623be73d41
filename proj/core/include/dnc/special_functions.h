// Copyright 2026 The dncalign Authors.
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
#ifndef DNC_SPECIAL_FUNCTIONS_H_
#define DNC_SPECIAL_FUNCTIONS_H_

namespace dnc {

// log Gamma(x) for x > 0.
double LogGamma(double x);

// psi(x) = d/dx log Gamma(x), x > 0.  Upward recurrence to x >= 10, then the
// asymptotic series; absolute error below 1e-12 on [1e-3, 1e6].
double Digamma(double x);

// psi'(x), x > 0; same scheme as Digamma.
double Trigamma(double x);

}  // namespace dnc

#endif  // DNC_SPECIAL_FUNCTIONS_H_
