// Copyright 2026 The vqeforge Authors
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

#include <complex>
#include <cstddef>
#include <cstdint>

namespace vqeforge {
class PauliSum;
}

namespace vqeforge::kernels {

using cplx = std::complex<double>;

enum class Backend { Scalar, Avx2 };

bool avx2_supported();
Backend active_backend();
/// Throws std::runtime_error when Avx2 is requested on a CPU without it.
void set_backend(Backend b);
const char *backend_name(Backend b);

/// m is row-major {m00, m01, m10, m11}.
void apply_1q(cplx *amp, int n, int q, const cplx *m);
void apply_cz(cplx *amp, int n, int a, int b);
/// <psi| P |psi> for P = i^{|x&z|} X^x Z^z.
double pauli_expectation(const cplx *amp, int n, uint64_t x, uint64_t z);

void apply_pauli(cplx *amp, int n, uint64_t x, uint64_t z);
/// out = h * in (out must not alias in).
void apply_pauli_sum(const PauliSum &h, const cplx *in, cplx *out, int n);

namespace scalar {
void apply_1q(cplx *amp, int n, int q, const cplx *m);
void apply_cz(cplx *amp, int n, int a, int b);
double pauli_expectation(const cplx *amp, int n, uint64_t x, uint64_t z);
}  // namespace scalar

namespace avx2 {
void apply_1q(cplx *amp, int n, int q, const cplx *m);
void apply_cz(cplx *amp, int n, int a, int b);
double pauli_expectation(const cplx *amp, int n, uint64_t x, uint64_t z);
}  // namespace avx2

}  // namespace vqeforge::kernels
