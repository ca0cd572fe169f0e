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

#include <atomic>
#include <bit>
#include <stdexcept>

#include "vqeforge/kernels.h"
#include "vqeforge/pauli.h"

namespace vqeforge::kernels {

namespace scalar {

void apply_1q(cplx *amp, int n, int q, const cplx *m) {
    const size_t dim = size_t{1} << n;
    const size_t step = size_t{1} << q;
    for (size_t base = 0; base < dim; base += 2 * step) {
        for (size_t i = base; i < base + step; ++i) {
            cplx a = amp[i], b = amp[i + step];
            amp[i] = m[0] * a + m[1] * b;
            amp[i + step] = m[2] * a + m[3] * b;
        }
    }
}

void apply_cz(cplx *amp, int n, int a, int b) {
    const size_t dim = size_t{1} << n;
    const size_t mask = (size_t{1} << a) | (size_t{1} << b);
    for (size_t i = 0; i < dim; ++i)
        if ((i & mask) == mask) amp[i] = -amp[i];
}

double pauli_expectation(const cplx *amp, int n, uint64_t x, uint64_t z) {
    const size_t dim = size_t{1} << n;
    cplx acc = 0;
    for (size_t b = 0; b < dim; ++b) {
        cplx t = std::conj(amp[b ^ x]) * amp[b];
        acc += (std::popcount(b & z) & 1) ? -t : t;
    }
    return (i_pow(std::popcount(x & z)) * acc).real();
}

}  // namespace scalar

namespace {

using Apply1q = void (*)(cplx *, int, int, const cplx *);
using ApplyCz = void (*)(cplx *, int, int, int);
using PauliExp = double (*)(const cplx *, int, uint64_t, uint64_t);

struct Table {
    Apply1q one;
    ApplyCz cz;
    PauliExp pexp;
    Backend tag;
};

const Table kScalar{scalar::apply_1q, scalar::apply_cz, scalar::pauli_expectation, Backend::Scalar};
const Table kAvx2{avx2::apply_1q, avx2::apply_cz, avx2::pauli_expectation, Backend::Avx2};

std::atomic<const Table *> &table() {
    static std::atomic<const Table *> t{avx2_supported() ? &kAvx2 : &kScalar};
    return t;
}

}  // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
    static const bool ok = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    return ok;
#else
    return false;
#endif
}

Backend active_backend() { return table().load()->tag; }

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !avx2_supported()) throw std::runtime_error("AVX2 not supported on this CPU");
    table().store(b == Backend::Avx2 ? &kAvx2 : &kScalar);
}

const char *backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

void apply_1q(cplx *amp, int n, int q, const cplx *m) { table().load()->one(amp, n, q, m); }
void apply_cz(cplx *amp, int n, int a, int b) { table().load()->cz(amp, n, a, b); }
double pauli_expectation(const cplx *amp, int n, uint64_t x, uint64_t z) {
    return table().load()->pexp(amp, n, x, z);
}

void apply_pauli(cplx *amp, int n, uint64_t x, uint64_t z) {
    const size_t dim = size_t{1} << n;
    const cplx ph = i_pow(std::popcount(x & z));
    if (x == 0) {
        for (size_t b = 0; b < dim; ++b) amp[b] *= (std::popcount(b & z) & 1) ? -ph : ph;
        return;
    }
    for (size_t b = 0; b < dim; ++b) {
        size_t c = b ^ x;
        if (c < b) continue;
        cplx vb = amp[b], vc = amp[c];
        amp[c] = ((std::popcount(b & z) & 1) ? -ph : ph) * vb;
        amp[b] = ((std::popcount(c & z) & 1) ? -ph : ph) * vc;
    }
}

void apply_pauli_sum(const PauliSum &h, const cplx *in, cplx *out, int n) {
    const size_t dim = size_t{1} << n;
    for (size_t b = 0; b < dim; ++b) out[b] = h.identity_offset * in[b];
    for (auto &[p, c] : h.terms()) {
        const cplx ph = c * i_pow(std::popcount(p.x & p.z));
        for (size_t b = 0; b < dim; ++b) {
            cplx v = (std::popcount(b & p.z) & 1) ? -in[b] : in[b];
            out[b ^ p.x] += ph * v;
        }
    }
}

}  // namespace vqeforge::kernels
