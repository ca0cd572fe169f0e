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

// AVX2 variants of the statevector kernels. Compiled with function-level target
// attributes so the rest of the library builds for the baseline ISA.

#include <immintrin.h>

#include <bit>

#include "vqeforge/kernels.h"
#include "vqeforge/pauli.h"

#define VQF_AVX2 __attribute__((target("avx2,fma")))

namespace vqeforge::kernels::avx2 {

namespace {

// elementwise complex product of two packed pairs
VQF_AVX2 inline __m256d cmul(__m256d m, __m256d a) {
    __m256d mre = _mm256_movedup_pd(m);
    __m256d mim = _mm256_permute_pd(m, 0xF);
    __m256d asw = _mm256_permute_pd(a, 0x5);
    return _mm256_addsub_pd(_mm256_mul_pd(mre, a), _mm256_mul_pd(mim, asw));
}

VQF_AVX2 inline __m256d splat(cplx c) { return _mm256_setr_pd(c.real(), c.imag(), c.real(), c.imag()); }

}  // namespace

VQF_AVX2 void apply_1q(cplx *amp, int n, int q, const cplx *m) {
    const size_t dim = size_t{1} << n;
    double *d = reinterpret_cast<double *>(amp);
    if (q == 0) {
        const __m256d c0 = _mm256_setr_pd(m[0].real(), m[0].imag(), m[2].real(), m[2].imag());
        const __m256d c1 = _mm256_setr_pd(m[1].real(), m[1].imag(), m[3].real(), m[3].imag());
        for (size_t i = 0; i < dim; i += 2) {
            __m256d v = _mm256_loadu_pd(d + 2 * i);
            __m256d lo = _mm256_permute2f128_pd(v, v, 0x00);
            __m256d hi = _mm256_permute2f128_pd(v, v, 0x11);
            _mm256_storeu_pd(d + 2 * i, _mm256_add_pd(cmul(c0, lo), cmul(c1, hi)));
        }
        return;
    }
    const size_t step = size_t{1} << q;
    const __m256d m0 = splat(m[0]), m1 = splat(m[1]), m2 = splat(m[2]), m3 = splat(m[3]);
    for (size_t base = 0; base < dim; base += 2 * step) {
        for (size_t i = base; i < base + step; i += 2) {
            __m256d a = _mm256_loadu_pd(d + 2 * i);
            __m256d b = _mm256_loadu_pd(d + 2 * (i + step));
            _mm256_storeu_pd(d + 2 * i, _mm256_add_pd(cmul(m0, a), cmul(m1, b)));
            _mm256_storeu_pd(d + 2 * (i + step), _mm256_add_pd(cmul(m2, a), cmul(m3, b)));
        }
    }
}

VQF_AVX2 void apply_cz(cplx *amp, int n, int a, int b) {
    const size_t dim = size_t{1} << n;
    const size_t mask = (size_t{1} << a) | (size_t{1} << b);
    double *d = reinterpret_cast<double *>(amp);
    const __m256d neg_lo = _mm256_setr_pd(-0.0, -0.0, 0.0, 0.0);
    const __m256d neg_hi = _mm256_setr_pd(0.0, 0.0, -0.0, -0.0);
    const __m256d neg_all = _mm256_set1_pd(-0.0);
    for (size_t i = 0; i < dim; i += 2) {
        bool f0 = (i & mask) == mask;
        bool f1 = ((i + 1) & mask) == mask;
        if (!f0 && !f1) continue;
        __m256d v = _mm256_loadu_pd(d + 2 * i);
        __m256d s = f0 && f1 ? neg_all : (f0 ? neg_lo : neg_hi);
        _mm256_storeu_pd(d + 2 * i, _mm256_xor_pd(v, s));
    }
}

VQF_AVX2 double pauli_expectation(const cplx *amp, int n, uint64_t x, uint64_t z) {
    const size_t dim = size_t{1} << n;
    const double *d = reinterpret_cast<const double *>(amp);
    const bool swap = x & 1;
    const bool z0 = z & 1;
    __m256d acc_re = _mm256_setzero_pd();
    __m256d acc_im = _mm256_setzero_pd();
    for (size_t b = 0; b < dim; b += 2) {
        __m256d v = _mm256_loadu_pd(d + 2 * b);
        size_t c = (b ^ x) & ~size_t{1};
        __m256d w = _mm256_loadu_pd(d + 2 * c);
        if (swap) w = _mm256_permute2f128_pd(w, w, 0x01);
        bool s0 = std::popcount(b & z) & 1;
        bool s1 = s0 ^ z0;
        __m256d sign = _mm256_setr_pd(s0 ? -1.0 : 1.0, s0 ? -1.0 : 1.0, s1 ? -1.0 : 1.0, s1 ? -1.0 : 1.0);
        v = _mm256_mul_pd(v, sign);
        // conj(w) * v: re = wr vr + wi vi, im = wr vi - wi vr
        acc_re = _mm256_fmadd_pd(w, v, acc_re);
        acc_im = _mm256_fmadd_pd(w, _mm256_permute_pd(v, 0x5), acc_im);
    }
    alignas(32) double r[4], im[4];
    _mm256_store_pd(r, acc_re);
    _mm256_store_pd(im, acc_im);
    cplx acc(r[0] + r[1] + r[2] + r[3], im[0] - im[1] + im[2] - im[3]);
    return (i_pow(std::popcount(x & z)) * acc).real();
}

}  // namespace vqeforge::kernels::avx2
