// Copyright (c) 2026 sodasr contributors.
// Licensed under the Apache License, Version 2.0 [see LICENSE for details]
#ifndef SODASR_KERNELS_HPP_
#define SODASR_KERNELS_HPP_

// GEMM micro kernels tuned for narrow matrices (N around the channel count).
// A may be strided (lda can differ from K), which lets convolutions read
// image rows in place instead of materializing an im2col buffer.

#include <cstddef>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace sodasr {
namespace kern {

// C[M,N] += A[M,K] * B[K,N].  A rows are lda apart, B rows ldb, C rows ldc.
template <typename T>
void gemm_acc_generic(const T* A, long lda, const T* B, long ldb, T* C, long ldc,
                      long M, long K, long N) {
  for (long i = 0; i < M; ++i) {
    const T* a = A + i * lda;
    T* c = C + i * ldc;
    for (long k = 0; k < K; ++k) {
      T av = a[k];
      const T* b = B + k * ldb;
      for (long j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

#if defined(__AVX512F__)
// One 16-wide column block, 8-row blocking. nmask selects active columns.
inline void gemm16_f32(const float* A, long lda, const float* B, long ldb,
                       float* C, long ldc, long M, long K, int ncols) {
  const __mmask16 m = (__mmask16)((ncols >= 16) ? 0xffffu : ((1u << ncols) - 1u));
  long i = 0;
  for (; i + 8 <= M; i += 8) {
    const float* a = A + i * lda;
    float* c = C + i * ldc;
    __m512 c0 = _mm512_maskz_loadu_ps(m, c + 0 * ldc);
    __m512 c1 = _mm512_maskz_loadu_ps(m, c + 1 * ldc);
    __m512 c2 = _mm512_maskz_loadu_ps(m, c + 2 * ldc);
    __m512 c3 = _mm512_maskz_loadu_ps(m, c + 3 * ldc);
    __m512 c4 = _mm512_maskz_loadu_ps(m, c + 4 * ldc);
    __m512 c5 = _mm512_maskz_loadu_ps(m, c + 5 * ldc);
    __m512 c6 = _mm512_maskz_loadu_ps(m, c + 6 * ldc);
    __m512 c7 = _mm512_maskz_loadu_ps(m, c + 7 * ldc);
    for (long k = 0; k < K; ++k) {
      __m512 b = _mm512_maskz_loadu_ps(m, B + k * ldb);
      c0 = _mm512_fmadd_ps(_mm512_set1_ps(a[0 * lda + k]), b, c0);
      c1 = _mm512_fmadd_ps(_mm512_set1_ps(a[1 * lda + k]), b, c1);
      c2 = _mm512_fmadd_ps(_mm512_set1_ps(a[2 * lda + k]), b, c2);
      c3 = _mm512_fmadd_ps(_mm512_set1_ps(a[3 * lda + k]), b, c3);
      c4 = _mm512_fmadd_ps(_mm512_set1_ps(a[4 * lda + k]), b, c4);
      c5 = _mm512_fmadd_ps(_mm512_set1_ps(a[5 * lda + k]), b, c5);
      c6 = _mm512_fmadd_ps(_mm512_set1_ps(a[6 * lda + k]), b, c6);
      c7 = _mm512_fmadd_ps(_mm512_set1_ps(a[7 * lda + k]), b, c7);
    }
    _mm512_mask_storeu_ps(c + 0 * ldc, m, c0);
    _mm512_mask_storeu_ps(c + 1 * ldc, m, c1);
    _mm512_mask_storeu_ps(c + 2 * ldc, m, c2);
    _mm512_mask_storeu_ps(c + 3 * ldc, m, c3);
    _mm512_mask_storeu_ps(c + 4 * ldc, m, c4);
    _mm512_mask_storeu_ps(c + 5 * ldc, m, c5);
    _mm512_mask_storeu_ps(c + 6 * ldc, m, c6);
    _mm512_mask_storeu_ps(c + 7 * ldc, m, c7);
  }
  for (; i < M; ++i) {
    const float* a = A + i * lda;
    float* c = C + i * ldc;
    __m512 c0 = _mm512_maskz_loadu_ps(m, c);
    for (long k = 0; k < K; ++k)
      c0 = _mm512_fmadd_ps(_mm512_set1_ps(a[k]), _mm512_maskz_loadu_ps(m, B + k * ldb), c0);
    _mm512_mask_storeu_ps(c, m, c0);
  }
}
#endif

template <typename T>
void gemm_acc(const T* A, long lda, const T* B, long ldb, T* C, long ldc,
              long M, long K, long N) {
  gemm_acc_generic(A, lda, B, ldb, C, ldc, M, K, N);
}

#if defined(__AVX512F__)
inline void gemm_acc(const float* A, long lda, const float* B, long ldb, float* C,
                     long ldc, long M, long K, long N) {
  for (long j = 0; j < N; j += 16)
    gemm16_f32(A, lda, B + j, ldb, C + j, ldc, M, K, (int)(N - j < 16 ? N - j : 16));
}
#endif

// D[K,N] += A[M,K]^T * G[M,N].  Weight-gradient accumulation.
template <typename T>
void atg_acc_generic(const T* A, long lda, const T* G, long ldg, T* D, long ldd,
                     long M, long K, long N) {
  for (long i = 0; i < M; ++i) {
    const T* a = A + i * lda;
    const T* g = G + i * ldg;
    for (long k = 0; k < K; ++k) {
      T av = a[k];
      T* d = D + k * ldd;
      for (long j = 0; j < N; ++j) d[j] += av * g[j];
    }
  }
}

#if defined(__AVX512F__)
inline void atg16_f32(const float* A, long lda, const float* G, long ldg, float* D,
                      long ldd, long M, long K, int ncols) {
  const __mmask16 m = (__mmask16)((ncols >= 16) ? 0xffffu : ((1u << ncols) - 1u));
  long k = 0;
  for (; k + 8 <= K; k += 8) {
    __m512 d0 = _mm512_maskz_loadu_ps(m, D + (k + 0) * ldd);
    __m512 d1 = _mm512_maskz_loadu_ps(m, D + (k + 1) * ldd);
    __m512 d2 = _mm512_maskz_loadu_ps(m, D + (k + 2) * ldd);
    __m512 d3 = _mm512_maskz_loadu_ps(m, D + (k + 3) * ldd);
    __m512 d4 = _mm512_maskz_loadu_ps(m, D + (k + 4) * ldd);
    __m512 d5 = _mm512_maskz_loadu_ps(m, D + (k + 5) * ldd);
    __m512 d6 = _mm512_maskz_loadu_ps(m, D + (k + 6) * ldd);
    __m512 d7 = _mm512_maskz_loadu_ps(m, D + (k + 7) * ldd);
    for (long i = 0; i < M; ++i) {
      __m512 g = _mm512_maskz_loadu_ps(m, G + i * ldg);
      const float* a = A + i * lda + k;
      d0 = _mm512_fmadd_ps(_mm512_set1_ps(a[0]), g, d0);
      d1 = _mm512_fmadd_ps(_mm512_set1_ps(a[1]), g, d1);
      d2 = _mm512_fmadd_ps(_mm512_set1_ps(a[2]), g, d2);
      d3 = _mm512_fmadd_ps(_mm512_set1_ps(a[3]), g, d3);
      d4 = _mm512_fmadd_ps(_mm512_set1_ps(a[4]), g, d4);
      d5 = _mm512_fmadd_ps(_mm512_set1_ps(a[5]), g, d5);
      d6 = _mm512_fmadd_ps(_mm512_set1_ps(a[6]), g, d6);
      d7 = _mm512_fmadd_ps(_mm512_set1_ps(a[7]), g, d7);
    }
    _mm512_mask_storeu_ps(D + (k + 0) * ldd, m, d0);
    _mm512_mask_storeu_ps(D + (k + 1) * ldd, m, d1);
    _mm512_mask_storeu_ps(D + (k + 2) * ldd, m, d2);
    _mm512_mask_storeu_ps(D + (k + 3) * ldd, m, d3);
    _mm512_mask_storeu_ps(D + (k + 4) * ldd, m, d4);
    _mm512_mask_storeu_ps(D + (k + 5) * ldd, m, d5);
    _mm512_mask_storeu_ps(D + (k + 6) * ldd, m, d6);
    _mm512_mask_storeu_ps(D + (k + 7) * ldd, m, d7);
  }
  for (; k < K; ++k) {
    __m512 d0 = _mm512_maskz_loadu_ps(m, D + k * ldd);
    for (long i = 0; i < M; ++i)
      d0 = _mm512_fmadd_ps(_mm512_set1_ps(A[i * lda + k]), _mm512_maskz_loadu_ps(m, G + i * ldg), d0);
    _mm512_mask_storeu_ps(D + k * ldd, m, d0);
  }
}
#endif

template <typename T>
void atg_acc(const T* A, long lda, const T* G, long ldg, T* D, long ldd,
             long M, long K, long N) {
  atg_acc_generic(A, lda, G, ldg, D, ldd, M, K, N);
}

#if defined(__AVX512F__)
inline void atg_acc(const float* A, long lda, const float* G, long ldg, float* D,
                    long ldd, long M, long K, long N) {
  for (long j = 0; j < N; j += 16)
    atg16_f32(A, lda, G + j, ldg, D + j, ldd, M, K, (int)(N - j < 16 ? N - j : 16));
}
#endif

}  // namespace kern
}  // namespace sodasr

#endif  // SODASR_KERNELS_HPP_
