/* four-lane montgomery multiply mod 2013265921 (l = 31)
   target: sse4x32m -- SSE 4-way 32-bit modular integer ISA
   gather: shuffle-unpack */
#include <stdint.h>
#include <stddef.h>
#include <immintrin.h>

#define SV_LOAD(p) _mm_load_si128((const __m128i *)(p))
#define SV_STORE(p, x) _mm_store_si128((__m128i *)(p), (x))

void sse4x32m_montmul4_shuffle_unpack(const int32_t* a, const int32_t* b, int32_t* out, size_t n4)
{
    const __m128i c0 = _mm_set1_epi32(0x77ffffff);
    const __m128i c1 = _mm_set1_epi32(0x7fffffff);
    const __m128i c2 = _mm_set1_epi32(0x78000001);
    const __m128i c3 = _mm_set1_epi32(0x80000000);
    const __m128i c4 = _mm_set1_epi32(0xf8000000);
    for (size_t i = 0; i < n4; ++i) {
        const __m128i va = SV_LOAD(a + 4 * i);
        const __m128i vb = SV_LOAD(b + 4 * i);
        const __m128i t0 = _mm_srli_si128(va, 4);
        const __m128i t1 = _mm_srli_si128(vb, 4);
        const __m128i t2 = _mm_mul_epu32(va, vb);
        const __m128i t3 = _mm_mul_epu32(t0, t1);
        const __m128i t4 = _mm_shuffle_epi32(t2, 0xd8);
        const __m128i t5 = _mm_shuffle_epi32(t3, 0xd8);
        const __m128i t6 = _mm_unpacklo_epi32(t4, t5);
        const __m128i t7 = _mm_unpackhi_epi32(t4, t5);
        const __m128i t8 = _mm_mullo_epi32(t6, c0);
        const __m128i t9 = _mm_and_si128(t8, c1);
        const __m128i t10 = _mm_srli_si128(t9, 4);
        const __m128i t11 = _mm_mul_epu32(t9, c2);
        const __m128i t12 = _mm_mul_epu32(t10, c2);
        const __m128i t13 = _mm_add_epi64(t2, t11);
        const __m128i t14 = _mm_add_epi64(t3, t12);
        const __m128i t15 = _mm_shuffle_epi32(t13, 0xd8);
        const __m128i t16 = _mm_shuffle_epi32(t14, 0xd8);
        const __m128i t17 = _mm_unpacklo_epi32(t15, t16);
        const __m128i t18 = _mm_unpackhi_epi32(t15, t16);
        const __m128i t19 = _mm_slli_epi32(t18, 1);
        const __m128i t20 = _mm_srli_epi32(t17, 31);
        const __m128i t21 = _mm_add_epi32(t19, t20);
        const __m128i t22 = _mm_add_epi32(t21, c3);
        const __m128i t23 = _mm_cmpgt_epi32(t22, c4);
        const __m128i t24 = _mm_and_si128(t23, c2);
        const __m128i res = _mm_sub_epi32(t21, t24);
        SV_STORE(out + 4 * i, res);
    }
}
