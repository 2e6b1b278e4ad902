#ifndef MODGEN_H
#define MODGEN_H

/* Generated by cbindgen from the modgen-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code for every fallible entry point. Zero means success; any
 other value pairs with a message from [`modgen_last_error`].
 */
typedef enum ModgenStatus {
  /*
   The call succeeded.
   */
  MODGEN_STATUS_OK = 0,
  /*
   A required pointer argument was NULL.
   */
  MODGEN_STATUS_NULL_ARGUMENT = 1,
  /*
   The modulus/width pair was rejected (composite, too wide, ...).
   */
  MODGEN_STATUS_BAD_PARAMS = 2,
  /*
   The modulus has no usable `c * 2^n + 1` decomposition.
   */
  MODGEN_STATUS_NO_FOURIER_FORM = 3,
  /*
   The request cannot be served (unknown strategy, rewrite refused).
   */
  MODGEN_STATUS_UNSUPPORTED = 4,
  /*
   An internal invariant failed; please report the message.
   */
  MODGEN_STATUS_INTERNAL = 5,
} ModgenStatus;

/*
 Lane-gather strategy selector for batch multiplies and kernel text.
 `Auto` picks the cheapest strategy for the built-in instruction set.
 */
typedef enum ModgenStrategy {
  MODGEN_STRATEGY_AUTO = 0,
  MODGEN_STRATEGY_FLOAT_SHUFFLE_CAST = 1,
  MODGEN_STRATEGY_SHUFFLE_UNPACK = 2,
  MODGEN_STRATEGY_BLEND = 3,
} ModgenStrategy;

/*
 Opaque handle holding the precomputed reduction constants for one
 modulus. Create with [`modgen_params_new`], release with
 [`modgen_params_free`]. The handle is immutable and may be shared
 across threads.
 */
typedef struct ModgenParams ModgenParams;

/*
 A prime of the form `c * 2^n + 1`, as returned by
 [`modgen_find_fourier_primes`].
 */
typedef struct ModgenFourierPrime {
  uint32_t p;
  uint32_t c;
  uint32_t n;
} ModgenFourierPrime;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Returns the message recorded by the most recent failing call on this
 thread, or an empty string if nothing failed yet. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *modgen_last_error(void);

/*
 Builds the reduction constants for modulus `p` with word size `l`
 (so `R = 2^l`) and stores the new handle through `out`.

 # Safety

 `out` must be NULL or point to writable storage for one pointer.
 */
enum ModgenStatus modgen_params_new(uint32_t p, uint32_t l, struct ModgenParams **out);

/*
 Releases a handle created by [`modgen_params_new`]. NULL is ignored.

 # Safety

 `params` must be NULL or a pointer returned by [`modgen_params_new`]
 that has not been freed already.
 */
void modgen_params_free(struct ModgenParams *params);

/*
 Returns the modulus, or 0 if `params` is NULL.

 # Safety

 `params` must be NULL or a live handle from [`modgen_params_new`].
 */
uint32_t modgen_params_p(const struct ModgenParams *params);

/*
 Returns the word size `l` (with `R = 2^l`), or 0 if `params` is NULL.

 # Safety

 `params` must be NULL or a live handle from [`modgen_params_new`].
 */
uint32_t modgen_params_l(const struct ModgenParams *params);

/*
 Returns the domain inverse `R^-1 mod P`, or 0 if `params` is NULL.

 # Safety

 `params` must be NULL or a live handle from [`modgen_params_new`].
 */
uint32_t modgen_params_r_inv(const struct ModgenParams *params);

/*
 Returns `P' = -P^-1 mod R`, or 0 if `params` is NULL.

 # Safety

 `params` must be NULL or a live handle from [`modgen_params_new`].
 */
uint32_t modgen_params_p_prime(const struct ModgenParams *params);

/*
 Returns `R^2 mod P`, or 0 if `params` is NULL.

 # Safety

 `params` must be NULL or a live handle from [`modgen_params_new`].
 */
uint32_t modgen_params_r2_mod_p(const struct ModgenParams *params);

/*
 Returns the folding constant `floor(2^(2k) / P)` with `k` the bit
 length of `P`, or 0 if `params` is NULL.

 # Safety

 `params` must be NULL or a live handle from [`modgen_params_new`].
 */
uint64_t modgen_params_p_prime_barrett(const struct ModgenParams *params);

/*
 Reports whether the modulus has a usable `c * 2^n + 1` decomposition
 and, when it does, writes `c` and `n` through the non-NULL out
 pointers.

 # Safety

 `params` must be NULL or a live handle; `c` and `n` must each be NULL
 or point to writable storage for one `uint32_t`.
 */
bool modgen_params_fourier_form(const struct ModgenParams *params, uint32_t *c, uint32_t *n);

/*
 Montgomery product of two residues already in the `xR mod P` domain.
 Returns 0 if `params` is NULL.

 # Safety

 `params` must be NULL or a live handle from [`modgen_params_new`].
 */
uint32_t modgen_mont_mul(const struct ModgenParams *params, uint32_t abar, uint32_t bbar);

/*
 Product of two plain residues, reduced with the folding method.
 Returns 0 if `params` is NULL.

 # Safety

 `params` must be NULL or a live handle from [`modgen_params_new`].
 */
uint32_t modgen_barrett_mul(const struct ModgenParams *params, uint32_t a, uint32_t b);

/*
 Maps a residue into the `xR mod P` domain. Returns 0 if `params` is
 NULL.

 # Safety

 `params` must be NULL or a live handle from [`modgen_params_new`].
 */
uint32_t modgen_to_mont(const struct ModgenParams *params, uint32_t x);

/*
 Maps a residue out of the `xR mod P` domain. Returns 0 if `params` is
 NULL.

 # Safety

 `params` must be NULL or a live handle from [`modgen_params_new`].
 */
uint32_t modgen_from_mont(const struct ModgenParams *params, uint32_t xbar);

/*
 Montgomery product computed with the signed reduction that the
 `c * 2^n + 1` shape permits. Fails with `MODGEN_STATUS_NO_FOURIER_FORM`
 when the modulus has no usable decomposition.

 # Safety

 `params` must be a live handle or NULL; `out` must be NULL or point to
 writable storage for one `uint32_t`.
 */
enum ModgenStatus modgen_fourier_redc(const struct ModgenParams *params,
                                      uint32_t abar,
                                      uint32_t bbar,
                                      uint32_t *out);

/*
 Modular addition of residues `a, b < p`. Returns 0 if `p` is 0.
 */
uint32_t modgen_mod_add(uint32_t a, uint32_t b, uint32_t p);

/*
 Modular subtraction of residues `a, b < p`. Returns 0 if `p` is 0.
 */
uint32_t modgen_mod_sub(uint32_t a, uint32_t b, uint32_t p);

/*
 Modular product via a plain 64-bit widening multiply and remainder.
 Returns 0 if `p` is 0.
 */
uint32_t modgen_mod_mul_naive(uint32_t a, uint32_t b, uint32_t p);

/*
 Element-wise Montgomery product of two arrays of `len` residues in the
 `xR mod P` domain, written to `out`. Runs on vector hardware when the
 CPU supports the chosen strategy and falls back to a bit-exact
 portable path otherwise.

 # Safety

 `params` must be a live handle. `a`, `b`, and `out` must each point to
 `len` readable (respectively writable) `uint32_t` values; they may be
 NULL only when `len` is 0.
 */
enum ModgenStatus modgen_mont_mul_batch(const struct ModgenParams *params,
                                        const uint32_t *a,
                                        const uint32_t *b,
                                        uint32_t *out,
                                        size_t len,
                                        enum ModgenStrategy strategy);

/*
 Generates C source for a Montgomery-multiply kernel specialized to
 `params`: the four-lane vector kernel for the built-in instruction
 set, or the portable scalar kernel when `scalar` is true (`strategy`
 is then ignored). On success `*out` receives a NUL-terminated string
 owned by the caller; release it with [`modgen_string_free`].

 # Safety

 `params` must be a live handle or NULL; `out` must be NULL or point to
 writable storage for one pointer.
 */
enum ModgenStatus modgen_kernel_c(const struct ModgenParams *params,
                                  enum ModgenStrategy strategy,
                                  bool scalar,
                                  char **out);

/*
 Releases a string returned by this library. NULL is ignored.

 # Safety

 `s` must be NULL or a pointer previously handed out by
 [`modgen_kernel_c`] that has not been freed already.
 */
void modgen_string_free(char *s);

/*
 Enumerates primes of the form `c * 2^n + 1` whose bit length lies in
 `[bit_low, bit_high]`, largest `n` first within a bit length.

 Always writes the total number of matching primes through `out_len`.
 When `buf` is non-NULL, up to `cap` entries are copied into it; call
 once with `buf` NULL to size the buffer, then again to fill it.

 # Safety

 `out_len` must point to writable storage for one `size_t`; `buf` must
 be NULL or point to `cap` writable entries.
 */
enum ModgenStatus modgen_find_fourier_primes(uint32_t bit_low,
                                             uint32_t bit_high,
                                             struct ModgenFourierPrime *buf,
                                             size_t cap,
                                             size_t *out_len);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MODGEN_H */
