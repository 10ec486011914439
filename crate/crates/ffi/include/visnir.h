#ifndef VISNIR_H
#define VISNIR_H

#include <stdint.h>
#include <stdbool.h>
#include <stddef.h>

/**
 * Status codes mirroring the CLI exit codes.
 */
typedef enum VnStatus {
  VnStatus_Ok = 0,
  /**
   * Invalid arguments or configuration.
   */
  VnStatus_InvalidArgument = 2,
  /**
   * Missing or malformed data.
   */
  VnStatus_DataError = 3,
  /**
   * Non-finite values.
   */
  VnStatus_NumericalError = 4,
  /**
   * Panic caught at the FFI boundary.
   */
  VnStatus_Internal = 5,
} VnStatus;

/**
 * Opaque trained-pipeline handle.
 */
typedef struct VnPipeline VnPipeline;

/**
 * Message of the calling thread's most recent failure. Valid until the
 * next failing visnir call on this thread.
 */
const char *vn_last_error(void);

/**
 * Static library version string.
 */
const char *vn_version(void);

/**
 * Load a checkpoint written by `visnir train` (path prefix without the
 * .json/.bin extension). Returns null on failure; see `vn_last_error`.
 *
 * # Safety
 * `ckpt_prefix` must be a valid NUL-terminated string pointer.
 */
struct VnPipeline *vn_pipeline_load(const char *ckpt_prefix);

/**
 * Release a pipeline handle. Null is a no-op.
 *
 * # Safety
 * `pipeline` must be a pointer returned by [`vn_pipeline_load`] that has
 * not been freed yet.
 */
void vn_pipeline_free(struct VnPipeline *pipeline);

/**
 * Spatial divisor the pipeline requires: input height and width must be
 * multiples of this. Returns 0 for a null handle.
 *
 * # Safety
 * `pipeline` must be a live handle from [`vn_pipeline_load`] or null.
 */
uint32_t vn_pipeline_divisor(const struct VnPipeline *pipeline);

/**
 * Run the pipeline on a mixed capture. `mixed` and `out_rgb` are
 * `height*width*3` floats; the output is the final restored RGB image.
 *
 * # Safety
 * `pipeline` must be a live handle; `mixed` and `out_rgb` must point to
 * `height*width*3` readable/writable floats.
 */
enum VnStatus vn_pipeline_infer(const struct VnPipeline *pipeline,
                                const float *mixed,
                                uintptr_t height,
                                uintptr_t width,
                                float *out_rgb);

/**
 * Synthesize an aligned MIX/VIS/NIR dataset under `out_dir`.
 *
 * # Safety
 * `out_dir` must be a valid NUL-terminated string pointer.
 */
enum VnStatus vn_synthesize_dataset(const char *out_dir,
                                    uintptr_t scenes,
                                    uintptr_t height,
                                    uintptr_t width,
                                    uint64_t seed,
                                    bool noise_on);

/**
 * PSNR in dB between two images of `len = height*width*channels` floats.
 * Identical images yield +INFINITY.
 *
 * # Safety
 * `a`, `b` must point to `height*width*channels` floats; `out_db` to one
 * writable double.
 */
enum VnStatus vn_psnr(const float *a,
                      const float *b,
                      uintptr_t height,
                      uintptr_t width,
                      uintptr_t channels,
                      double *out_db);

/**
 * Mean local SSIM between two images (11x11 Gaussian window).
 *
 * # Safety
 * Pointer contracts as in [`vn_psnr`].
 */
enum VnStatus vn_ssim(const float *a,
                      const float *b,
                      uintptr_t height,
                      uintptr_t width,
                      uintptr_t channels,
                      double *out_ssim);

/**
 * Hasler-Suesstrunk colourfulness of an RGB image.
 *
 * # Safety
 * `rgb` must point to `height*width*3` floats; `out_colour` to one
 * writable double.
 */
enum VnStatus vn_colourfulness(const float *rgb,
                               uintptr_t height,
                               uintptr_t width,
                               double *out_colour);

#endif  /* VISNIR_H */
