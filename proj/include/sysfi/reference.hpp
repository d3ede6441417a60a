#pragma once

#include "sysfi/lowering.hpp"
#include "sysfi/model.hpp"

namespace sysfi {

/// Functional evaluation of one lowered layer: wrapping int32 matmul, bias,
/// requantize, NLF and optional 2x2 max pool. No pipeline is involved.
///
/// The result is channel-major: N rows of out_h*out_w (or the pooled count)
/// values, which is the [C,H,W] layout written back to activation memory.
TensorI8 solve_reference(const MatmulProblem& problem);

/// Layer-by-layer functional inference. The independent oracle for the
/// cycle-accurate model.
TensorI8 reference_inference(const ModelSpec& model, const TensorI8& image);

}  // namespace sysfi
