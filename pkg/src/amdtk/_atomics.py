"""Numba support pieces: a single-word atomic min and a counter-based mixer.

The selection phase needs an indivisible min-update on shared 64-bit label
slots. CPython offers no compare-exchange primitive and numba exposes no CPU
atomics, so this emits the LLVM ``atomicrmw umin`` instruction directly.
"""

from __future__ import annotations

import numpy as np
from numba import njit, types
from numba.core import cgutils
from numba.extending import intrinsic

UMAX = np.uint64(0xFFFFFFFFFFFFFFFF)


@intrinsic
def atomic_umin(typingctx, arr_t, idx_t, val_t):
    """atomic_umin(arr, i, v): arr[i] = min(arr[i], v) indivisibly; returns old."""
    if not (isinstance(arr_t, types.Array) and arr_t.dtype == types.uint64):
        raise types.TypingError("atomic_umin requires a uint64 array")
    sig = types.uint64(arr_t, types.intp, types.uint64)

    def codegen(context, builder, signature, args):
        arr, idx, val = args
        ary = context.make_array(signature.args[0])(context, builder, arr)
        ptr = cgutils.get_item_pointer(context, builder, signature.args[0],
                                       ary, [idx], wraparound=False)
        return builder.atomic_rmw("umin", ptr, val, ordering="monotonic")

    return sig, codegen


@njit(nogil=True, inline="always")
def mix64(x):
    """splitmix64 finalizer; uniform-looking uint64 from a counter key."""
    z = np.uint64(x) + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(nogil=True, inline="always")
def pivot_label(step, v, seed):
    """Packed selection label: high 32 bits random draw, low 32 vertex id.

    Keyed by (step, vertex, seed) only, so identical across schedules and
    worker interleavings. Lexicographic (draw, v) order equals integer order
    of the packed word; ties in the draw fall back to the vertex id.
    """
    key = (np.uint64(seed) * np.uint64(0xD1342543DE82EF95)
           + np.uint64(step) * np.uint64(0x2545F4914F6CDD1D)
           + np.uint64(v))
    draw = mix64(key) >> np.uint64(32)
    return (draw << np.uint64(32)) | np.uint64(v)
