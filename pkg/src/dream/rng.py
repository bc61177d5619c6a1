"""Counter-based RNG shared by the sampling kernels.

Both kernel lanes (numba and the pure-numpy fallback) draw uniforms from
the same splitmix64 stream, so a fixed seed yields bitwise-identical event
and control draws regardless of the backend.  Independent substreams are
derived per index, which makes per-event sampling order-free (the
concurrency contract for the case-control sampler).

This module is the pure-python reference; ``kernels.numba_impl`` mirrors
the arithmetic with wrapping uint64 ops.  ``test_backends`` asserts that
the two lanes emit identical streams.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_SALT = 0xA5A5A5A5DEADBEEF
U53_INV = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer: avalanche a 64-bit value."""
    z &= MASK64
    z ^= z >> 30
    z = (z * _MIX1) & MASK64
    z ^= z >> 27
    z = (z * _MIX2) & MASK64
    z ^= z >> 31
    return z


def stream_start(seed: int, index: int) -> int:
    """Initial state of substream `index` under `seed`.

    The state is avalanched so distinct substreams do not overlap as
    shifted copies of one another.
    """
    base = ((seed & MASK64) ^ _STREAM_SALT) + GOLDEN * ((index & MASK64) + 1)
    return mix64(base & MASK64)


def next_u64(state: int) -> tuple[int, int]:
    """Advance the stream; returns (new_state, 64-bit output)."""
    state = (state + GOLDEN) & MASK64
    return state, mix64(state)


def next_unit(state: int) -> tuple[int, float]:
    """Advance the stream; returns (new_state, uniform in [0, 1))."""
    state, u = next_u64(state)
    return state, (u >> 11) * U53_INV
