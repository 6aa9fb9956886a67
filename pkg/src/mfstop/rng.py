"""Counter-based random numbers (Philox4x32-10), vectorized over counters.

Every draw is a pure function of ``(key, counter)``, so any sub-block of an
ensemble can be regenerated on its own, in any order, on any worker.
numpy's ``Philox`` bit generator is sequential; random access by arbitrary
counter is what this module adds.
"""

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

# stream tags occupy the fourth counter word
STREAM_DRIVERS = 0
STREAM_LATTICE = 1
STREAM_BOOTSTRAP = 2
STREAM_INSTANCES = 3


def philox4x32(c0, c1, c2, c3, key, rounds=10):
    """Philox4x32 block function. Counters broadcast; ``key`` is a 64-bit int.

    Returns four uint64 arrays holding 32-bit words.
    """
    c0, c1, c2, c3 = np.broadcast_arrays(
        *(np.asarray(c, dtype=np.uint64) & _MASK32 for c in (c0, c1, c2, c3))
    )
    key = int(key) & 0xFFFFFFFFFFFFFFFF
    k0, k1 = key & 0xFFFFFFFF, key >> 32
    for _ in range(rounds):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT32) ^ c1 ^ np.uint64(k0),
            p1 & _MASK32,
            (p0 >> _SHIFT32) ^ c3 ^ np.uint64(k1),
            p0 & _MASK32,
        )
        k0 = (k0 + _W0) & 0xFFFFFFFF
        k1 = (k1 + _W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def _to_open_unit(hi, lo):
    # 53-bit mantissa, shifted half a step off zero: values in (0, 1)
    bits = ((hi >> np.uint64(5)) << np.uint64(26)) | (lo >> np.uint64(6))
    return (bits.astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def uniforms(key, c0, c1, c2, stream=0):
    """Two independent uniforms on (0, 1) per counter triple."""
    w0, w1, w2, w3 = philox4x32(c0, c1, c2, stream, key)
    return _to_open_unit(w0, w1), _to_open_unit(w2, w3)


def normals(key, c0, c1, c2, stream=0):
    """One standard normal per counter triple (Box-Muller, cosine branch)."""
    u1, u2 = uniforms(key, c0, c1, c2, stream)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def bits(key, c0, c1, c2, stream=0):
    """One fair bit (0/1) per counter triple."""
    w0, _, _, _ = philox4x32(c0, c1, c2, stream, key)
    return (w0 >> np.uint64(31)).astype(np.int8)


def bootstrap_counts(key, n_resamples, size):
    """Multinomial resample counts, shape (n_resamples, size), deterministic in key."""
    b = np.arange(n_resamples, dtype=np.uint64)[:, None]
    j = np.arange(size, dtype=np.uint64)[None, :]
    u, _ = uniforms(key, j, b, 0, STREAM_BOOTSTRAP)
    picks = np.minimum((u * size).astype(np.int64), size - 1)
    flat = (np.arange(n_resamples)[:, None] * size + picks).ravel()
    counts = np.bincount(flat, minlength=n_resamples * size)
    return counts.reshape(n_resamples, size).astype(np.float64)
