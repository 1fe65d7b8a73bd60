"""Deterministic 64-bit random streams.

Every random draw in the toolkit flows through :class:`Rng64` so that any
pipeline re-run with the same seed is bit-identical, in any language that
reimplements the arithmetic below. All operations are modulo 2**64.

State transition (one draw)::

    state  = (state + 0x9E3779B97F4A7C15) mod 2**64
    output = mix64(state)

where ``mix64`` is the finalizer::

    z = state
    z = ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2**64
    z = ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2**64
    mix64 = z XOR (z >> 31)

Child-stream derivation from ``(origin_seed, label)``::

    child_origin = mix64(mix64(origin_seed) XOR fnv1a64(label_utf8))

with the classic FNV-1a 64-bit hash (offset 0xCBF29CE484222325,
prime 0x100000001B3). Children depend only on the origin seed and the
label, never on how much of the parent stream has been consumed, so
derivations are order- and thread-independent.

Uniform doubles are ``((output >> 11) + 1) * 2**-53``, i.e. in (0, 1];
standard normals come from Box-Muller pairs: for draws ``u1, u2`` (in
that stream order), ``r = sqrt(-2 ln u1)`` gives ``r*cos(2*pi*u2)`` then
``r*sin(2*pi*u2)``. An odd request discards the trailing sin value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def mix64(z: int) -> int:
    """The splitmix-style output finalizer, as documented above."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return h


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


@dataclass
class Rng64:
    """Deterministic generator; value type, cheap to copy, no shared state."""

    origin_seed: int
    state: int = field(default=-1)

    def __post_init__(self) -> None:
        self.origin_seed &= _MASK
        if self.state == -1:
            self.state = self.origin_seed
        self.state &= _MASK

    # -- core draws ---------------------------------------------------------

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        return mix64(self.state)

    def u64(self, n: int) -> np.ndarray:
        """Next ``n`` raw outputs as a uint64 array (vectorized)."""
        if n < 0:
            raise ValueError(f"negative draw count: {n}")
        steps = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GAMMA)
        out = _mix64_array(np.uint64(self.state) + steps)
        self.state = (self.state + n * _GAMMA) & _MASK
        return out

    def uniform(self) -> float:
        """One double in (0, 1]."""
        return ((self.next_u64() >> 11) + 1) * 2.0**-53

    def uniforms(self, n: int) -> np.ndarray:
        return ((self.u64(n) >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        """``n`` standard normals via Box-Muller on consecutive uniform pairs."""
        if n == 0:
            return np.empty(0)
        m = (n + 1) // 2
        u = self.uniforms(2 * m)
        u1, u2 = u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(2.0 * math.pi * u2)
        out[1::2] = r * np.sin(2.0 * math.pi * u2)
        return out[:n]

    def normal(self) -> float:
        return float(self.normals(1)[0])

    def uniform_int(self, n: int) -> int:
        """Uniform integer in [0, n); scaled-multiply of one uniform draw."""
        if n <= 0:
            raise ValueError(f"uniform_int needs a positive bound, got {n}")
        return min(int(self.uniform() * n), n - 1)

    # -- stream derivation ----------------------------------------------------

    def derive(self, label: str) -> "Rng64":
        """Child stream for ``label``; depends only on (origin_seed, label)."""
        child = mix64(mix64(self.origin_seed) ^ fnv1a64(label.encode("utf-8")))
        return Rng64(child)


def derive_stream(rng: Rng64, label: str) -> Rng64:
    """Module-level alias for :meth:`Rng64.derive`."""
    return rng.derive(label)
