"""Portable counter-based uniform generator.

The stream is SplitMix64 written in counter form, so draw ``k`` (0-based)
of a generator keyed by ``key`` is::

    z   = (key + (k + 1) * 0x9E3779B97F4A7C15) mod 2**64
    z   = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z   = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    x   = z ^ (z >> 31)
    u_k = ((x >> 11) + 1) / 2**53

``u_k`` lies in (0, 1]: zero is excluded and 1.0 is reachable. Because the
k-th output is a pure function of ``(key, k)`` the generator can be
vectorised with numpy and replayed inside compiled kernels bit for bit.

Child streams (see :meth:`Rng.spawn`) are keyed by
``mix(key + (stream + 1) * 0xD1B54A32D192ED03)`` where ``mix`` is the three
xor-shift-multiply lines above.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
SPAWN_GAMMA = 0xD1B54A32D192ED03
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV_2_53 = 2.0**-53

_U_GAMMA = np.uint64(GAMMA)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U_ONE = np.uint64(1)
_U_11 = np.uint64(11)
_U_27 = np.uint64(27)
_U_30 = np.uint64(30)
_U_31 = np.uint64(31)


def mix64(z: int) -> int:
    """SplitMix64 finaliser on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U_30)) * _U_M1
    z = (z ^ (z >> _U_27)) * _U_M2
    return z ^ (z >> _U_31)


@njit(cache=True, inline="always")
def uniform_at(key, index):
    """Draw ``index`` of the stream keyed by ``key``, for use inside kernels.

    Both arguments must be ``np.uint64``.
    """
    z = key + (index + np.uint64(1)) * np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return ((z >> np.uint64(11)) + np.uint64(1)) * 2.0**-53


class Rng:
    """Seeded uniform source on (0, 1].

    A generator is a ``(key, counter)`` pair. Every draw advances the
    counter; nothing else is mutated, so :meth:`copy` gives an independent
    replay of the remaining stream.
    """

    __slots__ = ("key", "counter")

    def __init__(self, seed: int = 0):
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
            raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
        seed = int(seed)
        if not 0 <= seed <= MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.key = seed
        self.counter = 0

    def __repr__(self) -> str:
        return f"Rng(key={self.key:#018x}, counter={self.counter})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Rng):
            return NotImplemented
        return self.key == other.key and self.counter == other.counter

    def copy(self) -> Rng:
        new = Rng.__new__(Rng)
        new.key = self.key
        new.counter = self.counter
        return new

    def spawn(self, stream: int) -> Rng:
        """Independent child generator; does not advance the parent."""
        return Rng(mix64(self.key + (int(stream) + 1) * SPAWN_GAMMA))

    def next_uniform(self) -> float:
        x = mix64(self.key + (self.counter + 1) * GAMMA)
        self.counter += 1
        return ((x >> 11) + 1) * _INV_2_53

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` consecutive draws as a float64 array."""
        n = int(n)
        if n < 0:
            raise ValueError("n must be non-negative")
        idx = np.arange(self.counter + 1, self.counter + 1 + n, dtype=np.uint64)
        z = np.uint64(self.key) + idx * _U_GAMMA
        x = _mix_array(z)
        self.counter += n
        return ((x >> _U_11) + _U_ONE).astype(np.float64) * _INV_2_53

    def normals(self, n: int) -> np.ndarray:
        """Standard normal draws by Box-Muller, two uniforms per pair of outputs."""
        n = int(n)
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs)
        radius = np.sqrt(-2.0 * np.log(u[0::2]))
        angle = 2.0 * np.pi * u[1::2]
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]

    def exponentials(self, n: int) -> np.ndarray:
        return -np.log(self.uniforms(n))

    def advance(self, n: int) -> None:
        """Skip ``n`` draws (used after a compiled kernel consumed them)."""
        self.counter += int(n)


def rng_new(seed: int) -> Rng:
    return Rng(seed)


def next_uniform(rng: Rng) -> float:
    return rng.next_uniform()
