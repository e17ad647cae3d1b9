"""Native permutation kernels over plain field integers.

Each kernel takes a validated spec and a list of ``t`` canonical ints and
returns a new list.  Round structure per construction:

* MiMC: width-2 Feistel, ``t = xL + c_i; (xL, xR) <- (xR + t^d, xL)``; the
  swap is suppressed on the last round.
* GMiMC: expanding-round-function Feistel, ``s = (x0 + c_i)^d`` added to every
  other branch, then a left rotation.
* Poseidon: add constants to all lanes, S-box on all (full) or lane 0
  (partial), multiply by the MDS matrix.
* Poseidon2 / Neptune: initial external layer, then full rounds with the
  external matrix and partial rounds (one constant, one S-box) with the
  internal matrix.  Neptune reuses this skeleton as a stand-in.
"""

from __future__ import annotations

from ..field import pow_int
from ._backend import FAST_P, to_fast
from .params import PermutationSpec


def _sbox(spec: PermutationSpec):
    p = FAST_P
    if spec.d == 5:

        def sbox(x):
            x2 = x * x % p
            x4 = x2 * x2 % p
            return x4 * x % p

    else:
        d = spec.d

        def sbox(x):
            return to_fast(pow_int(int(x), d))

    return sbox


def mimc(spec: PermutationSpec, state):
    p = FAST_P
    xl, xr = state
    consts = spec.kernel_constants
    if spec.d == 5:
        for (c,) in consts[:-1]:
            t = (xl + c) % p
            t2 = t * t % p
            t4 = t2 * t2 % p
            xl, xr = (xr + t4 * t) % p, xl
        t = (xl + consts[-1][0]) % p
        t2 = t * t % p
        t4 = t2 * t2 % p
        xr = (xr + t4 * t) % p
    else:
        sbox = _sbox(spec)
        for (c,) in consts[:-1]:
            xl, xr = (xr + sbox((xl + c) % p)) % p, xl
        xr = (xr + sbox((xl + consts[-1][0]) % p)) % p
    return [xl, xr]


def gmimc(spec: PermutationSpec, state):
    p = FAST_P
    sbox = _sbox(spec)
    if spec.t == 4:
        x0, x1, x2, x3 = state
        for (c,) in spec.kernel_constants:
            s = sbox((x0 + c) % p)
            x0, x1, x2, x3 = (x1 + s) % p, (x2 + s) % p, (x3 + s) % p, x0
        return [x0, x1, x2, x3]
    x = list(state)
    for (c,) in spec.kernel_constants:
        s = sbox((x[0] + c) % p)
        x = [(v + s) % p for v in x[1:]] + [x[0]]
    return x


def _matvec(m, s, p):
    return [sum(a * b for a, b in zip(row, s)) % p for row in m]


def _linear(m):
    """Return a function applying ``m``; matrices of the form J + diag get an O(t) path."""
    t = len(m)
    if all(m[i][j] == 1 for i in range(t) for j in range(t) if i != j):
        extra = [m[i][i] - 1 for i in range(t)]
        p = FAST_P
        if all(e == 1 for e in extra):

            def apply(s):
                total = sum(s)
                return [(total + a) % p for a in s]

        else:

            def apply(s):
                total = sum(s)
                return [(total + e * a) % p for e, a in zip(extra, s)]

        return apply
    return lambda s: _matvec(m, s, FAST_P)


def poseidon(spec: PermutationSpec, state):
    p = FAST_P
    sbox = _sbox(spec)
    mds = _linear(spec.kernel_matrices["mds"])
    half = spec.rounds_full // 2
    rp = spec.rounds_partial
    s = list(state)
    for r, rc in enumerate(spec.kernel_constants):
        s = [(a + c) % p for a, c in zip(s, rc)]
        if half <= r < half + rp:
            s[0] = sbox(s[0])
        else:
            s = [sbox(a) for a in s]
        s = mds(s)
    return s


def poseidon2(spec: PermutationSpec, state):
    p = FAST_P
    sbox = _sbox(spec)
    ext = _linear(spec.kernel_matrices["external"])
    internal = _linear(spec.kernel_matrices["internal"])
    half = spec.rounds_full // 2
    rp = spec.rounds_partial
    s = ext(list(state))
    for r, rc in enumerate(spec.kernel_constants):
        if half <= r < half + rp:
            s[0] = sbox((s[0] + rc[0]) % p)
            s = internal(s)
        else:
            s = ext([sbox((a + c) % p) for a, c in zip(s, rc)])
    return s


KERNELS = {
    "mimc": mimc,
    "gmimc": gmimc,
    "poseidon": poseidon,
    "poseidon2": poseidon2,
    "neptune": poseidon2,
}


def permute_fast(spec: PermutationSpec, state):
    """Apply the permutation to backend integers (no validation, no wrapping)."""
    return KERNELS[spec.name](spec, state)
