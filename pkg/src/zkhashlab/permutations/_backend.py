"""Integer backend for the native kernels: gmpy2 ``mpz`` when available."""

try:
    from gmpy2 import mpz as to_fast
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    to_fast = int

from ..field import P

FAST_P = to_fast(P)
