"""Binary BCH codes: systematic encoding, Berlekamp-Massey hard-decision decoding.

Polynomials over GF(2) are Python ints (bit i = coefficient of x**i).
Codeword bit ``j`` is the coefficient of ``x**(n-1-j)``: info bits come
first, parity last, then zero padding up to the on-air length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError

# primitive polynomials, bit i = coefficient of x**i
PRIMITIVE_POLYS = {
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0b100011101,
    9: 0b1000010001,
    10: 0b10000001001,
}


class GF2m:
    """GF(2**m) via exp/log tables over a primitive polynomial."""

    def __init__(self, m: int):
        if m not in PRIMITIVE_POLYS:
            raise ConfigError(f"GF(2^{m}) not supported; m must be in {sorted(PRIMITIVE_POLYS)}")
        self.m = m
        self.order = (1 << m) - 1
        poly = PRIMITIVE_POLYS[m]
        exp = [0] * (2 * self.order)
        log = [0] * (self.order + 1)
        x = 1
        for i in range(self.order):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x >> m:
                x ^= poly
        for i in range(self.order, 2 * self.order):
            exp[i] = exp[i - self.order]
        self.exp = exp
        self.log = log

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp[self.log[a] + self.log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of 0 in GF(2^m)")
        return self.exp[(self.order - self.log[a]) % self.order]

    def alpha_pow(self, e: int) -> int:
        return self.exp[e % self.order]


def _poly_mulmod2(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def _poly_mod2(a: int, g: int) -> int:
    dg = g.bit_length() - 1
    while a.bit_length() - 1 >= dg:
        a ^= g << (a.bit_length() - 1 - dg)
    return a


def _minimal_poly(field_: GF2m, coset: list[int]) -> int:
    # product of (x + alpha^j); coefficients end up in GF(2)
    coeffs = [1]  # lowest degree first, GF(2^m) elements
    for j in coset:
        root = field_.alpha_pow(j)
        nxt = [0] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i + 1] ^= c
            nxt[i] ^= field_.mul(c, root)
        coeffs = nxt
    if any(c not in (0, 1) for c in coeffs):
        raise AssertionError("minimal polynomial has non-binary coefficients")
    return sum(c << i for i, c in enumerate(coeffs))


@lru_cache(maxsize=None)
def bch_generator(m: int, t: int) -> int:
    """Narrow-sense BCH generator: lcm of minimal polynomials of alpha^1 .. alpha^2t."""
    field_ = GF2m(m)
    seen: set[int] = set()
    g = 1
    for i in range(1, 2 * t + 1):
        if i % field_.order in seen:
            continue
        coset = []
        j = i % field_.order
        while j not in coset:
            coset.append(j)
            j = (2 * j) % field_.order
        seen.update(coset)
        g = _poly_mulmod2(g, _minimal_poly(field_, coset))
    return g


@dataclass(frozen=True)
class BchCode:
    n: int
    k: int
    t: int
    generator: int
    pad_bits: int = 0
    field_: GF2m = field(repr=False, compare=False, default=None)

    @property
    def m(self) -> int:
        return self.n.bit_length()

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def on_air_bits(self) -> int:
        return self.n + self.pad_bits


@lru_cache(maxsize=None)
def make_bch(n: int, k: int, t: int, on_air_bits: int | None = None) -> BchCode:
    m = n.bit_length()
    if n != (1 << m) - 1:
        raise ConfigError(f"BCH length n={n} is not of the form 2^m - 1")
    if not 0 < k < n:
        raise ConfigError("BCH requires 0 < k < n")
    g = bch_generator(m, t)
    deg = g.bit_length() - 1
    if deg != n - k:
        raise ConfigError(f"BCH({n},{k}) with t={t} needs n-k={deg}, got {n - k}")
    on_air = n if on_air_bits is None else on_air_bits
    if on_air < n:
        raise ConfigError("on-air length shorter than the codeword")
    return BchCode(n=n, k=k, t=t, generator=g, pad_bits=on_air - n, field_=GF2m(m))


def _bits_to_int(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def _int_to_bits(value: int, length: int) -> np.ndarray:
    return np.array([(value >> (length - 1 - i)) & 1 for i in range(length)], dtype=np.uint8)


def encode(info, code: BchCode) -> np.ndarray:
    info = np.asarray(info, dtype=np.uint8)
    if info.shape != (code.k,):
        raise ValueError(f"expected {code.k} info bits, got shape {info.shape}")
    msg = _bits_to_int(info) << (code.n - code.k)
    word = msg ^ _poly_mod2(msg, code.generator)
    out = np.zeros(code.on_air_bits, dtype=np.uint8)
    out[: code.n] = _int_to_bits(word, code.n)
    return out


def syndromes(word: int, code: BchCode) -> list[int]:
    f = code.field_
    degs = [d for d in range(code.n) if (word >> d) & 1]
    out = []
    for j in range(1, 2 * code.t + 1):
        s = 0
        for d in degs:
            s ^= f.exp[(j * d) % f.order]
        out.append(s)
    return out


def berlekamp_massey(synd: list[int], f: GF2m) -> list[int]:
    """Error-locator polynomial (lowest degree first) from syndromes S1..S2t."""
    lam = [1]
    prev = [1]
    ell = 0
    shift = 1
    b = 1
    for r in range(len(synd)):
        d = synd[r]
        for i in range(1, ell + 1):
            if i < len(lam):
                d ^= f.mul(lam[i], synd[r - i])
        if d == 0:
            shift += 1
            continue
        coef = f.mul(d, f.inv(b))
        nxt = lam + [0] * max(0, len(prev) + shift - len(lam))
        for i, c in enumerate(prev):
            nxt[i + shift] ^= f.mul(coef, c)
        if 2 * ell <= r:
            prev, lam = lam, nxt
            ell = r + 1 - ell
            b = d
            shift = 1
        else:
            lam = nxt
            shift += 1
    while len(lam) > 1 and lam[-1] == 0:
        lam.pop()
    return lam


def decode(received, code: BchCode) -> np.ndarray | None:
    """Info bits, or ``None`` when the error pattern is detectably uncorrectable.

    Any pattern of weight <= t is corrected. Heavier patterns may also decode
    to a wrong codeword; callers compare against the sent info bits.
    """
    r = np.asarray(received, dtype=np.uint8)
    if r.shape != (code.on_air_bits,):
        raise ValueError(f"expected {code.on_air_bits} received bits, got shape {r.shape}")
    word = _bits_to_int(r[: code.n])
    synd = syndromes(word, code)
    if any(synd):
        f = code.field_
        lam = berlekamp_massey(synd, f)
        n_err = len(lam) - 1
        if n_err > code.t:
            return None
        roots = []
        for d in range(code.n):
            # error at degree d  <=>  lam(alpha^-d) == 0
            acc = 0
            for i, c in enumerate(lam):
                if c:
                    acc ^= f.exp[(f.log[c] - i * d) % f.order]
            if acc == 0:
                roots.append(d)
        if len(roots) != n_err:
            return None
        for d in roots:
            word ^= 1 << d
    return _int_to_bits(word >> (code.n - code.k), code.k)


def codewords(code: BchCode):
    """Enumerate all 2**k codewords (small codes only)."""
    if code.k > 16:
        raise ValueError("enumeration limited to k <= 16")
    for v in range(1 << code.k):
        yield encode(_int_to_bits(v, code.k), code)[: code.n]


def minimum_distance(code: BchCode) -> int:
    return min(int(c.sum()) for c in codewords(code) if c.any())
