"""Sparse multivariate polynomials with complex coefficients.

A polynomial is a plain ``dict`` mapping exponent tuples to complex
coefficients.  All functions return new dicts; inputs are never mutated.
"""
from __future__ import annotations

from itertools import product
from math import factorial
from typing import Dict, Iterable, Tuple

import numpy as np

Exponent = Tuple[int, ...]
Poly = Dict[Exponent, complex]

DEFAULT_DEGREE_CAP = 12


class DegreeOverflowError(ValueError):
    """Raised when an operation would exceed the configured degree cap."""


def one(nvars: int) -> Poly:
    return {(0,) * nvars: 1.0 + 0j}


def monomial(exps: Iterable[int], coeff: complex = 1.0) -> Poly:
    return {tuple(int(e) for e in exps): complex(coeff)}


def variable(j: int, nvars: int) -> Poly:
    e = [0] * nvars
    e[j] = 1
    return {tuple(e): 1.0 + 0j}


def degree(p: Poly) -> int:
    return max((sum(k) for k in p), default=0)


def nvars_of(p: Poly) -> int:
    for k in p:
        return len(k)
    raise ValueError("empty polynomial has no arity")


def clean(p: Poly, tol: float = 0.0) -> Poly:
    return {k: complex(c) for k, c in p.items() if abs(c) > tol}


def add(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for k, c in q.items():
        out[k] = out.get(k, 0j) + c
    return out


def scale(p: Poly, s: complex) -> Poly:
    return {k: s * c for k, c in p.items()}


def mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for ka, ca in p.items():
        for kb, cb in q.items():
            k = tuple(a + b for a, b in zip(ka, kb))
            out[k] = out.get(k, 0j) + ca * cb
    return out


def conj(p: Poly) -> Poly:
    return {k: np.conj(c) for k, c in p.items()}


def deriv(p: Poly, j: int) -> Poly:
    out: Poly = {}
    for k, c in p.items():
        if k[j] == 0:
            continue
        kk = list(k)
        kk[j] -= 1
        out[tuple(kk)] = out.get(tuple(kk), 0j) + c * k[j]
    return out


def check_cap(p: Poly, cap: int) -> Poly:
    for k, c in p.items():
        if sum(k) > cap and c != 0:
            raise DegreeOverflowError(f"degree {sum(k)} exceeds cap {cap}")
    return p


def evaluate(p: Poly, pts: np.ndarray) -> np.ndarray:
    """Evaluate at points of shape (..., nvars); complex points allowed."""
    pts = np.asarray(pts)
    out = np.zeros(pts.shape[:-1], dtype=complex)
    if not p:
        return out
    n = pts.shape[-1]
    maxdeg = [max(k[j] for k in p) for j in range(n)]
    powers = []
    for j in range(n):
        pw = [np.ones(pts.shape[:-1], dtype=pts.dtype if np.iscomplexobj(pts) else float)]
        for _ in range(maxdeg[j]):
            pw.append(pw[-1] * pts[..., j])
        powers.append(pw)
    for k, c in p.items():
        term = c
        for j, e in enumerate(k):
            if e:
                term = term * powers[j][e]
        out = out + term
    return out


def linear_form(row: np.ndarray) -> Poly:
    """Polynomial l(w) = row . w."""
    n = len(row)
    return {tuple(1 if i == j else 0 for i in range(n)): complex(row[j])
            for j in range(n) if row[j] != 0}


def compose_linear(p: Poly, mat: np.ndarray) -> Poly:
    """Return w -> p(mat @ w) where mat has shape (nvars(p), m)."""
    mat = np.asarray(mat)
    m = mat.shape[1]
    forms = [linear_form(mat[j]) for j in range(mat.shape[0])]
    cache: Dict[Tuple[int, int], Poly] = {}

    def power(j: int, e: int) -> Poly:
        if e == 0:
            return one(m)
        if (j, e) not in cache:
            cache[(j, e)] = mul(power(j, e - 1), forms[j])
        return cache[(j, e)]

    out: Poly = {}
    for k, c in p.items():
        term = {(0,) * m: complex(c)}
        for j, e in enumerate(k):
            if e:
                term = mul(term, power(j, e))
        out = add(out, term)
    return out


def shift(p: Poly, q: np.ndarray) -> Poly:
    """Return y -> p(y + q) for a complex shift vector q."""
    d = len(q)
    out: Poly = {}
    for k, c in p.items():
        # expand prod_j (y_j + q_j)^{k_j} with binomials
        ranges = [range(e + 1) for e in k]
        for sub in product(*ranges):
            coeff = c
            for j in range(d):
                coeff *= _binom(k[j], sub[j]) * q[j] ** (k[j] - sub[j])
            out[sub] = out.get(sub, 0j) + coeff
    return out


def _binom(n: int, r: int) -> int:
    return factorial(n) // (factorial(r) * factorial(n - r))


def trace_laplacian(p: Poly, d: int) -> Poly:
    """Apply sum_j d^2/(dy_j deta_j) to a phase-space polynomial in 2d vars."""
    out: Poly = {}
    for j in range(d):
        out = add(out, deriv(deriv(p, j), d + j))
    return out


def weyl_to_standard(symbol: Poly, d: int) -> Poly:
    """Convert a Weyl symbol to the y-left, D-right ordered symbol.

    The map is exp(-(i/2) sum_j d_{y_j} d_{eta_j}), a finite series on
    polynomials.
    """
    out = dict(symbol)
    term = dict(symbol)
    k = 0
    while term:
        k += 1
        term = clean(scale(trace_laplacian(term, d), -0.5j / k))
        out = add(out, term)
    return clean(out)
