"""Herman-Kluk (frozen Gaussian) propagation for scalar and gapped matrix models.

    I psi_0 = (2 pi eps)^{-d} int V(t, z) a_h(t, z) e^{iS/eps} g_{Phi(z)} <g_z, psi_0> dz

with g_z = WP^eps_z of the unit Gaussian (width i) and
a_h = 2^{-d/2} det^{1/2}(A + D + i(C - B)).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from .dynamics import IntegratorControls, integrate_batch
from .gaussian import (BranchJumpError, PolyGaussian, continue_sqrt, inner_product, unit_gaussian,
                       wave_packet_profile)
from .grid import Grid
from .models import ModelSpec

__all__ = ["HKSample", "HKSeeds", "HKPropagation", "CoverageError", "hk_decompose", "hk_propagate",
           "hk_prefactor", "frozen_gaussian", "husimi_covariance"]


class CoverageError(ValueError):
    pass


@dataclass
class HKSample:
    z0: np.ndarray
    coeff: complex
    weight: float
    z: Optional[np.ndarray] = None
    action: float = 0.0
    prefactor: complex = 1.0
    eigvec: Optional[np.ndarray] = None


@dataclass
class HKSeeds:
    eps: float
    samples: List[HKSample]
    spacing: Optional[np.ndarray] = None
    half_width: Optional[np.ndarray] = None
    method: str = "trapezoid"

    @property
    def nodes(self) -> np.ndarray:
        return np.array([s.z0 for s in self.samples])

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([s.coeff for s in self.samples])

    @property
    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.samples])

    def report(self) -> dict:
        return {"method": self.method, "n_seeds": len(self.samples),
                "spacing": None if self.spacing is None else self.spacing.tolist(),
                "half_width": None if self.half_width is None else self.half_width.tolist()}


def frozen_gaussian(centers: np.ndarray, eps: float, grid: Grid) -> np.ndarray:
    """g^eps_z(x) for many centres, shape (n_centres,) + grid shape."""
    centers = np.atleast_2d(centers)
    d = grid.d
    xs = grid.mesh()
    q = centers[:, :d]
    p = centers[:, d:]
    expo = np.zeros((len(centers),) + grid.shape, complex)
    for j in range(d):
        dx = xs[j][None] - q[:, j].reshape((-1,) + (1,) * d)
        expo += 1j * p[:, j].reshape((-1,) + (1,) * d) * dx / eps - dx ** 2 / (2 * eps)
    return (np.pi * eps) ** (-d / 4) * np.exp(expo)


def husimi_covariance(g: PolyGaussian) -> np.ndarray:
    """Unit-scale covariance of |<g_z, g>| as a function of z (Gaussian part only)."""
    gam = g.width
    re, im = gam.real, gam.imag
    iinv = np.linalg.inv(im)
    d = g.d
    # Wigner covariance of a Gaussian with width re + i im
    wig = 0.5 * np.block([[iinv, iinv @ re], [re @ iinv, im + re @ iinv @ re]])
    return 2.0 * (wig + 0.5 * np.eye(2 * d))


def hk_decompose(v0: Union[PolyGaussian, np.ndarray], eps: float, center=None, grid: Optional[Grid] = None,
                 spacing: float = 0.5, n_sigma: float = 6.5, box=None, method: str = "trapezoid",
                 n_samples: int = 4096, seed: int = 0) -> HKSeeds:
    """Phase-space nodes, weights and coefficients <g_z, v0>.

    ``v0`` is either a PolyGaussian profile placed at ``center`` (coefficients
    in closed form) or a grid array sampled on ``grid`` (coefficients by grid
    quadrature; ``center`` and the box are then required or estimated).
    ``spacing`` is in units of sqrt(eps); the default box extends ``n_sigma``
    standard deviations of the coefficient function along each axis.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    se = np.sqrt(eps)
    if isinstance(v0, PolyGaussian):
        if center is None:
            raise ValueError("center is required for PolyGaussian input")
        center = np.asarray(center, float)
        cov = husimi_covariance(v0)
        target = wave_packet_profile(v0, center, eps)
        g0 = unit_gaussian(np.eye(v0.d) * 1j)

        def coeff(z):
            return inner_product(wave_packet_profile(g0, z, eps), target)
    else:
        if grid is None:
            raise ValueError("grid input needs the grid")
        arr = np.asarray(v0)
        if arr.ndim == grid.d + 1 and arr.shape[0] == 1:
            arr = arr[0]
        center, cov = _grid_moments(arr, grid, eps)

        def coeff(z):
            return complex(np.sum(np.conj(frozen_gaussian(z[None], eps, grid)[0]) * arr) * grid.cell)
    m = center.size
    d = m // 2
    sig = np.sqrt(np.diag(cov))
    half = n_sigma * sig * se if box is None else np.broadcast_to(np.asarray(box, float), (m,)).copy()
    if box is not None and np.any(half < 5.0 * sig * se):
        raise CoverageError("quadrature box misses part of the packet's phase-space mass")
    samples = []
    norm = (2 * np.pi * eps) ** (-d)
    if method == "trapezoid":
        h = spacing * se
        axes = [c + h * np.arange(-np.ceil(w / h), np.ceil(w / h) + 1) for c, w in zip(center, half)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, m)
        w = h ** m * norm
        for z in mesh:
            samples.append(HKSample(z, coeff(z), w))
        return HKSeeds(eps, samples, np.full(m, h), half, "trapezoid")
    if method == "montecarlo":
        rng = np.random.default_rng(seed)
        c = cov * eps
        zs = rng.multivariate_normal(center, c, size=n_samples)
        cinv = np.linalg.inv(c)
        dens = np.exp(-0.5 * np.einsum("ni,ij,nj->n", zs - center, cinv, zs - center))
        dens /= np.sqrt((2 * np.pi) ** m * np.linalg.det(c))
        for z, p in zip(zs, dens):
            samples.append(HKSample(z, coeff(z), norm / (p * n_samples)))
        return HKSeeds(eps, samples, None, None, "montecarlo")
    raise ValueError(f"unknown method {method!r}")


def _grid_moments(arr, grid: Grid, eps: float):
    d = grid.d
    w = np.abs(arr) ** 2
    tot = np.sum(w)
    xs = grid.mesh()
    q = np.array([np.sum(x * w) / tot for x in xs])
    vq = np.array([np.sum((x - qj) ** 2 * w) / tot for x, qj in zip(xs, q)])
    ft = np.abs(np.fft.fftn(arr)) ** 2
    ks = [eps * k for k in grid.k_mesh()]
    ftot = np.sum(ft)
    p = np.array([np.sum(k * ft) / ftot for k in ks])
    vp = np.array([np.sum((k - pj) ** 2 * ft) / ftot for k, pj in zip(ks, p)])
    cov = np.diag(np.concatenate([vq, vp]) / eps) * 2 + np.eye(2 * d)
    return np.concatenate([q, p]), cov


def hk_prefactor(f: np.ndarray, ref: Optional[complex] = None) -> complex:
    """2^{-d/2} det^{1/2}(A + D + i(C - B)), branch nearest ``ref``."""
    m = f.shape[-1]
    d = m // 2
    a, b, c, dd = f[:d, :d], f[:d, d:], f[d:, :d], f[d:, d:]
    det = complex(np.linalg.det(a + dd + 1j * (c - b))) / 2 ** d
    return continue_sqrt(det, ref)


@dataclass
class HKPropagation:
    model: ModelSpec
    band: int
    eps: float
    t0: float
    t_end: float
    seeds: HKSeeds

    def evaluate(self, grid: Grid, chunk: int = 256) -> np.ndarray:
        """Sum the frozen Gaussians on a grid, shape (N,) + grid shape (fixed order)."""
        n = self.model.dim_N
        out = np.zeros((n,) + grid.shape, complex)
        s = self.seeds.samples
        for k in range(0, len(s), chunk):
            part = s[k: k + chunk]
            zs = np.array([p.z for p in part])
            amp = np.array([p.weight * p.coeff * p.prefactor * np.exp(1j * p.action / self.eps) for p in part])
            g = frozen_gaussian(zs, self.eps, grid)
            vec = np.array([p.eigvec for p in part])
            out += np.einsum("s,sn,s...->n...", amp, vec, g)
        return out

    def write_csv(self, path) -> None:
        m = 2 * self.model.dim_d
        n = self.model.dim_N
        head = ([f"z0_{i}" for i in range(m)] + ["coeff_re", "coeff_im"] + [f"z_{i}" for i in range(m)]
                + ["S", "a_re", "a_im"] + [f"Y{i}_{c}" for i in range(n) for c in ("re", "im")])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(head)
            for p in self.seeds.samples:
                row = list(p.z0) + [p.coeff.real, p.coeff.imag] + list(p.z) + [p.action, p.prefactor.real,
                                                                                 p.prefactor.imag]
                for v in p.eigvec:
                    row += [v.real, v.imag]
                w.writerow([repr(float(x)) for x in row])


def hk_propagate(model: ModelSpec, band: int, seeds: HKSeeds, t0: float, t_end: float,
                 y_ref: Optional[np.ndarray] = None, n_track: int = 32,
                 controls: Optional[IntegratorControls] = None, drop_below: float = 0.0) -> HKPropagation:
    """Integrate every seed's bundle and attach (z, S, a_h, V) at ``t_end``.

    a_h is continued from 1 through ``n_track`` sample times; the sampling is
    refined when an argument jump reaches pi/2 and the run fails past 2^12.
    Seeds with |coeff| below ``drop_below`` times the largest are skipped.
    """
    samples = seeds.samples
    if drop_below > 0:
        cmax = max(abs(s.coeff) for s in samples)
        samples = [s for s in samples if abs(s.coeff) >= drop_below * cmax]
    z0s = np.array([s.z0 for s in samples])
    y0s = None
    if model.dim_N > 1:
        if y_ref is None:
            y_ref = model.band_vector(band, t0, z0s.mean(axis=0))
        pis = model.projector(band, t0, z0s)
        y0s = pis @ np.asarray(y_ref, complex)
        y0s /= np.linalg.norm(y0s, axis=-1, keepdims=True)
    n = n_track
    while True:
        times = np.linspace(t0, t_end, n + 1)
        ts, z, s, f, y = integrate_batch(model, band, z0s, t0, t_end, y0s, times, controls)
        try:
            pref = []
            for k in range(len(samples)):
                a = 1.0 + 0j
                for fi in f[1:, k]:
                    a = hk_prefactor(fi, a)
                pref.append(a)
            break
        except BranchJumpError:
            n *= 4
            if n > 1 << 12:
                raise
    out = []
    for k, smp in enumerate(samples):
        yv = y[-1, k] if model.dim_N > 1 else np.ones(1, complex)
        out.append(HKSample(smp.z0, smp.coeff, smp.weight, z[-1, k].copy(), float(s[-1, k]), pref[k], yv))
    return HKPropagation(model, band, seeds.eps, t0, t_end, HKSeeds(seeds.eps, out, seeds.spacing,
                                                                     seeds.half_width, seeds.method))
