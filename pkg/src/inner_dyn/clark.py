"""Inner functions from finite atomic Clark measures.

For a probability ``pi = sum m_j delta_{t_j}`` the Herglotz integral
``F(z) = sum m_j (w_j + z)/(w_j - z)`` (``w_j = chi(t_j)``) has positive real
part and ``F(0) = 1``, so ``phi = (F - 1)/(F + 1)`` is a finite Blaschke
product of degree ``k`` with ``phi(0) = 0`` whose Clark measure at the
boundary point 1 is ``pi``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import polynomial as P

from .circle import evaluate_restriction, preimages
from .errors import DomainError, MobiusError, NumericError, SpecError
from .inner import InnerFunctionSpec, chi, circ_dist, circ_reduce, eval_disk

ZERO_STRIP = 1e-12
UNIMODULAR_TOL = 1e-10
DIVERGENCE_THRESHOLDS = (1e-6, 1e-8, 1e-10)
DIVERGENCE_GROWTH = 10.0


@dataclass(frozen=True)
class AtomicMeasure:
    """``((t, mass), ...)``: masses positive and summing to 1, distinct locations."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(circ_reduce(float(t))), float(m)) for t, m in self.atoms)
        if not atoms:
            raise SpecError("atomic measure needs at least one atom")
        for t, m in atoms:
            if not m > 0 or not math.isfinite(m):
                raise SpecError(f"atom mass must be positive, got {m}")
        total = sum(m for _, m in atoms)
        if abs(total - 1.0) > 1e-12:
            raise SpecError(f"masses must sum to 1 (got {total!r})")
        ts = sorted(t for t, _ in atoms)
        for a, b in zip(ts, ts[1:] + [ts[0] + 1.0]):
            if len(ts) > 1 and circ_dist(a, b) < 1e-12:
                raise SpecError(f"atom locations must be distinct (t = {a})")
        object.__setattr__(self, "atoms", atoms)

    @property
    def locations(self) -> np.ndarray:
        return np.array([t for t, _ in self.atoms])

    @property
    def masses(self) -> np.ndarray:
        return np.array([m for _, m in self.atoms])

    def to_dict(self) -> dict:
        return {"atoms": [{"t": t, "mass": m} for t, m in self.atoms]}

    @classmethod
    def from_dict(cls, data: dict) -> "AtomicMeasure":
        try:
            return cls(tuple((a["t"], a["mass"]) for a in data["atoms"]))
        except (KeyError, TypeError) as exc:
            raise SpecError(f"measure JSON needs atoms: [{{t, mass}}, ...] ({exc})") from exc

    @classmethod
    def load(cls, path) -> "AtomicMeasure":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def random(cls, gen: np.random.Generator, k: int, min_sep: float = 0.02, min_mass: float = 0.05):
        """``k`` atoms pairwise at least ``min_sep`` apart with masses at least ``min_mass``."""
        if k * min_sep >= 1 or k * min_mass > 1:
            raise DomainError("separation or mass floor too large for k atoms")
        # spacing: min_sep plus a Dirichlet share of the slack
        gaps = min_sep + (1 - k * min_sep) * gen.dirichlet(np.ones(k))
        ts = (gen.random() + np.cumsum(gaps)) % 1.0
        ms = min_mass + (1 - k * min_mass) * gen.dirichlet(np.ones(k))
        ms[-1] = 1.0 - ms[:-1].sum()
        return cls(tuple(zip(ts.tolist(), ms.tolist())))


def herglotz_F(pi: AtomicMeasure, z):
    """``sum m_j (w_j + z)/(w_j - z)`` on the open disc."""
    z = np.asarray(z, dtype=np.complex128)
    if np.any(np.abs(z) >= 1):
        raise DomainError("herglotz_F is evaluated on the open disc |z| < 1")
    w = chi(pi.locations)
    out = np.zeros(z.shape, dtype=np.complex128)
    for wj, mj in zip(w, pi.masses):
        out = out + mj * (wj + z) / (wj - z)
    return out[()] if out.ndim == 0 else out


def _herglotz_polys(pi: AtomicMeasure):
    """``(P, Q)`` ascending coefficients with ``F = P / Q``."""
    w = chi(pi.locations)
    Q = np.array([1.0 + 0j])
    for wj in w:
        Q = P.polymul(Q, [wj, -1.0])
    Pn = np.zeros(len(w) + 1, dtype=np.complex128)
    for j, (wj, mj) in enumerate(zip(w, pi.masses)):
        term = np.array([mj * wj, mj], dtype=np.complex128)
        for i, wi in enumerate(w):
            if i != j:
                term = P.polymul(term, [wi, -1.0])
        Pn = P.polyadd(Pn, term)
    return Pn, Q


def _polish(coeffs: np.ndarray, r: complex, steps: int = 8) -> complex:
    d = P.polyder(coeffs)
    for _ in range(steps):
        f = P.polyval(r, coeffs)
        df = P.polyval(r, d)
        if df == 0 or abs(f) == 0:
            break
        step = f / df
        r = r - step
        if abs(step) < 1e-17:
            break
    return complex(r)


def inner_from_clark(pi: AtomicMeasure) -> InnerFunctionSpec:
    """Finite Blaschke product ``phi = (F - 1)/(F + 1)`` with Clark measure ``pi`` at 1."""
    if len(pi.atoms) == 1:
        t = pi.atoms[0][0]
        w = complex(chi(t))
        exc = MobiusError(f"a single atom gives the rotation phi(z) = z / chi({t}), which is Möbius")
        exc.payload = {"phi": "z / chi(t)", "t": t, "rotation": {"re": (1 / w).real, "im": (1 / w).imag}}
        raise exc
    Pn, Q = _herglotz_polys(pi)
    N = P.polysub(Pn, Q)
    scale = np.max(np.abs(N))
    # F(0) = 1 makes N(0) = 0: low-order round-off is stripped as roots at 0
    mult0 = 0
    while mult0 < N.size - 1 and abs(N[mult0]) <= ZERO_STRIP * scale:
        mult0 += 1
    core = N[mult0:]
    roots = P.polyroots(core) if core.size > 1 else np.array([])
    roots = np.array([_polish(N, r) for r in roots])
    if np.any(np.abs(roots) >= 1.0):
        raise NumericError(f"root-finder returned a zero outside the disc (|a| = {np.abs(roots).max():.17g})")
    zeros = []
    if mult0:
        zeros.append((0j, mult0))
    zeros.extend((complex(r), 1) for r in roots)
    unit = InnerFunctionSpec(1.0, tuple(zeros), ())
    z0 = 0.5 * np.exp(0.37j)
    F0 = herglotz_F(pi, z0)
    rot = complex((F0 - 1) / (F0 + 1) / eval_disk(unit, z0))
    rot /= abs(rot)
    spec = InnerFunctionSpec(rot, tuple(zeros), ())
    theta = np.arange(1024) / 1024
    mod = np.abs(eval_disk(spec, chi(theta)))
    if np.max(np.abs(mod - 1.0)) > UNIMODULAR_TOL:
        raise NumericError("constructed map is not unimodular on the circle to 1e-10")
    return spec


@dataclass(frozen=True)
class RoundtripReport:
    max_error: float
    location_error: float
    weight_error: float
    degree: int
    spec: InnerFunctionSpec

    def to_dict(self) -> dict:
        return {
            "max_error": self.max_error,
            "location_error": self.location_error,
            "weight_error": self.weight_error,
            "degree": self.degree,
            "spec": self.spec.to_dict(),
        }


def clark_roundtrip_check(pi: AtomicMeasure, spec: Optional[InnerFunctionSpec] = None) -> RoundtripReport:
    """Compare the preimages of 0 under ``tau(phi)`` and their weights with ``pi``."""
    spec = spec or inner_from_clark(pi)
    ca = preimages(spec, 0.0, weight_threshold=1e-14)
    if len(ca) != len(pi.atoms):
        return RoundtripReport(math.inf, math.inf, math.inf, spec.degree, spec)
    loc_err = 0.0
    w_err = 0.0
    pts, wts = ca.points, ca.weights
    for t, m in pi.atoms:
        dist = circ_dist(pts, t)
        j = int(np.argmin(dist))
        loc_err = max(loc_err, float(dist[j]))
        w_err = max(w_err, abs(float(wts[j]) - m))
    return RoundtripReport(max(loc_err, w_err), loc_err, w_err, spec.degree, spec)


@dataclass(frozen=True)
class AngularReport:
    finite: bool
    value: float
    partial_sums: dict
    x: float
    w: float

    def to_dict(self) -> dict:
        return {
            "finite": self.finite,
            "value": self.value,
            "partial_sums": {f"{k:.0e}": v for k, v in self.partial_sums.items()},
            "x": self.x,
            "w": self.w,
        }


def angular_derivative_check(spec: InnerFunctionSpec, x: float, w: float,
                             thresholds=DIVERGENCE_THRESHOLDS) -> AngularReport:
    """Heuristic finiteness test of ``sum_y weight(y) / |chi(x) - chi(y)|^2`` over ``tau^{-1}(w)``.

    Declared infinite when the partial sum grows more than tenfold between
    the loosest and tightest weight threshold.
    """
    if circ_dist(x, w) < 1e-12:
        raise DomainError("angular derivative check needs w != x")
    cx = complex(chi(x))
    sums = {}
    for thr in thresholds:
        ca = preimages(spec, w, weight_threshold=thr)
        d2 = np.abs(cx - chi(ca.points)) ** 2
        with np.errstate(divide="ignore"):
            sums[thr] = float(np.sum(ca.weights / d2))
    first, last = sums[thresholds[0]], sums[thresholds[-1]]
    finite = bool(np.isfinite(last) and last <= DIVERGENCE_GROWTH * first)
    return AngularReport(finite, last if finite else math.inf, sums, float(x), float(w))
