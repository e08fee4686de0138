"""The boundary map ``tau`` of an inner function, as a circle map on [0, 1).

On each arc between consecutive singular atoms the lift

    L(t) = C + sum_a m_a (t + arg(1 - a e^{-2 pi i t}) / pi)
             - sum_j s_j cot(pi (t - t_j)) / (2 pi)

is real-analytic and strictly increasing, with ``tau = L mod 1``. The
Blaschke term is the continuous argument of ``prod b_a(chi(t))**m_a``; its
derivative is ``sum m_a p_a(t)`` with ``p_a`` the Poisson kernel.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BoundaryFixedPointError, DomainError, NumericError, SingularityError
from .inner import (
    ATOM_TOL,
    DenjoyWolffResult,
    InnerFunctionSpec,
    _blaschke_constant,
    circ_dist,
    circ_reduce,
    circ_signed,
    denjoy_wolff,
)
from . import rng

log = logging.getLogger(__name__)

ORBIT_NUDGE = 1e-9


@dataclass(frozen=True)
class Restriction:
    """Boundary map of ``spec``; ``branch_cuts`` are the atom locations."""

    spec: InnerFunctionSpec

    @property
    def branch_cuts(self) -> np.ndarray:
        t, _ = self.spec.atom_arrays()
        return np.sort(t)

    @property
    def offset(self) -> float:
        """Constant part of the lift, in turns."""
        c = cmath.phase(self.spec.rotation)
        for a, m in self.spec.zeros:
            c += m * cmath.phase(_blaschke_constant(a))
        return c / (2 * math.pi)

    def map_arrays(self) -> dict:
        """Flat parameter arrays consumed by the orbit kernels."""
        a, m = self.spec.zero_arrays()
        t, s = self.spec.atom_arrays()
        return {
            "offset": self.offset,
            "zero_re": np.ascontiguousarray(a.real),
            "zero_im": np.ascontiguousarray(a.imag),
            "zero_mult": np.ascontiguousarray(m),
            "atom_t": np.ascontiguousarray(t),
            "atom_mass": np.ascontiguousarray(s),
        }

    def __call__(self, theta):
        return evaluate_restriction(self, theta)[0]


def as_restriction(obj) -> Restriction:
    return obj if isinstance(obj, Restriction) else Restriction(obj)


def _atom_diffs(spec: InnerFunctionSpec, theta: np.ndarray) -> np.ndarray:
    t, _ = spec.atom_arrays()
    return circ_signed(theta[None, ...] - t.reshape((-1,) + (1,) * theta.ndim))


def _parts(spec: InnerFunctionSpec, theta: np.ndarray, diffs: np.ndarray, order: int):
    """Lift (without reduction), first and second derivatives.

    ``diffs`` holds the signed distances ``theta - t_j`` for every atom; the
    caller may supply them with better accuracy than ``theta`` itself.
    """
    lift = np.zeros(theta.shape)
    d1 = np.zeros(theta.shape)
    d2 = np.zeros(theta.shape)
    w = np.exp(-2j * np.pi * theta)
    for a, m in spec.zeros:
        if a == 0:
            lift += m * theta
            d1 += m
            continue
        lift += m * (theta + np.angle(1.0 - a * w) / np.pi)
        if order >= 1:
            wc = np.conj(w)
            dist2 = np.abs(wc - a) ** 2
            p = (1.0 - abs(a) ** 2) / dist2
            d1 += m * p
            if order >= 2:
                d2 += m * (-p * 4 * np.pi * np.imag(np.conj(a) * wc) / dist2)
    for j, (t, s) in enumerate(spec.atoms):
        x = np.pi * diffs[j]
        sn = np.sin(x)
        cs = np.cos(x)
        lift -= s * (cs / sn) / (2 * np.pi)
        if order >= 1:
            d1 += 0.5 * s / sn**2
            if order >= 2:
                d2 -= np.pi * s * cs / sn**3
    return lift, d1, d2


def blaschke_parts(spec: InnerFunctionSpec, theta):
    """First and second derivatives of the Blaschke lift alone."""
    theta = np.asarray(theta, dtype=float)
    bare = InnerFunctionSpec(1.0, spec.zeros, ()) if spec.zeros else None
    if bare is None:
        return np.zeros(theta.shape), np.zeros(theta.shape)
    _, d1, d2 = _parts(bare, theta, np.zeros((0,) + theta.shape), 2)
    return d1, d2


def lift(tau, theta):
    """Continuous lift on each branch; ``tau(theta) = lift mod 1``."""
    tau = as_restriction(tau)
    theta = np.asarray(theta, dtype=float)
    l, _, _ = _parts(tau.spec, theta, _atom_diffs(tau.spec, theta), 0)
    return l + tau.offset


def evaluate_restriction(tau, theta):
    """``(tau(theta), tau'(theta), tau''(theta))`` in closed form.

    Raises :class:`SingularityError` within ``1e-12`` of an atom.
    """
    tau = as_restriction(tau)
    th = np.asarray(theta, dtype=float)
    diffs = _atom_diffs(tau.spec, th)
    if diffs.size and np.any(np.abs(diffs) < ATOM_TOL):
        raise SingularityError("theta lies on a branch cut (singular atom)")
    l, d1, d2 = _parts(tau.spec, th, diffs, 2)
    value = circ_reduce(l + tau.offset)
    if th.ndim == 0:
        return float(value), float(d1), float(d2)
    return value, d1, d2


def derivative_lower_bound(spec: InnerFunctionSpec) -> float:
    """``sum m (1-|a|)/(1+|a|) + sigma(T)/2``, a lower bound for ``tau'``."""
    return float(sum(m * (1 - abs(a)) / (1 + abs(a)) for a, m in spec.zeros) + 0.5 * spec.total_atom_mass)


# -- preimages / Clark measures ----------------------------------------------------


@dataclass(frozen=True)
class ClarkAtoms:
    """Truncated preimage measure ``nu_x`` (atoms ``y`` with weights ``1/tau'(y)``).

    ``tail_estimate`` is the mass of the omitted atoms accumulating at the
    singular atoms, estimated by the midpoint rule ``sum_k w_k ~ int dt``.
    """

    base: float
    points: np.ndarray
    weights: np.ndarray
    truncation_threshold: float
    captured_mass: float
    total_mass: float
    tail_estimate: float = 0.0

    def __len__(self):
        return self.points.size

    def integrate(self, f) -> complex:
        return complex(np.sum(np.asarray(f(self.points)) * self.weights))


def _total_mass(spec: InnerFunctionSpec, x: float) -> float:
    w0 = complex(spec(0.0))
    return float((1 - abs(w0) ** 2) / abs(cmath.exp(2j * math.pi * x) - w0) ** 2)


def _solve_on_arc(spec, offset, start, width, targets, atom_idx_lo, atom_idx_hi):
    """Solve ``lift(start + u) = targets`` for ``u`` in ``(0, width)``.

    Bisection on a bracket valid for all targets, then Newton polish. The
    distances to the two bounding atoms are carried as ``u`` and
    ``u - width`` to keep full relative accuracy next to the atoms.
    """
    t_atoms, _ = spec.atom_arrays()
    targets = np.asarray(targets, dtype=float)

    def ev(u, order):
        theta = start + u
        diffs = circ_signed(theta[None, :] - t_atoms[:, None]) if t_atoms.size else np.zeros((0, u.size))
        if atom_idx_lo is not None:
            diffs[atom_idx_lo] = u
        if atom_idx_hi is not None:
            diffs[atom_idx_hi] = u - width
        l, d1, _ = _parts(spec, theta, diffs, order)
        return l + offset, d1

    lo = np.zeros(targets.shape)
    hi = np.full(targets.shape, width)
    if atom_idx_lo is not None:
        # lift -> -inf at the lower atom, +inf at the upper one
        d = width / 2
        while True:
            val, _ = ev(np.array([d]), 0)
            if val[0] < targets.min() or d < 1e-300:
                break
            d *= 0.5
        lo[:] = d
        d = width / 2
        while True:
            val, _ = ev(np.array([width - d]), 0)
            if val[0] > targets.max() or d < 1e-300:
                break
            d *= 0.5
        hi[:] = width - d
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val, _ = ev(mid, 0)
        below = val < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4 * np.spacing(np.maximum(hi, 1e-300)) + 1e-300):
            break
    u = 0.5 * (lo + hi)
    for _ in range(3):
        val, d1 = ev(u, 1)
        cand = u - (val - targets) / d1
        u = np.where((cand > lo) & (cand < hi), cand, u)
    val, d1 = ev(u, 1)
    resid = np.abs(val - targets)
    if np.any(resid > 1e-7 * np.maximum(1.0, np.abs(targets))):
        raise NumericError("preimage solver failed to converge on a bracketed root")
    return u, 1.0 / d1


def preimages(tau, x: float, weight_threshold: float = 1e-10) -> ClarkAtoms:
    """Atoms of the preimage (Clark) measure at ``x``.

    Without singular atoms there are exactly ``degree`` preimages. With
    atoms, each arc carries infinitely many preimages accumulating at its
    ends; enumeration stops when the weight ``1/tau'(y)`` drops below
    ``weight_threshold``.
    """
    tau = as_restriction(tau)
    spec = tau.spec
    if weight_threshold <= 0:
        raise DomainError("weight_threshold must be positive")
    x = float(circ_reduce(x))
    offset = tau.offset
    pts = []
    wts = []
    tail = 0.0
    if not spec.atoms:
        l0 = float(lift(tau, 0.0))
        d = spec.degree
        k0 = math.ceil(l0 - x)
        targets = x + np.arange(k0, k0 + d)
        targets = targets[(targets >= l0) & (targets < l0 + d)]
        u, w = _solve_on_arc(spec, offset, 0.0, 1.0, targets, None, None)
        pts.append(u)
        wts.append(w)
    else:
        t_sorted = np.argsort(spec.atom_arrays()[0])
        t_atoms = spec.atom_arrays()[0]
        p = len(t_sorted)
        for j in range(p):
            i_lo = t_sorted[j]
            i_hi = t_sorted[(j + 1) % p]
            start = t_atoms[i_lo]
            width = (t_atoms[i_hi] - start) % 1.0 or 1.0
            if p == 1:
                i_hi = i_lo
            arc_pts, arc_w, arc_tail = _arc_preimages(
                spec, offset, start, width, x, weight_threshold, i_lo, i_hi if p > 1 else "same"
            )
            pts.append(start + arc_pts)
            wts.append(arc_w)
            tail += arc_tail
    points = circ_reduce(np.concatenate(pts))
    weights = np.concatenate(wts)
    order = np.argsort(points)
    return ClarkAtoms(
        base=x,
        points=points[order],
        weights=weights[order],
        truncation_threshold=weight_threshold,
        captured_mass=float(np.sum(weights)),
        total_mass=_total_mass(spec, x),
        tail_estimate=float(tail),
    )


clark_measure = preimages


def _arc_preimages(spec, offset, start, width, x, thr, i_lo, i_hi):
    if i_hi == "same":
        # one atom: the arc runs from the atom around to itself
        def solve(targets):
            return _solve_single_atom(spec, offset, start, targets)

        probe = _probe_lift(spec, offset, start, width)
    else:

        def solve(targets):
            return _solve_on_arc(spec, offset, start, width, targets, i_lo, i_hi)

        probe = _probe_lift(spec, offset, start, width)
    k_mid = math.floor(probe - x)
    keep_u = []
    keep_w = []
    edge = {}
    for direction in (-1, 1):
        k = k_mid if direction == -1 else k_mid + 1
        chunk = 128
        last_k = None
        while True:
            ks = k + direction * np.arange(chunk)
            u, w = solve(x + ks)
            small = np.nonzero(w < thr)[0]
            if small.size:
                cut = small[0]
                keep_u.append(u[:cut])
                keep_w.append(w[:cut])
                last_k = ks[cut - 1] if cut > 0 else (k - direction)
                break
            keep_u.append(u)
            keep_w.append(w)
            k = ks[-1] + direction
            chunk *= 2
            if chunk > 2**22:
                raise NumericError("preimage enumeration did not reach the weight threshold")
        edge[direction] = last_k
    # tail: arc length beyond the half-integer target past the last kept root
    u_lo, _ = solve(np.array([x + edge[-1] - 0.5]))
    u_hi, _ = solve(np.array([x + edge[1] + 0.5]))
    tail = float(u_lo[0] + (width - u_hi[0]))
    return np.concatenate(keep_u), np.concatenate(keep_w), tail


def _probe_lift(spec, offset, start, width):
    theta = np.array([start + width / 2])
    t_atoms, _ = spec.atom_arrays()
    diffs = circ_signed(theta[None, :] - t_atoms[:, None])
    l, _, _ = _parts(spec, theta, diffs, 0)
    return float(l[0] + offset)


def _solve_single_atom(spec, offset, start, targets):
    """Arc from the only atom back to itself (width 1)."""
    t_atoms, _ = spec.atom_arrays()
    targets = np.asarray(targets, dtype=float)

    def ev(u, order):
        theta = start + u
        diffs = np.empty((1, u.size))
        # distance to the atom measured from whichever end is closer
        diffs[0] = np.where(u < 0.5, u, u - 1.0)
        l, d1, _ = _parts(spec, theta, diffs, order)
        return l + offset, d1

    d = 0.5
    while True:
        val, _ = ev(np.array([d]), 0)
        if val[0] < targets.min() or d < 1e-300:
            break
        d *= 0.5
    lo = np.full(targets.shape, d)
    d = 0.5
    while True:
        val, _ = ev(np.array([1.0 - d]), 0)
        if val[0] > targets.max() or d < 1e-300:
            break
        d *= 0.5
    hi = np.full(targets.shape, 1.0 - d)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val, _ = ev(mid, 0)
        below = val < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4 * np.spacing(np.maximum(hi, 1e-300)) + 1e-300):
            break
    u = 0.5 * (lo + hi)
    for _ in range(3):
        val, d1 = ev(u, 1)
        cand = u - (val - targets) / d1
        u = np.where((cand > lo) & (cand < hi), cand, u)
    val, d1 = ev(u, 1)
    if np.any(np.abs(val - targets) > 1e-7 * np.maximum(1.0, np.abs(targets))):
        raise NumericError("preimage solver failed to converge on a bracketed root")
    return u, 1.0 / d1


def preimages_of_many(tau, xs) -> tuple[np.ndarray, np.ndarray]:
    """All ``degree`` preimages of each point of ``xs`` (no singular atoms).

    Returns ``(points, weights)`` of shape ``(len(xs), degree)``.
    """
    tau = as_restriction(tau)
    spec = tau.spec
    if spec.atoms:
        raise DomainError("preimages_of_many handles maps without singular atoms")
    xs = circ_reduce(np.asarray(xs, dtype=float))
    d = spec.degree
    l0 = float(lift(tau, 0.0))
    # lift is increasing with lift(1) = lift(0) + d; shift targets into [l0, l0 + d)
    k0 = np.ceil(l0 - xs)
    targets = (xs + k0)[:, None] + np.arange(d)[None, :]
    u, w = _solve_on_arc(spec, tau.offset, 0.0, 1.0, targets.reshape(-1), None, None)
    return circ_reduce(u).reshape(xs.size, d), w.reshape(xs.size, d)


# -- Adler properties ---------------------------------------------------------


@dataclass(frozen=True)
class AdlerReport:
    """Expansion and distortion diagnostics on a grid.

    ``analytic_bound`` is ``|| Delta b ||_inf + (pi/2) sum 1/s_j`` and
    ``corrected_bound`` is ``|| Delta b ||_inf + 2 pi sum 1/s_j``, the value
    obtained when the factor 1/2 in the singular part of ``tau'`` is kept.
    """

    min_tau_prime: float
    argmin_tau_prime: float
    expansion_power: Optional[int]
    expansion_min: float
    sup_delta_tau: float
    argmax_delta_tau: float
    analytic_bound: float
    corrected_bound: float
    blaschke_distortion: float
    grid: np.ndarray = field(repr=False)
    d1: np.ndarray = field(repr=False)
    d2: np.ndarray = field(repr=False)

    @property
    def bound_holds(self) -> bool:
        return self.sup_delta_tau <= self.analytic_bound

    def to_dict(self) -> dict:
        return {
            "min_tau_prime": self.min_tau_prime,
            "argmin_tau_prime": self.argmin_tau_prime,
            "expansion_power": self.expansion_power,
            "expansion_min": self.expansion_min,
            "sup_delta_tau": self.sup_delta_tau,
            "argmax_delta_tau": self.argmax_delta_tau,
            "analytic_bound": self.analytic_bound,
            "corrected_bound": self.corrected_bound,
            "blaschke_distortion": self.blaschke_distortion,
            "bound_holds": self.bound_holds,
        }


def adler_grid(spec: InnerFunctionSpec, grid: int, exclusion: float = 1e-6) -> np.ndarray:
    theta = np.arange(grid) / grid
    if spec.atoms:
        t, _ = spec.atom_arrays()
        keep = np.all(circ_dist(theta[None, :], t[:, None]) >= exclusion, axis=0)
        theta = theta[keep]
    return theta


def adler_report(tau, grid: int = 4096, d_max: int = 8) -> AdlerReport:
    """Check uniform expansion and bounded distortion on a uniform grid."""
    tau = as_restriction(tau)
    spec = tau.spec
    dw = denjoy_wolff(spec)
    if not dw.interior:
        raise BoundaryFixedPointError("Adler report requires an interior Denjoy–Wolff point")
    theta = adler_grid(spec, grid)
    _, d1, d2 = evaluate_restriction(tau, theta)
    delta = np.abs(d2) / d1**2
    imin = int(np.argmin(d1))
    imax = int(np.argmax(delta))
    bd1, bd2 = blaschke_parts(spec, theta)
    blaschke_distortion = float(np.max(np.abs(bd2) / bd1**2)) if spec.zeros else 0.0
    inv_mass = sum(1.0 / s for _, s in spec.atoms)
    expansion_power = None
    expansion_min = float("nan")
    deriv = np.ones_like(theta)
    pts = theta.copy()
    for d in range(1, d_max + 1):
        pts = _nudge(spec, pts)
        v, dd, _ = evaluate_restriction(tau, pts)
        deriv = deriv * dd
        pts = v
        m = float(np.min(deriv))
        if m > 1.0:
            expansion_power = d
            expansion_min = m
            break
    return AdlerReport(
        min_tau_prime=float(d1[imin]),
        argmin_tau_prime=float(theta[imin]),
        expansion_power=expansion_power,
        expansion_min=expansion_min,
        sup_delta_tau=float(delta[imax]),
        argmax_delta_tau=float(theta[imax]),
        analytic_bound=blaschke_distortion + 0.5 * math.pi * inv_mass,
        corrected_bound=blaschke_distortion + 2.0 * math.pi * inv_mass,
        blaschke_distortion=blaschke_distortion,
        grid=theta,
        d1=d1,
        d2=d2,
    )


def _nudge(spec, pts, events: Optional[list] = None):
    if not spec.atoms:
        return pts
    t, _ = spec.atom_arrays()
    near = np.any(circ_dist(pts[None, :], t[:, None]) < ATOM_TOL, axis=0)
    if np.any(near):
        for i in np.nonzero(near)[0]:
            log.info("orbit point %r within %g of an atom; nudged by %g", pts[i], ATOM_TOL, ORBIT_NUDGE)
            if events is not None:
                events.append(float(pts[i]))
        pts = np.where(near, circ_reduce(pts + ORBIT_NUDGE), pts)
    return pts


# -- invariant measure and orbits -------------------------------------------------


def boundary_mobius(d: complex, u):
    """Boundary action of ``M_d``: ``arg M_d(e^{2 pi i u}) / 2 pi mod 1``."""
    w = np.exp(2j * np.pi * np.asarray(u, dtype=float))
    return circ_reduce(np.angle((w + d) / (1 + np.conj(d) * w)) / (2 * np.pi))


def poisson_density(d: complex, theta):
    """``p_d(theta) = (1 - |d|^2) / |chi(theta) - d|^2``."""
    w = np.exp(2j * np.pi * np.asarray(theta, dtype=float))
    return (1 - abs(d) ** 2) / np.abs(w - d) ** 2


def sample_invariant(dw: DenjoyWolffResult, seed: int, n: int, start: int = 0) -> np.ndarray:
    """``n`` samples of the Poisson measure at the Denjoy–Wolff point.

    Sample ``i`` depends only on ``(seed, start + i)``.
    """
    if not dw.interior:
        raise DomainError("no absolutely continuous invariant probability for a boundary Denjoy–Wolff point")
    return boundary_mobius(dw.point, rng.uniforms(seed, n, start))


def orbit(tau, theta0: float, n: int, events: Optional[list] = None) -> np.ndarray:
    """``(theta0, tau theta0, ..., tau^n theta0)``: ``n + 1`` points.

    Points within ``1e-12`` of an atom are moved by ``1e-9``; each move is
    logged and appended to ``events`` when a list is given.
    """
    tau = as_restriction(tau)
    out = np.empty(n + 1)
    cur = np.array([float(circ_reduce(theta0))])
    out[0] = cur[0]
    for i in range(1, n + 1):
        cur = _nudge(tau.spec, cur, events)
        cur = np.atleast_1d(evaluate_restriction(tau, cur)[0])
        out[i] = cur[0]
    return out
