"""Inner functions with finitely many zeros and singular atoms.

A map is ``phi = lam * B * S`` where ``B`` is a finite Blaschke product
with factors ``b_a(z) = c_a (z - a) / (1 - conj(a) z)`` (``c_a = -conj(a)/a``,
``c_0 = 1``) and ``S(z) = exp(-sum_j s_j (w_j + z)/(w_j - z))`` with
``w_j = exp(2 pi i t_j)``. Circle points are parametrised by ``t`` in
``[0, 1)``.
"""

from __future__ import annotations

import cmath
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    BoundaryFixedPointError,
    DomainError,
    MobiusError,
    NumericError,
    SingularityError,
    SpecError,
    UndefinedLogDerivative,
)
from .series import (
    DEFAULT_ORDER,
    PowerSeries,
    series_compose,
    series_exp,
    series_mobius,
    series_mul,
    series_pow,
    series_reciprocal,
)

ATOM_TOL = 1e-12
UNIT_TOL = 1e-14
BOUNDARY_TOL = 1e-9


def chi(t):
    """``exp(2 pi i t)``."""
    return np.exp(2j * np.pi * np.asarray(t, dtype=float))


def circ_reduce(t):
    """Reduce to ``[0, 1)``."""
    t = np.mod(t, 1.0)
    # mod can return 1.0 for tiny negative inputs
    return np.where(t >= 1.0, 0.0, t)


def circ_signed(t):
    """Signed representative of ``t`` in ``[-1/2, 1/2)``."""
    return np.mod(np.asarray(t, dtype=float) + 0.5, 1.0) - 0.5


def circ_dist(s, t):
    """Circular distance on ``R/Z``."""
    return np.abs(circ_signed(np.asarray(s) - np.asarray(t)))


@dataclass(frozen=True)
class InnerFunctionSpec:
    """``lam * B * S`` with finite zero set and finitely many atoms.

    Parameters
    ----------
    rotation : complex
        Unimodular constant ``lam``.
    zeros : sequence of (complex, int)
        Zeros ``a`` (``|a| < 1``) with multiplicities.
    atoms : sequence of (float, float)
        Atom locations ``t`` in ``[0, 1)`` and positive masses.
    """

    rotation: complex = 1.0
    zeros: tuple = ()
    atoms: tuple = ()

    def __post_init__(self):
        rot = complex(self.rotation)
        if abs(abs(rot) - 1.0) > UNIT_TOL:
            raise SpecError(f"rotation must be unimodular, |lambda| = {abs(rot)!r}")
        zeros = tuple((complex(a), int(m)) for a, m in self.zeros)
        atoms = tuple((float(circ_reduce(t)), float(s)) for t, s in self.atoms)
        for i, (a, m) in enumerate(zeros):
            if not abs(a) < 1.0:
                raise SpecError(f"zeros[{i}]: |alpha| = {abs(a)!r} is not < 1")
            if m < 1:
                raise SpecError(f"zeros[{i}]: multiplicity must be a positive integer")
        for i in range(len(zeros)):
            for j in range(i):
                if zeros[i][0] == zeros[j][0]:
                    raise SpecError(f"zeros[{i}] duplicates zeros[{j}]; merge multiplicities")
        for i, (t, s) in enumerate(atoms):
            if not (s > 0.0 and math.isfinite(s)):
                raise SpecError(f"atoms[{i}]: mass must be positive, got {s!r}")
        for i in range(len(atoms)):
            for j in range(i):
                if circ_dist(atoms[i][0], atoms[j][0]) < ATOM_TOL:
                    raise SpecError(f"atoms[{i}] coincides with atoms[{j}]")
        if not zeros and not atoms:
            raise SpecError("constant map: need at least one zero or one atom")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "atoms", atoms)

    # -- structure -----------------------------------------------------

    def is_mobius(self) -> bool:
        return len(self.atoms) == 0 and len(self.zeros) == 1 and self.zeros[0][1] == 1

    def fixes_origin(self) -> bool:
        return self.kappa > 0

    @property
    def kappa(self) -> int:
        """Vanishing order at 0 (multiplicity of 0 as a zero)."""
        return sum(m for a, m in self.zeros if a == 0)

    @property
    def degree(self) -> int:
        """Number of zeros with multiplicity; the circle degree when there are no atoms."""
        return sum(m for _, m in self.zeros)

    @property
    def total_atom_mass(self) -> float:
        return float(sum(s for _, s in self.atoms))

    def zero_arrays(self):
        a = np.array([z for z, _ in self.zeros], dtype=np.complex128)
        m = np.array([k for _, k in self.zeros], dtype=float)
        return a, m

    def atom_arrays(self):
        t = np.array([t for t, _ in self.atoms], dtype=float)
        s = np.array([s for _, s in self.atoms], dtype=float)
        return t, s

    # -- evaluation shortcuts -------------------------------------------

    def __call__(self, z):
        return eval_disk(self, z)

    def derivative(self, z):
        return _dphi_at_zero(self, z)

    def taylor(self, order: int = DEFAULT_ORDER) -> PowerSeries:
        return taylor(self, order)

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "rotation": {"re": self.rotation.real, "im": self.rotation.imag},
            "zeros": [{"re": a.real, "im": a.imag, "mult": m} for a, m in self.zeros],
            "atoms": [{"t": t, "mass": s} for t, s in self.atoms],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def digest(self) -> str:
        """Stable SHA-256 of the canonical JSON form."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict, _lines: Optional[dict] = None) -> "InnerFunctionSpec":
        lines = _lines or {}

        def where(key, i=None):
            ln = lines.get((key, i)) if i is not None else lines.get((key, None))
            return f" (line {ln})" if ln else ""

        if not isinstance(data, dict):
            raise SpecError("spec must be a JSON object")
        unknown = set(data) - {"rotation", "zeros", "atoms"}
        if unknown:
            raise SpecError(f"unknown keys {sorted(unknown)}")
        rot = data.get("rotation", {"re": 1.0, "im": 0.0})
        try:
            lam = complex(float(rot["re"]), float(rot.get("im", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"rotation: expected {{re, im}}{where('rotation')}") from exc
        if abs(abs(lam) - 1.0) > UNIT_TOL:
            raise SpecError(f"rotation: |lambda| = {abs(lam)!r} is not 1{where('rotation')}")
        zeros = []
        for i, z in enumerate(data.get("zeros", [])):
            try:
                a = complex(float(z["re"]), float(z.get("im", 0.0)))
                m = z.get("mult", 1)
            except (KeyError, TypeError, ValueError) as exc:
                raise SpecError(f"zeros[{i}]: expected {{re, im, mult}}{where('zeros', i)}") from exc
            if not isinstance(m, int) or isinstance(m, bool) or m < 1:
                raise SpecError(f"zeros[{i}]: mult must be a positive integer{where('zeros', i)}")
            if not abs(a) < 1.0:
                raise SpecError(f"zeros[{i}]: |alpha| = {abs(a)!r} is not < 1{where('zeros', i)}")
            zeros.append((a, m))
        atoms = []
        for i, at in enumerate(data.get("atoms", [])):
            try:
                t = float(at["t"])
                s = float(at["mass"])
            except (KeyError, TypeError, ValueError) as exc:
                raise SpecError(f"atoms[{i}]: expected {{t, mass}}{where('atoms', i)}") from exc
            if not (s > 0 and math.isfinite(s)):
                raise SpecError(f"atoms[{i}]: mass must be positive{where('atoms', i)}")
            atoms.append((t, s))
        try:
            return cls(lam, tuple(zeros), tuple(atoms))
        except SpecError as exc:
            raise SpecError(f"{exc}{_locate(str(exc), lines)}") from None

    @classmethod
    def from_json(cls, text: str) -> "InnerFunctionSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(data, json_element_lines(text, ("rotation", "zeros", "atoms")))

    @classmethod
    def load(cls, path) -> "InnerFunctionSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def _locate(message: str, lines: dict) -> str:
    import re

    m = re.match(r"(zeros|atoms)\[(\d+)\]", message)
    if m:
        ln = lines.get((m.group(1), int(m.group(2))))
        if ln:
            return f" (line {ln})"
    return ""


def json_element_lines(text: str, keys) -> dict:
    """Map ``(key, index)`` to the 1-based line of each array element.

    Only top-level keys of a JSON object are inspected. ``(key, None)``
    maps to the line of the value itself. Best effort: returns what it can.
    """
    dec = json.JSONDecoder()
    out = {}
    try:
        idx = text.index("{") + 1
    except ValueError:
        return out
    n = len(text)

    def skip(i):
        while i < n and text[i] in " \t\r\n,:":
            i += 1
        return i

    try:
        while True:
            idx = skip(idx)
            if idx >= n or text[idx] == "}":
                break
            key, idx = dec.raw_decode(text, idx)
            idx = skip(idx)
            line = text.count("\n", 0, idx) + 1
            out[(key, None)] = line
            if key in keys and text[idx] == "[":
                j = skip(idx + 1)
                i = 0
                while j < n and text[j] != "]":
                    out[(key, i)] = text.count("\n", 0, j) + 1
                    _, j = dec.raw_decode(text, j)
                    j = skip(j)
                    i += 1
                idx = j + 1
            else:
                _, idx = dec.raw_decode(text, idx)
    except (ValueError, IndexError):
        pass
    return out


# -- evaluation -----------------------------------------------------------


def _blaschke_constant(a: complex) -> complex:
    return 1.0 + 0j if a == 0 else -a.conjugate() / a


def _check_point(spec: InnerFunctionSpec, z: np.ndarray):
    r = np.abs(z)
    if np.any(r > 1.0 + 1e-12):
        raise DomainError("evaluation point outside the closed unit disc")
    if spec.atoms:
        on_circle = r >= 1.0 - 1e-12
        if np.any(on_circle):
            t_atoms, _ = spec.atom_arrays()
            zc = z[on_circle]
            for t in t_atoms:
                if np.any(np.abs(zc - cmath.exp(2j * math.pi * t)) < 2 * math.pi * ATOM_TOL):
                    raise SingularityError(f"essential singularity: point coincides with the atom at t={t!r}")


def eval_disk(spec: InnerFunctionSpec, z):
    """``phi(z)`` for ``|z| <= 1`` (scalar or array)."""
    zz = np.asarray(z, dtype=np.complex128)
    _check_point(spec, zz.reshape(-1))
    out = np.full(zz.shape, spec.rotation, dtype=np.complex128)
    for a, m in spec.zeros:
        b = _blaschke_constant(a) * (zz - a) / (1.0 - a.conjugate() * zz)
        out = out * b**m
    if spec.atoms:
        h = np.zeros(zz.shape, dtype=np.complex128)
        for t, s in spec.atoms:
            w = cmath.exp(2j * math.pi * t)
            h += s * (w + zz) / (w - zz)
        out = out * np.exp(-h)
    return out[()] if out.ndim == 0 else out


def eval_derivative(spec: InnerFunctionSpec, z):
    """Return ``(phi'(z), z phi'(z)/phi(z))`` for ``|z| < 1``.

    Raises :class:`UndefinedLogDerivative` (carrying ``phi'``) when
    ``phi(z) = 0``.
    """
    zz = complex(z)
    if abs(zz) >= 1.0:
        raise DomainError("derivative requires |z| < 1")
    lam = spec.rotation
    facs = []
    dfacs = []
    for a, m in spec.zeros:
        c = _blaschke_constant(a)
        den = 1.0 - a.conjugate() * zz
        b = c * (zz - a) / den
        db = c * (1.0 - abs(a) ** 2) / den**2
        facs.append((b, m))
        dfacs.append(m * b ** (m - 1) * db)
    s_val = 1.0 + 0j
    dlog_s = 0j
    for t, s in spec.atoms:
        w = cmath.exp(2j * math.pi * t)
        s_val *= cmath.exp(-s * (w + zz) / (w - zz))
        dlog_s += -2.0 * s * w / (w - zz) ** 2
    prod_b = 1.0 + 0j
    for b, m in facs:
        prod_b *= b**m
    dprod = 0j
    for i, (b, m) in enumerate(facs):
        rest = 1.0 + 0j
        for j, (bj, mj) in enumerate(facs):
            if j != i:
                rest *= bj**mj
        dprod += dfacs[i] * rest
    value = lam * prod_b * s_val
    dphi = lam * s_val * (dprod + prod_b * dlog_s)
    if value == 0:
        raise UndefinedLogDerivative("z phi'(z)/phi(z) undefined at a zero of phi", dphi)
    return dphi, zz * dphi / value


def taylor(spec: InnerFunctionSpec, order: int = DEFAULT_ORDER) -> PowerSeries:
    """Taylor coefficients of ``phi`` at 0 to the given order."""
    out = PowerSeries.constant(spec.rotation, order)
    for a, m in spec.zeros:
        c = _blaschke_constant(a)
        fac = series_mobius(-c * a, c, 1.0, -a.conjugate(), order)
        out = series_mul(out, series_pow(fac, m))
    if spec.atoms:
        g = np.zeros(order + 1, dtype=np.complex128)
        n = np.arange(1, order + 1)
        for t, s in spec.atoms:
            wbar = cmath.exp(-2j * math.pi * t)
            # (w + z)/(w - z) = 1 + 2 sum_{n>=1} conj(w)^n z^n
            g[0] -= s
            g[1:] -= 2.0 * s * wbar**n
        out = series_mul(out, series_exp(PowerSeries(g)))
    return out


def iterate_taylor(spec, n_iter: int, order: int = DEFAULT_ORDER) -> PowerSeries:
    """Taylor series of the ``n_iter``-fold composition; requires ``phi(0) = 0``."""
    f = spec.taylor(order)
    if f.coeffs[0] != 0:
        raise DomainError("iterate_taylor requires phi(0) = 0; conjugate with mobius_conjugate first")
    out = PowerSeries.monomial(1, order)
    for _ in range(n_iter):
        out = series_compose(f, out)
    return out


# -- Denjoy-Wolff ---------------------------------------------------------------


@dataclass(frozen=True)
class DenjoyWolffResult:
    point: complex
    interior: bool
    derivative_modulus: float
    iterations: int

    def to_dict(self) -> dict:
        return {
            "point": {"re": self.point.real, "im": self.point.imag},
            "interior": self.interior,
            "derivative_modulus": self.derivative_modulus,
            "iterations": self.iterations,
        }


def denjoy_wolff(spec, tol: float = 1e-14, max_iter: int = 10**6) -> DenjoyWolffResult:
    """Attracting fixed point of ``phi`` in the closed disc.

    Fixed-point iteration from 0, then damped Newton on ``phi(z) - z``.
    A boundary point is reported (``interior=False``), not raised.
    """
    if isinstance(spec, InnerFunctionSpec) and spec.is_mobius():
        raise MobiusError("Denjoy–Wolff requires non-Möbius map")
    z = 0j
    it = 0
    converged = False
    boundary = False
    while it < max_iter:
        z_new = complex(spec(z))
        it += 1
        step = abs(z_new - z)
        z = z_new
        if step < tol:
            converged = True
            break
        if abs(z) > 1.0 - 10 * tol:
            boundary = True
            break
        # slow linear convergence: hand over to Newton once close
        if it >= 64 and step < 1e-6:
            converged = True
            break
    if not converged and not boundary:
        if abs(z) > 1.0 - 1e-3:
            boundary = True
        else:
            raise NumericError(f"Denjoy–Wolff iteration did not converge in {max_iter} steps (|z| = {abs(z):.6f})")
    if boundary:
        return DenjoyWolffResult(z / abs(z), False, float("nan"), it)
    z = _newton_fixed_point(spec, z)
    dphi = complex(spec.derivative(z))
    # the early hand-over can land on an attracting boundary point; an interior
    # fixed point of a non-Möbius self-map has multiplier strictly inside the disc
    if 1.0 - abs(z) < BOUNDARY_TOL or abs(dphi) > 1.0 - BOUNDARY_TOL:
        return DenjoyWolffResult(z / abs(z), False, float("nan"), it)
    if abs(complex(spec(z)) - z) >= 1e-12:
        raise NumericError("Newton polish failed to reach |phi(d) - d| < 1e-12")
    return DenjoyWolffResult(z, True, abs(dphi), it)


def _newton_fixed_point(spec, z, steps: int = 50):
    f = complex(spec(z)) - z
    for _ in range(steps):
        if abs(f) < 1e-16:
            break
        df = complex(spec.derivative(z)) - 1.0
        if df == 0:
            break
        step = -f / df
        lam = 1.0
        while lam > 1e-6:
            cand = z + lam * step
            if abs(cand) < 1.0:
                fc = complex(spec(cand)) - cand
                if abs(fc) < abs(f):
                    z, f = cand, fc
                    break
            lam *= 0.5
        else:
            break
    return z


# -- Möbius conjugation --------------------------------------------------------


def mobius(a: complex):
    """``M_a(z) = (z + a)/(1 + conj(a) z)`` and its inverse."""
    a = complex(a)

    def fwd(z):
        return (z + a) / (1.0 + a.conjugate() * z)

    def inv(w):
        return (w - a) / (1.0 - a.conjugate() * w)

    return fwd, inv


@dataclass(frozen=True)
class ConjugatedMap:
    """``g = M_a^{-1} o phi o M_a``, an evaluable wrapper (not a spec).

    ``g(0) = 0`` when ``a`` is the Denjoy–Wolff point of ``phi``.
    """

    base: InnerFunctionSpec
    a: complex
    snap_tol: float = field(default=1e-10)

    def __post_init__(self):
        if not abs(self.a) < 1.0:
            raise DomainError("conjugation point must satisfy |a| < 1")
        object.__setattr__(self, "a", complex(self.a))

    def is_mobius(self) -> bool:
        return self.base.is_mobius()

    @property
    def kappa(self) -> int:
        """Vanishing order at 0 of the conjugated map (numerical)."""
        c = self.taylor(8).coeffs
        k = 0
        while k < c.size and abs(c[k]) < self.snap_tol:
            k += 1
        return k

    def fixes_origin(self) -> bool:
        return abs(self(0.0)) < self.snap_tol

    def __call__(self, z):
        fwd, inv = mobius(self.a)
        return inv(eval_disk(self.base, fwd(np.asarray(z, dtype=np.complex128))))

    def derivative(self, z):
        a = self.a
        z = complex(z)
        fwd, _ = mobius(a)
        u = fwd(z)
        w = complex(eval_disk(self.base, u))
        dphi = _dphi_at_zero(self.base, u)
        d_fwd = (1 - abs(a) ** 2) / (1 + a.conjugate() * z) ** 2
        d_inv = (1 - abs(a) ** 2) / (1 - a.conjugate() * w) ** 2
        return d_inv * dphi * d_fwd

    def taylor(self, order: int = DEFAULT_ORDER) -> PowerSeries:
        """Taylor coefficients built from rational factor expansions."""
        a = self.a
        ab = a.conjugate()
        spec = self.base
        h = PowerSeries.constant(spec.rotation, order)
        for al, m in spec.zeros:
            c = _blaschke_constant(al)
            # b_al(M_a z) = c ((z + a) - al (1 + ab z)) / ((1 + ab z) - conj(al)(z + a))
            fac = series_mobius(
                c * (a - al), c * (1 - al * ab), 1 - al.conjugate() * a, ab - al.conjugate(), order
            )
            h = series_mul(h, series_pow(fac, m))
        if spec.atoms:
            g = PowerSeries.zeros(order)
            for t, s in spec.atoms:
                w = cmath.exp(2j * math.pi * t)
                # (w + M_a z)/(w - M_a z) = (w (1 + ab z) + z + a)/(w (1 + ab z) - z - a)
                g = g - s * series_mobius(w + a, w * ab + 1, w - a, w * ab - 1, order)
            h = series_mul(h, series_exp(g))
        num = h - a
        den = series_reciprocal(1.0 - ab * h)
        out = series_mul(num, den)
        c = out.coeffs.copy()
        if abs(c[0]) < self.snap_tol:
            c[0] = 0.0
        return PowerSeries(c)


def _dphi_at_zero(spec, u):
    try:
        return eval_derivative(spec, u)[0]
    except UndefinedLogDerivative as exc:
        return exc.derivative


def mobius_conjugate(spec: InnerFunctionSpec, a: complex) -> ConjugatedMap:
    """Wrap ``M_a^{-1} o phi o M_a`` (``|a| < 1``)."""
    return ConjugatedMap(spec, a)


def normalize_at_fixed_point(spec):
    """Return ``(g, d)`` with ``g(0) = 0``: ``spec`` itself when it fixes 0.

    Raises :class:`BoundaryFixedPointError` for a boundary Denjoy–Wolff point.
    """
    if spec.fixes_origin():
        return spec, 0j
    if isinstance(spec, InnerFunctionSpec) and spec.is_mobius():
        raise MobiusError("spectral analysis requires a non-Möbius map")
    dw = denjoy_wolff(spec)
    if not dw.interior:
        raise BoundaryFixedPointError(
            "Denjoy–Wolff point on the circle: no absolutely continuous invariant probability"
        )
    return mobius_conjugate(spec, dw.point), dw.point


def spec_from_simple(rotation=1.0, zeros=(), atoms=()) -> InnerFunctionSpec:
    """Convenience constructor accepting bare complex zeros (multiplicity 1)."""
    zs = []
    for z in zeros:
        if isinstance(z, tuple):
            zs.append(z)
        else:
            zs.append((complex(z), 1))
    return InnerFunctionSpec(rotation, tuple(zs), tuple(atoms))
