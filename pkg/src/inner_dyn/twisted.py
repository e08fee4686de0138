"""Twisted transfer operators and limit theorems for Birkhoff sums.

``P_z f = T(e^{z psi} f)`` is assembled as ``T`` times the Toeplitz matrix of
the Fourier coefficients of ``e^{z psi}``. Its leading eigenvalue ``lam(t)``
at ``z = it`` gives the asymptotic variance ``sigma^2 = -(log lam)''(0)``;
Monte-Carlo, preimage-tree and scan harnesses check the resulting central
and local limit behaviour.
"""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.stats

from . import kernels, rng
from .circle import Restriction, boundary_mobius, poisson_density, preimages, preimages_of_many
from .errors import (
    DegenerateVarianceError,
    DomainError,
    NoSpectralGapError,
    NumericError,
    PreconditionError,
    ResourceError,
)
from .inner import InnerFunctionSpec, circ_reduce, denjoy_wolff, mobius_conjugate
from .series import PowerSeries, series_exp
from .transfer import M_IDENTITY, FourierVector, KbSpace, TransferMatrix, build_transfer_matrix

QUAD_POINTS = 2048
GAP_RATIO = 1.05
SIGMA2_STEP = 1e-3
APERIODIC_CUTOFF = 0.05
TREE_LIMIT = 10**7
TREE_MASS_TOL = 1e-4


# -- observables ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Observable:
    """Real observable given by Fourier coefficients.

    ``B`` is a radius with ``psi`` in ``k_B``; trigonometric polynomials lie
    in every ``k_B`` and carry ``B = inf``.
    """

    fourier: FourierVector
    B: float = math.inf
    name: str = "custom"

    def __post_init__(self):
        if not self.fourier.is_real(1e-14):
            raise DomainError("observable coefficients must satisfy u(-n) = conj(u(n))")

    # constructors

    @classmethod
    def trig(cls, const: float = 0.0, cos: Sequence[float] = (), sin: Sequence[float] = (), name="trig"):
        """``const + sum_n cos[n-1] cos(2 pi n t) + sin[n-1] sin(2 pi n t)``."""
        K = max(len(cos), len(sin), 1)
        c = np.zeros(2 * K + 1, dtype=np.complex128)
        c[K] = const
        for n in range(1, K + 1):
            a = cos[n - 1] if n <= len(cos) else 0.0
            b = sin[n - 1] if n <= len(sin) else 0.0
            c[K + n] = (a - 1j * b) / 2
            c[K - n] = (a + 1j * b) / 2
        return cls(FourierVector(c, K), math.inf, name)

    @classmethod
    def cos(cls, n: int = 1, amplitude: float = 1.0):
        return cls.trig(cos=[0.0] * (n - 1) + [amplitude], name=f"cos{n}" if n > 1 else "cos")

    @classmethod
    def sin(cls, n: int = 1, amplitude: float = 1.0):
        return cls.trig(sin=[0.0] * (n - 1) + [amplitude], name=f"sin{n}" if n > 1 else "sin")

    @classmethod
    def constant(cls, value: float):
        return cls.trig(const=value, name="constant")

    @classmethod
    def from_coefficients(cls, coeffs: dict, B: float = math.inf, name="fourier"):
        """``{n: u_n}`` for ``n >= 0``; negative frequencies follow by symmetry."""
        K = max([abs(int(n)) for n in coeffs] + [1])
        c = np.zeros(2 * K + 1, dtype=np.complex128)
        for n, v in coeffs.items():
            n = int(n)
            if n < 0:
                raise DomainError("give non-negative frequencies only")
            c[K + n] = v
            c[K - n] = np.conj(v)
        c[K] = c[K].real
        return cls(FourierVector(c, K), B, name)

    @classmethod
    def from_function(cls, f, K: int, B: float = math.inf, name="sampled"):
        v = FourierVector.from_function(f, K, n_points=max(8 * K, 256))
        c = 0.5 * (v.coeffs + np.conj(v.coeffs[::-1]))
        return cls(FourierVector(c, K), B, name)

    # structure

    @property
    def K(self) -> int:
        return self.fourier.M

    def nonconstant(self) -> bool:
        c = self.fourier.coeffs.copy()
        c[self.K] = 0
        return bool(np.max(np.abs(c)) > 1e-12)

    def __call__(self, theta):
        return self.fourier.values(theta).real

    def coeff(self, n: int) -> complex:
        return self.fourier[n]

    def norm(self, B: float) -> float:
        return self.fourier.norm(B)

    def mean(self, d: complex = 0j) -> float:
        """``int psi d pi_d`` by midpoint quadrature against the Poisson density."""
        theta = (np.arange(QUAD_POINTS) + 0.5) / QUAD_POINTS
        return float(np.mean(self(theta) * poisson_density(d, theta)))

    def shifted(self, delta: float) -> "Observable":
        c = self.fourier.coeffs.copy()
        c[self.K] += delta
        return Observable(FourierVector(c, self.K), self.B, self.name)

    def centered(self, d: complex = 0j) -> "Observable":
        return self.shifted(-self.mean(d))

    def kernel_arrays(self) -> dict:
        """``psi0 + sum a_n cos(2 pi n t) + b_n sin(2 pi n t)`` coefficients."""
        K = self.K
        pos = self.fourier.coeffs[K + 1 :]
        return {
            "psi0": float(self.fourier.coeffs[K].real),
            "psi_cos": np.ascontiguousarray(2 * pos.real),
            "psi_sin": np.ascontiguousarray(-2 * pos.imag),
        }

    def to_dict(self) -> dict:
        K = self.K
        return {
            "name": self.name,
            "B": None if math.isinf(self.B) else self.B,
            "coefficients": [
                {"n": n, "re": float(self.fourier.coeffs[K + n].real), "im": float(self.fourier.coeffs[K + n].imag)}
                for n in range(0, K + 1)
            ],
        }


# -- exponentials of observables --------------------------------------------------


def _exp_series(psi: FourierVector, z: complex, M: int) -> np.ndarray:
    """``e^{z psi}`` coefficients on ``[-M, M]`` from the analytic split.

    With ``psi = c0 + P(chi) + Q(conj chi)`` the exponential factors as
    ``e^{z c0} e^{z P} e^{z Q}``; both factors are power series computed
    exactly by the exponential recurrence, then correlated.
    """
    K = psi.M
    L = M + 8 * K + 48
    p = np.zeros(L + 1, dtype=np.complex128)
    q = np.zeros(L + 1, dtype=np.complex128)
    p[1 : K + 1] = z * psi.coeffs[K + 1 :]
    q[1 : K + 1] = z * psi.coeffs[K - 1 :: -1][:K]
    A = series_exp(PowerSeries(p)).coeffs
    Bq = series_exp(PowerSeries(q)).coeffs
    # c_n = sum_k A_{n+k} B_k, n in [-M, M]
    full = np.convolve(A, Bq[::-1])  # index j <-> n = j - L
    out = full[L - M : L + M + 1]
    return np.exp(z * psi.coeffs[K]) * out


def _exp_fft(psi: Observable, z: complex, M: int) -> np.ndarray:
    n_points = 4 * M if 4 * M >= 8 * psi.K else 8 * psi.K
    theta = np.arange(n_points) / n_points
    vals = np.exp(z * psi(theta))
    c = np.fft.fft(vals) / n_points
    return c[np.arange(-M, M + 1) % n_points]


def exp_observable(psi: Observable, z: complex, M: int, method: str = "auto") -> FourierVector:
    """Fourier coefficients of ``e^{z psi}`` for ``|n| <= M``.

    ``method="series"`` (default for trigonometric polynomials) keeps the
    relative accuracy of tiny high-frequency coefficients, which matters
    once they are multiplied by ``k_b`` weights; ``"fft"`` samples ``4M``
    boundary points.
    """
    z = complex(z)
    if method == "auto":
        method = "series" if psi.K <= 16 else "fft"
    if method == "series":
        return FourierVector(_exp_series(psi.fourier, z, M), M)
    if method == "fft":
        return FourierVector(_exp_fft(psi, z, M), M)
    raise DomainError(f"unknown method {method!r}")


def multiplication_bound(B: float, b: float) -> float:
    """``sqrt((B + b) / (B - b))``, the k_b multiplier constant for ``f`` in ``k_B``."""
    if not B > b > 1:
        raise DomainError("need B > b > 1")
    return math.sqrt((B + b) / (B - b))


def multiplication_check(f: FourierVector, g: FourierVector, B: float, b: float) -> tuple[float, float]:
    """``(||fg||_b, C ||f||_B ||g||_b)`` with the untruncated product."""
    prod = np.convolve(f.coeffs, g.coeffs)
    lhs = KbSpace(b, f.M + g.M).norm(prod)
    return lhs, multiplication_bound(B, b) * f.norm(B) * g.norm(b)


def exponential_check(psi: Observable, z: complex, B: float, b: float, M: Optional[int] = None) -> tuple[float, float]:
    """``(||e^{z psi}||_b, exp(C |z| ||psi||_B))``."""
    M = M or max(64, 8 * psi.K)
    e = exp_observable(psi, z, M, method="series")
    return e.norm(b), math.exp(multiplication_bound(B, b) * abs(z) * psi.norm(B))


# -- twisted matrices ---------------------------------------------------------------


def multiplication_matrix(e: FourierVector, M: int) -> np.ndarray:
    """Toeplitz matrix of ``f -> e f`` on ``[-M, M]``; needs ``e`` to order ``2M``."""
    if e.M < 2 * M:
        raise DomainError("multiplier needs coefficients up to 2M")
    idx = np.arange(-M, M + 1)
    diff = idx[:, None] - idx[None, :]
    return e.coeffs[diff + e.M]


@dataclass(frozen=True, eq=False)
class TwistedMatrix:
    base: TransferMatrix
    psi: Observable
    z: complex
    mult_coeffs: FourierVector
    matrix: np.ndarray

    @property
    def M(self) -> int:
        return self.base.M


def build_twisted(T: TransferMatrix, psi: Observable, z: complex, b: Optional[float] = None) -> TwistedMatrix:
    """``P_z = T * Toeplitz(e^{z psi})``; ``b < psi.B`` is required when ``b`` is given."""
    if b is not None and not b < psi.B:
        raise DomainError(f"twisted operator needs 1 < b < B (b = {b}, B = {psi.B})")
    z = complex(z)
    if z == 0:
        e = FourierVector.constant(1.0, 2 * T.M)
        return TwistedMatrix(T, psi, z, e, T.full.copy())
    e = exp_observable(psi, z, 2 * T.M)
    return TwistedMatrix(T, psi, z, e, T.full @ multiplication_matrix(e, T.M))


def twisted_derivative(T: TransferMatrix, psi: Observable, z: complex = 0j, power: int = 1) -> np.ndarray:
    """Matrix of ``f -> T(e^{z psi} psi^power f)``."""
    e = exp_observable(psi, z, 2 * T.M)
    for _ in range(power):
        e = e * psi.fourier.resize(2 * T.M)
    return T.full @ multiplication_matrix(e, T.M)


def _eigvals_sorted(A: np.ndarray) -> np.ndarray:
    try:
        ev = scipy.linalg.eigvals(A)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigenvalue computation failed: {exc}") from exc
    return ev[np.argsort(-np.abs(ev), kind="stable")]


def spectral_radius(P: TwistedMatrix) -> complex:
    """Eigenvalue of largest modulus (no gap requirement)."""
    return complex(_eigvals_sorted(P.matrix)[0])


def leading_eigen(P: TwistedMatrix, tol: float = 1e-14, max_iter: int = 5000) -> tuple[complex, FourierVector]:
    """Dominant eigenpair by power iteration started from the constants.

    Raises :class:`NoSpectralGapError` when the two largest eigenvalue
    moduli differ by a factor ``<= 1.05``.
    """
    A = P.matrix
    ev = _eigvals_sorted(A)
    if ev.size > 1 and not abs(ev[0]) > GAP_RATIO * abs(ev[1]):
        raise NoSpectralGapError(
            f"no spectral gap at z = {P.z}: |lam1| = {abs(ev[0]):.6g}, |lam2| = {abs(ev[1]):.6g}"
        )
    v = np.zeros(A.shape[0], dtype=np.complex128)
    v[P.M] = 1.0
    lam = 0j
    for _ in range(max_iter):
        w = A @ v
        lam_new = w[P.M] / v[P.M] if abs(v[P.M]) > 1e-300 else np.vdot(v, w)
        nrm = np.linalg.norm(w)
        if nrm == 0:
            raise NumericError("power iteration collapsed to zero")
        # normalise so the constant coefficient is 1
        v = w / w[P.M] if abs(w[P.M]) > 1e-12 * nrm else w / nrm
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    else:
        raise NoSpectralGapError("power iteration did not converge")
    # one Rayleigh-type polish against the dense eigenvalue
    if abs(lam - ev[0]) > 1e-8 * max(1.0, abs(ev[0])):
        raise NumericError(f"power iteration ({lam}) disagrees with dense eigenvalue ({ev[0]})")
    return complex(lam), FourierVector(v, P.M)


# -- normalisation to phi(0) = 0 ------------------------------------------------


@dataclass(frozen=True, eq=False)
class NormalizedProblem:
    """``(g, psi o h)`` with ``g(0) = 0`` conjugate to ``(phi, psi)``."""

    phi: object
    map0: object
    psi: Observable
    psi0: Observable
    d: complex


def normalize(phi, psi: Observable, K_pull: int = 48) -> NormalizedProblem:
    """Conjugate at the Denjoy–Wolff point and pull ``psi`` back through the boundary Möbius map."""
    if isinstance(phi, InnerFunctionSpec) and phi.fixes_origin():
        return NormalizedProblem(phi, phi, psi, psi, 0j)
    dw = denjoy_wolff(phi)
    if not dw.interior:
        raise PreconditionError("limit theorems need an interior Denjoy–Wolff point")
    g = mobius_conjugate(phi, dw.point)
    pulled = Observable.from_function(lambda th: psi(boundary_mobius(dw.point, th)), K_pull, psi.B, psi.name)
    return NormalizedProblem(phi, g, psi, pulled, dw.point)


def _base_matrix(prob: NormalizedProblem, M: int) -> TransferMatrix:
    return build_transfer_matrix(prob.map0, M)


def lambda_curve(phi, psi: Observable, ts, M: int = M_IDENTITY, center: bool = True, gap: bool = True) -> np.ndarray:
    """``lam(t)`` for each ``t``; ``gap=False`` returns the spectral radius eigenvalue."""
    prob = normalize(phi, psi)
    p0 = prob.psi0.centered(0j) if center else prob.psi0
    T = _base_matrix(prob, M)
    out = []
    for t in np.atleast_1d(ts):
        P = build_twisted(T, p0, 1j * float(t))
        out.append(leading_eigen(P)[0] if gap else spectral_radius(P))
    return np.array(out, dtype=np.complex128)


def sigma2_from_eigen(phi, psi: Observable, h: float = SIGMA2_STEP, M: int = M_IDENTITY) -> float:
    """``-(log lam)''(0)`` by 5-point differences at ``h`` and ``h/2``, Richardson-combined."""
    prob = normalize(phi, psi)
    p0 = prob.psi0.centered(0j)
    if not p0.nonconstant():
        return 0.0
    T = _base_matrix(prob, M)

    def loglam(t):
        return np.log(leading_eigen(build_twisted(T, p0, 1j * t))[0])

    def d2(step):
        f = {k: loglam(k * step) for k in (-2, -1, 1, 2)}
        return (-f[2] + 16 * f[1] + 16 * f[-1] - f[-2]) / (12 * step**2)

    D1, D2 = d2(h), d2(h / 2)
    second = (16 * D2 - D1) / 15
    s2 = float(-second.real)
    if s2 < -1e-8:
        raise NumericError(f"negative variance estimate {s2}")
    return max(s2, 0.0)


# -- Monte Carlo --------------------------------------------------------------------


@dataclass
class MCRun:
    sums: np.ndarray
    n: int
    trials: int
    seed: int
    events: int
    backend: str


def birkhoff_sample(phi, psi: Observable, n: int, trials: int, seed: int, backend=None, threads=None, center=True) -> MCRun:
    """Sums ``sum_{j<n} psi(tau^j X)`` for ``trials`` independent ``X ~ pi_d``.

    Trial ``i`` depends only on ``(seed, i)``.
    """
    if isinstance(phi, InnerFunctionSpec) and phi.fixes_origin():
        d = 0j
    else:
        dw = denjoy_wolff(phi)
        if not dw.interior:
            raise PreconditionError("Monte Carlo needs an interior Denjoy–Wolff point")
        d = dw.point
    p = psi.centered(d) if center else psi
    keys = rng.trial_keys(seed, np.arange(trials))
    theta0 = boundary_mobius(d, rng.init_uniform(keys)) if d != 0 else rng.init_uniform(keys)
    arr = Restriction(phi).map_arrays()
    ka = p.kernel_arrays()
    backend = backend or kernels.default_backend()
    sums, events = kernels.birkhoff_sums(
        theta0, keys, int(n), arr["offset"], arr["zero_re"], arr["zero_im"], arr["zero_mult"],
        arr["atom_t"], arr["atom_mass"], ka["psi0"], ka["psi_cos"], ka["psi_sin"],
        backend=backend, threads=threads,
    )
    return MCRun(sums, int(n), int(trials), int(seed), int(events), backend)


@dataclass(frozen=True)
class MCVariance:
    value: float
    stderr: float
    n: int
    trials: int
    seed: int
    events: int
    backend: str

    def to_dict(self) -> dict:
        return asdict(self)


def sigma2_monte_carlo(phi, psi: Observable, n: int, trials: int, seed: int, backend=None, threads=None) -> MCVariance:
    """Mean of ``psi_n^2 / n`` over trials with its standard error."""
    run = birkhoff_sample(phi, psi, n, trials, seed, backend, threads)
    x = run.sums**2 / n
    se = float(np.std(x, ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return MCVariance(float(np.mean(x)), se, run.n, run.trials, run.seed, run.events, run.backend)


def _require_variance(phi, psi, sigma2):
    if sigma2 is None:
        if not psi.nonconstant():
            raise DegenerateVarianceError("observable is constant: sigma^2 = 0")
        sigma2 = sigma2_from_eigen(phi, psi)
    if not sigma2 > 1e-10:
        raise DegenerateVarianceError(f"degenerate variance sigma^2 = {sigma2}")
    return sigma2


@dataclass(frozen=True)
class CLTResult:
    ks_distance: float
    sigma2: float
    mean: float
    n: int
    trials: int
    seed: int
    events: int
    backend: str

    def to_dict(self) -> dict:
        return asdict(self)


def clt_check(phi, psi: Observable, n: int, trials: int, seed: int, sigma2=None, backend=None, threads=None) -> CLTResult:
    """KS distance between ``psi_n / (sigma sqrt n)`` (centered) and N(0, 1)."""
    sigma2 = _require_variance(phi, psi, sigma2)
    run = birkhoff_sample(phi, psi, n, trials, seed, backend, threads)
    zs = np.sort(run.sums / math.sqrt(sigma2 * n))
    ks = float(scipy.stats.kstest(zs, "norm").statistic)
    return CLTResult(ks, sigma2, float(np.mean(zs)), run.n, run.trials, run.seed, run.events, run.backend)


@dataclass(frozen=True)
class LLTResult:
    relative_errors: list
    estimates: list
    targets: list
    kappas: list
    hits: list
    interval: float
    sigma2: float
    n: int
    trials: int
    seed: int
    backend: str

    def to_dict(self) -> dict:
        return asdict(self)


def llt_check(phi, psi: Observable, n: int, trials: int, interval: float, seed: int, kappas=(0.0, 1.0),
              sigma2=None, backend=None, threads=None) -> LLTResult:
    """Integrated local limit check: ``sigma sqrt(n) P(psi_n in k sigma sqrt(n) + I) / |I|`` vs the normal density."""
    sigma2 = _require_variance(phi, psi, sigma2)
    run = birkhoff_sample(phi, psi, n, trials, seed, backend, threads)
    s = math.sqrt(sigma2 * n)
    errs, ests, tgts, hits = [], [], [], []
    for k in kappas:
        c = k * s
        h = int(np.count_nonzero(np.abs(run.sums - c) <= interval / 2))
        if h < 100:
            raise DomainError(f"only {h} hits at kappa = {k}; widen the interval or add trials")
        est = s * h / trials / interval
        tgt = math.exp(-k * k / 2) / math.sqrt(2 * math.pi)
        errs.append(abs(est - tgt) / tgt)
        ests.append(est)
        tgts.append(tgt)
        hits.append(h)
    return LLTResult(errs, ests, tgts, list(map(float, kappas)), hits, float(interval), sigma2, run.n, run.trials,
                     run.seed, run.backend)


# -- conditional CLT by preimage trees -----------------------------------------------


@dataclass(frozen=True)
class ConditionalCLTResult:
    sup_error: float
    t_grid: list
    values: list
    total_weight: float
    leaves: int
    sigma2: float
    n: int
    x: float
    weight_threshold: float

    def to_dict(self) -> dict:
        return asdict(self)


def _children(phi, pts: np.ndarray, weight_threshold: float):
    if not phi.atoms:
        ys, ws = preimages_of_many(phi, pts)
        parent = np.repeat(np.arange(pts.size), ys.shape[1])
        return ys.reshape(-1), ws.reshape(-1), parent
    ys, ws, parent = [], [], []
    for i, x in enumerate(pts):
        ca = preimages(phi, float(x), weight_threshold)
        ys.append(ca.points)
        ws.append(ca.weights)
        parent.append(np.full(ca.points.size, i))
    return np.concatenate(ys), np.concatenate(ws), np.concatenate(parent)


def tree_threshold(phi, x: float, mass_tol: float = TREE_MASS_TOL) -> float:
    """Preimage weight threshold that keeps all but ``mass_tol`` of the mass at ``x``.

    Omitted mass near an atom scales like ``sqrt(threshold)``, so the
    threshold is divided by 4 until the tail estimate is below ``mass_tol / 2``.
    """
    if not phi.atoms:
        return 1e-10
    thr = mass_tol**2
    while True:
        ca = preimages(phi, x, thr)
        if ca.tail_estimate <= 0.5 * mass_tol * ca.total_mass or thr < 1e-14:
            return thr
        thr /= 4


def conditional_clt_check(phi, psi: Observable, x: float, n: int, t_grid=None, sigma2=None,
                          mass_tol: float = TREE_MASS_TOL, prune: float = 1e-12,
                          max_nodes: int = TREE_LIMIT) -> ConditionalCLTResult:
    """``T^n`` of the indicator of ``{psi_n / (sigma sqrt n) <= t}`` at ``x``.

    Sums weights over the depth-``n`` preimage tree of ``x``; ``psi`` is
    accumulated along each branch (the root ``x`` itself is not counted).
    For maps with singular atoms each node keeps preimages carrying all but
    ``mass_tol`` of its weight.
    """
    if not 0 <= n <= 20:
        raise DomainError("preimage trees are limited to depth n <= 20")
    if not (isinstance(phi, InnerFunctionSpec) and phi.fixes_origin()):
        raise PreconditionError("conditional CLT harness needs phi(0) = 0")
    sigma2 = _require_variance(phi, psi, sigma2)
    p = psi.centered(0j)
    t_grid = np.arange(-2.0, 2.0 + 1e-12, 0.25) if t_grid is None else np.asarray(t_grid, dtype=float)
    weight_threshold = tree_threshold(phi, float(x), mass_tol) if n > 0 else 0.0
    pts = np.array([circ_reduce(float(x))])
    w = np.ones(1)
    s = np.zeros(1)
    nodes = 1
    fanout = len(preimages(phi, float(x), weight_threshold)) if phi.atoms and n > 0 else phi.degree
    for _ in range(n):
        if nodes + pts.size * fanout > max_nodes:
            raise ResourceError(
                f"preimage tree would exceed {max_nodes} nodes ({pts.size} nodes x about {fanout} preimages each)"
            )
        ys, ws, parent = _children(phi, pts, weight_threshold)
        nodes += ys.size
        if nodes > max_nodes:
            raise ResourceError(f"preimage tree exceeds {max_nodes} nodes")
        w = w[parent] * ws
        s = s[parent] + p(ys)
        keep = w > prune
        pts, w, s = ys[keep], w[keep], s[keep]
    if n == 0:
        z = np.zeros(1)
    else:
        z = s / math.sqrt(sigma2 * n)
    order = np.argsort(z, kind="stable")
    zs, cw = z[order], np.cumsum(w[order])
    idx = np.searchsorted(zs, t_grid, side="right")
    values = np.where(idx > 0, cw[np.maximum(idx - 1, 0)], 0.0)
    err = np.abs(values - scipy.stats.norm.cdf(t_grid))
    return ConditionalCLTResult(float(err.max()), t_grid.tolist(), values.tolist(), float(w.sum()), int(z.size),
                                sigma2, int(n), float(x), float(weight_threshold))


# -- aperiodicity -------------------------------------------------------------------


@dataclass
class ScanResult:
    t: np.ndarray
    lam: np.ndarray
    cutoff: float = APERIODIC_CUTOFF

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.lam)

    @property
    def aperiodicity_max(self) -> float:
        mask = np.abs(self.t) >= self.cutoff - 1e-12
        return float(self.modulus[mask].max()) if mask.any() else float("nan")

    @property
    def argmax(self) -> float:
        mask = np.abs(self.t) >= self.cutoff - 1e-12
        return float(self.t[mask][np.argmax(self.modulus[mask])])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,re,im,abs\n")
        for t, l in zip(self.t, self.lam):
            buf.write(f"{t:.17g},{l.real:.17g},{l.imag:.17g},{abs(l):.17g}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "aperiodicity_max": self.aperiodicity_max,
            "argmax_t": self.argmax,
            "cutoff": self.cutoff,
            "t": self.t.tolist(),
            "abs_lambda": self.modulus.tolist(),
        }


def default_t_grid(t_max: float = 5.0, step: float = 0.05) -> np.ndarray:
    k = int(round(t_max / step))
    pos = step * np.arange(1, k + 1)
    return np.concatenate([-pos[::-1], pos])


def aperiodicity_scan(phi, psi: Observable, t_grid=None, M: int = M_IDENTITY) -> ScanResult:
    """Spectral radius of ``P_t`` over ``t_grid``; the max is taken over ``|t| >= 0.05``."""
    if not psi.nonconstant():
        raise DegenerateVarianceError("aperiodicity scan needs a non-constant observable")
    t = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    lam = lambda_curve(phi, psi, t, M=M, gap=False)
    return ScanResult(t, lam)


# -- summary --------------------------------------------------------------------------


@dataclass
class LimitReport:
    sigma2_eigen: float
    sigma2_mc: Optional[float] = None
    sigma2_mc_stderr: Optional[float] = None
    ks_distance: Optional[float] = None
    llt_errors: list = field(default_factory=list)
    aperiodicity_max: Optional[float] = None
    seeds: dict = field(default_factory=dict)
    sizes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)
