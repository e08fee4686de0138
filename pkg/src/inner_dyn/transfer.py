"""Transfer operators of inner-function restrictions as Fourier matrices.

For ``phi(0) = 0`` the transfer operator ``T`` of ``tau = tau(phi)`` acts on
characters by

    T chi^k = sum_l a(k, l) chi^l,   a(k, l) = conj(coef_k(phi^l)),  k, l >= 0,

and by conjugation on negative frequencies. ``a(k, l)`` vanishes unless
``k >= kappa * l`` (``kappa`` = order of vanishing of ``phi`` at 0), so the
truncated matrix acts exactly on trigonometric polynomials of degree ``<= M``.
Spaces ``k_b`` carry the norm ``sum b^|n| |u_n|^2``.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import DomainError, MobiusError, NumericError, PreconditionError
from .inner import InnerFunctionSpec, eval_disk
from .series import PowerSeries, series_powers

M_IDENTITY = 64
M_SPECTRAL = 96
BOOLE_B = 1.2


# -- Fourier vectors and k_b ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class FourierVector:
    """Coefficients ``u_n`` for ``n = -M..M``, stored at index ``n + M``."""

    coeffs: np.ndarray
    M: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (2 * self.M + 1,):
            raise DomainError(f"expected {2 * self.M + 1} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.M:
            return 0j
        return complex(self.coeffs[n + self.M])

    @classmethod
    def zeros(cls, M: int) -> "FourierVector":
        return cls(np.zeros(2 * M + 1, dtype=np.complex128), M)

    @classmethod
    def constant(cls, value, M: int) -> "FourierVector":
        v = cls.zeros(M)
        v.coeffs[M] = value
        return v

    @classmethod
    def character(cls, n: int, M: int, value=1.0) -> "FourierVector":
        """``value * chi^n``."""
        if abs(n) > M:
            raise DomainError(f"frequency {n} outside truncation {M}")
        v = cls.zeros(M)
        v.coeffs[n + M] = value
        return v

    @classmethod
    def from_mapping(cls, coeffs: dict, M: int) -> "FourierVector":
        v = cls.zeros(M)
        for n, c in coeffs.items():
            if abs(int(n)) <= M:
                v.coeffs[int(n) + M] = c
        return v

    @classmethod
    def poisson(cls, z: complex, M: int) -> "FourierVector":
        """Poisson kernel ``p_z``: ``conj(z)^n`` for ``n >= 0``, ``z^|n|`` for ``n < 0``."""
        z = complex(z)
        n = np.arange(M + 1)
        pos = np.conj(z) ** n
        neg = z ** n[:0:-1]
        return cls(np.concatenate([neg, pos]), M)

    @classmethod
    def from_function(cls, f, M: int, n_points: Optional[int] = None) -> "FourierVector":
        """Coefficients of a 1-periodic function by FFT on ``n_points`` samples."""
        n_points = n_points or 8 * M
        theta = np.arange(n_points) / n_points
        c = np.fft.fft(np.asarray(f(theta), dtype=np.complex128)) / n_points
        idx = np.arange(-M, M + 1) % n_points
        return cls(c[idx], M)

    def resize(self, M: int) -> "FourierVector":
        out = FourierVector.zeros(M)
        k = min(M, self.M)
        out.coeffs[M - k : M + k + 1] = self.coeffs[self.M - k : self.M + k + 1]
        return out

    def values(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        e = np.exp(2j * np.pi * np.multiply.outer(theta, self.freqs))
        return e @ self.coeffs

    def is_real(self, tol: float = 1e-14) -> bool:
        return bool(np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1])), initial=0.0) <= tol)

    def norm(self, b: float) -> float:
        return KbSpace(b, self.M).norm(self)

    def __add__(self, other):
        _check_same(self, other)
        return FourierVector(self.coeffs + other.coeffs, self.M)

    def __sub__(self, other):
        _check_same(self, other)
        return FourierVector(self.coeffs - other.coeffs, self.M)

    def __mul__(self, other):
        """Pointwise product, truncated back to ``M``."""
        if np.isscalar(other):
            return FourierVector(self.coeffs * other, self.M)
        _check_same(self, other)
        full = np.convolve(self.coeffs, other.coeffs)
        return FourierVector(full[self.M : 3 * self.M + 1], self.M)

    __rmul__ = __mul__


def _check_same(u: FourierVector, v: FourierVector):
    if u.M != v.M:
        raise DomainError(f"truncation mismatch: {u.M} vs {v.M}")


@dataclass(frozen=True)
class KbSpace:
    """``k_b`` truncated at order ``M``; ``b > 1``."""

    b: float
    M: int

    def __post_init__(self):
        if not self.b > 1.0:
            raise DomainError(f"k_b requires b > 1, got {self.b}")

    @property
    def weights(self) -> np.ndarray:
        return float(self.b) ** np.abs(np.arange(-self.M, self.M + 1), dtype=float)

    @property
    def sqrt_weights(self) -> np.ndarray:
        return float(self.b) ** (np.abs(np.arange(-self.M, self.M + 1)) / 2.0)

    def norm(self, u) -> float:
        c = u.coeffs if isinstance(u, FourierVector) else np.asarray(u)
        if c.size != 2 * self.M + 1:
            raise DomainError("vector length does not match the space")
        return float(np.sqrt(np.sum(self.weights * np.abs(c) ** 2)))

    def inner(self, u: FourierVector, v: FourierVector) -> complex:
        return complex(np.sum(self.weights * u.coeffs * np.conj(v.coeffs)))

    def weigh(self, matrix: np.ndarray) -> np.ndarray:
        """``D A D^{-1}``: matrix of the same operator in k_b-orthonormal coordinates."""
        w = self.sqrt_weights
        return (w[:, None] * matrix) / w[None, :]

    def operator_norm(self, matrix: np.ndarray, mean_zero: bool = False) -> float:
        A = self.weigh(matrix)
        if mean_zero:
            keep = np.arange(2 * self.M + 1) != self.M
            A = A[np.ix_(keep, keep)]
        return float(scipy.linalg.svdvals(A)[0]) if A.size else 0.0


# -- transfer matrix -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Truncated matrix of the transfer operator.

    ``analytic[l, k] = a(k, l)`` for ``0 <= k, l <= M``; ``truncation_mass[l]``
    is ``1 - sum_{k<=M} |a(k, l)|^2``.
    """

    phi: object
    M: int
    kappa: int
    analytic: np.ndarray
    truncation_mass: np.ndarray
    _full: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def full(self) -> np.ndarray:
        """Square matrix on frequencies ``-M..M`` (row = output frequency)."""
        if self._full is None:
            object.__setattr__(self, "_full", _full_matrix(self.analytic))
        return self._full

    def entry(self, k: int, l: int) -> complex:
        """``a(k, l) = <T chi^k, chi^l>`` for any signs of ``k, l``."""
        return complex(self.full[l + self.M, k + self.M])

    def power(self, N: int) -> np.ndarray:
        return np.linalg.matrix_power(self.full, N)

    def band_violations(self) -> int:
        """Entries with ``k < kappa * l`` that are not exactly zero."""
        l, k = np.indices(self.analytic.shape)
        bad = (k < self.kappa * l) & (self.analytic != 0)
        bad[0, 0] = False
        return int(bad.sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,l,re,im\n")
        F = self.full
        rows, cols = np.nonzero(F)
        for r, c in sorted(zip(rows.tolist(), cols.tolist()), key=lambda rc: (rc[1], rc[0])):
            v = F[r, c] + 0.0  # drop negative zeros left by conjugation
            buf.write(f"{c - self.M},{r - self.M},{v.real:.17g},{v.imag:.17g}\n")
        return buf.getvalue()


def _full_matrix(A: np.ndarray) -> np.ndarray:
    M = A.shape[0] - 1
    F = np.zeros((2 * M + 1, 2 * M + 1), dtype=np.complex128)
    F[M:, M:] = A
    # negative block: T chi^{-k} = conj(T chi^k)
    F[:M, :M] = np.conj(A[:0:-1, :0:-1])
    F[M, M] = 1.0
    return F


def _check_map(phi):
    if phi.is_mobius():
        raise MobiusError("transfer matrix requires a non-Möbius map")
    if not phi.fixes_origin():
        raise PreconditionError(
            "transfer matrix requires phi(0) = 0; conjugate at the Denjoy–Wolff point first"
        )


def transfer_from_taylor(series: PowerSeries, M: int, phi=None, kappa: Optional[int] = None) -> TransferMatrix:
    """Matrix from Taylor coefficients of a map with ``coef_0 = 0``."""
    if series.order < M:
        raise DomainError(f"need Taylor order >= {M}, got {series.order}")
    c = series.coeffs[: M + 1].copy()
    c[0] = 0.0
    s = PowerSeries(c)
    if kappa is None:
        nz = np.nonzero(c)[0]
        kappa = int(nz[0]) if nz.size else M + 1
    powers = series_powers(s, M)
    A = np.zeros((M + 1, M + 1), dtype=np.complex128)
    A[0, 0] = 1.0
    mass = np.zeros(M + 1)
    for l in range(1, M + 1):
        col = np.conj(powers[l - 1].coeffs)
        # the band structure holds exactly: phi^l has a zero of order kappa*l
        col[: min(kappa * l, M + 1)] = 0.0
        A[l, :] = col
        mass[l] = 1.0 - float(np.sum(np.abs(col) ** 2))
    return TransferMatrix(phi, M, kappa, A, mass)


def build_transfer_matrix(phi, M: int = M_IDENTITY) -> TransferMatrix:
    """Truncated transfer matrix of ``tau(phi)``; ``phi(0) = 0`` required.

    ``phi`` is an :class:`InnerFunctionSpec` or a conjugated map exposing
    ``taylor``/``fixes_origin``/``kappa``.
    """
    _check_map(phi)
    kappa = phi.kappa
    return transfer_from_taylor(phi.taylor(M), M, phi=phi, kappa=kappa)


def apply_transfer(T: TransferMatrix, u: FourierVector) -> FourierVector:
    if u.M != T.M:
        raise DomainError(f"vector order {u.M} does not match matrix order {T.M}")
    return FourierVector(T.full @ u.coeffs, T.M)


# -- Boole identity ----------------------------------------------------------------


@dataclass(frozen=True)
class BooleReport:
    z: complex
    phi_z: complex
    b: float
    M: int
    residual: float
    tail_bound: float

    def to_dict(self) -> dict:
        return {
            "z": {"re": self.z.real, "im": self.z.imag},
            "phi_z": {"re": self.phi_z.real, "im": self.phi_z.imag},
            "b": self.b,
            "M": self.M,
            "residual": self.residual,
            "tail_bound": self.tail_bound,
        }


def _geometric_tail(q: float, start: int) -> float:
    """``sum_{n >= start} q^n`` for ``0 <= q < 1``."""
    if q >= 1.0:
        return float("inf")
    return q**start / (1.0 - q)


def boole_check(phi, z: complex, M: int = M_IDENTITY, b: float = BOOLE_B, T: Optional[TransferMatrix] = None) -> BooleReport:
    """k_b residual of ``T p_z - p_{phi(z)}``, with an analytic truncation tail.

    The tail accounts for ``p_z`` frequencies above ``M`` (each maps to degree
    ``<= n/kappa`` with L2 norm ``<= 1``) and for the part of ``p_{phi(z)}``
    above ``M``.
    """
    z = complex(z)
    if not abs(z) <= 0.7:
        raise DomainError("boole_check requires |z| <= 0.7")
    T = T or build_transfer_matrix(phi, M)
    w = complex(phi(z)) if not isinstance(phi, InnerFunctionSpec) else complex(eval_disk(phi, z))
    lhs = apply_transfer(T, FourierVector.poisson(z, T.M))
    rhs = FourierVector.poisson(w, T.M)
    resid = KbSpace(b, T.M).norm(lhs - rhs)
    kappa = max(T.kappa, 1)
    q_in = abs(z) * np.sqrt(b) ** (1.0 / kappa)
    tail_in = 2.0 * _geometric_tail(q_in, T.M + 1)
    tail_out = np.sqrt(2.0 * _geometric_tail(b * abs(w) ** 2, T.M + 1))
    return BooleReport(z, w, b, T.M, resid, float(tail_in + tail_out))


# -- spectral reports --------------------------------------------------------------


def bicycle_bound(b: float, kappa: int, N: int) -> float:
    """``(b / sqrt(b-1)) b^{-kappa^N / 2}``."""
    return b / np.sqrt(b - 1.0) * b ** (-(kappa**N) / 2.0)


@dataclass
class SpectralReport:
    b: float
    M: int
    kappa: int
    phi_prime_zero: float
    N: list
    measured_norm: list
    bicycle_bound: list
    wheelchair_fit_rho: float
    second_eigenvalue_modulus: Optional[float] = None

    def violations(self, rel: float = 1e-12) -> int:
        return int(sum(m > bb * (1 + rel) for m, bb in zip(self.measured_norm, self.bicycle_bound)))

    def to_dict(self) -> dict:
        return {
            "b": self.b,
            "M": self.M,
            "kappa": self.kappa,
            "phi_prime_zero": self.phi_prime_zero,
            "N": list(self.N),
            "measured_norm": list(self.measured_norm),
            "bicycle_bound": list(self.bicycle_bound),
            "wheelchair_fit_rho": self.wheelchair_fit_rho,
            "second_eigenvalue_modulus": self.second_eigenvalue_modulus,
        }


def _fit_rate(N: np.ndarray, norms: np.ndarray) -> float:
    """Geometric rate from a log-linear fit over the second half of ``N``."""
    ok = norms > 1e-300
    N, norms = N[ok], norms[ok]
    if N.size < 2:
        return 0.0
    half = N.size // 2
    Nf, nf = (N[half:], norms[half:]) if N.size - half >= 2 else (N, norms)
    slope = np.polyfit(Nf, np.log(nf), 1)[0]
    return float(np.exp(slope))


def gap_report(phi, b: float, N_max: int, M: int = M_SPECTRAL, T: Optional[TransferMatrix] = None) -> SpectralReport:
    """Weighted mean-zero norms of ``T^N`` for ``N = 1..N_max`` by SVD."""
    T = T or build_transfer_matrix(phi, M)
    space = KbSpace(b, T.M)
    norms = []
    P = np.eye(2 * T.M + 1, dtype=np.complex128)
    for _ in range(N_max):
        P = T.full @ P
        norms.append(space.operator_norm(P, mean_zero=True))
    Ns = list(range(1, N_max + 1))
    bounds = [float(bicycle_bound(b, T.kappa, N)) for N in Ns]
    rho = _fit_rate(np.array(Ns, dtype=float), np.array(norms))
    return SpectralReport(
        b=b,
        M=T.M,
        kappa=T.kappa,
        phi_prime_zero=float(abs(T.analytic[1, 1])),
        N=Ns,
        measured_norm=norms,
        bicycle_bound=bounds,
        wheelchair_fit_rho=rho,
    )


@dataclass(frozen=True)
class RadiusReport:
    M: int
    b: float
    estimate: float
    estimate_half: float
    predicted: float

    @property
    def error(self) -> float:
        return abs(self.estimate - self.predicted)

    @property
    def error_half(self) -> float:
        return abs(self.estimate_half - self.predicted)

    @property
    def converging(self) -> bool:
        return self.error <= self.error_half + 1e-12

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "b": self.b,
            "second_eigenvalue_modulus": self.estimate,
            "second_eigenvalue_modulus_half_M": self.estimate_half,
            "phi_prime_zero": self.predicted,
            "error": self.error,
            "error_half_M": self.error_half,
            "converging": self.converging,
        }


def second_eigenvalue_modulus(T: TransferMatrix, b: float) -> float:
    """Largest eigenvalue modulus on the mean-zero block (constants removed)."""
    keep = np.arange(2 * T.M + 1) != T.M
    A = KbSpace(b, T.M).weigh(T.full)[np.ix_(keep, keep)]
    try:
        ev = scipy.linalg.eigvals(A)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"eigenvalue computation failed: {exc}") from exc
    if not np.all(np.isfinite(ev)):
        raise NumericError("eigenvalue computation returned non-finite values")
    return float(np.max(np.abs(ev))) if ev.size else 0.0


def essential_radius_estimate(phi, b: float = 1.5, M: int = M_SPECTRAL) -> RadiusReport:
    """Second eigenvalue modulus at ``M`` and ``M // 2`` against ``|phi'(0)|``."""
    T = build_transfer_matrix(phi, M)
    T_half = transfer_from_taylor(phi.taylor(M // 2), M // 2, phi=phi, kappa=T.kappa)
    predicted = float(abs(T.analytic[1, 1])) if T.kappa == 1 else 0.0
    return RadiusReport(M, b, second_eigenvalue_modulus(T, b), second_eigenvalue_modulus(T_half, b), predicted)
