"""Complex-linear maps and the holomorphic volume form ``Omega``.

A complex ``n x n`` matrix ``X + iY`` acts on ``R^{2n} = C^n`` (coordinates
``x + iy``) as ``[[X, -Y], [Y, X]]``.  Complex matrices are plain numpy
complex arrays.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .calib import enclosing_radius, holomorphic_volume_form, lagrangian_plane
from .exceptions import NoWitnessError, PreconditionError, TripwireError
from .forms import ComplexKForm, contraction_matrix, evaluate_complex, pullback, pullback_complex, wedge_complex
from .symplin import _half_dim, standard_J

DEFAULT_TOL = 1e-8
TRIPWIRE_FACTOR = 100.0


@lru_cache(maxsize=None)
def _omega(n: int) -> ComplexKForm:
    return holomorphic_volume_form(n)


def embed_complex(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    X, Y = M.real, M.imag
    return np.block([[X, -Y], [Y, X]])


def complex_linearity_residual(A) -> float:
    A = np.asarray(A, dtype=float)
    J = standard_J(_half_dim(A))
    return float(np.max(np.abs(A @ J - J @ A)))


def _linear_tol(A: np.ndarray, tol: float) -> float:
    return tol * max(1.0, float(np.max(np.abs(A))))


def extract_complex(A, tol: float = DEFAULT_TOL) -> Optional[np.ndarray]:
    """Inverse of :func:`embed_complex`; ``None`` if ``A`` does not commute with ``J``."""
    A = np.asarray(A, dtype=float)
    n = _half_dim(A)
    if complex_linearity_residual(A) > _linear_tol(A, tol):
        return None
    X = 0.5 * (A[:n, :n] + A[n:, n:])
    Y = 0.5 * (A[n:, :n] - A[:n, n:])
    return X + 1j * Y


def complex_scale(z: complex, v) -> np.ndarray:
    """Multiply a real vector of R^{2n} = C^n by a complex scalar."""
    v = np.asarray(v, dtype=float)
    n = v.shape[0] // 2
    return z.real * v + z.imag * (standard_J(n) @ v)


def complex_det(A, tol: float = DEFAULT_TOL) -> complex:
    M = extract_complex(A, tol)
    if M is None:
        raise PreconditionError(f"map is not complex-linear (|AJ - JA| = {complex_linearity_residual(A):.3e})")
    return complex(np.linalg.det(M))


def _scale(A: np.ndarray, n: int) -> float:
    return max(1.0, float(np.linalg.norm(A, 2))) ** n


def omega_residual(A, target: complex = 1.0) -> float:
    """``max |coefficients of (A^* Omega - target * Omega)|`` over real and imaginary parts."""
    A = np.asarray(A, dtype=float)
    n = _half_dim(A)
    Om = _omega(n)
    return pullback_complex(A, Om).max_abs_diff(Om.scale(target))


def _check_invertible(A: np.ndarray):
    if np.linalg.matrix_rank(A) < A.shape[0]:
        raise PreconditionError("map is singular")


def preserves_omega_form(A, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``A^* Omega = Omega``.

    Computed by pullback and, independently, as complex-linearity together
    with ``det_C A = 1``.  The two must agree; a disagreement beyond a
    100x tolerance band raises :class:`TripwireError`.
    """
    A = np.asarray(A, dtype=float)
    n = _half_dim(A)
    _check_invertible(A)
    scale = _scale(A, n)
    res = omega_residual(A)
    by_pullback = res <= tol * scale

    def det_path(t):
        M = extract_complex(A, t)
        return M is not None and abs(complex(np.linalg.det(M)) - 1.0) <= t * scale

    if by_pullback and not det_path(TRIPWIRE_FACTOR * tol):
        raise TripwireError(f"A^*Omega = Omega (residual {res:.3e}) but A is not in SL(n, C)")
    if not by_pullback and res > TRIPWIRE_FACTOR * tol * scale and det_path(tol):
        raise TripwireError(f"A is in SL(n, C) but A^*Omega differs from Omega by {res:.3e}")
    return by_pullback


@dataclass(frozen=True)
class PhaseVerdict:
    preserves_up_to_phase: bool
    theta: Optional[float]
    residual: float

    def to_json(self) -> dict:
        return {"preserves_up_to_phase": self.preserves_up_to_phase, "theta": self.theta, "residual": self.residual}


def phase_verdict(A, tol: float = DEFAULT_TOL) -> PhaseVerdict:
    """Whether ``A^* Omega = e^{i theta} Omega`` for some real ``theta``.

    The factor is read from the ``e^1 ^ ... ^ e^n`` coefficient, where
    ``Omega`` has coefficient 1.
    """
    A = np.asarray(A, dtype=float)
    n = _half_dim(A)
    _check_invertible(A)
    scale = _scale(A, n)
    pulled = pullback_complex(A, _omega(n))
    factor = pulled[tuple(range(n))]
    res = pulled.max_abs_diff(_omega(n).scale(factor))
    ok = res <= tol * scale and abs(abs(factor) - 1.0) <= tol * scale
    theta = cmath.phase(factor) if ok else None
    if theta is not None and theta <= -math.pi:
        theta += 2 * math.pi
    return PhaseVerdict(ok, theta, float(max(res, abs(abs(factor) - 1.0))))


def recover_complex_structure(Upsilon: ComplexKForm, tol: float = 1e-8) -> np.ndarray:
    """The complex structure ``J'`` for which ``Upsilon`` is of type ``(n, 0)``.

    ``V^{0,1}`` is the kernel of ``v -> i_v Upsilon`` on ``C^{2n}``
    (singular values below ``1e-8 sigma_max`` count as zero).  ``J'`` acts
    as ``-i`` there and ``+i`` on the conjugate space.
    """
    dim, n = Upsilon.dim, Upsilon.degree
    if dim != 2 * n:
        raise PreconditionError("need a complex n-form on R^{2n}")
    top = wedge_complex(Upsilon, Upsilon.conj())
    mag = abs(top[tuple(range(dim))])
    if not mag > tol:
        raise PreconditionError(f"Upsilon ^ conj(Upsilon) vanishes (|coefficient| = {mag:.3e})")
    C = contraction_matrix(Upsilon.re) + 1j * contraction_matrix(Upsilon.im)
    _, s, Vh = np.linalg.svd(C)
    s_full = np.concatenate([s, np.zeros(dim - s.size)])
    null = s_full <= 1e-8 * s_full[0]
    if int(null.sum()) != n:
        raise PreconditionError(f"contraction kernel has dimension {int(null.sum())}, expected {n}")
    K = Vh.conj().T[:, null]
    W = np.hstack([K, K.conj()])
    Jc = W @ np.diag(np.concatenate([-1j * np.ones(n), 1j * np.ones(n)])) @ np.linalg.inv(W)
    imag = float(np.max(np.abs(Jc.imag)))
    Jr = Jc.real
    if imag > 1e-6 * max(1.0, float(np.max(np.abs(Jr)))):
        raise TripwireError(f"recovered structure is not real (imaginary part {imag:.3e})")
    return Jr


def two_phase_implies_full(A, theta1: float, theta2: float, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``A`` preserves both ``Re(e^{i theta_j} Omega)``.

    A map preserving two real parts with non-antipodal phases preserves
    ``Omega`` itself; that consequence is re-checked and a failure raises.
    """
    if abs(math.sin(theta1 - theta2)) <= 1e-9:
        raise PreconditionError("phases must be distinct and non-antipodal")
    A = np.asarray(A, dtype=float)
    n = _half_dim(A)
    scale = _scale(A, n)
    Om = _omega(n)
    both = True
    for th in (theta1, theta2):
        a = Om.real_part(th)
        if (pullback(A, a) - a).max_abs() > tol * scale:
            both = False
            break
    if both and not preserves_omega_form(A, TRIPWIRE_FACTOR * tol):
        raise TripwireError("two real parts preserved but Omega is not")
    return both


def random_slnc(n: int, rng: np.random.Generator) -> np.ndarray:
    """Complex Gaussian matrix rescaled to determinant one (principal root)."""
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    d = complex(np.linalg.det(M))
    return M * cmath.exp(-cmath.log(d) / n)


@dataclass(frozen=True)
class SlagWitness:
    map: np.ndarray
    lam: float
    theta: float
    inverted: bool
    radius: float

    def to_json(self) -> dict:
        return {
            "map": self.map.tolist(),
            "lambda": self.lam,
            "theta": self.theta,
            "inverted": self.inverted,
            "radius": self.radius,
        }


def slag_squeezing_witness(Psi, tol: float = DEFAULT_TOL) -> SlagWitness:
    """Squeeze ``B(1)`` into ``Z_L(lambda)``, ``L = span(e_1..e_n)``, with ``lambda < 1``.

    ``Psi`` is complex-linear with ``|det_C Psi| != 1``; it is replaced by
    its inverse when ``|det_C| > 1``.  With ``w_k = Psi^T e_k``,
    ``lambda = |Omega(w)|^{1/n}`` and ``theta = arg Omega(w)``, the map
    ``Phi`` with ``Phi e_k = lambda^{-1} e^{-i theta/n} w_k`` lies in
    ``SL(n, C)`` and ``Psi (Phi^T)^{-1}`` is the returned witness, whose
    enclosing radius is recomputed as a certificate.
    """
    Psi = np.asarray(Psi, dtype=float)
    n = _half_dim(Psi)
    _check_invertible(Psi)
    det = complex_det(Psi, tol)
    if abs(abs(det) - 1.0) <= tol:
        raise NoWitnessError(f"|det_C Psi| = {abs(det)!r} is 1: no squeezing exists")
    inverted = abs(det) > 1.0
    if inverted:
        Psi = np.linalg.inv(Psi)
    W = Psi.T
    ws = [W[:, k] for k in range(n)]
    value = evaluate_complex(_omega(n), ws)
    lam = abs(value) ** (1.0 / n)
    theta = cmath.phase(value)
    z = cmath.exp(-1j * theta / n) / lam
    J = standard_J(n)
    E = np.column_stack([complex_scale(z, w) for w in ws])
    Phi = np.hstack([E, J @ E])
    check = evaluate_complex(_omega(n), [Phi[:, k] for k in range(n)])
    if abs(check - 1.0) > 1e-8 * max(1.0, abs(value) ** -1):
        raise TripwireError(f"completed Phi has Omega(Phi e) = {check!r}, expected 1")
    At = Psi @ np.linalg.inv(Phi.T)
    R = enclosing_radius(lagrangian_plane(n), At, 1.0)
    if R > lam + 1e-9:
        raise TripwireError(f"witness radius {R!r} exceeds lambda {lam!r}")
    return SlagWitness(map=At, lam=float(lam), theta=float(theta), inverted=inverted, radius=float(R))
