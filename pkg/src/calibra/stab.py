"""Stabilizers of powers of the symplectic form.

For ``1 <= k <= n - 1`` a linear map preserving ``omega^k`` is symplectic
(k odd) or symplectic/anti-symplectic (k even); for ``k = n`` it is any map
of determinant one.  The functions here compute the relevant residuals and
turn them into verdicts, raising or flagging whenever the numbers contradict
that classification.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .exceptions import PreconditionError, TripwireError
from .forms import KForm, basis_indices, power, pullback, wedge
from .symplin import (
    MapClass,
    _half_dim,
    reflection,
    standard_omega,
    symplectic_from_params,
    symplectic_residuals,
)

DEFAULT_TOL = 1e-8


class PowerClass(enum.Enum):
    SYMPLECTIC = "symplectic"
    ANTI_SYMPLECTIC = "anti_symplectic"
    VOLUME_ONLY = "volume_only"
    INCONSISTENT = "inconsistent"


@dataclass(frozen=True)
class PowerStabilizerVerdict:
    preserves_power: bool
    classification: Optional[PowerClass]
    residuals: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "preserves_power": self.preserves_power,
            "classification": None if self.classification is None else self.classification.value,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
        }


@dataclass(frozen=True)
class TwoFormDiagonal:
    lambdas: tuple
    c: float


@lru_cache(maxsize=None)
def _omega_power(n: int, k: int) -> KForm:
    return power(standard_omega(n), k)


def _check_k(n: int, k: int):
    if not 1 <= k <= n:
        raise PreconditionError(f"k must lie in [1, {n}], got {k}")


def _scale(A: np.ndarray, k: int) -> float:
    # Roundoff in a degree-2k pullback grows like |A|^{2k}.
    return max(1.0, float(np.linalg.norm(A, 2))) ** (2 * k)


def power_residual(A, k: int) -> float:
    """``max |coefficients of (A^* omega^k - omega^k)|``."""
    A = np.asarray(A, dtype=float)
    n = _half_dim(A)
    _check_k(n, k)
    wk = _omega_power(n, k)
    return (pullback(A, wk) - wk).max_abs()


def preserves_omega_power(A, k: int, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``A^* omega^k = omega^k`` to relative tolerance ``tol``.

    The tolerance is scaled by ``max(1, |A|_2)^{2k}``.
    """
    A = np.asarray(A, dtype=float)
    return power_residual(A, k) <= tol * _scale(A, k)


@lru_cache(maxsize=None)
def _lefschetz_inverse_norm(n: int, k: int) -> float:
    """Infinity-norm bound for recovering ``delta`` from ``k delta ^ omega^{k-1}``.

    Used to turn a tolerance on ``omega^k`` into a consistent tolerance on
    ``omega`` itself; the map is injective on 2-forms when ``k <= n - 1``.
    """
    if k == 1:
        return 1.0
    w = _omega_power(n, k - 1)
    src = basis_indices(2 * n, 2)
    tgt = {idx: i for i, idx in enumerate(basis_indices(2 * n, 2 * k))}
    L = np.zeros((len(tgt), len(src)))
    for col, I in enumerate(src):
        img = wedge(KForm(2 * n, 2, {I: 1.0}), w) * k
        for J, c in img.items():
            L[tgt[J], col] = c
    P = np.linalg.pinv(L)
    return float(np.max(np.sum(np.abs(P), axis=1)))


def classify_power_preserver(A, k: int, tol: float = DEFAULT_TOL) -> PowerStabilizerVerdict:
    """Run the power test, then classify the map against omega itself.

    ``classification`` is ``None`` when the power is not preserved.  The map
    test uses a tolerance derived from the power tolerance so that a genuine
    preserver within ``tol`` can never be misread as ``NEITHER`` by accident;
    an ``INCONSISTENT`` verdict therefore signals a real contradiction.
    """
    A = np.asarray(A, dtype=float)
    n = _half_dim(A)
    _check_k(n, k)
    scale = _scale(A, k)
    r_pow = power_residual(A, k)
    r_sp, r_anti = symplectic_residuals(A)
    det = float(np.linalg.det(A))
    residuals = {"power": r_pow, "symplectic": r_sp, "anti_symplectic": r_anti, "det": abs(det - 1.0)}
    preserved = r_pow <= tol * scale
    if not preserved:
        return PowerStabilizerVerdict(False, None, residuals)
    if k == n:
        map_tol = tol * max(1.0, float(np.linalg.norm(A, 2))) ** 2
        if r_sp <= map_tol:
            return PowerStabilizerVerdict(True, PowerClass.SYMPLECTIC, residuals)
        if abs(det - 1.0) <= tol * scale:
            return PowerStabilizerVerdict(True, PowerClass.VOLUME_ONLY, residuals)
        return PowerStabilizerVerdict(True, PowerClass.INCONSISTENT, residuals)
    map_tol = 10.0 * _lefschetz_inverse_norm(n, k) * tol * scale
    if r_sp <= map_tol and r_sp <= r_anti:
        return PowerStabilizerVerdict(True, PowerClass.SYMPLECTIC, residuals)
    if k % 2 == 0 and r_anti <= map_tol:
        return PowerStabilizerVerdict(True, PowerClass.ANTI_SYMPLECTIC, residuals)
    return PowerStabilizerVerdict(True, PowerClass.INCONSISTENT, residuals)


def check_two_form_diagonal(Omega: KForm, k: int, tol: float = DEFAULT_TOL) -> Optional[TwoFormDiagonal]:
    """Decide whether ``c Omega^k = omega^k`` and, if so, read off ``Omega = sum lambda_i e^i ^ f^i``.

    ``c`` is taken from the lexicographically first coefficient of
    ``omega^k`` (the ``e^1..e^k f^1..f^k`` term).  Returns ``None`` when no
    such ``c`` exists.  Raises :class:`TripwireError` if proportionality
    holds but ``Omega`` has off-diagonal terms beyond tolerance.
    """
    if Omega.degree != 2 or Omega.dim % 2:
        raise PreconditionError("Omega must be a 2-form on an even-dimensional space")
    n = Omega.dim // 2
    if k == n:
        raise PreconditionError("k = n is not covered: the diagonal form is only forced for k <= n - 1")
    if not 1 <= k <= n - 1:
        raise PreconditionError(f"k must lie in [1, {n - 1}]")
    Om = Omega.to_float()
    wk = _omega_power(n, k)
    Ok = power(Om, k)
    lead = next(iter(wk.coeffs))
    if abs(Ok[lead]) <= tol * max(1.0, Ok.max_abs()):
        return None
    c = wk[lead] / Ok[lead]
    resid = (Ok * c - wk).max_abs()
    scale = max(1.0, Om.max_abs()) ** k * max(1.0, abs(c))
    if resid > tol * scale:
        return None
    diag_keys = {(i, n + i) for i in range(n)}
    off = max((abs(v) for key, v in Om.items() if key not in diag_keys), default=0.0)
    off_tol = 10.0 * _lefschetz_inverse_norm(n, k) * tol * scale
    if off > off_tol:
        raise TripwireError(
            f"c*Omega^{k} = omega^{k} holds (residual {resid:.3e}) but Omega has "
            f"off-diagonal terms of size {off:.3e}"
        )
    lambdas = tuple(float(Om[(i, n + i)]) for i in range(n))
    return TwoFormDiagonal(lambdas=lambdas, c=float(c))


def transpose_closure_check(A, k: int, tol: float = DEFAULT_TOL) -> bool:
    A = np.asarray(A, dtype=float)
    if not preserves_omega_power(A, k, tol):
        raise PreconditionError("A does not preserve omega^k")
    return preserves_omega_power(A.T, k, tol)


def sample_power_preserver(n: int, k: int, rng: np.random.Generator, spread: float = 0.5) -> np.ndarray:
    """Draw from the classified stabilizer of ``omega^k``.

    Symplectic for k odd, symplectic or anti-symplectic (equal odds) for k even,
    and ``SL(2n, R)`` for ``k = n``.
    """
    _check_k(n, k)
    if k == n:
        from scipy.linalg import expm

        X = rng.uniform(-spread, spread, size=(2 * n, 2 * n))
        X -= np.trace(X) / (2 * n) * np.eye(2 * n)
        return expm(X)
    A = symplectic_from_params(rng.uniform(-spread, spread, size=n * (2 * n + 1)), n)
    if k % 2 == 0 and rng.random() < 0.5:
        A = reflection(n) @ A
    return A


def map_class_of(verdict: PowerStabilizerVerdict) -> MapClass | None:
    if verdict.classification is PowerClass.SYMPLECTIC:
        return MapClass.SYMPLECTIC
    if verdict.classification is PowerClass.ANTI_SYMPLECTIC:
        return MapClass.ANTI_SYMPLECTIC
    return None


__all__ = [
    "PowerClass",
    "PowerStabilizerVerdict",
    "TwoFormDiagonal",
    "preserves_omega_power",
    "power_residual",
    "classify_power_preserver",
    "check_two_form_diagonal",
    "transpose_closure_check",
    "sample_power_preserver",
]
