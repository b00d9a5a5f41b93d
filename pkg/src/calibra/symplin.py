"""Symplectic linear algebra on R^{2n}.

Coordinates are ordered ``(x_1..x_n, y_1..y_n)``; ``e_i`` is the i-th and
``f_i`` the (n+i)-th standard basis vector.  With this ordering

    omega = sum_i e^i ^ f^i,    J = [[0, -I], [I, 0]],    omega(x, y) = <Jx, y>.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import PreconditionError
from .forms import KForm
from .rng import make_rng

MAX_CONDITION = 1e12


def standard_omega(n: int, exact: bool = False) -> KForm:
    if n < 1:
        raise ValueError("n must be >= 1")
    return KForm(2 * n, 2, {(i, n + i): 1 for i in range(n)}, exact)


def standard_J(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def omega_pair(u, v) -> float:
    """``omega(u, v) = <J u, v>`` for the standard structure."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = u.shape[-1] // 2
    return float(np.dot(u[:n], v[n:]) - np.dot(u[n:], v[:n]))


def _half_dim(A: np.ndarray) -> int:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise PreconditionError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] % 2:
        raise PreconditionError("matrix dimension must be even")
    return A.shape[0] // 2


class MapClass(enum.Enum):
    SYMPLECTIC = "symplectic"
    ANTI_SYMPLECTIC = "anti_symplectic"
    NEITHER = "neither"


def symplectic_residuals(A) -> tuple[float, float]:
    """``(|A^T J A - J|_max, |A^T J A + J|_max)``."""
    A = np.asarray(A, dtype=float)
    J = standard_J(_half_dim(A))
    G = A.T @ J @ A
    return float(np.max(np.abs(G - J))), float(np.max(np.abs(G + J)))


def classify_map(A, tol: float = 1e-8) -> MapClass:
    r_sp, r_anti = symplectic_residuals(A)
    if r_sp <= tol:
        return MapClass.SYMPLECTIC
    if r_anti <= tol:
        return MapClass.ANTI_SYMPLECTIC
    return MapClass.NEITHER


def reflection(n: int) -> np.ndarray:
    """The anti-symplectic reflection ``(x, y) -> (-x, y)``."""
    return np.diag(np.concatenate([-np.ones(n), np.ones(n)]))


# -- ellipsoids ---------------------------------------------------------------


def _check_spd(M: np.ndarray, what: str = "shape matrix") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise PreconditionError(f"{what} must be square, got {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))))
    asym = float(np.max(np.abs(M - M.T)))
    if asym > 1e-12 * scale:
        raise PreconditionError(f"{what} is not symmetric (max asymmetry {asym:.3e})")
    evals = np.linalg.eigvalsh(0.5 * (M + M.T))
    if evals[0] <= 0:
        raise PreconditionError(f"{what} is not positive definite (smallest eigenvalue {evals[0]:.6e})")
    cond = evals[-1] / evals[0]
    if cond > MAX_CONDITION:
        raise PreconditionError(f"{what} is too ill-conditioned (condition number {cond:.3e} > {MAX_CONDITION:.0e})")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class Ellipsoid:
    """The closed set ``{z : <z - c, M (z - c)> <= 1}``."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        shape = _check_spd(self.shape)
        center = np.asarray(self.center, dtype=float).reshape(-1)
        if center.shape[0] != shape.shape[0]:
            raise PreconditionError("center and shape dimensions disagree")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "center", center)

    @classmethod
    def centered(cls, M) -> "Ellipsoid":
        M = np.asarray(M, dtype=float)
        return cls(np.zeros(M.shape[0]), M)

    @classmethod
    def ball(cls, n: int, radius: float = 1.0) -> "Ellipsoid":
        return cls.centered(np.eye(2 * n) / radius**2)

    @classmethod
    def normal_form(cls, radii) -> "Ellipsoid":
        """``E(r) = {sum_j (x_j^2 + y_j^2) / r_j^2 <= 1}``."""
        r = np.asarray(radii, dtype=float)
        d = 1.0 / r**2
        return cls.centered(np.diag(np.concatenate([d, d])))

    @property
    def dim(self) -> int:
        return self.shape.shape[0]

    def contains(self, z) -> bool:
        w = np.asarray(z, dtype=float) - self.center
        return float(w @ self.shape @ w) <= 1.0

    def image(self, A) -> "Ellipsoid":
        """``A(E)`` for invertible linear ``A``."""
        A = np.asarray(A, dtype=float)
        Ainv = np.linalg.inv(A)
        M = Ainv.T @ self.shape @ Ainv
        return Ellipsoid(A @ self.center, 0.5 * (M + M.T))

    def to_json(self) -> dict:
        return {"center": self.center.tolist(), "shape": self.shape.tolist()}

    @classmethod
    def from_json(cls, data) -> "Ellipsoid":
        shape = np.asarray(data["shape"], dtype=float)
        center = data.get("center")
        if center is None:
            center = np.zeros(shape.shape[0])
        return cls(np.asarray(center, dtype=float), shape)


@dataclass(frozen=True)
class SymplecticSpectrum:
    radii: tuple

    def __post_init__(self):
        r = tuple(float(x) for x in self.radii)
        if not r or any(x <= 0 for x in r):
            raise ValueError("spectrum radii must be positive")
        if any(a > b for a, b in zip(r, r[1:])):
            raise ValueError("spectrum radii must be sorted ascending")
        object.__setattr__(self, "radii", r)

    def __len__(self) -> int:
        return len(self.radii)

    def __getitem__(self, i) -> float:
        return self.radii[i]


@dataclass(frozen=True)
class WilliamsonDecomposition:
    """``S^T M S = diag(lambdas) (+) diag(lambdas)`` with ``S`` symplectic."""

    S: np.ndarray
    lambdas: tuple

    @property
    def diagonal(self) -> np.ndarray:
        lam = np.asarray(self.lambdas)
        return np.diag(np.concatenate([lam, lam]))

    def residuals(self, M) -> tuple[float, float]:
        M = np.asarray(M, dtype=float)
        J = standard_J(len(self.lambdas))
        S = self.S
        return (
            float(np.max(np.abs(S.T @ J @ S - J))),
            float(np.max(np.abs(S.T @ M @ S - self.diagonal))),
        )


def interleave_permutation(n: int) -> np.ndarray:
    """Permutation ``P`` with ``P.T @ (I_n kron J_2) @ P == J`` (block ordering).

    Column ``j`` of ``P`` picks the interleaved coordinate that becomes block
    coordinate ``j``: ``x_i`` sits at slot ``2i`` and ``y_i`` at ``2i + 1``.
    """
    P = np.zeros((2 * n, 2 * n))
    for i in range(n):
        P[2 * i, i] = 1.0
        P[2 * i + 1, n + i] = 1.0
    return P


def _inverse_sqrt(M: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh(M)
    return (U / np.sqrt(w)) @ U.T


def williamson(M) -> WilliamsonDecomposition:
    """Williamson normal form of a symmetric positive-definite ``2n x 2n`` matrix.

    ``K = M^{-1/2} J M^{-1/2}`` is skew, so its real Schur form is a direct sum
    of 2x2 rotation generators.  Orienting each block as ``[[0, -d], [d, 0]]``
    and sorting gives an orthogonal ``Q`` with ``Q K Q^T = J_2 kron D``; then
    ``S = M^{-1/2} Q^T (I_2 kron D)^{-1/2}`` is symplectic and
    ``S^T M S = D^{-1} (+) D^{-1}``.  The returned ``lambdas = 1/d`` are
    sorted descending.
    """
    M = _check_spd(M, "matrix")
    n = _half_dim(M)
    J = standard_J(n)
    Mih = _inverse_sqrt(M)
    K = Mih @ J @ Mih
    K = 0.5 * (K - K.T)
    T, Z = linalg.schur(K, output="real")
    # Interleaved pairs: (a_j, b_j) with Z columns oriented so that
    # a_j^T K b_j = -d_j < 0, i.e. block [[0, -d], [d, 0]].
    pairs = []
    i = 0
    m = 2 * n
    while i < m:
        if i + 1 < m and abs(T[i + 1, i]) + abs(T[i, i + 1]) > 0:
            t = 0.5 * (T[i, i + 1] - T[i + 1, i])
            a, b = Z[:, i], Z[:, i + 1]
            if t > 0:
                a, b = b, a
            pairs.append((abs(t), a, b))
            i += 2
        else:
            raise PreconditionError("skew normal form has a zero block; matrix is degenerate")
    d = np.array([p[0] for p in pairs])
    # lambda = 1/d descending  <=>  d ascending; stable sort keeps Schur order on ties.
    order = np.argsort(d, kind="stable")
    Q_interleaved_T = np.empty((m, m))
    for slot, j in enumerate(order):
        Q_interleaved_T[:, 2 * slot] = pairs[j][1]
        Q_interleaved_T[:, 2 * slot + 1] = pairs[j][2]
    d_sorted = d[order]
    QT = Q_interleaved_T @ interleave_permutation(n)
    dd = np.concatenate([d_sorted, d_sorted])
    S = Mih @ QT / np.sqrt(dd)
    return WilliamsonDecomposition(S=S, lambdas=tuple(1.0 / d_sorted))


def symplectic_eigenvalues(M) -> np.ndarray:
    """The ``d_j`` of ``M^{-1/2} J M^{-1/2}`` from a Hermitian eigensolve, ascending.

    Independent of :func:`williamson`: the Hermitian matrix ``i K`` has
    eigenvalues ``+-d_j``.
    """
    M = _check_spd(M, "matrix")
    n = _half_dim(M)
    Mih = _inverse_sqrt(M)
    K = Mih @ standard_J(n) @ Mih
    w = np.linalg.eigvalsh(1j * K)
    return np.sort(w[n:])


def symplectic_spectrum(E: Ellipsoid) -> SymplecticSpectrum:
    """Radii ``r`` with ``S^{-1} E = E(r)``; ``r_j = 1/sqrt(lambda_j)``, ascending."""
    dec = williamson(E.shape)
    r = np.sort(1.0 / np.sqrt(np.asarray(dec.lambdas)))
    return SymplecticSpectrum(tuple(r))


def linear_symplectic_width(E: Ellipsoid) -> float:
    r1 = symplectic_spectrum(E).radii[0]
    return math.pi * r1 * r1


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def k_width_from_width(width: float, k: int) -> float:
    return unit_ball_volume(2 * k) / math.pi**k * width**k


def k_width_ellipsoid(E: Ellipsoid, k: int) -> float:
    n = E.dim // 2
    if not 1 <= k <= n:
        raise PreconditionError(f"k must lie in [1, {n}]")
    return k_width_from_width(linear_symplectic_width(E), k)


def random_symplectic(n: int, seed: int = 0, spread: float = 0.5, stream: tuple = ()) -> np.ndarray:
    """``expm(J Sym)`` for a seeded symmetric ``Sym`` with entries in ``[-spread, spread]``."""
    if spread <= 0:
        raise ValueError("spread must be positive")
    rng = make_rng(seed, *stream)
    return symplectic_from_params(rng.uniform(-spread, spread, size=n * (2 * n + 1)), n)


def symmetric_from_params(p, m: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    S = np.zeros((m, m))
    S[np.triu_indices(m)] = p
    return S + np.triu(S, 1).T


def symplectic_from_params(p, n: int) -> np.ndarray:
    return linalg.expm(standard_J(n) @ symmetric_from_params(p, 2 * n))


def extend_to_symplectic_basis(u, v, tol: float = 1e-9) -> np.ndarray:
    """A symplectic ``Phi`` with ``Phi e_1 = u`` and ``Phi f_1 = v``.

    Completion is by symplectic Gram-Schmidt on the omega-complement of
    ``span(u, v)`` starting from the standard basis.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    m = u.shape[0]
    if m % 2 or v.shape != u.shape:
        raise PreconditionError("u and v must be vectors of the same even length")
    n = m // 2
    w = omega_pair(u, v)
    if abs(w - 1.0) > tol:
        raise PreconditionError(f"omega(u, v) = {w!r}, expected 1")
    es, fs = [u], [v]

    def project(x, a, b):
        # remove the span(a, b) component in the omega sense, given omega(a, b) = 1
        return x - omega_pair(x, b) * a + omega_pair(x, a) * b

    cands = [project(c, u, v) for c in np.eye(m)]
    for _ in range(n - 1):
        norms = [np.linalg.norm(c) for c in cands]
        ia = int(np.argmax(norms))
        a = cands[ia] / norms[ia]
        pair_vals = [abs(omega_pair(a, c)) for c in cands]
        ib = int(np.argmax(pair_vals))
        b = cands[ib] / omega_pair(a, cands[ib])
        # rescale for balance: keep omega(a, b) = 1 while equalizing norms
        s = math.sqrt(np.linalg.norm(b) / np.linalg.norm(a))
        a, b = a * s, b / s
        es.append(a)
        fs.append(b)
        cands = [project(c, a, b) for i, c in enumerate(cands) if i not in (ia, ib)]
    return np.column_stack(es + fs)
