"""Non-squeezing experiments over parametrized matrix groups.

:func:`squeeze_search` minimizes the exact enclosing-cylinder radius of
``g(B(r))`` over a group, :func:`nonsqueezing_sweep` samples random affine
group elements, and :func:`rigidity_witness_symplectic` builds an explicit
squeezing map from any linear map that is not (anti-)symplectic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg, optimize

from .calib import check_orthonormal, enclosing_radius
from .exceptions import NoWitnessError, PreconditionError, TripwireError
from .parallel import pmap
from .rng import make_rng
from .slag import embed_complex, preserves_omega_form
from .stab import preserves_omega_power
from .symplin import (
    MapClass,
    _half_dim,
    classify_map,
    extend_to_symplectic_basis,
    omega_pair,
    reflection,
    standard_J,
    symmetric_from_params,
)

MEMBER_TOL = 1e-8
KINDS = ("symplectic", "power", "slnc", "isometry", "custom")


def _skew_from_params(p, m: int) -> np.ndarray:
    S = np.zeros((m, m))
    S[np.triu_indices(m, 1)] = p
    return S - S.T


def _traceless_from_params(p, m: int) -> np.ndarray:
    # m*m - 1 free entries; the last diagonal entry absorbs the trace.
    X = np.zeros(m * m)
    X[: m * m - 1] = p
    X = X.reshape(m, m)
    X[-1, -1] = -np.trace(X[:-1, :-1])
    return X


@dataclass(frozen=True)
class GroupSpec:
    """A matrix group with an exponential chart ``params -> element``.

    ``kind`` is one of ``symplectic`` (``Sp(2n)``), ``power`` (the
    stabilizer of ``omega^k``), ``slnc`` (``SL(n, C)`` embedded in
    ``R^{2n}``), ``isometry`` (``O(n)`` on ``R^n``) or ``custom`` (the
    exponential of a span of ``generators``).  Disconnected groups expose
    extra components (a fixed reflection times the identity component).
    """

    kind: str
    n: int
    k: Optional[int] = None
    generators: tuple = ()
    member: Optional[Callable[[np.ndarray], bool]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown group kind {self.kind!r}")
        if self.n < 1:
            raise PreconditionError("n must be >= 1")
        if self.kind == "power" and not (self.k and 1 <= self.k <= self.n):
            raise PreconditionError("power stabilizer needs 1 <= k <= n")
        if self.kind == "custom" and not self.generators:
            raise PreconditionError("custom group needs generators")

    @classmethod
    def symplectic(cls, n: int) -> "GroupSpec":
        return cls("symplectic", n)

    @classmethod
    def power_stabilizer(cls, n: int, k: int) -> "GroupSpec":
        return cls("power", n, k)

    @classmethod
    def slnc(cls, n: int) -> "GroupSpec":
        return cls("slnc", n)

    @classmethod
    def isometry(cls, n: int) -> "GroupSpec":
        return cls("isometry", n)

    @classmethod
    def custom(cls, generators: Sequence, member=None) -> "GroupSpec":
        gens = tuple(np.asarray(g, dtype=float) for g in generators)
        return cls("custom", gens[0].shape[0], generators=gens, member=member)

    @property
    def dim(self) -> int:
        """Ambient dimension of the matrices."""
        if self.kind in ("isometry", "custom"):
            return self.n
        return 2 * self.n

    @property
    def n_params(self) -> int:
        m = self.dim
        if self.kind == "symplectic" or (self.kind == "power" and self.k < self.n):
            return m * (m + 1) // 2
        if self.kind == "power":
            return m * m - 1
        if self.kind == "slnc":
            return 2 * (self.n * self.n - 1)
        if self.kind == "isometry":
            return m * (m - 1) // 2
        return len(self.generators)

    @property
    def components(self) -> int:
        if self.kind == "power" and self.k < self.n and self.k % 2 == 0:
            return 2
        if self.kind == "isometry":
            return 2
        return 1

    def _component_matrix(self, c: int) -> np.ndarray:
        if c == 0:
            return np.eye(self.dim)
        if self.kind == "power":
            return reflection(self.n)
        D = np.eye(self.dim)
        D[0, 0] = -1.0
        return D

    def element(self, params, component: int = 0) -> np.ndarray:
        p = np.asarray(params, dtype=float)
        if p.shape != (self.n_params,):
            raise PreconditionError(f"expected {self.n_params} parameters, got {p.shape}")
        m = self.dim
        if self.kind == "symplectic" or (self.kind == "power" and self.k < self.n):
            g = linalg.expm(standard_J(self.n) @ symmetric_from_params(p, m))
        elif self.kind == "power":
            g = linalg.expm(_traceless_from_params(p, m))
        elif self.kind == "slnc":
            h = len(p) // 2
            X = _traceless_from_params(p[:h], self.n) + 1j * _traceless_from_params(p[h:], self.n)
            g = embed_complex(linalg.expm(X))
        elif self.kind == "isometry":
            g = linalg.expm(_skew_from_params(p, m))
        else:
            g = linalg.expm(sum(c * G for c, G in zip(p, self.generators)))
        if component:
            g = self._component_matrix(component) @ g
        return g

    def sample(self, rng: np.random.Generator, spread: float = 0.5) -> np.ndarray:
        comp = int(rng.integers(self.components)) if self.components > 1 else 0
        return self.element(rng.uniform(-spread, spread, self.n_params), comp)

    def contains(self, A, tol: float = MEMBER_TOL) -> bool:
        A = np.asarray(A, dtype=float)
        if A.shape != (self.dim, self.dim):
            return False
        if self.kind == "symplectic":
            return classify_map(A, tol * max(1.0, float(np.linalg.norm(A, 2))) ** 2) is MapClass.SYMPLECTIC
        if self.kind == "power":
            return preserves_omega_power(A, self.k, tol)
        if self.kind == "slnc":
            return preserves_omega_form(A, tol)
        if self.kind == "isometry":
            return float(np.max(np.abs(A.T @ A - np.eye(self.dim)))) <= tol
        return True if self.member is None else bool(self.member(A))

    def to_json(self) -> dict:
        out = {"kind": self.kind, "n": self.n}
        if self.k is not None:
            out["k"] = self.k
        return out


@dataclass
class SqueezeResult:
    best_radius: float
    best_params: np.ndarray
    best_component: int
    best_translation: np.ndarray
    iterations: int
    trace: list = field(default_factory=list)
    restart_iterations: list = field(default_factory=list)
    restart_seeds: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "best_radius": float(self.best_radius),
            "best_params": [float(x) for x in self.best_params],
            "best_component": self.best_component,
            "best_translation": [float(x) for x in self.best_translation],
            "iterations": int(self.iterations),
            "trace": [float(x) for x in self.trace],
        }


def _check_L(L, dim: int) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != dim or not 1 <= L.shape[1] <= dim:
        raise PreconditionError(f"cylinder basis must be a ({dim}, k) array")
    return check_orthonormal(L)


def squeeze_search(
    G: GroupSpec,
    L,
    r: float = 1.0,
    restarts: int = 8,
    seed: int = 0,
    budget: int = 2000,
    spread: float = 0.5,
    polish: bool = False,
) -> SqueezeResult:
    """Minimize ``enclosing_radius(L, g, r)`` over ``g`` in ``G``.

    Each restart runs Nelder-Mead for at most ``budget`` iterations in the
    exponential chart.  Restart 0 starts at the identity, restart ``i > 0``
    at a random point drawn from stream ``(seed, i)``; disconnected groups
    cycle through their components.  The translation is fixed at zero,
    where the radius is minimal (it can only grow as ``|proj_L b|``
    becomes nonzero).  ``polish`` adds a BFGS pass with finite-difference
    gradients.  The winning radius is recomputed from scratch; ties go to
    the lowest restart index.
    """
    if r <= 0:
        raise PreconditionError("r must be positive")
    if restarts < 1 or budget < 1:
        raise PreconditionError("restarts and budget must be >= 1")
    L = _check_L(L, G.dim)

    def run(i):
        comp = i % G.components
        x0 = np.zeros(G.n_params) if i == 0 else make_rng(seed, i).uniform(-spread, spread, G.n_params)

        def f(p):
            return enclosing_radius(L, G.element(p, comp), r)

        res = optimize.minimize(
            f,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": budget,
                "maxfev": 4 * budget,
                "xatol": 1e-12,
                "fatol": 1e-14,
                "adaptive": G.n_params > 4,
            },
        )
        x, fx, its = res.x, float(res.fun), int(res.nit)
        if polish:
            pol = optimize.minimize(f, x, method="BFGS", options={"maxiter": 50})
            its += int(pol.nit)
            if pol.fun < fx:
                x, fx = pol.x, float(pol.fun)
        if f(x0) < fx:
            x, fx = x0, f(x0)
        return x, comp, fx, its

    results = pmap(run, range(restarts))
    radii = [r_[2] for r_ in results]
    best = int(np.argmin(radii))
    x, comp, claimed, _ = results[best]
    g = G.element(x, comp)
    certified = enclosing_radius(L, g, r)
    if certified != claimed:
        raise TripwireError(f"recomputed radius {certified!r} differs from optimizer value {claimed!r}")
    return SqueezeResult(
        best_radius=certified,
        best_params=x,
        best_component=comp,
        best_translation=np.zeros(G.dim),
        iterations=sum(r_[3] for r_ in results),
        trace=radii,
        restart_iterations=[r_[3] for r_ in results],
        restart_seeds=list(range(restarts)),
    )


@dataclass
class SweepReport:
    trials: int
    r: float
    min_radius: float
    violations: int
    argmin_trial: int

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "r": self.r,
            "min_radius": float(self.min_radius),
            "min_ratio": float(self.min_radius / self.r),
            "violations": self.violations,
            "argmin_trial": self.argmin_trial,
            "passed": self.passed,
        }


def nonsqueezing_sweep(
    G: GroupSpec,
    L,
    trials: int = 1000,
    seed: int = 0,
    r: float = 1.0,
    spread: float = 0.5,
    translation_scale: float = 1.0,
) -> SweepReport:
    """Random affine group elements ``x -> g x + b``; count radii below ``r (1 - 1e-9)``."""
    L = _check_L(L, G.dim)

    def trial(t):
        rng = make_rng(seed, t)
        g = G.sample(rng, spread)
        b = rng.normal(scale=translation_scale, size=G.dim)
        return enclosing_radius(L, g, r, b)

    radii = np.array(pmap(trial, range(trials)))
    floor = r * (1.0 - 1e-9)
    j = int(np.argmin(radii))
    return SweepReport(trials, r, float(radii[j]), int(np.sum(radii < floor)), j)


def barron_constant(k: int) -> float:
    """``((2k)!)^{1/(2k)} / sqrt(2)``; exactly 1 for ``k = 1``."""
    if k < 1:
        raise PreconditionError("k must be >= 1")
    if k == 1:
        return 1.0
    return math.factorial(2 * k) ** (1.0 / (2 * k)) / math.sqrt(2.0)


@dataclass(frozen=True)
class SymplecticWitness:
    map: np.ndarray
    lam: float
    u: np.ndarray
    v: np.ndarray
    inverted: bool
    radius: float

    def to_json(self) -> dict:
        return {
            "map": self.map.tolist(),
            "lambda": self.lam,
            "u": self.u.tolist(),
            "v": self.v.tolist(),
            "inverted": self.inverted,
            "radius": self.radius,
        }


def _best_pair(P: np.ndarray, rng: np.random.Generator, attempts: int):
    m = P.shape[0]
    U = rng.standard_normal((attempts, m))
    V = rng.standard_normal((attempts, m))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    n = m // 2
    J = standard_J(n)
    w = np.einsum("ij,ij->i", U @ J.T, V)
    PU, PV = U @ P, V @ P  # rows are (P^T u)^T
    wp = np.einsum("ij,ij->i", PU @ J.T, PV)
    gap = np.abs(w) - np.abs(wp)
    j = int(np.argmax(gap))
    return float(gap[j]), float(abs(wp[j]) / abs(w[j])) if w[j] else np.inf, U[j], V[j]


def rigidity_witness_symplectic(
    Psi, tol: float = 1e-8, seed: int = 0, attempts: int = 10_000, screen: bool = True
) -> Optional[SymplecticWitness]:
    """Explicit map ``A^T = Phi^T Psi (Phi'^T)^{-1}`` squeezing ``B(1)`` into ``Z(lambda)``.

    Random unit pairs ``(u, v)`` are searched for the largest gap
    ``|omega(u, v)| - |omega(Psi^T u, Psi^T v)|``, trying ``Psi`` and
    ``Psi^{-1}``.  After normalizing ``omega(u, v) = 1`` the ratio of the
    two values is ``lambda^2``; ``Phi`` and ``Phi'`` are symplectic completions of
    ``(u, v)`` and ``lambda^{-1} (+-Psi^T u, Psi^T v)``.  The radius of the
    result over ``span(e_1, f_1)`` is recomputed and must be at most
    ``lambda + 1e-9``.

    Raises :class:`NoWitnessError` for (anti-)symplectic ``Psi`` unless
    ``screen`` is off, in which case the search runs and returns ``None``
    when no pair with ``lambda^2 <= 1 - tol`` turns up.
    """
    Psi = np.asarray(Psi, dtype=float)
    n = _half_dim(Psi)
    if np.linalg.matrix_rank(Psi) < 2 * n:
        raise PreconditionError("Psi is singular")
    if screen:
        cls = classify_map(Psi, tol * max(1.0, float(np.linalg.norm(Psi, 2))) ** 2)
        if cls is not MapClass.NEITHER:
            raise NoWitnessError(f"Psi is {cls.value}: no squeezing witness exists")
    Psi_inv = np.linalg.inv(Psi)
    cands = []
    for s, P in enumerate((Psi, Psi_inv)):
        cands.append(_best_pair(P, make_rng(seed, s), attempts) + (P, s == 1))
    _, ratio, u, v, P, inverted = max(cands, key=lambda c: c[0])
    if not ratio <= 1.0 - tol:
        return None
    if omega_pair(u, v) < 0:
        u, v = v, u
    u = u / omega_pair(u, v)
    pu, pv = P.T @ u, P.T @ v
    wp = omega_pair(pu, pv)
    lam = math.sqrt(abs(wp))
    sign = 1.0 if wp > 0 else -1.0
    Phi = extend_to_symplectic_basis(u, v)
    Phi2 = extend_to_symplectic_basis(sign * pu / lam, pv / lam, tol=1e-7)
    At = Phi.T @ P @ np.linalg.inv(Phi2.T)
    L = np.eye(2 * n)[:, [0, n]]
    R = enclosing_radius(L, At, 1.0)
    if R > lam + 1e-9:
        raise TripwireError(f"witness radius {R!r} exceeds lambda {lam!r}")
    return SymplecticWitness(map=At, lam=lam, u=u, v=v, inverted=inverted, radius=float(R))
