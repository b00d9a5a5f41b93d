"""Constant-coefficient exterior forms on R^n.

Forms are stored sparsely as ``{multi-index: coefficient}`` with strictly
increasing 0-based index tuples. Evaluation uses the determinant convention,

    (e^{i_1} ^ ... ^ e^{i_k})(v_1, ..., v_k) = det[v_j[i_l]],

so that ``omega^k(e_1, f_1, ..., e_k, f_k) = k!`` for the standard symplectic
form.  Two scalar modes are supported: exact (``fractions.Fraction``) for
combinatorial identities and float64 for everything numerical.

Pullback convention: ``pullback(A, a)`` is ``a(A., ..., A.)``.  Consequently
``pullback(B, pullback(A, a)) == pullback(A @ B, a)``.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

Scalar = Union[Fraction, float]
MultiIndex = tuple

FLOAT_RTOL = 1e-9


def _check_index(idx: Sequence[int], dim: int) -> tuple:
    idx = tuple(int(i) for i in idx)
    for a, b in zip(idx, idx[1:]):
        if a >= b:
            raise ValueError(f"multi-index {idx} is not strictly increasing")
    if idx and (idx[0] < 0 or idx[-1] >= dim):
        raise ValueError(f"multi-index {idx} out of range for dimension {dim}")
    return idx


def _to_exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    if isinstance(x, np.integer):
        return Fraction(int(x))
    raise TypeError(f"cannot convert {x!r} to an exact rational")


class KForm:
    """An alternating k-form on R^dim with constant coefficients.

    Instances are immutable.  Keys are kept lexicographically sorted so that
    iteration and serialization are deterministic.
    """

    __slots__ = ("_dim", "_degree", "_coeffs", "_exact")

    def __init__(self, dim: int, degree: int, coeffs: Mapping | Iterable = (), exact: bool = False):
        if dim < 0 or degree < 0 or degree > dim:
            raise ValueError(f"invalid degree {degree} for dimension {dim}")
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        acc: dict = {}
        for idx, c in items:
            idx = _check_index(idx, dim)
            if len(idx) != degree:
                raise ValueError(f"multi-index {idx} has length != degree {degree}")
            c = _to_exact(c) if exact else float(c)
            acc[idx] = acc.get(idx, 0) + c
        self._coeffs = {k: acc[k] for k in sorted(acc) if acc[k] != 0}
        self._dim = dim
        self._degree = degree
        self._exact = exact

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, dim: int, degree: int, exact: bool = False) -> "KForm":
        return cls(dim, degree, {}, exact)

    @classmethod
    def scalar(cls, dim: int, value=1, exact: bool = False) -> "KForm":
        return cls(dim, 0, {(): value}, exact)

    @classmethod
    def basis(cls, dim: int, idx: Sequence[int], coeff=1, exact: bool = False) -> "KForm":
        """The form ``coeff * e^{i_1} ^ ... ^ e^{i_k}`` (index order may be unsorted)."""
        idx = tuple(idx)
        if len(set(idx)) != len(idx):
            return cls.zero(dim, len(idx), exact)
        sign = _perm_sign(idx)
        return cls(dim, len(idx), {tuple(sorted(idx)): coeff * sign}, exact)

    @classmethod
    def from_array(cls, dim: int, degree: int, values: Sequence, exact: bool = False) -> "KForm":
        basis = basis_indices(dim, degree)
        if len(values) != len(basis):
            raise ValueError("coefficient vector has the wrong length")
        return cls(dim, degree, zip(basis, values), exact)

    # -- accessors ----------------------------------------------------------

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def degree(self) -> int:
        return self._degree

    @property
    def exact(self) -> bool:
        return self._exact

    @property
    def coeffs(self) -> Mapping:
        return dict(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def __getitem__(self, idx) -> Scalar:
        return self._coeffs.get(tuple(idx), Fraction(0) if self._exact else 0.0)

    def __len__(self) -> int:
        return len(self._coeffs)

    def is_zero(self) -> bool:
        return not self._coeffs

    def to_array(self) -> np.ndarray:
        """Dense coefficient vector over the lexicographic basis of degree-k indices."""
        basis = basis_indices(self._dim, self._degree)
        if self._exact:
            out = np.array([self[i] for i in basis], dtype=object)
        else:
            out = np.array([self[i] for i in basis], dtype=float)
        return out

    def to_float(self) -> "KForm":
        if not self._exact:
            return self
        return KForm(self._dim, self._degree, {k: float(v) for k, v in self._coeffs.items()})

    def to_exact(self) -> "KForm":
        if self._exact:
            return self
        return KForm(self._dim, self._degree, self._coeffs, exact=True)

    def max_abs(self) -> float:
        return max((abs(float(v)) for v in self._coeffs.values()), default=0.0)

    # -- arithmetic -----------------------------------------------------------

    def _check_compatible(self, other: "KForm"):
        if not isinstance(other, KForm):
            raise TypeError("expected a KForm")
        if self._dim != other._dim:
            raise ValueError(f"dimension mismatch: {self._dim} vs {other._dim}")
        if self._exact != other._exact:
            raise ValueError("scalar mode mismatch (exact vs float)")

    def __add__(self, other: "KForm") -> "KForm":
        self._check_compatible(other)
        if self._degree != other._degree:
            raise ValueError("cannot add forms of different degree")
        acc = dict(self._coeffs)
        for k, v in other._coeffs.items():
            acc[k] = acc.get(k, 0) + v
        return KForm(self._dim, self._degree, acc, self._exact)

    def __neg__(self) -> "KForm":
        return KForm(self._dim, self._degree, {k: -v for k, v in self._coeffs.items()}, self._exact)

    def __sub__(self, other: "KForm") -> "KForm":
        return self + (-other)

    def __mul__(self, s) -> "KForm":
        if isinstance(s, KForm):
            return NotImplemented
        s = _to_exact(s) if self._exact else float(s)
        return KForm(self._dim, self._degree, {k: s * v for k, v in self._coeffs.items()}, self._exact)

    __rmul__ = __mul__

    def __xor__(self, other: "KForm") -> "KForm":
        return wedge(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, KForm):
            return NotImplemented
        return (
            self._dim == other._dim
            and self._degree == other._degree
            and self._exact == other._exact
            and self._coeffs == other._coeffs
        )

    def __hash__(self):
        return hash((self._dim, self._degree, self._exact, tuple(self._coeffs.items())))

    def allclose(self, other: "KForm", rtol: float = FLOAT_RTOL) -> bool:
        """Float equality: max |difference| <= rtol * (1 + max coefficient magnitude)."""
        if self._dim != other._dim or self._degree != other._degree:
            return False
        keys = set(self._coeffs) | set(other._coeffs)
        diff = max((abs(float(self[k]) - float(other[k])) for k in keys), default=0.0)
        scale = max(self.max_abs(), other.max_abs())
        return diff <= rtol * (1.0 + scale)

    def __repr__(self) -> str:
        if not self._coeffs:
            return f"KForm(dim={self._dim}, degree={self._degree}, 0)"
        terms = " + ".join(
            f"{v}*e{'^'.join(str(i + 1) for i in k) or '()'}" for k, v in self._coeffs.items()
        )
        return f"KForm(dim={self._dim}, degree={self._degree}, {terms})"

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        """JSON-ready dict; indices are written 1-based, exact rationals as "p/q"."""
        terms = []
        for idx, c in self._coeffs.items():
            terms.append({"idx": [i + 1 for i in idx], "re": _scalar_json(c, self._exact)})
        return {"dim": self._dim, "degree": self._degree, "terms": terms}

    @classmethod
    def from_json(cls, data: Mapping, exact: bool | None = None) -> "KForm":
        terms = data.get("terms", [])
        if exact is None:
            exact = any(isinstance(t.get("re"), str) for t in terms)
        coeffs = []
        for t in terms:
            if t.get("im") not in (None, 0, "0", 0.0):
                raise ValueError("complex coefficients found; use ComplexKForm.from_json")
            coeffs.append((tuple(i - 1 for i in t["idx"]), _scalar_parse(t["re"], exact)))
        return cls(int(data["dim"]), int(data["degree"]), coeffs, exact)


def _scalar_json(c, exact: bool):
    if exact:
        c = Fraction(c)
        return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"
    return float(c)


def _scalar_parse(x, exact: bool):
    if exact:
        return _to_exact(x)
    if isinstance(x, str):
        return float(Fraction(x))
    return float(x)


class ComplexKForm:
    """A complex-valued form stored as ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re: KForm, im: KForm | None = None):
        if im is None:
            im = KForm.zero(re.dim, re.degree, re.exact)
        if (re.dim, re.degree, re.exact) != (im.dim, im.degree, im.exact):
            raise ValueError("real and imaginary parts must share dim, degree and scalar mode")
        self.re = re
        self.im = im

    @property
    def dim(self) -> int:
        return self.re.dim

    @property
    def degree(self) -> int:
        return self.re.degree

    @property
    def exact(self) -> bool:
        return self.re.exact

    def conj(self) -> "ComplexKForm":
        return ComplexKForm(self.re, -self.im)

    def __add__(self, other: "ComplexKForm") -> "ComplexKForm":
        return ComplexKForm(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "ComplexKForm") -> "ComplexKForm":
        return ComplexKForm(self.re - other.re, self.im - other.im)

    def scale(self, z: complex) -> "ComplexKForm":
        """Multiply by a complex scalar (float mode)."""
        z = complex(z)
        return ComplexKForm(self.re * z.real - self.im * z.imag, self.re * z.imag + self.im * z.real)

    def __getitem__(self, idx) -> complex:
        return complex(float(self.re[idx]), float(self.im[idx]))

    def max_abs(self) -> float:
        keys = set(self.re.coeffs) | set(self.im.coeffs)
        return max((abs(self[k]) for k in keys), default=0.0)

    def max_abs_diff(self, other: "ComplexKForm") -> float:
        """Largest coefficient difference over both the real and imaginary arrays."""
        return max((self.re - other.re).max_abs(), (self.im - other.im).max_abs())

    def real_part(self, theta: float = 0.0) -> KForm:
        """``Re(e^{i theta} * self)``."""
        return self.re * math.cos(theta) - self.im * math.sin(theta)

    def to_json(self) -> dict:
        keys = sorted(set(self.re.coeffs) | set(self.im.coeffs))
        terms = []
        for k in keys:
            terms.append(
                {
                    "idx": [i + 1 for i in k],
                    "re": _scalar_json(self.re[k], self.exact),
                    "im": _scalar_json(self.im[k], self.exact),
                }
            )
        return {"dim": self.dim, "degree": self.degree, "terms": terms}

    @classmethod
    def from_json(cls, data: Mapping, exact: bool | None = None) -> "ComplexKForm":
        terms = data.get("terms", [])
        if exact is None:
            exact = any(isinstance(t.get("re"), str) or isinstance(t.get("im"), str) for t in terms)
        dim, degree = int(data["dim"]), int(data["degree"])
        re = [(tuple(i - 1 for i in t["idx"]), _scalar_parse(t.get("re", 0), exact)) for t in terms]
        im = [(tuple(i - 1 for i in t["idx"]), _scalar_parse(t.get("im", 0), exact)) for t in terms]
        return cls(KForm(dim, degree, re, exact), KForm(dim, degree, im, exact))

    def __repr__(self) -> str:
        return f"ComplexKForm(re={self.re!r}, im={self.im!r})"


# -- combinatorics ------------------------------------------------------------


@lru_cache(maxsize=None)
def basis_indices(dim: int, degree: int) -> tuple:
    """Lexicographically ordered multi-indices of the given degree."""
    return tuple(itertools.combinations(range(dim), degree))


@lru_cache(maxsize=None)
def _basis_position(dim: int, degree: int) -> dict:
    return {idx: i for i, idx in enumerate(basis_indices(dim, degree))}


def _perm_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation that sorts ``seq`` (entries distinct)."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _merge_sign(a: tuple, b: tuple) -> int:
    """Sign of sorting the concatenation of two sorted, disjoint index tuples."""
    inversions = 0
    j = 0
    for x in a:
        while j < len(b) and b[j] < x:
            j += 1
        inversions += j
    return -1 if inversions % 2 else 1


def _det_exact(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    m = [list(r) for r in rows]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        p = m[col][col]
        det *= p
        for r in range(col + 1, n):
            f = m[r][col]
            if f:
                f = f / p
                row_c = m[col]
                row_r = m[r]
                for c in range(col + 1, n):
                    row_r[c] -= f * row_c[c]
    return det


# -- operations ---------------------------------------------------------------


def wedge(a: KForm, b: KForm) -> KForm:
    """Exterior product; degree above ``dim`` gives the zero form."""
    a._check_compatible(b)
    deg = a.degree + b.degree
    if deg > a.dim:
        # Lambda^deg = 0; hand back the zero top-degree form.
        return KForm.zero(a.dim, a.dim, a.exact)
    acc: dict = {}
    for ia, ca in a.items():
        sa = set(ia)
        for ib, cb in b.items():
            if sa.intersection(ib):
                continue
            key = tuple(sorted(ia + ib))
            acc[key] = acc.get(key, 0) + _merge_sign(ia, ib) * ca * cb
    return KForm(a.dim, deg, acc, a.exact)


def wedge_complex(a: ComplexKForm, b: ComplexKForm) -> ComplexKForm:
    return ComplexKForm(wedge(a.re, b.re) - wedge(a.im, b.im), wedge(a.re, b.im) + wedge(a.im, b.re))


def contract(v: Sequence, a: KForm) -> KForm:
    """Interior product ``i_v a`` (insert ``v`` into the first slot)."""
    if a.degree < 1:
        raise ValueError("cannot contract a degree-0 form")
    if len(v) != a.dim:
        raise ValueError(f"vector length {len(v)} != form dimension {a.dim}")
    v = [_to_exact(x) for x in v] if a.exact else [float(x) for x in v]
    acc: dict = {}
    for idx, c in a.items():
        for pos, i in enumerate(idx):
            if v[i] == 0:
                continue
            key = idx[:pos] + idx[pos + 1:]
            term = c * v[i]
            acc[key] = acc.get(key, 0) + (term if pos % 2 == 0 else -term)
    return KForm(a.dim, a.degree - 1, acc, a.exact)


def contraction_matrix(a: KForm) -> np.ndarray:
    """Matrix of ``v -> i_v a`` from R^dim to the lexicographic basis of degree-(k-1) forms."""
    if a.degree < 1:
        raise ValueError("cannot contract a degree-0 form")
    pos = _basis_position(a.dim, a.degree - 1)
    out = np.zeros((len(pos), a.dim))
    for idx, c in a.items():
        for p, i in enumerate(idx):
            key = idx[:p] + idx[p + 1:]
            out[pos[key], i] += float(c) if p % 2 == 0 else -float(c)
    return out


def _as_matrix(A, exact: bool):
    if exact:
        return [[_to_exact(x) for x in row] for row in A]
    return np.asarray(A, dtype=float)


def pullback(A, a: KForm) -> KForm:
    """``A^* a``, i.e. ``(A^* a)(v_1..v_k) = a(A v_1, ..., A v_k)``.

    Coefficientwise ``(A^* a)_J = sum_I a_I det A[I, J]`` (Cauchy-Binet).
    Exact mode is used when ``a`` is exact; ``A`` must then hold rationals.
    """
    n = a.dim
    k = a.degree
    shape = (len(A), len(A[0]) if len(A) else 0)
    if shape != (n, n):
        raise ValueError(f"matrix shape {shape} does not match form dimension {n}")
    if k == 0 or a.is_zero():
        return a
    targets = basis_indices(n, k)
    if a.exact:
        M = _as_matrix(A, True)
        acc = {}
        for I, c in a.items():
            rows = [M[i] for i in I]
            for J in targets:
                d = _det_exact([[row[j] for j in J] for row in rows])
                if d:
                    acc[J] = acc.get(J, 0) + c * d
        return KForm(n, k, acc, True)
    M = np.asarray(A, dtype=float)
    src = np.array(list(a.coeffs.keys()), dtype=int)
    cs = np.array(list(a.coeffs.values()), dtype=float)
    tgt = np.array(targets, dtype=int)
    # sub[m, t] = A[src[m]][:, tgt[t]]
    sub = M[src[:, None, :, None], tgt[None, :, None, :]]
    dets = np.linalg.det(sub)
    return KForm.from_array(n, k, cs @ dets)


def pullback_complex(A, a: ComplexKForm) -> ComplexKForm:
    return ComplexKForm(pullback(A, a.re), pullback(A, a.im))


def evaluate(a: KForm, vs: Sequence[Sequence]) -> Scalar:
    """Evaluate the form on ``k`` vectors: ``sum_I a_I det(V[I, :])``."""
    if len(vs) != a.degree:
        raise ValueError(f"expected {a.degree} vectors, got {len(vs)}")
    for v in vs:
        if len(v) != a.dim:
            raise ValueError("vector length does not match form dimension")
    if a.degree == 0:
        return a[()]
    if a.exact:
        V = [[_to_exact(x) for x in v] for v in vs]
        total = Fraction(0)
        for I, c in a.items():
            total += c * _det_exact([[V[j][i] for j in range(len(V))] for i in I])
        return total
    if a.is_zero():
        return 0.0
    V = np.asarray(vs, dtype=float).T
    idx = np.array(list(a.coeffs.keys()), dtype=int)
    cs = np.array(list(a.coeffs.values()), dtype=float)
    return float(cs @ np.linalg.det(V[idx]))


def evaluate_complex(a: ComplexKForm, vs: Sequence[Sequence]) -> complex:
    return complex(float(evaluate(a.re, vs)), float(evaluate(a.im, vs)))


def power(a: KForm, k: int) -> KForm:
    """``a ^ a ^ ... ^ a`` (k factors) for a 2-form; ``k = 0`` gives the constant 1.

    If ``2k > dim`` the zero top-degree form is returned.
    """
    if a.degree != 2:
        raise ValueError("power() expects a 2-form")
    if k < 0:
        raise ValueError("k must be non-negative")
    out = KForm.scalar(a.dim, 1, a.exact)
    for _ in range(k):
        out = wedge(out, a)
    return out


def omega_k_sum_formula(us: Sequence[Sequence], omega: KForm) -> Scalar:
    """``(1/2^k) sum_{sigma in S_2k} sign(sigma) prod_i omega(u_sigma(2i-1), u_sigma(2i))``.

    A direct permutation sum, independent of :func:`power` and :func:`evaluate`
    beyond the pairwise values ``omega(u_a, u_b)``.
    """
    if omega.degree != 2:
        raise ValueError("omega must be a 2-form")
    if len(us) % 2:
        raise ValueError("need an even number of vectors")
    k = len(us) // 2
    m = len(us)
    gram = [[evaluate(omega, [us[a], us[b]]) for b in range(m)] for a in range(m)]
    perms, signs = _permutations_with_sign(m)
    if omega.exact:
        # Clear denominators so the permutation sum runs over Python ints.
        den = 1
        for row in gram:
            for g in row:
                den = den * g.denominator // math.gcd(den, g.denominator)
        G = [[int(g * den) for g in row] for row in gram]
        total = 0
        for p, s in zip(perms, signs):
            prod = s
            for i in range(0, m, 2):
                prod *= G[p[i]][p[i + 1]]
                if not prod:
                    break
            total += prod
        return Fraction(total, den**k * 2**k)
    G = np.asarray(gram, dtype=float)
    P = np.asarray(perms)
    prods = np.ones(len(perms))
    for i in range(0, m, 2):
        prods *= G[P[:, i], P[:, i + 1]]
    return float(np.dot(np.asarray(signs, dtype=float), prods) / 2**k)


@lru_cache(maxsize=8)
def _permutations_with_sign(m: int):
    perms = tuple(itertools.permutations(range(m)))
    signs = tuple(_perm_sign(p) for p in perms)
    return perms, signs


def lefschetz_matrix(omega: KForm, j: int) -> np.ndarray:
    """Matrix of ``theta -> theta ^ omega^j`` from Lambda^{n-j} to Lambda^{n+j}.

    Columns index the lexicographic basis of the source, rows that of the
    target.  Exact ``omega`` gives an object array of Fractions.
    """
    if omega.degree != 2 or omega.dim % 2:
        raise ValueError("need a 2-form on an even-dimensional space")
    n = omega.dim // 2
    if not 1 <= j <= n:
        raise ValueError(f"j must lie in [1, {n}]")
    wj = power(omega, j)
    src = basis_indices(omega.dim, n - j)
    pos = _basis_position(omega.dim, n + j)
    out = np.zeros((len(pos), len(src)), dtype=object if omega.exact else float)
    if omega.exact:
        out[:] = Fraction(0)
    for col, I in enumerate(src):
        img = wedge(KForm(omega.dim, n - j, {I: 1}, omega.exact), wj)
        for J, c in img.items():
            out[pos[J], col] = c
    return out


def hodge_star(a: KForm) -> KForm:
    """Euclidean Hodge star for the orientation ``e^1 ^ ... ^ e^n``."""
    full = tuple(range(a.dim))
    acc = {}
    for I, c in a.items():
        rest = tuple(i for i in full if i not in I)
        acc[rest] = _merge_sign(I, rest) * c
    return KForm(a.dim, a.dim - a.degree, acc, a.exact)


def volume_form(dim: int, exact: bool = False) -> KForm:
    return KForm(dim, dim, {tuple(range(dim)): 1}, exact)
