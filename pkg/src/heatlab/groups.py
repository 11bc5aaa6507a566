"""Concrete compact-type groups: tori, SU(2), and finite products.

Conventions used throughout the package:

* The Lie algebra carries a fixed Ad-invariant inner product and the basis
  ``X_1 .. X_d`` stored in each group is orthonormal for it.  For su(2) the
  inner product is ``<X, Y> = Re trace(X* Y)``, which makes
  ``X_k = i sigma_k / sqrt(2)`` an orthonormal basis.
* Haar measure is normalized to total mass one.  (On a circle this differs
  from arc length by a factor 2*pi; see README for the conversion.)
* Structure constants satisfy ``[X_j, X_k] = sum_l c[l, j, k] X_l`` and are
  totally antisymmetric in (l, j, k), which witnesses Ad-invariance.
* Torus elements are angle vectors in [0, 2*pi); SU(2) elements are explicit
  2x2 unitaries with determinant one.  Complexified elements are complex
  angles and SL(2, C) matrices respectively.

All objects are immutable after construction and all functions are pure, so
everything here is safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ResourceCapError, UnsupportedGroupError

_PAULI = (
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)

#: Orthonormal su(2) basis under Re trace(X* Y).
SU2_BASIS = tuple(1.0j * s / math.sqrt(2.0) for s in _PAULI)

MAX_QUADRATURE_NODES = 2_000_000


@dataclass(frozen=True)
class TorusFactor:
    dim: int

    @property
    def kind(self):
        return f"torus:{self.dim}"


@dataclass(frozen=True)
class SU2Factor:
    dim: int = 3

    @property
    def kind(self):
        return "su2"


def _su2_structure_constants():
    # [X_j, X_k] = -sqrt(2) eps_{jkl} X_l
    c = np.zeros((3, 3, 3))
    for j, k, l in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[l, j, k] = -math.sqrt(2.0)
        c[l, k, j] = math.sqrt(2.0)
    return c


@dataclass(frozen=True)
class CompactGroup:
    """A torus, SU(2), or a finite product of such factors.

    ``structure_constants[l, j, k]`` holds the coefficient of ``X_l`` in
    ``[X_j, X_k]`` for the global orthonormal basis, which is the
    concatenation of the factor bases.  For products the array is
    block-diagonal across factors.
    """

    factors: tuple
    dim: int
    basis_labels: tuple
    structure_constants: np.ndarray = field(repr=False)

    def __post_init__(self):
        validate_structure_constants(self.structure_constants)

    @property
    def kind(self):
        if len(self.factors) == 1:
            return self.factors[0].kind
        return "product(" + ", ".join(f.kind for f in self.factors) + ")"

    @property
    def is_torus(self):
        return all(isinstance(f, TorusFactor) for f in self.factors)

    @property
    def has_torus_factor(self):
        return any(isinstance(f, TorusFactor) for f in self.factors)

    def factor_slices(self):
        """Index ranges of each factor inside the global basis."""
        out, start = [], 0
        for f in self.factors:
            out.append(slice(start, start + f.dim))
            start += f.dim
        return out

    def identity(self):
        return GroupPoint(self, tuple(_factor_identity(f) for f in self.factors))

    def point(self, *parts):
        return GroupPoint(self, tuple(_coerce_part(f, p) for f, p in zip(self.factors, parts, strict=True)))

    def complex_point(self, *parts):
        return ComplexGroupPoint(self, tuple(np.asarray(p, dtype=complex) for p in parts))

    def random_point(self, rng):
        return GroupPoint(self, tuple(_factor_random(f, rng) for f in self.factors))

    def inner(self, y1, y2):
        """Inner product of algebra coordinate vectors (orthonormal basis)."""
        return float(np.dot(np.asarray(y1, dtype=float), np.asarray(y2, dtype=float)))

    def distance(self, p, q):
        """Bi-invariant Riemannian distance between two group points."""
        d2 = 0.0
        for f, a, b in zip(self.factors, p.parts, q.parts):
            d2 += _factor_distance(f, a, b) ** 2
        return math.sqrt(d2)


def validate_structure_constants(c, tol=1e-12):
    """Check antisymmetry, total antisymmetry, and the Jacobi identity."""
    c = np.asarray(c)
    if np.max(np.abs(c + np.swapaxes(c, 1, 2))) > 0.0:
        raise ValueError("structure constants are not antisymmetric in the bracket slots")
    total = np.max(np.abs(c - np.transpose(c, (1, 2, 0))))
    if total > tol:
        raise ValueError(f"structure constants not totally antisymmetric (defect {total:.2e}); "
                         "inner product is not Ad-invariant")
    # Jacobi: sum_m c[m,j,k] c[l,m,i] + cyclic in (i,j,k) = 0
    jac = (np.einsum("mjk,lmi->lijk", c, c)
           + np.einsum("mki,lmj->lijk", c, c)
           + np.einsum("mij,lmk->lijk", c, c))
    defect = np.max(np.abs(jac))
    if defect > tol:
        raise ValueError(f"Jacobi identity violated (defect {defect:.2e})")


def make_group(spec):
    """Build a group from a descriptor.

    Accepts ``"torus:d"``, ``"su2"``, ``{"product": [descriptors...]}``, a
    ``{"group": ...}`` config object, or an already-built CompactGroup.
    """
    if isinstance(spec, CompactGroup):
        return spec
    if isinstance(spec, dict) and "group" in spec:
        return make_group(spec["group"])
    factors = _parse_factors(spec)
    dim = sum(f.dim for f in factors)
    labels = tuple(f"X{i + 1}" for i in range(dim))
    c = np.zeros((dim, dim, dim))
    start = 0
    for f in factors:
        if isinstance(f, SU2Factor):
            c[start:start + 3, start:start + 3, start:start + 3] = _su2_structure_constants()
        start += f.dim
    return CompactGroup(tuple(factors), dim, labels, c)


def _parse_factors(spec):
    if isinstance(spec, str):
        s = spec.strip().lower()
        if s == "su2":
            return [SU2Factor()]
        if s.startswith("torus"):
            d = 1
            if ":" in s:
                d = int(s.split(":", 1)[1])
            elif "(" in s:
                d = int(s.split("(", 1)[1].rstrip(")"))
            if d < 1:
                raise UnsupportedGroupError(f"torus dimension must be >= 1, got {d}")
            return [TorusFactor(d)]
        raise UnsupportedGroupError(f"unsupported group kind {spec!r}; expected 'torus:d', 'su2', or a product")
    if isinstance(spec, dict) and "product" in spec:
        factors = []
        for sub in spec["product"]:
            factors.extend(_parse_factors(sub))
        if not factors:
            raise UnsupportedGroupError("empty product descriptor")
        return factors
    if isinstance(spec, (list, tuple)):
        factors = []
        for sub in spec:
            factors.extend(_parse_factors(sub))
        return factors
    raise UnsupportedGroupError(f"cannot parse group descriptor {spec!r}")


def parse_group_config(text_or_obj):
    """Parse a JSON group descriptor like '{"group": "su2"}'."""
    obj = json.loads(text_or_obj) if isinstance(text_or_obj, str) else text_or_obj
    return make_group(obj)


# ---------------------------------------------------------------------------
# Group points

def _factor_identity(f):
    if isinstance(f, TorusFactor):
        return np.zeros(f.dim)
    return np.eye(2, dtype=complex)


def _coerce_part(f, p):
    if isinstance(f, TorusFactor):
        a = np.mod(np.asarray(p, dtype=float).reshape(f.dim), 2.0 * math.pi)
        return a
    u = np.asarray(p, dtype=complex).reshape(2, 2)
    _check_su2(u)
    return u


def _check_su2(u, tol=1e-12):
    if np.max(np.abs(u.conj().T @ u - np.eye(2))) > tol:
        raise ValueError("matrix is not unitary")
    if abs(np.linalg.det(u) - 1.0) > tol:
        raise ValueError("matrix does not have determinant one")


def _factor_random(f, rng):
    if isinstance(f, TorusFactor):
        return rng.uniform(0.0, 2.0 * math.pi, size=f.dim)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    a = q[0] + 1j * q[1]
    b = q[2] + 1j * q[3]
    return np.array([[a, b], [-np.conj(b), np.conj(a)]], dtype=complex)


def _factor_distance(f, a, b):
    if isinstance(f, TorusFactor):
        diff = np.mod(a - b + math.pi, 2.0 * math.pi) - math.pi
        return float(np.linalg.norm(diff))
    tr = np.trace(b.conj().T @ a)
    phi = math.acos(min(1.0, max(-1.0, float(np.real(tr)) / 2.0)))
    return math.sqrt(2.0) * phi


@dataclass(frozen=True)
class GroupPoint:
    """A point of K, stored per factor (angles / explicit 2x2 unitary)."""

    group: CompactGroup
    parts: tuple

    def isclose(self, other, tol=1e-10):
        return self.group.distance(self, other) <= tol

    def inverse(self):
        return GroupPoint(self.group, tuple(
            np.mod(-a, 2.0 * math.pi) if isinstance(f, TorusFactor) else a.conj().T
            for f, a in zip(self.group.factors, self.parts)))

    def __mul__(self, other):
        parts = []
        for f, a, b in zip(self.group.factors, self.parts, other.parts):
            parts.append(np.mod(a + b, 2.0 * math.pi) if isinstance(f, TorusFactor) else a @ b)
        return GroupPoint(self.group, tuple(parts))

    def complexify(self):
        return ComplexGroupPoint(self.group, tuple(np.asarray(p, dtype=complex) for p in self.parts))


@dataclass(frozen=True)
class ComplexGroupPoint:
    """A point of the complexification K_C (complex angles / SL(2,C))."""

    group: CompactGroup
    parts: tuple

    def __mul__(self, other):
        parts = []
        for f, a, b in zip(self.group.factors, self.parts, other.parts):
            parts.append(a + b if isinstance(f, TorusFactor) else a @ b)
        return ComplexGroupPoint(self.group, tuple(parts))

    def polar(self):
        """Decompose g = x exp(iY); returns (GroupPoint, algebra vector Y)."""
        xs, ys = [], []
        for f, p in zip(self.group.factors, self.parts):
            if isinstance(f, TorusFactor):
                xs.append(np.mod(np.real(p), 2.0 * math.pi))
                ys.append(np.imag(p))
            else:
                h = p.conj().T @ p          # = exp(2iY), Hermitian positive
                w, v = np.linalg.eigh(h)
                logh = (v * np.log(w)) @ v.conj().T
                ymat = -0.5j * logh
                x = p @ (v * np.exp(-0.5 * np.log(w))) @ v.conj().T
                ys.append(np.array([float(np.real(np.trace(b.conj().T @ ymat)))
                                    for b in SU2_BASIS]))
                xs.append(x)
        ygrouped = np.concatenate([np.atleast_1d(y) for y in ys])
        return GroupPoint(self.group, tuple(xs)), ygrouped


def exp_map(group, y):
    """Exponential of an algebra coordinate vector onto the group."""
    y = np.asarray(y, dtype=float).reshape(group.dim)
    parts = []
    for f, sl in zip(group.factors, group.factor_slices()):
        yf = y[sl]
        if isinstance(f, TorusFactor):
            parts.append(np.mod(yf, 2.0 * math.pi))
        else:
            parts.append(su2_exp(yf))
    return GroupPoint(group, tuple(parts))


def su2_exp(y):
    """Closed-form exp of sum_k y_k X_k for the orthonormal su(2) basis."""
    r = float(np.linalg.norm(y))
    if r < 1e-300:
        return np.eye(2, dtype=complex)
    phi = r / math.sqrt(2.0)
    n = y / r
    sigma_n = sum(nk * s for nk, s in zip(n, _PAULI))
    return math.cos(phi) * np.eye(2) + 1j * math.sin(phi) * sigma_n


def su2_log(u):
    """Algebra coordinates y with exp(y) = u; rotation angle in [0, pi]."""
    cosphi = min(1.0, max(-1.0, float(np.real(np.trace(u))) / 2.0))
    phi = math.acos(cosphi)
    if phi < 1e-12:
        return np.zeros(3)
    sigma_n = (u - cosphi * np.eye(2)) / (1j * math.sin(phi))
    n = np.array([float(np.real(np.trace(s @ sigma_n))) / 2.0 for s in _PAULI])
    return math.sqrt(2.0) * phi * n


def complexified_exp(group, theta, yvec):
    """Point x exp(iY) with x = exp(theta-part) real and Y an algebra vector."""
    theta = np.asarray(theta, dtype=float).reshape(group.dim)
    yvec = np.asarray(yvec, dtype=float).reshape(group.dim)
    parts = []
    for f, sl in zip(group.factors, group.factor_slices()):
        if isinstance(f, TorusFactor):
            parts.append(theta[sl] + 1j * yvec[sl])
        else:
            x = su2_exp(theta[sl])
            yf = yvec[sl]
            r = float(np.linalg.norm(yf))
            if r < 1e-300:
                parts.append(x.astype(complex))
            else:
                # exp(iY) with Y = sum y_k X_k: Hermitian positive factor
                phi = r / math.sqrt(2.0)
                sigma_n = sum(nk * s for nk, s in zip(yf / r, _PAULI))
                p = math.cosh(phi) * np.eye(2) - math.sinh(phi) * sigma_n
                parts.append(x @ p)
    return ComplexGroupPoint(group, tuple(parts))


# ---------------------------------------------------------------------------
# Irreducible representations

@lru_cache(maxsize=None)
def _su2_entry_tables(two_j):
    """Binomial expansion tables for evaluating the spin-j matrix.

    Entry (m, k) of pi_j(g) is a polynomial in the matrix entries
    (a, b, c, d) of g; the tables list (coef, r, s) with the powers
    a^r c^(2j-k-r) b^s d^(k-s), r + s = 2j - m.
    """
    n = two_j
    tables = {}
    for m in range(n + 1):
        for k in range(n + 1):
            terms = []
            norm = math.sqrt(math.factorial(n - m) * math.factorial(m)
                             / (math.factorial(n - k) * math.factorial(k)))
            for r in range(0, n - k + 1):
                s = (n - m) - r
                if 0 <= s <= k:
                    coef = norm * math.comb(n - k, r) * math.comb(k, s)
                    terms.append((coef, r, s))
            tables[(m, k)] = tuple(terms)
    return tables


def _su2_irrep_matrix_batch(two_j, g_batch):
    """Evaluate spin-j matrices for a batch of 2x2 matrices, shape (N,2,2)."""
    g = np.asarray(g_batch)
    a, b = g[..., 0, 0], g[..., 0, 1]
    c, d = g[..., 1, 0], g[..., 1, 1]
    n = two_j
    powers = lambda base: np.stack([base ** p for p in range(n + 1)], axis=-1)
    ap, bp, cp, dp = powers(a), powers(b), powers(c), powers(d)
    out = np.zeros(g.shape[:-2] + (n + 1, n + 1), dtype=complex)
    tables = _su2_entry_tables(two_j)
    for (m, k), terms in tables.items():
        val = 0.0
        for coef, r, s in terms:
            val = val + coef * ap[..., r] * cp[..., n - k - r] * bp[..., s] * dp[..., k - s]
        out[..., m, k] = val
    return out


def _su2_generator(two_j, x):
    """d/ds pi_j(exp(sX)) at s=0 for a 2x2 algebra matrix X."""
    n = two_j
    g = np.zeros((n + 1, n + 1), dtype=complex)
    x11, x12, x21, x22 = x[0, 0], x[0, 1], x[1, 0], x[1, 1]
    for k in range(n + 1):
        p, q = n - k, k
        g[k, k] = p * x11 + q * x22
        if k + 1 <= n:
            g[k + 1, k] = x21 * math.sqrt(p * (q + 1))
        if k - 1 >= 0:
            g[k - 1, k] = x12 * math.sqrt(q * (p + 1))
    return g


@dataclass(frozen=True)
class Irrep:
    """An irreducible unitary representation of a CompactGroup.

    ``label`` is a tuple with one entry per factor: an integer vector for a
    torus factor, the integer 2j for an SU(2) factor.  ``generators[k]`` is
    the image of the basis element X_k (skew-Hermitian) and ``casimir`` is
    the scalar of -sum_k generators[k]^2, computed from the stored matrices.
    """

    group: CompactGroup
    label: tuple
    dim: int
    casimir: float
    generators: tuple = field(repr=False)

    @property
    def label_str(self):
        bits = []
        for f, lab in zip(self.group.factors, self.label):
            if isinstance(f, TorusFactor):
                bits.append("n=" + ",".join(str(int(v)) for v in lab))
            else:
                bits.append(f"2j={lab}")
        return "|".join(bits)

    def at(self, point):
        return self.at_many(_as_batch(point))[0]

    def at_many(self, batch):
        """Evaluate the matrix at a batch of (possibly complexified) points."""
        mats = None
        for f, lab, part in zip(self.group.factors, self.label, batch):
            if isinstance(f, TorusFactor):
                phase = np.exp(1j * np.asarray(part) @ np.asarray(lab, dtype=float))
                m = phase[:, None, None]
            else:
                m = _su2_irrep_matrix_batch(lab, part)
            mats = m if mats is None else np.einsum("nab,ncd->nacbd", mats, m).reshape(
                m.shape[0], mats.shape[1] * m.shape[1], mats.shape[2] * m.shape[2])
        return mats

    def character_many(self, batch):
        vals = None
        for f, lab, part in zip(self.group.factors, self.label, batch):
            if isinstance(f, TorusFactor):
                v = np.exp(1j * np.asarray(part) @ np.asarray(lab, dtype=float))
            else:
                z = np.trace(np.asarray(part), axis1=-2, axis2=-1) / 2.0
                v = chebyshev_u(lab, z)
            vals = v if vals is None else vals * v
        return vals


def chebyshev_u(n, z):
    """U_n(z), second-kind Chebyshev; equals the SU(2) character at angle
    phi when z = cos(phi), including complex z (holomorphic extension)."""
    z = np.asarray(z)
    if n == 0:
        return np.ones_like(z)
    prev = np.ones_like(z)
    cur = 2.0 * z
    for _ in range(n - 1):
        prev, cur = cur, 2.0 * z * cur - prev
    return cur


def _as_batch(point):
    return [np.asarray(p)[None, ...] for p in point.parts]


def _factor_irreps(f, cutoff):
    """(label, dim, casimir) triples for one factor with casimir <= cutoff."""
    out = []
    if isinstance(f, TorusFactor):
        nmax = int(math.floor(math.sqrt(max(cutoff, 0.0))))
        ranges = [range(-nmax, nmax + 1)] * f.dim

        def rec(prefix, c2):
            k = len(prefix)
            if k == f.dim:
                out.append((tuple(prefix), 1, float(c2)))
                return
            for n in ranges[k]:
                if c2 + n * n <= cutoff + 1e-12:
                    rec(prefix + [n], c2 + n * n)
        rec([], 0.0)
    else:
        two_j = 0
        while True:
            cas = _su2_casimir(two_j)
            if cas > cutoff + 1e-12:
                break
            out.append((two_j, two_j + 1, cas))
            two_j += 1
    out.sort(key=lambda t: (t[2], str(t[0])))
    return out


@lru_cache(maxsize=None)
def _su2_casimir(two_j):
    gens = [_su2_generator(two_j, np.asarray(x)) for x in SU2_BASIS]
    cas = -sum(g @ g for g in gens)
    scalar = float(np.real(cas[0, 0]))
    if np.max(np.abs(cas - scalar * np.eye(two_j + 1))) > 1e-10 * max(1.0, scalar):
        raise AssertionError("Casimir is not scalar; generator construction is broken")
    return scalar


def irreps_up_to(group, cutoff):
    """All irreps with Casimir eigenvalue at most ``cutoff``, sorted."""
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    per_factor = [_factor_irreps(f, cutoff) for f in group.factors]
    labels = [([], 0.0, 1)]
    for opts in per_factor:
        labels = [(lab + [o[0]], c + o[2], d * o[1])
                  for (lab, c, d) in labels for o in opts if c + o[2] <= cutoff + 1e-12]
    irreps = []
    for lab, cas, dim in labels:
        irreps.append(build_irrep(group, tuple(lab)))
    irreps.sort(key=lambda r: (r.casimir, r.label_str))
    return irreps


def build_irrep(group, label):
    """Construct the irrep with the given per-factor label."""
    gen_blocks, dims = [], []
    for f, lab in zip(group.factors, label):
        if isinstance(f, TorusFactor):
            lab = tuple(int(v) for v in np.atleast_1d(lab))
            gen_blocks.append([np.array([[1j * nk]], dtype=complex) for nk in lab])
            dims.append(1)
        else:
            two_j = int(lab)
            gen_blocks.append([_su2_generator(two_j, np.asarray(x)) for x in SU2_BASIS])
            dims.append(two_j + 1)
    total_dim = int(np.prod(dims))
    gens = []
    label_norm = []
    for i, (f, lab) in enumerate(zip(group.factors, label)):
        label_norm.append(tuple(int(v) for v in np.atleast_1d(lab)) if isinstance(f, TorusFactor) else int(lab))
        for gblock in gen_blocks[i]:
            mats = [np.eye(d, dtype=complex) for d in dims]
            mats[i] = gblock
            full = mats[0]
            for m in mats[1:]:
                full = np.kron(full, m)
            gens.append(full)
    cas_mat = -sum(g @ g for g in gens)
    casimir = float(np.real(np.trace(cas_mat))) / total_dim
    return Irrep(group, tuple(label_norm), total_dim, casimir, tuple(gens))


# ---------------------------------------------------------------------------
# Haar quadrature

@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for normalized Haar measure.

    The rule integrates every matrix entry of every irrep with Casimir
    "degree" within twice the per-factor exactness: on a torus factor
    characters e^{i n.theta} with |n_k| <= 2*exactness, on an SU(2) factor
    entries of spins j <= exactness are pairwise Schur-orthogonal under it.
    ``parts[i]`` holds the batched node coordinates of factor i and
    ``weights`` sums to one.  ``factor_meta`` carries the Euler-product
    structure of SU(2) factors (local index layout is C-order over
    (alpha, beta, gamma)) for evaluators that exploit it.
    """

    group: CompactGroup
    parts: tuple = field(repr=False)
    weights: np.ndarray = field(repr=False)
    exactness: int
    exactness_per_factor: tuple = None
    factor_meta: tuple = field(default=None, repr=False)
    factor_index: tuple = field(default=None, repr=False)

    @property
    def n_nodes(self):
        return len(self.weights)

    @property
    def nodes(self):
        return [GroupPoint(self.group, tuple(p[i] for p in self.parts))
                for i in range(self.n_nodes)]

    def integrate(self, values):
        return np.asarray(values) @ self.weights

    def batch(self):
        return list(self.parts)


def haar_quadrature(group, exactness, max_nodes=MAX_QUADRATURE_NODES):
    """Tensor quadrature exact for band-limited functions; see
    QuadratureRule.  ``exactness`` may be a single value or one per factor."""
    if isinstance(exactness, (list, tuple)):
        per_factor = [int(e) for e in exactness]
        if len(per_factor) != len(group.factors):
            raise ValueError("per-factor exactness list has the wrong length")
    else:
        per_factor = [int(exactness)] * len(group.factors)
    if min(per_factor) < 1:
        raise ValueError("exactness must be >= 1")
    node_lists, weight_lists, metas = [], [], []
    for f, exc in zip(group.factors, per_factor):
        if isinstance(f, TorusFactor):
            m = 4 * exc + 1
            theta = np.arange(m) * (2.0 * math.pi / m)
            grids = np.meshgrid(*([theta] * f.dim), indexing="ij")
            pts = np.stack([g.ravel() for g in grids], axis=-1)
            node_lists.append(pts)
            weight_lists.append(np.full(pts.shape[0], 1.0 / pts.shape[0]))
            metas.append(None)
        else:
            mats, w_f, meta = _su2_rule(exc)
            node_lists.append(mats)
            weight_lists.append(w_f)
            metas.append(meta)
    counts = [len(w) for w in weight_lists]
    total = int(np.prod(counts))
    if total > max_nodes:
        raise ResourceCapError(f"quadrature would need {total} nodes (cap {max_nodes})")
    idx = np.indices(counts).reshape(len(counts), -1)
    parts = tuple(node_lists[i][idx[i]] for i in range(len(counts)))
    weights = np.ones(total)
    for i in range(len(counts)):
        weights *= weight_lists[i][idx[i]]
    return QuadratureRule(group, parts, weights, max(per_factor), tuple(per_factor),
                          tuple(metas), tuple(idx))


def _su2_rule(exactness):
    """Euler-angle product rule, Gauss-Legendre in the middle angle.

    The (alpha, gamma) grids live on [0, 4*pi) so half-integer spins are
    band-limited on them; the box covers SU(2) exactly twice, hence the
    factor 1/2 in the weights.
    """
    two_e = 2 * exactness
    m = 4 * two_e + 2
    n_gl = two_e + 1
    alpha = np.arange(m) * (4.0 * math.pi / m)
    gamma = np.arange(m) * (4.0 * math.pi / m)
    x_gl, w_gl = np.polynomial.legendre.leggauss(n_gl)
    beta = np.arccos(x_gl)
    ca, cb, cg = np.meshgrid(alpha, beta, gamma, indexing="ij")
    ca, cb, cg = ca.ravel(), cb.ravel(), cg.ravel()
    half_a, half_b, half_g = ca / 2.0, cb / 2.0, cg / 2.0
    a = np.cos(half_b) * np.exp(-1j * (half_a + half_g))
    b = -np.sin(half_b) * np.exp(-1j * (half_a - half_g))
    mats = np.empty((ca.size, 2, 2), dtype=complex)
    mats[:, 0, 0] = a
    mats[:, 0, 1] = b
    mats[:, 1, 0] = -np.conj(b)
    mats[:, 1, 1] = np.conj(a)
    w3 = np.tile(w_gl[None, :, None], (m, 1, m)).ravel()
    weights = w3 / (2.0 * m * m)
    meta = {"alpha": alpha, "beta": beta, "gamma": gamma, "shape": (m, n_gl, m)}
    return mats, weights, meta
