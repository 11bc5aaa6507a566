"""Degree-truncated tensor functionals, the Taylor map, and the Hermite
expansion.

A ``TensorFunctional`` stores the arrays

    xi_n(k_1, .., k_n) = xi(X_{k_1} x ... x X_{k_n}),   n = 0 .. N,

for the orthonormal algebra basis.  Membership in the annihilator of the
two-sided ideal generated by  X x Y - Y x X - [X, Y]  is the linear relation

    xi_n(.., k_p, k_{p+1}, ..) - xi_n(.., k_{p+1}, k_p, ..)
        = sum_l c[l, k_p, k_{p+1}] xi_{n-1}(.., l, ..),

which every Taylor-map output satisfies automatically.  The weighted norm is

    |xi|_t^2 = sum_n (t^n / n!) sum_k |xi_n(k)|^2 .

For coefficients arising from a band-limited function the degree norms are
also computed without materializing the d^n arrays, through the recursion

    S_n = sum_{lam, mu} d_lam d_mu e^{-t(c_lam+c_mu)/2}
              trace[(fhat_lam (x) conj(fhat_mu)) M_{lam,mu}^n],
    M_{lam,mu} = sum_k  G_k^{(lam)} (x) conj(G_k^{(mu)}),

which is the same sum over index tuples evaluated pairwise; this is what
makes large truncation degrees (needed for small tails at t ~ 1) feasible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceCapError, TruncationError, UnsupportedGroupError
from .groups import irreps_up_to
from .heat import FourierCoefficients

DENSE_DEGREE_CAP = 10
DENSE_SIZE_CAP = 400_000


@dataclass
class TensorFunctional:
    """Element of the truncated enveloping-algebra dual with t-weighted norm."""

    group: object
    t: float
    components: list            # components[n] has shape (d,)*n
    truncated_source: bool = False

    @property
    def degree(self):
        return len(self.components) - 1

    @classmethod
    def zero(cls, group, t, degree):
        d = group.dim
        return cls(group, t, [np.zeros((d,) * n, dtype=complex) for n in range(degree + 1)])

    @classmethod
    def vacuum(cls, group, t, degree=0):
        out = cls.zero(group, t, degree)
        out.components[0] = np.array(1.0 + 0.0j)
        return out

    def copy(self):
        return TensorFunctional(self.group, self.t, [c.copy() for c in self.components],
                                self.truncated_source)

    def scale(self, c):
        return TensorFunctional(self.group, self.t, [c * a for a in self.components],
                                self.truncated_source)

    def add(self, other):
        n = max(self.degree, other.degree)
        out = TensorFunctional.zero(self.group, self.t, n)
        for k, a in enumerate(self.components):
            out.components[k] = out.components[k] + a
        for k, a in enumerate(other.components):
            out.components[k] = out.components[k] + a
        out.truncated_source = self.truncated_source or other.truncated_source
        return out

    def degree_norm_sq(self, n):
        return float(np.sum(np.abs(self.components[n]) ** 2)) if n <= self.degree else 0.0

    def weighted_norm_sq(self):
        t = self.t
        return math.fsum((t ** n / math.factorial(n)) * self.degree_norm_sq(n)
                         for n in range(self.degree + 1))

    def inner(self, other):
        """t-weighted inner product, conjugate linear in ``self``."""
        t = self.t
        total = 0.0 + 0.0j
        for n in range(min(self.degree, other.degree) + 1):
            total += (t ** n / math.factorial(n)) * complex(
                np.sum(np.conj(self.components[n]) * other.components[n]))
        return total

    def ideal_annihilation_residual(self):
        """Max violation of the commutation relations among the entries."""
        c = self.group.structure_constants
        worst = 0.0
        for n in range(2, self.degree + 1):
            arr = self.components[n]
            lower = self.components[n - 1]
            for p in range(n - 1):
                swapped = np.swapaxes(arr, p, p + 1)
                bracket = _bracket_insert(lower, c, p)
                worst = max(worst, float(np.max(np.abs(arr - swapped - bracket))))
        return worst

    def to_json(self):
        comp = {}
        for n, arr in enumerate(self.components):
            flat = np.asarray(arr, dtype=complex).reshape(-1)
            comp[str(n)] = [[float(v.real), float(v.imag)] for v in flat]
        return json.dumps({"t": self.t, "N": self.degree, "components": comp},
                          sort_keys=True)

    @classmethod
    def from_json(cls, group, text):
        obj = json.loads(text)
        d = group.dim
        comps = []
        for n in range(obj["N"] + 1):
            flat = np.array([complex(re, im) for re, im in obj["components"][str(n)]])
            comps.append(flat.reshape((d,) * n))
        return cls(group, obj["t"], comps)


def _bracket_insert(lower, c, p):
    """sum_l c[l, a, b] xi_{n-1}(k_1,..,k_{p-1}, l, k_{p+2},..) as an array
    indexed by (k_1,..,k_{p-1}, a, b, k_{p+2},..)."""
    moved = np.moveaxis(lower, p, -1)           # (..., l)
    out = np.tensordot(moved, c, axes=([-1], [0]))   # (..., a, b)
    out = np.moveaxis(out, (-2, -1), (p, p + 1))
    return out


@dataclass
class HermiteCoefficients(TensorFunctional):
    """Taylor coefficients of the heat-evolved function: the entries are
    (X_{k_1} .. X_{k_n} e^{t Lap/2} f)(e).  Keeps the source Fourier data so
    exact degree norms and tail bounds remain available."""

    source: FourierCoefficients = None

    def degree_norm_sq_exact(self, n):
        return hermite_degree_norms(self.source, self.t, n)[n]


def taylor_map(f, t, degree, dense_cap=DENSE_DEGREE_CAP):
    """Left-invariant derivatives of e^{t Lap/2} f at the identity, packed
    degree by degree.  Cost grows like dim^degree; capped."""
    group = f.group
    d = group.dim
    if degree > dense_cap or d ** max(degree, 0) > DENSE_SIZE_CAP:
        raise ResourceCapError(f"dense Taylor arrays of degree {degree} in dimension {d} "
                               f"exceed the configured cap")
    comps = [np.zeros((d,) * n, dtype=complex) for n in range(degree + 1)]
    for lab, mat in f.entries.items():
        rep = f.irreps[lab]
        w = rep.dim * math.exp(-t * rep.casimir / 2.0)
        comps[0] += w * np.trace(mat)
        gens = np.stack(rep.generators)
        # level holds fhat @ (ordered generator products), flattened over the
        # index tuples; the newest index varies slowest, so traces reshape
        # straight into (d,)*n with alpha(k_1,..,k_n) = w tr(fhat G_{k_1}..G_{k_n})
        level = np.asarray(mat)[None]
        for n in range(1, degree + 1):
            level = np.einsum("kab,pbc->kpac", gens, level).reshape((-1,) + mat.shape)
            comps[n] += w * np.trace(level, axis1=-2, axis2=-1).reshape((d,) * n)
    return HermiteCoefficients(group, t, comps, truncated_source=True, source=f)


def hermite_degree_norms(f, t, max_degree):
    """Exact degree norms S_n = sum_k |alpha_n(k)|^2 for n = 0..max_degree,
    computed by the pairwise transfer recursion (no d^n storage)."""
    labels = list(f.entries)
    out = np.zeros(max_degree + 1)
    for la in labels:
        ra, ma = f.irreps[la], f.entries[la]
        for lb in labels:
            rb, mb = f.irreps[lb], f.entries[lb]
            w = ra.dim * rb.dim * math.exp(-t * (ra.casimir + rb.casimir) / 2.0)
            transfer = sum(np.kron(g, np.conj(h))
                           for g, h in zip(ra.generators, rb.generators))
            block = np.kron(ma, np.conj(mb))
            for n in range(max_degree + 1):
                out[n] += w * float(np.real(np.trace(block)))
                if n < max_degree:
                    block = block @ transfer
    return out


def hermite_tail_bound(f, t, degree):
    """Rigorous bound on sum_{n>degree} (t^n/n!) S_n from operator norms:
    |alpha_n| <= sum_lam d^{3/2} e^{-t c/2} |fhat|_HS c^{n/2}."""
    consts = []
    for lab, mat in f.entries.items():
        rep = f.irreps[lab]
        consts.append((rep.dim ** 1.5 * math.exp(-t * rep.casimir / 2.0)
                       * math.sqrt(float(np.sum(np.abs(mat) ** 2))), rep.casimir))
    total = 0.0
    for ca, xa in consts:
        for cb, xb in consts:
            x = t * math.sqrt(xa * xb)
            total += ca * cb * _exp_series_remainder(x, degree)
    return total


def _exp_series_remainder(x, n):
    """sum_{m>n} x^m / m!, summed forward (no cancellation)."""
    if x == 0.0:
        return 0.0
    term = x ** (n + 1) / math.factorial(n + 1)
    total, m = 0.0, n + 1
    while True:
        total += term
        m += 1
        term *= x / m
        if term < 1e-300 or term < 1e-17 * total:
            return total + term


def pick_truncation_degree(f, t, tail_target, max_degree=400):
    """Smallest degree whose rigorous tail bound is below the target."""
    for n in range(max_degree + 1):
        if hermite_tail_bound(f, t, n) <= tail_target:
            return n
    raise TruncationError(f"tail bound does not reach {tail_target} below degree {max_degree}")


def fock_norm_sq(xi):
    """Truncated weighted norm; with a tail bound when the source is known.

    Returns (value, tail_bound).  The value is the squared norm.
    """
    value = xi.weighted_norm_sq()
    tail = None
    if isinstance(xi, HermiteCoefficients) and xi.source is not None:
        tail = hermite_tail_bound(xi.source, xi.t, xi.degree)
    return value, tail


def hermite_isometry_check(f, t, tol=1e-6, tail_target=1e-8, position_norm_fn=None):
    """Compare the position norm with the weighted sum of squared Taylor
    coefficients; the transfer recursion supplies the degree norms so the
    truncation degree can be pushed until the rigorous tail is small."""
    from .transforms import position_norm_sq
    n_star = pick_truncation_degree(f, t, tail_target)
    s = hermite_degree_norms(f, t, n_star)
    rhs = math.fsum((t ** n / math.factorial(n)) * s[n] for n in range(n_star + 1))
    tail = hermite_tail_bound(f, t, n_star)
    lhs = (position_norm_fn or position_norm_sq)(f, t)
    err = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs), 1e-30)
    return {
        "test": "hermite-isometry",
        "group": f.group.kind,
        "t": t,
        "lhs": lhs,
        "rhs": rhs,
        "tail": tail,
        "degree": n_star,
        "rel_err": err / scale,
        "pass": bool(err <= tol * scale + tail),
    }


def inverse_taylor(xi, t, max_casimir=60.0, tol=1e-8, ideal_tol=1e-8):
    """Recover a band-limited function from its Taylor coefficients.

    Only for groups without torus factors (those are not simply connected and
    the map is not onto).  Solves a least-squares system over an irrep cutoff
    that grows until the residual is below tolerance; uniqueness is certified
    by a full-rank check.
    """
    group = xi.group
    if group.has_torus_factor:
        raise UnsupportedGroupError(
            "inverse Taylor data is only determined for simply connected groups; "
            "torus factors map onto a proper subspace")
    resid = xi.ideal_annihilation_residual()
    if resid > ideal_tol:
        raise ValueError(f"input violates the commutation relations (residual {resid:.2e})")
    d = group.dim
    n_eq = min(xi.degree, 5)
    rows = []
    rhs = []
    for n in range(n_eq + 1):
        arr = xi.components[n]
        rhs.append(np.asarray(arr, dtype=complex).reshape(-1))
    rhs = np.concatenate(rhs)

    cutoff = 1.0
    while cutoff <= max_casimir:
        reps = irreps_up_to(group, cutoff)
        cols = []
        col_meta = []
        for rep in reps:
            w = rep.dim * math.exp(-t * rep.casimir / 2.0)
            blocks = []
            level = np.eye(rep.dim, dtype=complex)[None]
            blocks.append(level.copy())
            for n in range(1, n_eq + 1):
                level = np.einsum("kab,pbc->kpac", np.stack(rep.generators), level)
                level = level.reshape((-1,) + (rep.dim, rep.dim))
                blocks.append(level)
            # alpha_n(kvec) = w * sum_{pq} fhat[p,q] prod[kvec][q,p]
            for p in range(rep.dim):
                for q in range(rep.dim):
                    col = np.concatenate([w * blk[:, q, p] for blk in blocks])
                    cols.append(col)
                    col_meta.append((rep.label, p, q))
        a = np.stack(cols, axis=1)
        sol, res, rank, _ = np.linalg.lstsq(a, rhs, rcond=None)
        if rank < a.shape[1]:
            cutoff *= 2.0
            continue
        residual = float(np.linalg.norm(a @ sol - rhs))
        if residual <= tol * max(1.0, float(np.linalg.norm(rhs))):
            entries = {}
            for (lab, p, q), v in zip(col_meta, sol):
                if lab not in entries:
                    entries[lab] = np.zeros((_label_dim(group, lab), _label_dim(group, lab)),
                                            dtype=complex)
                entries[lab][p, q] = v
            entries = {lab: m for lab, m in entries.items() if np.max(np.abs(m)) > 1e-12}
            if not entries:
                return FourierCoefficients.constant(group, 0.0)
            return FourierCoefficients(group, entries)
        cutoff *= 2.0
    raise TruncationError(f"inverse Taylor residual floor not reached within cutoff {max_casimir}")


def _label_dim(group, label):
    from .groups import build_irrep
    return build_irrep(group, label).dim


def hermite_function(group, t, indices, batch, kernel=None):
    """Generalized Hermite function on K:

        H_{k_1..k_n}(x) = (-1)^n (X_{k_n} ... X_{k_1} rho_t)(x) / rho_t(x),

    whose defining property is <H, f>_{L2(rho_t)} =
    (X_{k_1}..X_{k_n} e^{t Lap/2} f)(e).  Derivatives are taken term by term
    on the character series.  Fails if the truncated kernel is too small to
    divide by at any requested point.
    """
    from .heat import HeatKernel
    kernel = kernel or HeatKernel(group, t)
    vals = kernel.value(batch)
    floor = 1e-13 * kernel.value_at_identity() + kernel.tail_bound
    if np.min(np.abs(vals)) <= floor:
        raise TruncationError("heat kernel too small at a requested point for a stable quotient")
    n = len(indices)
    if n == 0:
        return np.ones_like(vals)
    deriv = kernel._derivative_general(list(reversed(indices)), batch)
    return (-1.0) ** n * deriv / vals
