"""Heat kernels on K with analytic continuation to K_C, the heat operator on
the Fourier side, and the explicit torus-side measures.

Normalization: Haar measure has unit mass and the kernel solves
``d rho / dt = (1/2) Laplacian rho`` with ``rho_0 = delta_e``, so

    rho_t(x) = sum_irreps  d_irrep * exp(-t * casimir / 2) * character(x).

On the complexification the measure solves ``d mu / dt = (1/4) Lap mu``.
The character series is truncated at a Casimir cutoff chosen from a target
tolerance; the rigorous truncation remainder is stored as ``tail_bound`` and
every consumer is expected to account for it.

Values far in the tail of the kernel (for example rho_t near the antipode at
small t) are below the absolute roundoff floor of the character sum, about
1e-15 times the value at the identity.  Quadrature against such values is
still accurate in the absolute sense; pointwise positivity can only be
asserted up to that floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TruncationError, UnsupportedGroupError
from .groups import CompactGroup, TorusFactor, SU2Factor, chebyshev_u, build_irrep, irreps_up_to

_TAIL_TOL = 1e-14


def _circle_coeff_cutoff(tau, tol, ymax=0.0):
    """Smallest n with sum_{|m|>n} exp(-tau m^2/2 + m ymax) < tol."""
    n, total = 1, 0.0
    while True:
        term = 2.0 * math.exp(-0.5 * tau * n * n + n * ymax)
        if term < tol * 1e-2 and n * tau > ymax:
            remainder = term / max(1e-300, (1.0 - math.exp(-tau * (n + 0.5) + ymax)))
            if remainder < tol:
                return n, remainder
        n += 1
        if n > 100000:
            raise TruncationError("circle heat series does not reach tolerance")


def _su2_spin_cutoff(t, tol, ymax=0.0):
    """Smallest 2j with sum over larger spins of (2j+1)^2 e^{-t j(j+1) + 2j ymax} < tol."""
    two_j = 1
    while True:
        j = two_j / 2.0
        term = (two_j + 2) ** 2 * math.exp(-t * (j + 0.5) * (j + 1.5) + (two_j + 1) * ymax)
        if term < tol * 1e-2 and t * (j + 1) > ymax:
            ratio = math.exp(-t * (j + 1.5) + ymax) * ((two_j + 4) / (two_j + 2)) ** 2
            if ratio < 0.5:
                remainder = term / (1.0 - ratio)
                if remainder < tol:
                    return two_j, remainder
        two_j += 1
        if two_j > 20000:
            raise TruncationError("SU(2) heat series does not reach tolerance")


def circle_heat_series(tau, theta, n_max):
    """sum_{|n|<=n_max} exp(-tau n^2 / 2) e^{i n theta}, returned real."""
    theta = np.asarray(theta, dtype=float)
    out = np.ones_like(theta)
    for n in range(1, n_max + 1):
        out = out + 2.0 * math.exp(-0.5 * tau * n * n) * np.cos(n * theta)
    return out


def circle_heat_series_complex(tau, z, n_max):
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    for n in range(1, n_max + 1):
        w = math.exp(-0.5 * tau * n * n)
        out = out + w * (np.exp(1j * n * z) + np.exp(-1j * n * z))
    return out


def circle_heat_series_dtheta(tau, theta, n_max, order=1):
    theta = np.asarray(theta, dtype=float)
    out = np.zeros_like(theta)
    for n in range(1, n_max + 1):
        w = 2.0 * math.exp(-0.5 * tau * n * n)
        if order == 1:
            out = out - w * n * np.sin(n * theta)
        elif order == 2:
            out = out - w * n * n * np.cos(n * theta)
        else:
            raise ValueError("order must be 1 or 2")
    return out


def _su2_char_sum(t, cos_angles, two_j_max, weights=None):
    """sum_j (2j+1) e^{-t j(j+1)} U_{2j}(cos) with optional per-spin weights."""
    z = np.asarray(cos_angles)
    prev = np.ones_like(z)
    cur = 2.0 * z
    total = np.ones_like(z) if weights is None else weights[0] * np.ones_like(z)
    for n in range(1, two_j_max + 1):
        chi = cur if n == 1 else None
        if n >= 2:
            prev, cur = cur, 2.0 * z * cur - prev
            chi = cur
        j = n / 2.0
        w = (n + 1) * math.exp(-t * j * (j + 1.0))
        if weights is not None:
            w = w * weights[n]
        total = total + w * chi
    return total


@dataclass(frozen=True)
class HeatKernel:
    """Truncated character series for rho_t with a stored remainder bound."""

    group: CompactGroup
    t: float
    tol: float = 1e-12
    cutoffs: tuple = field(default=None)
    tail_bound: float = field(default=None)

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError("heat time t must be positive")
        if self.cutoffs is None:
            cut, tail = [], 0.0
            per_factor_tol = self.tol / max(1, len(self.group.factors))
            for f in self.group.factors:
                if isinstance(f, TorusFactor):
                    n, rem = _circle_coeff_cutoff(self.t, per_factor_tol / max(1, f.dim))
                    cut.append(n)
                    tail += rem * f.dim
                else:
                    two_j, rem = _su2_spin_cutoff(self.t, per_factor_tol)
                    cut.append(two_j)
                    tail += rem
            object.__setattr__(self, "cutoffs", tuple(cut))
            # crude product combination: each factor value is bounded by its
            # value at the identity
            peak = self.value_at_identity()
            object.__setattr__(self, "tail_bound", tail * max(1.0, peak))

    @property
    def term_cutoff(self):
        """Casimir cutoff actually realized by the per-factor truncations."""
        c = 0.0
        for f, n in zip(self.group.factors, self.cutoffs):
            c += n * n * f.dim if isinstance(f, TorusFactor) else 2.0 * (n / 2.0) * (n / 2.0 + 1.0)
        return c

    def value_at_identity(self):
        v = 1.0
        for f, n in zip(self.group.factors, self.cutoffs):
            if isinstance(f, TorusFactor):
                v *= circle_heat_series(self.t, np.zeros(1), n)[0] ** f.dim
            else:
                v *= float(_su2_char_sum(self.t, np.ones(1), n)[0])
        return v

    def value(self, batch):
        """Kernel values on a batch (list of per-factor coordinate arrays)."""
        out = None
        for f, n, part in zip(self.group.factors, self.cutoffs, batch):
            if isinstance(f, TorusFactor):
                v = np.prod(circle_heat_series(self.t, np.asarray(part), n), axis=-1)
            else:
                cosphi = np.real(np.trace(np.asarray(part), axis1=-2, axis2=-1)) / 2.0
                v = _su2_char_sum(self.t, cosphi, n)
            out = v if out is None else out * v
        return out

    def value_point(self, point):
        return float(self.value([np.asarray(p)[None, ...] for p in point.parts])[0])

    def value_complex(self, batch):
        """Analytic continuation of the series; grows the cutoff as needed
        for the imaginary parts present in the batch and fails loudly if the
        term ratio does not fall below one."""
        out = None
        for f, part in zip(self.group.factors, batch):
            part = np.asarray(part, dtype=complex)
            if isinstance(f, TorusFactor):
                ymax = float(np.max(np.abs(np.imag(part)))) if part.size else 0.0
                n, _ = _circle_coeff_cutoff(self.t, self.tol, ymax)
                v = np.prod(circle_heat_series_complex(self.t, part, n), axis=-1)
            else:
                z = np.trace(part, axis1=-2, axis2=-1) / 2.0
                lam = _large_eigenvalue(z)
                ymax = float(np.max(np.log(np.abs(lam)))) if z.size else 0.0
                two_j, _ = _su2_spin_cutoff(self.t, self.tol, ymax)
                v = _su2_char_sum(self.t, z, two_j)
            out = v if out is None else out * v
        return out

    def value_complex_point(self, cpoint):
        return complex(self.value_complex([np.asarray(p)[None, ...] for p in cpoint.parts])[0])

    def check_positivity(self, batch):
        vals = self.value(batch)
        floor = 1e-13 * self.value_at_identity() + self.tail_bound
        if np.min(vals) < -floor:
            raise TruncationError("truncated heat kernel is negative beyond the roundoff floor")
        return vals

    def derivative(self, k, batch):
        """Left-invariant derivative X_k rho_t on a batch of group points."""
        return self._derivative_general([k], batch)

    def second_derivative(self, j, k, batch):
        """X_j X_k rho_t on a batch of group points."""
        return self._derivative_general([j, k], batch)

    def _derivative_general(self, kidx, batch):
        # the kernel factorizes across factors and derivative indices from
        # different factors commute, so split kidx per factor keeping the
        # within-factor order
        slices = self.group.factor_slices()
        out = None
        for fi, (f, n, part) in enumerate(zip(self.group.factors, self.cutoffs, batch)):
            local = [k - slices[fi].start for k in kidx if slices[fi].start <= k < slices[fi].stop]
            part = np.asarray(part)
            if isinstance(f, TorusFactor):
                v = self._torus_factor_derivative(f, n, part, local)
            else:
                v = self._su2_factor_derivative(n, part, local)
            out = v if out is None else out * v
        return out

    def _torus_factor_derivative(self, f, n_max, part, local):
        axes = list(range(f.dim))
        v = np.ones(part.shape[:-1])
        for ax in axes:
            order = local.count(ax)
            theta = part[..., ax]
            if order == 0:
                v = v * circle_heat_series(self.t, theta, n_max)
            elif order <= 2:
                v = v * circle_heat_series_dtheta(self.t, theta, n_max, order)
            else:
                raise ValueError("only derivatives of order <= 2 supported here")
        return v

    def _su2_factor_derivative(self, two_j_max, part, local):
        if not local:
            cosphi = np.real(np.trace(part, axis1=-2, axis2=-1)) / 2.0
            return _su2_char_sum(self.t, cosphi, two_j_max)
        from .groups import make_group
        su2 = make_group("su2")
        out = 0.0
        for two_j in range(0, two_j_max + 1):
            rep = build_irrep(su2, (two_j,))
            mats = rep.at_many([part if part.ndim == 3 else part[None]])
            ins = np.eye(two_j + 1, dtype=complex)
            for k in local:
                ins = ins @ rep.generators[k]
            j = two_j / 2.0
            w = (two_j + 1) * math.exp(-self.t * j * (j + 1.0))
            out = out + w * np.trace(mats @ ins, axis1=-2, axis2=-1)
        return np.real(out)

    def log_derivative(self, k, batch):
        """X_k log rho_t, pointwise."""
        return self._derivative_general([k], batch) / self.value(batch)

    def second_log_derivative(self, j, k, batch):
        """X_j X_k log rho_t = (X_j X_k rho)/rho - (X_j rho)(X_k rho)/rho^2."""
        vals = self.value(batch)
        dj = self._derivative_general([j], batch)
        dk = self._derivative_general([k], batch)
        djk = self._derivative_general([j, k], batch)
        return djk / vals - dj * dk / vals ** 2

    def derivative_pack(self, batch):
        """All derivatives up to order two at once: (rho, d[k], dd[j][k]).

        Evaluates the irrep matrices only once per spin, which matters when
        the same node set is reused for many operator checks.
        """
        slices = self.group.factor_slices()
        fac_vals, fac_d, fac_dd = [], [], []
        for f, n, part in zip(self.group.factors, self.cutoffs, batch):
            part = np.asarray(part)
            if isinstance(f, TorusFactor):
                v = self._torus_factor_derivative(f, n, part, [])
                dv = [self._torus_factor_derivative(f, n, part, [a]) for a in range(f.dim)]
                ddv = [[self._torus_factor_derivative(f, n, part, [a, b])
                        for b in range(f.dim)] for a in range(f.dim)]
            else:
                v, dv, ddv = self._su2_pack(n, part)
            fac_vals.append(v)
            fac_d.append(dv)
            fac_dd.append(ddv)
        return self._combine_factor_packs(fac_vals, fac_d, fac_dd, slices)

    def _su2_pack(self, two_j_max, part, chunk=20000):
        from .groups import make_group
        su2 = make_group("su2")
        nb = part.shape[0]
        v = np.zeros(nb)
        dv = [np.zeros(nb) for _ in range(3)]
        ddv = [[np.zeros(nb) for _ in range(3)] for _ in range(3)]
        for two_j in range(0, two_j_max + 1):
            rep = build_irrep(su2, (two_j,))
            g = rep.generators
            j = two_j / 2.0
            w = (two_j + 1) * math.exp(-self.t * j * (j + 1.0))
            for lo in range(0, nb, chunk):
                mats = rep.at_many([part[lo:lo + chunk]])
                v[lo:lo + chunk] += w * np.real(np.trace(mats, axis1=-2, axis2=-1))
                for a in range(3):
                    dv[a][lo:lo + chunk] += w * np.real(np.einsum("nab,ba->n", mats, g[a]))
                    for b in range(3):
                        ins = g[a] @ g[b]
                        ddv[a][b][lo:lo + chunk] += w * np.real(
                            np.einsum("nab,ba->n", mats, ins))
        return v, dv, ddv

    def derivative_pack_on_rule(self, rule):
        """derivative_pack specialized to a quadrature rule; SU(2) factors
        use the Euler-product structure of the nodes, which avoids
        evaluating large irrep matrices node by node."""
        if rule.factor_meta is None:
            return self.derivative_pack(rule.batch())
        d = self.group.dim
        slices = self.group.factor_slices()
        fac_vals, fac_d, fac_dd = [], [], []
        for fi, (f, n, part) in enumerate(zip(self.group.factors, self.cutoffs, rule.batch())):
            meta = rule.factor_meta[fi]
            if isinstance(f, TorusFactor) or meta is None:
                part = np.asarray(part)
                v = self._torus_factor_derivative(f, n, part, [])
                dv = [self._torus_factor_derivative(f, n, part, [a]) for a in range(f.dim)]
                ddv = [[self._torus_factor_derivative(f, n, part, [a, b])
                        for b in range(f.dim)] for a in range(f.dim)]
            else:
                v_l, dv_l, ddv_l = self._su2_pack_structured(n, meta)
                take = rule.factor_index[fi]
                v = v_l[take]
                dv = [x[take] for x in dv_l]
                ddv = [[x[take] for x in row] for row in ddv_l]
            fac_vals.append(v)
            fac_d.append(dv)
            fac_dd.append(ddv)
        return self._combine_factor_packs(fac_vals, fac_d, fac_dd, slices)

    def _combine_factor_packs(self, fac_vals, fac_d, fac_dd, slices):
        d = self.group.dim
        rho = np.prod(np.stack(fac_vals), axis=0)
        nb = rho.shape[0]
        first = np.zeros((d, nb))
        second = np.zeros((d, d, nb))
        for fi, sl in enumerate(slices):
            others = np.prod(np.stack([fac_vals[g] for g in range(len(slices)) if g != fi]),
                             axis=0) if len(slices) > 1 else np.ones(nb)
            for a in range(sl.stop - sl.start):
                first[sl.start + a] = fac_d[fi][a] * others
                for b in range(sl.stop - sl.start):
                    second[sl.start + a, sl.start + b] = fac_dd[fi][a][b] * others
            for gj in range(len(slices)):
                if gj == fi:
                    continue
                others2 = (np.prod(np.stack([fac_vals[g] for g in range(len(slices))
                                             if g not in (fi, gj)]), axis=0)
                           if len(slices) > 2 else np.ones(nb))
                slj = slices[gj]
                for a in range(sl.stop - sl.start):
                    for b in range(slj.stop - slj.start):
                        second[sl.start + a, slj.start + b] = (
                            fac_d[fi][a] * fac_d[gj][b] * others2)
        return rho, first, second

    def _su2_pack_structured(self, two_j_max, meta):
        """Per-local-node kernel pack on an Euler product grid: the irrep at
        a node factors into diagonal phase matrices and the middle-angle
        block, so each trace is a small three-tensor contraction."""
        from .groups import make_group, _su2_irrep_matrix_batch
        su2 = make_group("su2")
        alpha, beta, gamma = meta["alpha"], meta["beta"], meta["gamma"]
        m, n_gl = len(alpha), len(beta)
        total = m * n_gl * m
        v = np.zeros(total)
        dv = [np.zeros(total) for _ in range(3)]
        ddv = [[np.zeros(total) for _ in range(3)] for _ in range(3)]
        ry = np.stack([np.array([[math.cos(b / 2), -math.sin(b / 2)],
                                 [math.sin(b / 2), math.cos(b / 2)]], dtype=complex)
                       for b in beta])
        for two_j in range(0, two_j_max + 1):
            rep = build_irrep(su2, (two_j,))
            g = rep.generators
            j = two_j / 2.0
            w = (two_j + 1) * math.exp(-self.t * j * (j + 1.0))
            dmat = _su2_irrep_matrix_batch(two_j, ry)          # (n_gl, dim, dim)
            mu = j - np.arange(two_j + 1)                      # phase exponents
            pa = np.exp(-1j * np.outer(alpha, mu))             # (m, dim)
            pc = np.exp(-1j * np.outer(gamma, mu))

            def trace_with(ins):
                tmat = dmat * ins.T[None, :, :]
                return np.real(np.einsum("am,bmp,cp->abc", pa, tmat, pc,
                                         optimize=True)).reshape(-1)

            eye = np.eye(two_j + 1, dtype=complex)
            v += w * trace_with(eye)
            for a in range(3):
                dv[a] += w * trace_with(g[a])
                for b in range(3):
                    ddv[a][b] += w * trace_with(g[a] @ g[b])
        return v, dv, ddv


# ---------------------------------------------------------------------------
# Fourier side

class FourierCoefficients:
    """A band-limited function stored as matrix coefficients per irrep.

    Reconstruction convention:

        f(x) = sum_irreps  dim * trace(coeff @ pi(x)),

    so ``coeff = integral f(x) pi(x)^{-1} dx`` and the Plancherel identity
    reads ``|f|^2_{L2(dx)} = sum dim * |coeff|_HS^2``.
    """

    def __init__(self, group, entries):
        self.group = group
        self.entries = {}
        self.irreps = {}
        for label, mat in entries.items():
            rep = build_irrep(group, label)
            mat = np.asarray(mat, dtype=complex).reshape(rep.dim, rep.dim)
            self.entries[rep.label] = mat
            self.irreps[rep.label] = rep

    @classmethod
    def constant(cls, group, c=1.0):
        trivial = _trivial_label(group)
        return cls(group, {trivial: np.array([[c]], dtype=complex)})

    @classmethod
    def from_entry(cls, group, label, i, j, scale=1.0):
        """The matrix-entry function  x -> scale * pi(x)[i, j]."""
        rep = build_irrep(group, label)
        mat = np.zeros((rep.dim, rep.dim), dtype=complex)
        mat[j, i] = scale / rep.dim
        return cls(group, {rep.label: mat})

    @classmethod
    def from_character(cls, group, label, scale=1.0):
        rep = build_irrep(group, label)
        return cls(group, {rep.label: (scale / rep.dim) * np.eye(rep.dim, dtype=complex)})

    @classmethod
    def random_band_limited(cls, group, max_casimir, rng, real=False):
        entries = {}
        for rep in irreps_up_to(group, max_casimir):
            m = rng.normal(size=(rep.dim, rep.dim))
            if not real:
                m = m + 1j * rng.normal(size=(rep.dim, rep.dim))
            entries[rep.label] = m / rep.dim
        return cls(group, entries)

    def copy_map(self, fn):
        return FourierCoefficients(self.group, {lab: fn(lab, m) for lab, m in self.entries.items()})

    def __add__(self, other):
        out = {lab: m.copy() for lab, m in self.entries.items()}
        for lab, m in other.entries.items():
            out[lab] = out.get(lab, 0.0) + m
        return FourierCoefficients(self.group, out)

    def scale(self, c):
        return self.copy_map(lambda lab, m: c * m)

    def max_casimir(self):
        return max((self.irreps[lab].casimir for lab in self.entries), default=0.0)

    def plancherel_norm_sq(self):
        return float(sum(rep.dim * np.sum(np.abs(self.entries[lab]) ** 2)
                         for lab, rep in self.irreps.items()))

    def derivative(self, k):
        """Left-invariant derivative X_k f (stays band-limited)."""
        return self.copy_map(lambda lab, m: self.irreps[lab].generators[k] @ m)

    def evaluate(self, batch):
        n = len(np.asarray(batch[0]))
        out = np.zeros(n, dtype=complex)
        for lab, mat in self.entries.items():
            rep = self.irreps[lab]
            mats = rep.at_many(batch)
            out = out + rep.dim * np.einsum("pq,nqp->n", mat, mats)
        return out

    def evaluate_point(self, point):
        return complex(self.evaluate([np.asarray(p)[None, ...] for p in point.parts])[0])

    def band_characters(self, batch, max_casimir):
        """Characters of all irreps up to a Casimir bound, on a batch."""
        reps = irreps_up_to(self.group, max_casimir)
        return reps, np.stack([r.character_many(batch) for r in reps])


def _trivial_label(group):
    lab = []
    for f in group.factors:
        lab.append(tuple([0] * f.dim) if isinstance(f, TorusFactor) else 0)
    return tuple(lab)


def heat_operator(f, t):
    """Apply exp(t * Laplacian / 2) on the Fourier side.

    Negative t is allowed: on band-limited data the inverse heat operator is
    a terminating rescaling.
    """
    return f.copy_map(lambda lab, m: math.exp(-t * f.irreps[lab].casimir / 2.0) * m)


# ---------------------------------------------------------------------------
# Torus-side measures on the complexification

def quotient_heat_weight(d, t, y):
    """Density of the heat kernel on K_C/K = R^d at time t for the (1/4)
    Laplacian: (pi t)^(-d/2) exp(-|Y|^2 / t), integrating to 1 against dY."""
    y = np.asarray(y, dtype=float)
    y2 = np.sum(np.atleast_2d(y) ** 2, axis=-1) if y.ndim > 1 else np.sum(y ** 2)
    return (math.pi * t) ** (-d / 2.0) * np.exp(-y2 / t)


def full_heat_weight_torus(group, t, theta, y, tol=1e-14):
    """Heat kernel on the complexified torus against Haar x Lebesgue.

    Solves d mu/dt = (1/4) Lap mu; separates into a circle kernel of
    variance t/2 in each angle and a Gaussian in each imaginary coordinate.
    Density relative to (dtheta/2pi)^d dY.
    """
    if not group.is_torus:
        raise UnsupportedGroupError("full complexified heat weight is computed for tori only; "
                                    "other groups route norms through the tensor side")
    d = group.dim
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    n_max, _ = _circle_coeff_cutoff(t / 2.0, tol)
    th = np.ones(theta.shape[0])
    for k in range(d):
        th = th * circle_heat_series(t / 2.0, theta[:, k], n_max)
    gauss = (math.pi * t) ** (-d / 2.0) * np.exp(-np.sum(y ** 2, axis=-1) / t)
    out = th * gauss
    return out if out.size > 1 else float(out[0])


def large_eigenvalue_half_trace(z):
    return _large_eigenvalue(z)


def _large_eigenvalue(z):
    """Eigenvalue of larger modulus for an SL(2,C) matrix with half-trace z."""
    z = np.asarray(z, dtype=complex)
    root = np.sqrt(z * z - 1.0)
    lam1, lam2 = z + root, z - root
    return np.where(np.abs(lam1) >= np.abs(lam2), lam1, lam2)


def export_kernel_csv(kernel, batch, path):
    """Write kernel evaluations as CSV: coordinates, value, tail_bound."""
    import csv
    vals = kernel.value(batch)
    coords = []
    for part in batch:
        part = np.asarray(part)
        flat = part.reshape(part.shape[0], -1)
        if np.iscomplexobj(flat):
            coords.append(np.concatenate([flat.real, flat.imag], axis=1))
        else:
            coords.append(flat)
    coords = np.concatenate(coords, axis=1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"c{i}" for i in range(coords.shape[1])] + ["value", "tail_bound"])
        for row, v in zip(coords, vals):
            w.writerow([f"{x:.17g}" for x in row] + [f"{v:.17g}", f"{kernel.tail_bound:.3g}"])
    return path
