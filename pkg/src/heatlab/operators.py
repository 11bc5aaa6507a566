"""Annihilation and creation operators in the three realizations.

Annihilation is the left-invariant derivative (position and holomorphic
realizations) or the index-append contraction (tensor realization); creation
is its adjoint for the realization's inner product.  In every realization
the annihilators satisfy the algebra commutation relations
``[a_X, a_Y] = a_{[X,Y]}`` and the creators the sign-flipped ones.

For the heat-kernel normalization used here (kernel variance t), the abelian
commutator between an annihilator and a creator is

    [a_X, a_Y*] = (1/t) <X, Y> I,

as follows from a_Y* = -Y - Y(log rho_t) and the Gaussian log-derivative;
the general-group substitute is [a_X, a_Y*] = -[X, Y] - XY(log rho_t).
All checks run on band-limited or degree-truncated states, which keeps every
operator bounded on its test domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import TruncationError, UnsupportedGroupError
from .groups import TorusFactor, haar_quadrature
from .heat import (HeatKernel, FourierCoefficients, circle_heat_series,
                   circle_heat_series_dtheta, _circle_coeff_cutoff)
from .fock import TensorFunctional, taylor_map
from .transforms import (_torus_frequency_vectors, _gh_exponential_integrals,
                         _band_degree, _kernel_degrees, _torus_label)


# ---------------------------------------------------------------------------
# Position realization: L2(K, rho_t dx)

class PositionRealization:
    """States are band-limited FourierCoefficients; the inner product is
    heat-kernel weighted.  ``band`` caps the degree (|n|_inf / spin j) of
    states the instance will see, so one quadrature rule and one set of
    kernel derivatives serve all of them."""

    space = "position"

    def __init__(self, group, t, band=2, kernel_tol=1e-11):
        self.group = group
        self.t = t
        self.kernel = HeatKernel(group, t, tol=kernel_tol)
        kdegs = _kernel_degrees(group, self.kernel)
        bands = band if isinstance(band, (list, tuple)) else [band] * len(group.factors)
        self.rule = haar_quadrature(group, [max(1, math.ceil(b + k))
                                            for b, k in zip(bands, kdegs)])
        self._batch = self.rule.batch()
        self._rho = self.kernel.value(self._batch)
        self._pack = None

    def _log_derivatives(self):
        """Cached (X_k log rho, X_j X_k log rho) on the realization nodes."""
        if self._pack is None:
            rho, first, second = self.kernel.derivative_pack_on_rule(self.rule)
            d = self.group.dim
            logd = first / rho
            logdd = np.empty_like(second)
            for j in range(d):
                for k in range(d):
                    logdd[j, k] = second[j, k] / rho - logd[j] * logd[k]
            self._pack = (logd, logdd)
        return self._pack

    def vacuum(self):
        return FourierCoefficients.constant(self.group, 1.0)

    def _values(self, state):
        if isinstance(state, FourierCoefficients):
            return state.evaluate(self._batch)
        return state.value(self._batch)

    def inner(self, u, v):
        """<u, v> = integral of conj(u) v rho_t, conjugate linear in u."""
        return complex(np.sum(np.conj(self._values(u)) * self._values(v)
                              * self._rho * self.rule.weights))

    def norm_sq(self, u):
        return float(np.real(self.inner(u, u)))

    def annihilate(self, k, u):
        if isinstance(u, FourierCoefficients):
            return u.derivative(k)
        return _DerivedPointwise(self, k, u)

    def create(self, k, u):
        """Adjoint of the derivative: (-X - X log rho_t) u, as a pointwise
        state evaluated through the heat-kernel log-derivative."""
        return _CreatedPointwise(self, k, u)


class _CreatedPointwise:
    """(a_k^* u)(x) = -(X_k u)(x) - (X_k log rho_t)(x) u(x), on the
    realization's node set."""

    def __init__(self, realization, k, u):
        self.r = realization
        self.k = k
        self.u = u

    def value(self, batch=None):
        r, k, u = self.r, self.k, self.u
        logd, _ = r._log_derivatives()
        du = u.derivative(k).evaluate(r._batch)
        return -du - logd[k] * u.evaluate(r._batch)

    def derivative_value(self, j, batch=None):
        """(X_j (a_k^* u))(x), for commutator tests."""
        r, k, u = self.r, self.k, self.u
        logd, logdd = r._log_derivatives()
        dju = u.derivative(j)
        # X_j X_k u applies X_k first (inner), then X_j
        return (-u.derivative(k).derivative(j).evaluate(r._batch)
                - logdd[j, k] * u.evaluate(r._batch)
                - logd[k] * dju.evaluate(r._batch))


class _DerivedPointwise:
    def __init__(self, realization, k, state):
        self.r = realization
        self.k = k
        self.state = state

    def value(self, batch=None):
        return self.state.derivative_value(self.k, batch)


# ---------------------------------------------------------------------------
# Holomorphic realization over the complexified torus

class BargmannRealizationTorus:
    """States are coefficient arrays of holomorphic Fourier sums
    F(z) = sum c_n e^{i n z}; the inner product is against the complexified
    heat measure.  Annihilation is the holomorphic derivative; creation is a
    Toeplitz operator, computed by projecting the multiplied function back
    onto the monomials."""

    space = "bargmann"

    def __init__(self, group, t, window=None):
        if not group.is_torus:
            raise UnsupportedGroupError("holomorphic realization with explicit measure is torus-only")
        self.group = group
        self.t = t
        # Fourier decay of the angular log-derivative factor sets how far a
        # single creation spreads the coefficients
        self.window = window or max(4, int(math.ceil(math.sqrt(130.0 / t))))

    def vacuum(self):
        return FourierCoefficients.constant(self.group, 1.0)

    def inner(self, u, v):
        nu, cu = _torus_frequency_vectors(u)
        nv, cv = _torus_frequency_vectors(v)
        d = self.group.dim
        sums = nu[:, None, :] + nv[None, :, :]
        uniq = np.unique(sums)
        gh_vals, _ = _gh_exponential_integrals(uniq, self.t)
        gh = dict(zip(uniq.tolist(), gh_vals.tolist()))
        n_w, _ = _circle_coeff_cutoff(0.5 * self.t, 1e-16)
        total = 0.0 + 0.0j
        for i in range(len(nu)):
            for j in range(len(nv)):
                fac = np.conj(cu[i]) * cv[j]
                for k in range(d):
                    diff = int(nv[j, k] - nu[i, k])
                    fac *= math.exp(-self.t * diff * diff / 4.0) if abs(diff) <= n_w else 0.0
                    fac *= gh[int(nu[i, k] + nv[j, k])]
                total += fac
        return complex(total)

    def norm_sq(self, u):
        return float(np.real(self.inner(u, u)))

    def annihilate(self, k, u):
        return u.derivative(k)

    def create(self, k, u):
        """Project (multiplier x u) back to the holomorphic span.

        The multiplier is -(1/2)(X_k + i J X_k) log mu_t; its angular part is
        band-limited after kernel truncation and its fiber part is linear in
        Y, so each projection coefficient reduces to exact one-dimensional
        quadratures.
        """
        nu, cu = _torus_frequency_vectors(u)
        d = self.group.dim
        w = self.window
        lo = nu.min(axis=0) - w
        hi = nu.max(axis=0) + w
        n_w, _ = _circle_coeff_cutoff(0.5 * self.t, 1e-16)

        def theta_proj(delta):
            # exact Fourier coefficient of the truncated angular measure factor
            return math.exp(-self.t * delta * delta / 4.0) if abs(delta) <= n_w else 0.0

        cand = [np.array(ix) + lo for ix in np.ndindex(*(hi - lo + 1))]
        allfreq = np.concatenate([np.stack(cand), nu])
        svals = np.unique((allfreq[:, None, :] + allfreq[None, :, :]).ravel())
        gh_vals, _ = _gh_exponential_integrals(svals, self.t)
        gh = dict(zip(svals.tolist(), gh_vals.tolist()))
        ghy = _gh_linear_integrals(svals, self.t)

        # right-hand sides <e_n, multiplier * u>
        rhs = np.zeros(len(cand), dtype=complex)
        for i, n in enumerate(cand):
            coeff = 0.0 + 0.0j
            for m, cm in zip(nu, cu):
                base = 1.0 + 0.0j
                for kk in range(d):
                    if kk == k:
                        continue
                    base *= theta_proj(int(n[kk] - m[kk])) * gh[int(n[kk] + m[kk])]
                diff = int(n[k] - m[k])
                s = int(n[k] + m[k])
                # angular part of the multiplier: the measure factor cancels,
                # leaving the Fourier coefficient of its derivative
                term1 = (-0.5j) * diff * theta_proj(diff) * gh[s]
                term2 = (1j / self.t) * theta_proj(diff) * ghy[s]
                coeff += cm * base * (term1 + term2)
            rhs[i] = coeff

        # the monomials are not orthogonal under the complexified heat
        # measure, so project through their Gram matrix
        gram = np.ones((len(cand), len(cand)))
        for i, n in enumerate(cand):
            for j, m in enumerate(cand):
                val = 1.0
                for kk in range(d):
                    val *= theta_proj(int(m[kk] - n[kk])) * gh[int(n[kk] + m[kk])]
                gram[i, j] = val
        scale = 1.0 / np.sqrt(np.diag(gram))
        sys = gram * scale[:, None] * scale[None, :]
        sol = scale * np.linalg.solve(sys, rhs * scale)
        out = {}
        for n, val in zip(cand, sol):
            if abs(val) > 1e-14:
                out[_torus_label(self.group, n)] = np.array([[val]], dtype=complex)
        if not out:
            return FourierCoefficients.constant(self.group, 0.0)
        return FourierCoefficients(self.group, out)


def _gh_linear_integrals(svals, t):
    """integral of Y e^{-s Y} (pi t)^{-1/2} e^{-Y^2/t} dY, recentred rule."""
    from numpy.polynomial.hermite import hermgauss
    svals = np.asarray(svals, dtype=float)
    u, w = hermgauss(80)
    y = math.sqrt(t) * u[None, :] - (svals * t / 2.0)[:, None]
    expo = -svals[:, None] * y - y ** 2 / t + u[None, :] ** 2
    vals = (w[None, :] * y * np.exp(expo)).sum(axis=1) / math.sqrt(math.pi)
    return dict(zip(svals.tolist(), vals.tolist()))


# ---------------------------------------------------------------------------
# Tensor realization: PBW-coordinate machinery

class FockRealization:
    """States are degree-truncated TensorFunctionals.  Internally they are
    held in coordinates dual to the ordered-monomial (PBW) basis, on which
    annihilation acts by word extension and creation by the Gram-adjoint."""

    space = "fock"

    def __init__(self, group, t, degree):
        self.group = group
        self.t = t
        self.degree = degree
        self._tab = _pbw_tables(group, degree)
        n = len(self._tab.monomials)
        b, wts = self._tab.b_matrix, self._tab.word_weights(t)
        self.gram = b.conj().T @ (wts[:, None] * b)
        self._gram_cho = sla.cho_factor(self.gram)
        self.ann = [self._annihilation_matrix(k) for k in range(group.dim)]
        self.cre = [sla.cho_solve(self._gram_cho, a.conj().T @ self.gram) for a in self.ann]

    # -- state conversions -------------------------------------------------
    def coords(self, xi):
        """PBW coordinates: the functional's values on the sorted words."""
        if xi.degree < self.degree:
            xi = _pad(xi, self.degree)
        vals = _word_value_vector(xi)
        return vals[self._tab.monomial_rows]

    def state(self, coords):
        vals = self._tab.b_matrix @ coords
        comps, pos, d = [], 0, self.group.dim
        for n in range(self.degree + 1):
            cnt = d ** n
            comps.append(vals[pos:pos + cnt].reshape((d,) * n))
            pos += cnt
        return TensorFunctional(self.group, self.t, comps)

    def vacuum(self):
        return TensorFunctional.vacuum(self.group, self.t, self.degree)

    def inner(self, u, v):
        """Inner product through the monomial coordinates (states of lower
        degree are canonically extended by zero monomial values, which keeps
        every operator pairing consistent with the Gram adjoints)."""
        pu = self.coords(u) if isinstance(u, TensorFunctional) else u
        pv = self.coords(v) if isinstance(v, TensorFunctional) else v
        return complex(np.conj(pu) @ (self.gram @ pv))

    def norm_sq(self, u):
        return float(np.real(self.inner(u, u)))

    def annihilate(self, k, u):
        """Index-append contraction of the truncated interpretation of u.

        All components below the top degree agree with the plain dense
        slicing xi_n(..., k); the top stored degree of the result needs data
        past the truncation and is filled with the value implied by the
        commutation relations alone, so for states that are restrictions of
        longer functionals it is incomplete (flag kept, not silent)."""
        if isinstance(u, TensorFunctional):
            out = self.state(self.ann[k] @ self.coords(u))
            out.truncated_source = u.truncated_source
            return out
        return self.ann[k] @ u

    def create(self, k, u):
        if isinstance(u, TensorFunctional):
            if u.degree >= self.degree:
                top = float(np.max(np.abs(u.components[self.degree])))
                if top > 0.0:
                    raise TruncationError("creation would push past the truncation degree; "
                                          "raise the realization degree")
            return self.state(self.cre[k] @ self.coords(u))
        return self.cre[k] @ u

    # -- internals ----------------------------------------------------------
    def _annihilation_matrix(self, k):
        """Word-extension matrix on monomial coordinates.  Top-degree rows
        use words one past the truncation; their expansion keeps the
        reachable monomials and drops the single out-of-range coefficient,
        which vanishes on genuinely truncated functionals (and is flagged
        data loss for restrictions of longer ones).  The drop commutes with
        composition because straightening is confluent, so operator
        identities survive the truncation away from the top degree."""
        tab = self._tab
        rows = []
        for mono in tab.monomials:
            word = mono + (k,)
            rows.append(tab.word_row(word))
        return np.stack(rows)

    def vacuum_kernel_dimension(self, tol=1e-10):
        stacked = np.concatenate(self.ann, axis=0)
        s = np.linalg.svd(stacked, compute_uv=False)
        return int(np.sum(s < tol * max(1.0, s[0])))


def _pad(xi, degree):
    out = TensorFunctional.zero(xi.group, xi.t, degree)
    for n, comp in enumerate(xi.components):
        out.components[n] = comp
    out.truncated_source = xi.truncated_source
    return out


def _word_value_vector(xi):
    return np.concatenate([np.asarray(c, dtype=complex).reshape(-1) for c in xi.components])


class _PBWTables:
    """Straightening data for words of length <= degree + 1.

    Rows of ``b_matrix`` are indexed by words (degree-major, lexicographic,
    matching the C-order flattening of the dense arrays); columns by the
    nondecreasing words (ordered monomials).  A functional in the ideal
    annihilator is determined by its values on the monomials, and
    ``b_matrix @ p`` reconstructs all word values from them.
    """

    def __init__(self, group, degree):
        self.group = group
        self.degree = degree
        d = group.dim
        self.words = [w for n in range(degree + 1) for w in _all_words(d, n)]
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.monomials = [w for w in self.words if all(w[i] <= w[i + 1] for i in range(len(w) - 1))]
        self.mono_index = {m: i for i, m in enumerate(self.monomials)}
        self.monomial_rows = np.array([self.word_index[m] for m in self.monomials])
        self._memo = {}
        self._c = group.structure_constants
        rows = [self.word_row(w) for w in self.words]
        self.b_matrix = np.stack(rows)

    def word_weights(self, t):
        return np.array([t ** len(w) / math.factorial(len(w)) for w in self.words])

    def word_row(self, word):
        """Expansion of the word's value over monomial values; monomials of
        degree beyond the truncation are dropped (their values vanish on
        genuinely truncated functionals)."""
        row = np.zeros(len(self.monomials))
        for mono, coef in self._straighten(word).items():
            if mono in self.mono_index:
                row[self.mono_index[mono]] += coef
        return row

    def _straighten(self, word):
        cached = self._memo.get(word)
        if cached is not None:
            return cached
        pos = next((i for i in range(len(word) - 1) if word[i] > word[i + 1]), None)
        if pos is None:
            out = {word: 1.0}
        else:
            a, b = word[pos], word[pos + 1]
            swapped = word[:pos] + (b, a) + word[pos + 2:]
            out = dict(self._straighten(swapped))
            for l in range(self.group.dim):
                coef = self._c[l, a, b]
                if coef != 0.0:
                    sub = word[:pos] + (l,) + word[pos + 2:]
                    for mono, cc in self._straighten(sub).items():
                        out[mono] = out.get(mono, 0.0) + coef * cc
        self._memo[word] = out
        return out


def _all_words(d, n):
    if n == 0:
        return [()]
    import itertools
    return [tuple(w) for w in itertools.product(range(d), repeat=n)]


_PBW_CACHE = {}


def _pbw_tables(group, degree):
    key = (group.kind, degree)
    tab = _PBW_CACHE.get(key)
    if tab is None or tab.group is not group and tab.group.kind != group.kind:
        tab = _PBWTables(group, degree)
        _PBW_CACHE[key] = tab
    return tab


# ---------------------------------------------------------------------------
# Checks

def adjointness_check(realization, pairs, kidx=None):
    """max relative defect of <a_k u, v> = <u, a_k^* v> over state pairs."""
    worst = 0.0
    ks = kidx if kidx is not None else range(realization.group.dim)
    for u, v in pairs:
        for k in ks:
            lhs = realization.inner(realization.annihilate(k, u), v)
            rhs = realization.inner(u, realization.create(k, v))
            scale = max(abs(lhs), abs(rhs), 1e-12)
            worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def commutator_check_fock(realization, tol=1e-9):
    """[a_X, a_Y] = a_[X,Y] and [a_X^*, a_Y^*] = -a_[X,Y]^* as matrices on
    the coordinate space (top degree excluded where truncation interferes)."""
    c = realization.group.structure_constants
    d = realization.group.dim
    monos = realization._tab.monomials
    # matrix compositions are lossless on rows below the top degree (the
    # word expansions stay within the stored range there)
    rows_a = np.array([len(m) <= realization.degree - 1 for m in monos])
    # creation is right multiplication on the algebra side, so its relation
    # is exact on the dual (Riesz) basis vectors of low degree: columns of
    # the inverse Gram at monomials that two right-multiplications keep
    # inside the truncation
    cols_c = np.array([len(m) <= realization.degree - 2 for m in monos])
    riesz = sla.cho_solve(realization._gram_cho, np.eye(len(monos))[:, cols_c])
    riesz_scale = np.linalg.norm(riesz, axis=0)
    worst_a, worst_c = 0.0, 0.0
    for j in range(d):
        for k in range(d):
            comm = realization.ann[j] @ realization.ann[k] - realization.ann[k] @ realization.ann[j]
            target = sum(c[l, j, k] * realization.ann[l] for l in range(d))
            worst_a = max(worst_a, float(np.max(np.abs((comm - target)[rows_a, :]))))
            ccomm = realization.cre[j] @ realization.cre[k] - realization.cre[k] @ realization.cre[j]
            ctarget = -sum(c[l, j, k] * realization.cre[l] for l in range(d))
            dual_defect = (ccomm - ctarget) @ riesz / riesz_scale[None, :]
            worst_c = max(worst_c, float(np.max(np.abs(dual_defect))))
    return {"test": "fock-commutators", "annihilators": worst_a, "creators": worst_c,
            "pass": bool(worst_a <= tol and worst_c <= tol)}


def commutator_check_position(group, t, states, tol=1e-9):
    """[a_X, a_Y] = a_[X,Y] on Fourier data (pure generator algebra)."""
    c = group.structure_constants
    worst = 0.0
    for u in states:
        for j in range(group.dim):
            for k in range(group.dim):
                lhs = u.derivative(k).derivative(j) + u.derivative(j).derivative(k).scale(-1.0)
                target = FourierCoefficients(group, {lab: np.zeros_like(m) for lab, m in u.entries.items()})
                for l in range(group.dim):
                    if c[l, j, k] != 0.0:
                        target = target + u.derivative(l).scale(c[l, j, k])
                diff = lhs + target.scale(-1.0)
                num = max(np.max(np.abs(m)) for m in diff.entries.values())
                den = max(max(np.max(np.abs(m)) for m in u.entries.values()), 1e-12)
                worst = max(worst, num / den)
    return {"test": "position-commutators", "defect": worst, "pass": bool(worst <= tol)}


def ccr_check_abelian(realization, states, tol=1e-9):
    """Abelian canonical commutation relation [a_X, a_Y*] = (1/t) <X,Y> I.

    Rejected off abelian groups, where no relation of this shape closes.
    The constant relation holds exactly in the tensor realization (and in
    the flat reference module); in the position and holomorphic realizations
    over a compact torus the diagonal commutator is multiplication by
    -X Y log rho_t, whose deviation from the flat value 1/t is the wrapped
    correction of the kernel.  For those realizations the check asserts the
    multiplication identity and the vanishing off-diagonal commutators, and
    reports the flat deviation without asserting it.
    """
    group = realization.group
    if not group.is_torus:
        raise UnsupportedGroupError("canonical commutation relations only close on abelian groups")
    t = realization.t
    kappa = 1.0 / t
    worst = 0.0
    flat_dev = None
    d = group.dim
    if isinstance(realization, FockRealization):
        for u in states:
            for j in range(d):
                for k in range(d):
                    target = kappa * (1.0 if j == k else 0.0)
                    worst = max(worst, _ccr_defect(realization, j, k, u, target))
    elif isinstance(realization, PositionRealization):
        logd, logdd = realization._log_derivatives()
        flat_dev = float(max(np.max(np.abs(-logdd[k, k] - kappa)) for k in range(d)))
        for u in states:
            uval = u.evaluate(realization._batch)
            scale = max(np.max(np.abs(uval)), 1e-12)
            for j in range(d):
                for k in range(d):
                    lhs = (realization.create(k, u).derivative_value(j)
                           - realization.create(k, u.derivative(j)).value())
                    rhs = -logdd[j, k] * uval
                    worst = max(worst, float(np.max(np.abs(lhs - rhs))) / scale)
    else:
        # holomorphic realization: assert only the vanishing off-diagonal part
        for u in states:
            den = math.sqrt(u.plancherel_norm_sq())
            for j in range(d):
                for k in range(d):
                    if j == k:
                        continue
                    comm = (realization.create(k, u).derivative(j)
                            + realization.create(k, u.derivative(j)).scale(-1.0))
                    worst = max(worst, math.sqrt(comm.plancherel_norm_sq()) / max(den, 1e-12))
    return {"test": "ccr-abelian", "space": realization.space, "group": group.kind, "t": t,
            "constant": kappa, "defect": worst, "flat_deviation": flat_dev,
            "pass": bool(worst <= tol)}


def _ccr_defect(realization, j, k, u, target):
    if isinstance(realization, FockRealization):
        p = realization.coords(u)
        keepdim = realization.degree - 1
        lhs = realization.ann[j] @ realization.cre[k] @ p - realization.cre[k] @ realization.ann[j] @ p
        diff = realization.state(lhs - target * p)
        num = math.sqrt(sum(diff.degree_norm_sq(n) for n in range(keepdim + 1)))
        den = math.sqrt(sum(realization.state(p).degree_norm_sq(n) for n in range(keepdim + 1)))
        return num / max(den, 1e-12)
    if isinstance(realization, BargmannRealizationTorus):
        a_cre = realization.create(k, u)
        term1 = a_cre.derivative(j)
        term2 = realization.create(k, u.derivative(j))
        diff = term1 + term2.scale(-1.0) + u.scale(-target)
        num = math.sqrt(max(diff.plancherel_norm_sq(), 0.0))
        den = math.sqrt(u.plancherel_norm_sq())
        return num / max(den, 1e-12)
    # position realization: evaluate pointwise on the quadrature nodes
    r = realization
    term1 = r.create(k, u).derivative_value(j)
    term2 = r.create(k, u.derivative(j)).value()
    uval = u.evaluate(r._batch)
    resid = term1 - term2 - target * uval
    return float(np.max(np.abs(resid)) / max(np.max(np.abs(uval)), 1e-12))


def nonabelian_substitute_check(group, t, states, band=2, tol=1e-6):
    """[a_X, a_Y*] = -[X,Y] - XY(log rho_t) on sample points."""
    bands = [band if isinstance(f, TorusFactor) else max(1.0, band / 2.0)
             for f in group.factors]
    r = PositionRealization(group, t, band=bands)
    c = group.structure_constants
    _, logdd = r._log_derivatives()
    worst = 0.0
    for u in states:
        uval = u.evaluate(r._batch)
        scale = max(np.max(np.abs(uval)), 1e-12)
        for j in range(group.dim):
            for k in range(group.dim):
                created = r.create(k, u)
                lhs = created.derivative_value(j) - r.create(k, u.derivative(j)).value()
                bracket_u = np.zeros_like(uval)
                for l in range(group.dim):
                    if c[l, j, k] != 0.0:
                        bracket_u += c[l, j, k] * u.derivative(l).evaluate(r._batch)
                rhs = -bracket_u - logdd[j, k] * uval
                worst = max(worst, float(np.max(np.abs(lhs - rhs)) / scale))
    return {"test": "nonabelian-commutator-substitute", "group": group.kind, "t": t,
            "defect": worst, "pass": bool(worst <= tol)}


def resolution_of_identity_check(realization, pairs, tol=1e-6):
    """Truncated completeness sum over excited states:

        <u, v> = sum_n (t^n/n!) sum_k <u, a*_{k_1}..a*_{k_n} vac>
                                       <vac, a_{k_n}..a_{k_1} v>.

    Exact (zero tail) when the pair degrees are within the truncation.
    """
    import itertools
    t = realization.t
    group = realization.group
    d = group.dim
    vac = realization.coords(realization.vacuum())
    results = []
    for u, v in pairs:
        pu, pv = realization.coords(u), realization.coords(v)
        lhs = complex(np.conj(pu) @ (realization.gram @ pv))
        total = 0.0 + 0.0j
        for n in range(realization.degree + 1):
            coef = t ** n / math.factorial(n)
            for kvec in itertools.product(range(d), repeat=n):
                exc = vac
                for k in reversed(kvec):
                    exc = realization.cre[k] @ exc
                left = complex(np.conj(pu) @ (realization.gram @ exc))
                low = pv
                for k in kvec:
                    low = realization.ann[k] @ low
                right = complex(np.conj(vac) @ (realization.gram @ low))
                total += coef * left * right
        scale = max(abs(lhs), abs(total), 1e-12)
        results.append(abs(lhs - total) / scale)
    worst = max(results)
    return {"test": "resolution-of-identity", "defect": worst, "tail": 0.0,
            "pass": bool(worst <= tol)}


def intertwiner_check(group, t, states, degree=4, tol=1e-9):
    """The Hermite-coefficient map sends vacuum to vacuum and intertwines
    the annihilators of the position and tensor realizations."""
    fr = FockRealization(group, t, degree)
    worst = 0.0
    vac_img = taylor_map(FourierCoefficients.constant(group, 1.0), t, degree)
    vac = fr.vacuum()
    worst = max(worst, abs(complex(vac_img.components[0]) - 1.0))
    worst = max(worst, max((float(np.max(np.abs(vac_img.components[n])))
                            for n in range(1, degree + 1)), default=0.0))
    for u in states:
        xi = taylor_map(u, t, degree)
        for k in range(group.dim):
            via_fock = fr.annihilate(k, xi)
            via_pos = taylor_map(u.derivative(k), t, degree - 1)
            scale = max(math.sqrt(xi.weighted_norm_sq()), 1e-12)
            for n in range(degree):
                worst = max(worst, float(np.max(np.abs(via_fock.components[n]
                                                       - via_pos.components[n]))) / scale)
    return {"test": "intertwiner", "group": group.kind, "t": t,
            "defect": worst, "pass": bool(worst <= tol)}
