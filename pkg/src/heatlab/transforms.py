"""The heat-kernel coherent-state transform and its norm identities.

The transform is: apply the time-t heat operator on the Fourier side, then
evaluate holomorphically on the complexification,

    (Tf)(g) = sum d_lam e^{-t c_lam / 2} trace(fhat_lam pi_lam(g)).

The same formula is checked against two different holomorphic-side norms:
the full complexified heat measure (position-side norm weighted by rho_t)
and the K-invariant quotient measure (plain L2 norm on K).  For tori both
holomorphic norms are computed by explicit quadrature; for SU(2) the
holomorphic norm is taken to be the weighted tensor norm of the Taylor
coefficients, which the isometry theorems identify with it.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .errors import ConsistencyError, UnsupportedGroupError
from .groups import TorusFactor, irreps_up_to, haar_quadrature
from .heat import (HeatKernel, FourierCoefficients, heat_operator,
                   circle_heat_series, quotient_heat_weight,
                   _circle_coeff_cutoff)
from .fock import hermite_degree_norms, hermite_tail_bound, pick_truncation_degree


def segal_bargmann(f, t, batch):
    """Transform values on a batch of complexified points."""
    if t <= 0:
        raise ValueError("transform time t must be positive")
    return heat_operator(f, t).evaluate(batch)


def segal_bargmann_point(f, t, cpoint):
    return complex(segal_bargmann(f, t, [np.asarray(p)[None, ...] for p in cpoint.parts])[0])


def segal_bargmann_convolution(f, t, cpoint, rule=None, kernel=None):
    """Same transform as the convolution of f against the analytically
    continued kernel, integral of rho_t(g x^{-1}) f(x) dx by quadrature.
    Slow; used to cross-check the Fourier-side formula."""
    group = f.group
    kernel = kernel or HeatKernel(group, t, tol=1e-12)
    if rule is None:
        bands = _band_degrees(f)
        kdegs = _kernel_degrees(group, kernel)
        rule = haar_quadrature(group, [max(1, math.ceil((b + k) / 2.0))
                                       for b, k in zip(bands, kdegs)])
    batch = rule.batch()
    fvals = f.evaluate(batch)
    shifted = []
    for fac, gpart, xpart in zip(group.factors, cpoint.parts, batch):
        if isinstance(fac, TorusFactor):
            shifted.append(np.asarray(gpart)[None, :] - np.asarray(xpart))
        else:
            inv = np.conj(np.swapaxes(np.asarray(xpart), -1, -2))
            shifted.append(np.einsum("ab,nbc->nac", np.asarray(gpart), inv))
    kvals = kernel.value_complex(shifted)
    return complex(np.sum(kvals * fvals * rule.weights))


def _band_degrees(f):
    """Per-factor degree carried by the coefficients, in the exactness units
    of the quadrature rules: |n|_inf on torus coordinates, the spin j on
    SU(2) factors."""
    degs = [0.0] * len(f.group.factors)
    for lab, rep in f.irreps.items():
        for i, (fac, l) in enumerate(zip(f.group.factors, lab)):
            if isinstance(fac, TorusFactor):
                degs[i] = max(degs[i], max((abs(int(v)) for v in l), default=0))
            else:
                degs[i] = max(degs[i], int(l) / 2.0)
    return degs


def _band_degree(f):
    return max(_band_degrees(f))


def _kernel_degrees(group, kernel):
    return [float(n) if isinstance(fac, TorusFactor) else n / 2.0
            for fac, n in zip(group.factors, kernel.cutoffs)]


def _kernel_degree(group, kernel):
    return max(_kernel_degrees(group, kernel))


# ---------------------------------------------------------------------------
# Position-side norm, two independent routes

def position_norm_sq(f, t, rtol=1e-9, kernel_tol=1e-13):
    """|f|^2 weighted by the heat kernel, computed two ways.

    Route A: quadrature of |f|^2 rho_t over a rule exact for the product.
    Route B: heat evolution of the density |f|^2 evaluated at the identity,
    through character projections of the pointwise product.
    The two must agree to ``rtol`` relative; the quadrature value is returned.
    """
    group = f.group
    kernel = HeatKernel(group, t, tol=kernel_tol)
    bands = _band_degrees(f)
    kdegs = _kernel_degrees(group, kernel)
    rule = haar_quadrature(group, [max(1, math.ceil(b + k / 2.0))
                                   for b, k in zip(bands, kdegs)])
    batch = rule.batch()
    fv = f.evaluate(batch)
    dens = np.abs(fv) ** 2
    route_a = float(np.real(np.sum(dens * kernel.value(batch) * rule.weights)))

    # Route B needs exactness 2*band for the product times the character
    need_b = [max(1, math.ceil(2 * b)) for b in bands]
    rule_b = rule if all(e >= n for e, n in zip(rule.exactness_per_factor, need_b)) \
        else haar_quadrature(group, need_b)
    if rule_b is not rule:
        batch_b = rule_b.batch()
        dens_b = np.abs(f.evaluate(batch_b)) ** 2
    else:
        batch_b, dens_b = batch, dens
    reps, chars = f.band_characters(batch_b, 4.0 * max(f.max_casimir(), 0.25) + 1e-9)
    route_b = 0.0
    for rep, chi in zip(reps, chars):
        proj = np.sum(dens_b * np.conj(chi) * rule_b.weights)
        route_b += rep.dim * math.exp(-t * rep.casimir / 2.0) * float(np.real(proj))
    scale = max(abs(route_a), abs(route_b), 1e-30)
    if abs(route_a - route_b) > rtol * scale + kernel.tail_bound * scale:
        raise ConsistencyError(
            f"position norm routes disagree: quadrature {route_a!r} vs heat-at-identity {route_b!r}")
    return route_a


def plain_norm_sq(f, rule=None):
    """|f|^2 against normalized Haar by quadrature (Plancherel cross-check)."""
    group = f.group
    band = _band_degree(f)
    rule = rule or haar_quadrature(group, max(1, math.ceil(band)))
    vals = f.evaluate(rule.batch())
    return float(np.real(np.sum(np.abs(vals) ** 2 * rule.weights)))


# ---------------------------------------------------------------------------
# Holomorphic-side norms for tori

def _torus_frequency_vectors(f):
    labels = list(f.entries)
    nvecs = np.array([[int(v) for l in lab for v in np.atleast_1d(l)] for lab in labels],
                     dtype=int)
    coeffs = np.array([complex(f.entries[lab][0, 0]) for lab in labels])
    return nvecs, coeffs


def _gh_exponential_integrals(svals, t, rtol=1e-13):
    """integral of e^{-s Y} (pi t)^{-1/2} e^{-Y^2/t} dY for each s, by
    Gauss-Hermite recentred at the mean -s t / 2 of each integrand (the
    recentred rule is exact for a pure exponential; doubling guards the
    bookkeeping).  Values grow like e^{s^2 t / 4}."""
    svals = np.asarray(svals, dtype=float)
    q = 24
    prev = None
    while q <= 400:
        u, w = hermgauss(q)
        y = math.sqrt(t) * u[None, :] - (svals * t / 2.0)[:, None]
        expo = -svals[:, None] * y - y ** 2 / t + u[None, :] ** 2
        vals = (w[None, :] * np.exp(expo)).sum(axis=1) / math.sqrt(math.pi)
        if prev is not None and np.all(np.abs(vals - prev) <= rtol * np.maximum(1.0, np.abs(vals))):
            return vals, q
        prev = vals
        q *= 2
    raise ConsistencyError("Gauss-Hermite refinement for the Y-integrals did not stabilize")


def _theta_factor_integrals(dvals, t, weight):
    """integral of e^{i d theta} w(theta) dtheta/2pi on a uniform grid, where
    w is the angular factor of the chosen complexified measure."""
    dmax = int(np.max(np.abs(dvals))) if len(dvals) else 0
    if weight == "full":
        n_w, _ = _circle_coeff_cutoff(0.5 * t, 1e-16)
    else:
        n_w = 0
    m = dmax + n_w + 1
    theta = np.arange(m) * (2.0 * math.pi / m)
    wvals = circle_heat_series(0.5 * t, theta, n_w) if weight == "full" else np.ones(m)
    out = {}
    for dv in np.unique(dvals):
        out[int(dv)] = complex(np.mean(np.exp(1j * dv * theta) * wvals))
    return out


def bargmann_norm_sq_torus(f, t, weight="full", method="factored"):
    """Squared norm of the transform of f in the holomorphic space over the
    complexified torus, by theta-grid x Gauss-Hermite quadrature.

    ``weight="full"`` uses the complexified heat measure (the transform with
    the heat-weighted position norm); ``weight="quotient"`` uses the
    K-invariant quotient measure (the transform with the plain L2 norm).

    ``method="factored"`` expands |F|^2 over coefficient pairs and applies
    the two one-dimensional quadratures per coordinate; ``method="grid"``
    evaluates F pointwise on the full tensor grid.  Both are the same
    quadrature; the grid route is kept as a cross-check and is expensive in
    more than one dimension.
    """
    group = f.group
    if not group.is_torus:
        raise UnsupportedGroupError("holomorphic-side quadrature norms are torus-only; "
                                    "use the tensor-side norm for other groups")
    if weight not in ("full", "quotient"):
        raise ValueError("weight must be 'full' or 'quotient'")
    d = group.dim
    nvecs, coeffs = _torus_frequency_vectors(f)
    if method == "grid":
        return _bargmann_norm_grid(f, t, weight)
    heat_w = np.exp(-0.5 * t * (nvecs ** 2).sum(axis=1))
    sums = (nvecs[:, None, :] + nvecs[None, :, :])
    diffs = (nvecs[:, None, :] - nvecs[None, :, :])
    gh_vals, _ = _gh_exponential_integrals(np.unique(sums), t)
    gh_map = dict(zip(np.unique(sums).tolist(), gh_vals.tolist()))
    th_map = _theta_factor_integrals(np.unique(diffs), t, weight)
    total = 0.0 + 0.0j
    for i in range(len(nvecs)):
        for j in range(len(nvecs)):
            fac = coeffs[i] * np.conj(coeffs[j]) * heat_w[i] * heat_w[j]
            for k in range(d):
                fac *= th_map[int(nvecs[i, k] - nvecs[j, k])] * gh_map[int(nvecs[i, k] + nvecs[j, k])]
            total += fac
    return float(np.real(total))


def _bargmann_norm_grid(f, t, weight):
    group = f.group
    d = group.dim
    nvecs, coeffs = _torus_frequency_vectors(f)
    band = int(np.max(np.abs(nvecs))) if len(nvecs) else 0
    n_w, _ = _circle_coeff_cutoff(0.5 * t, 1e-16) if weight == "full" else (0, 0.0)
    m = 2 * band + n_w + 1
    theta1 = np.arange(m) * (2.0 * math.pi / m)
    q = 80
    u, w_gh = hermgauss(q)
    y1 = math.sqrt(t) * u
    th_grids = np.meshgrid(*([theta1] * d), indexing="ij")
    total = 0.0
    for y_idx in np.ndindex(*([q] * d)):
        yvec = np.array([y1[i] for i in y_idx])
        wy = np.prod([w_gh[i] for i in y_idx]) / math.pi ** (d / 2.0)
        z = np.stack([g.ravel() for g in th_grids], axis=-1) + 1j * yvec[None, :]
        fv = np.zeros(z.shape[0], dtype=complex)
        for nv, cf in zip(nvecs, coeffs):
            fv += cf * math.exp(-0.5 * t * float(nv @ nv)) * np.exp(1j * z @ nv.astype(float))
        dens = np.abs(fv) ** 2
        if weight == "full":
            wth = np.ones(z.shape[0])
            for k in range(d):
                wth *= circle_heat_series(0.5 * t, np.real(z[:, k]), n_w)
            dens = dens * wth
        total += wy * float(np.mean(dens))
    return total


def holomorphic_norm_sq(f, t, weight="full", tail_target=1e-10):
    """Holomorphic-side squared norm for any supported group.

    Tori: explicit quadrature (`bargmann_norm_sq_torus`).  Other groups: the
    weighted tensor norm of the Taylor coefficients, with its rigorous tail
    added so the result is an upper bound usable in the pointwise estimates.
    Only the full complexified measure is available off the torus.
    """
    if f.group.is_torus:
        return bargmann_norm_sq_torus(f, t, weight=weight)
    if weight != "full":
        raise UnsupportedGroupError("quotient-measure norms are computed for tori only")
    n_star = pick_truncation_degree(f, t, tail_target)
    s = hermite_degree_norms(f, t, n_star)
    value = math.fsum((t ** n / math.factorial(n)) * s[n] for n in range(n_star + 1))
    return value + hermite_tail_bound(f, t, n_star)


# ---------------------------------------------------------------------------
# Pointwise bounds (reproducing-kernel growth estimate)

def pointwise_bound_check(f, t, n_samples, rng, radius=None):
    """Check |F(g)|^2 <= |F|^2 exp(dist(e,g)^2 / t) on random complexified
    points, F being the transform of f.

    For tori the distance is exact.  For SU(2) the test uses the valid upper
    bound dist <= dist_K(e, x) + |Y| from the polar decomposition g = x e^{iY}
    (so the asserted inequality is implied by the theorem), and additionally
    reports the max ratio against the |Y|-only surrogate, which is a lower
    bound for the distance and therefore only a diagnostic.
    """
    group = f.group
    d = group.dim
    radius = radius if radius is not None else min(1.5, 1.5 * math.sqrt(t) + 0.5)
    thetas = rng.uniform(0, 2 * math.pi, size=(n_samples, d))
    yvecs = rng.normal(size=(n_samples, d))
    yvecs *= (rng.uniform(0, radius, size=n_samples) /
              np.maximum(np.linalg.norm(yvecs, axis=1), 1e-30))[:, None]

    from .groups import complexified_exp
    batch_parts = None
    pts = [complexified_exp(group, thetas[i], yvecs[i]) for i in range(n_samples)]
    batch_parts = [np.stack([np.asarray(p.parts[fi]) for p in pts])
                   for fi in range(len(group.factors))]
    fvals = segal_bargmann(f, t, batch_parts)

    norm_sq = holomorphic_norm_sq(f, t, weight="full")
    slices = group.factor_slices()
    dist_sq = np.zeros(n_samples)
    surrogate_sq = np.zeros(n_samples)
    for fi, fac in enumerate(group.factors):
        th = thetas[:, slices[fi]]
        yv = yvecs[:, slices[fi]]
        ynorm = np.linalg.norm(yv, axis=1)
        if isinstance(fac, TorusFactor):
            wrapped = np.mod(th + math.pi, 2 * math.pi) - math.pi
            dist_sq += np.sum(wrapped ** 2, axis=1) + ynorm ** 2
            surrogate_sq += np.sum(wrapped ** 2, axis=1) + ynorm ** 2
        else:
            phi = np.linalg.norm(th, axis=1) / math.sqrt(2.0)
            phi = np.minimum(np.abs(np.mod(phi + math.pi, 2 * math.pi) - math.pi), math.pi)
            dk = math.sqrt(2.0) * phi
            dist_sq += (dk + ynorm) ** 2
            surrogate_sq += ynorm ** 2
    ratios = np.abs(fvals) ** 2 / (norm_sq * np.exp(dist_sq / t))
    surrogate_ratios = np.abs(fvals) ** 2 / (norm_sq * np.exp(surrogate_sq / t))
    return {
        "test": "pointwise-bound",
        "group": group.kind,
        "t": t,
        "n_samples": n_samples,
        "max_ratio": float(np.max(ratios)),
        "violations": int(np.sum(ratios > 1.0 + 1e-10)),
        "surrogate_max_ratio": float(np.max(surrogate_ratios)),
        "pass": bool(np.all(ratios <= 1.0 + 1e-10)),
    }


# ---------------------------------------------------------------------------
# Torus phase-space density

def coherent_state_torus(group, t, tol=1e-18):
    """Unit-norm function whose transform is the reproducing kernel at the
    identity; the extremizing witness for the density bound."""
    if not group.is_torus:
        raise UnsupportedGroupError("coherent witness implemented for tori")
    n_max, _ = _circle_coeff_cutoff(t, tol)
    entries = {}
    for nvec in np.ndindex(*([2 * n_max + 1] * group.dim)):
        n = np.array(nvec) - n_max
        w = math.exp(-0.5 * t * float(n @ n))
        if w < tol:
            continue
        label = _torus_label(group, n)
        entries[label] = np.array([[w]], dtype=complex)
    f = FourierCoefficients(group, entries)
    norm = math.sqrt(f.plancherel_norm_sq())
    return f.scale(1.0 / norm)


def _torus_label(group, nvec):
    label, pos = [], 0
    for fac in group.factors:
        label.append(tuple(int(v) for v in nvec[pos:pos + fac.dim]))
        pos += fac.dim
    return tuple(label)


def phase_density_check_torus(f, t, grid=96, y_span=None, tol_norm=1e-6):
    """Husimi-type phase density of a unit vector f:

        D(theta, Y) = |Tf(theta + iY)|^2 q_t(Y) / (2 pi)^d,

    with q_t the quotient heat weight; integrates to one against
    dtheta dY.  Reports the integral, the sup, and the measured constant
    a_t = sup D * (2 pi t)^d.
    """
    group = f.group
    if not group.is_torus:
        raise UnsupportedGroupError("phase density is torus-only")
    d = group.dim
    nrm = f.plancherel_norm_sq()
    if abs(nrm - 1.0) > 1e-10:
        f = f.scale(1.0 / math.sqrt(nrm))
    integral = bargmann_norm_sq_torus(f, t, weight="quotient")

    y_span = y_span if y_span is not None else 4.0 * math.sqrt(t)
    th = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    ys = np.linspace(-y_span, y_span, grid + 1)
    th = np.concatenate([[0.0], th])
    ys = np.sort(np.concatenate([[0.0], ys]))
    sup_d = 0.0
    nvecs, coeffs = _torus_frequency_vectors(f)
    heat_w = coeffs * np.exp(-0.5 * t * (nvecs ** 2).sum(axis=1))
    for y_idx in np.ndindex(*([len(ys)] * d)):
        yvec = np.array([ys[i] for i in y_idx])
        grids = np.meshgrid(*([th] * d), indexing="ij")
        zth = np.stack([g.ravel() for g in grids], axis=-1)
        fv = np.zeros(zth.shape[0], dtype=complex)
        for nv, cw in zip(nvecs, heat_w):
            fv += cw * np.exp(1j * zth @ nv.astype(float)) * math.exp(-float(nv @ yvec))
        dens = np.abs(fv) ** 2 * float(quotient_heat_weight(d, t, yvec)) / (2 * math.pi) ** d
        sup_d = max(sup_d, float(np.max(dens)))
    a_t = sup_d * (2.0 * math.pi * t) ** d
    return {
        "test": "phase-density",
        "group": group.kind,
        "t": t,
        "integral": integral,
        "sup_density": sup_d,
        "measured_a_t": a_t,
        "pass": bool(abs(integral - 1.0) <= tol_norm),
    }


# ---------------------------------------------------------------------------
# Operator identities behind the norm computations

def split_laplacian_identity(irrep, t):
    """The identity that equates the heat exponent with the sum of the
    complexified-Laplacian exponent and the (anti)holomorphic squares, at the
    level of one irrep's generators with JX realized as i X: returns the
    max abs difference of the two sides (exactly zero in floating point)."""
    a = sum(g @ g for g in irrep.generators)
    lhs = (t / 2.0) * a
    jx_sq = sum((1j * g) @ (1j * g) for g in irrep.generators)
    rhs = (t / 4.0) * a + (t / 4.0) * jx_sq + (t / 4.0) * (a - jx_sq)
    return float(np.max(np.abs(lhs - rhs)))


def factored_heat_exponential_check(rep_a, rep_b, t):
    """Exponentiated form: on the (conj a) x (b) sector the heat exponent
    factors into the complexified quarter-Laplacian times the two scalar
    holomorphic/antiholomorphic squares.  Returns max abs deviation."""
    import scipy.linalg as sla
    da, db = rep_a.dim, rep_b.dim
    ga = [np.conj(g) for g in rep_a.generators]
    gb = list(rep_b.generators)
    eye_a, eye_b = np.eye(da), np.eye(db)
    total = sum(np.kron(a, eye_b) + np.kron(eye_a, b) for a, b in zip(ga, gb))
    heat_side = sla.expm((t / 2.0) * sum(
        (np.kron(a, eye_b) + np.kron(eye_a, b)) @ (np.kron(a, eye_b) + np.kron(eye_a, b))
        for a, b in zip(ga, gb)))
    cross = sum(np.kron(a, b) for a, b in zip(ga, gb))
    hol_sq = sum(b @ b for b in gb)        # scalar  -c_b * I
    antihol_sq = sum(a @ a for a in ga)    # scalar  -c_a * I
    split_side = (sla.expm(t * cross)
                  @ sla.expm((t / 2.0) * np.kron(eye_a, hol_sq))
                  @ sla.expm((t / 2.0) * np.kron(antihol_sq, eye_b)))
    return float(np.max(np.abs(heat_side - split_side)))
