"""Monte-Carlo holonomy of algebra-valued white noise, pushforward checks
against the heat kernel, loop gauge transformations, and low-order chaos
expansions.

A path on mesh m carries independent increments dW_i ~ N(0, (t/m) I_dim) in
the orthonormal algebra basis; the holonomy is the time-ordered product
exp(dW_1) exp(dW_2) ... exp(dW_m).  Randomness comes from counter-based
streams keyed by (seed, sample index), so results are reproducible under any
batch or thread partitioning.  Accumulations use numpy pairwise summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .groups import TorusFactor, SU2Factor, GroupPoint, su2_exp, su2_log
from .heat import FourierCoefficients
from .fock import taylor_map, hermite_degree_norms, hermite_tail_bound


def _philox(seed, sample_index):
    return np.random.Generator(np.random.Philox(key=[seed, sample_index]))


@dataclass
class NoisePath:
    """One discretized noise sample with its Brownian increments."""

    group: object
    t: float
    mesh: int
    increments: np.ndarray          # (mesh, dim)
    seed: int = 0
    sample_index: int = 0

    @classmethod
    def sample(cls, group, t, mesh, seed, sample_index=0):
        rng = _philox(seed, sample_index)
        inc = rng.normal(0.0, math.sqrt(t / mesh), size=(mesh, group.dim))
        return cls(group, t, mesh, inc, seed, sample_index)

    @classmethod
    def zero(cls, group, t, mesh):
        return cls(group, t, mesh, np.zeros((mesh, group.dim)))

    def coarsen(self, factor):
        """Merge consecutive increments; the coarse path is driven by the
        same Brownian motion."""
        if self.mesh % factor:
            raise ValueError("mesh not divisible by coarsening factor")
        inc = self.increments.reshape(self.mesh // factor, factor, -1).sum(axis=1)
        return NoisePath(self.group, self.t, self.mesh // factor, inc,
                         self.seed, self.sample_index)


def holonomy(path):
    """Ordered product of per-step exponentials, as a GroupPoint."""
    parts = holonomy_batch(path.group, path.increments[None, ...])
    return GroupPoint(path.group, tuple(p[0] for p in parts))


def holonomy_batch(group, increments):
    """Holonomies for a batch of increment arrays, shape (B, mesh, dim).

    Returns per-factor coordinate arrays (angles (B, d_f) or matrices
    (B, 2, 2))."""
    increments = np.asarray(increments)
    nb, mesh, _ = increments.shape
    out = []
    for fac, sl in zip(group.factors, group.factor_slices()):
        inc = increments[:, :, sl]
        if isinstance(fac, TorusFactor):
            out.append(np.mod(inc.sum(axis=1), 2.0 * math.pi))
        else:
            acc = np.tile(np.eye(2, dtype=complex), (nb, 1, 1))
            for i in range(mesh):
                acc = acc @ _su2_exp_batch(inc[:, i, :])
            out.append(acc)
    return out


def _su2_exp_batch(y):
    """Closed-form exponentials for a batch of algebra vectors (B, 3)."""
    r = np.linalg.norm(y, axis=1)
    phi = r / math.sqrt(2.0)
    c = np.cos(phi)
    s = np.sin(phi)
    with np.errstate(invalid="ignore", divide="ignore"):
        n = np.where(r[:, None] > 0, y / np.maximum(r, 1e-300)[:, None], 0.0)
    u = np.empty((len(y), 2, 2), dtype=complex)
    u[:, 0, 0] = c + 1j * s * n[:, 2]
    u[:, 0, 1] = 1j * s * (n[:, 0] - 1j * n[:, 1])
    u[:, 1, 0] = 1j * s * (n[:, 0] + 1j * n[:, 1])
    u[:, 1, 1] = c - 1j * s * n[:, 2]
    return u


def su2_character_batch(two_j, mats):
    """Characters U_{2j}(cos phi) from the conjugation angle, vectorized."""
    z = np.real(np.trace(mats, axis1=-2, axis2=-1)) / 2.0
    if two_j == 0:
        return np.ones_like(z)
    prev = np.ones_like(z)
    cur = 2.0 * z
    for _ in range(two_j - 1):
        prev, cur = cur, 2.0 * z * cur - prev
    return cur


def sample_holonomies(group, t, mesh, n_samples, seed, batch=4096):
    """Generator of per-factor holonomy coordinate batches."""
    done = 0
    while done < n_samples:
        nb = min(batch, n_samples - done)
        inc = np.stack([
            _philox(seed, done + i).normal(0.0, math.sqrt(t / mesh), size=(mesh, group.dim))
            for i in range(nb)])
        yield holonomy_batch(group, inc)
        done += nb


def character_expectation_mc(group, t, irrep, mesh, n_samples, seed, batch=4096):
    """Monte-Carlo mean and standard error of the irrep character of the
    holonomy."""
    vals = []
    for parts in sample_holonomies(group, t, mesh, n_samples, seed, batch):
        vals.append(np.real(irrep.character_many(parts)))
    vals = np.concatenate(vals)
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    return mean, stderr


def su2_single_step_factor(t, mesh, two_j):
    """Exact one-step attenuation of the spin-(j) character under the
    product-of-exponentials scheme.

    The isotropic Gaussian step is conjugation invariant, so the expected
    irrep matrix is a scalar; the holonomy expectation is its mesh-th power.
    Evaluated by quadrature over the radial (chi-squared, 3 dof) density.
    """
    from scipy.integrate import quad
    eps = t / mesh

    def integrand(r):
        z = math.cos(r * math.sqrt(eps) / math.sqrt(2.0))
        # U_{2j}(z) by recurrence
        prev, cur = 1.0, 2.0 * z
        if two_j == 0:
            chi = 1.0
        elif two_j == 1:
            chi = cur
        else:
            for _ in range(two_j - 1):
                prev, cur = cur, 2.0 * z * cur - prev
            chi = cur
        dens = math.sqrt(2.0 / math.pi) * r * r * math.exp(-r * r / 2.0)
        return chi * dens

    val, _ = quad(integrand, 0.0, 12.0, limit=200)
    return val / (two_j + 1)


def pushforward_check(group, t, irreps, mesh, n_samples, seed, z_tol=3.0, z_fail=4.0):
    """Compare Monte-Carlo character means of the holonomy with the heat
    kernel values dim * exp(-t * casimir / 2)."""
    rows = []
    all_pass = True
    for rep in irreps:
        mean, stderr = character_expectation_mc(group, t, rep, mesh, n_samples, seed)
        target = rep.dim * math.exp(-t * rep.casimir / 2.0)
        z = (mean - target) / stderr if stderr > 0 else 0.0
        ok = abs(z) <= z_tol
        if abs(z) > z_fail:
            all_pass = False
        rows.append({"irrep": rep.label_str, "mc_mean": mean, "stderr": stderr,
                     "target": target, "z": z, "pass": ok})
        all_pass = all_pass and ok
    return {"test": "pushforward", "group": group.kind, "t": t,
            "mesh": mesh, "n_samples": n_samples, "rows": rows, "pass": all_pass}


def weak_order_study(t, two_j, meshes=(250, 1000, 4000)):
    """Exact weak error |E chi(holonomy_m) - heat value| of the scheme on
    SU(2) across meshes, with the fitted order (slope in log-log)."""
    j = two_j / 2.0
    target = (two_j + 1) * math.exp(-t * j * (j + 1.0))
    errs = []
    for m in meshes:
        factor = su2_single_step_factor(t, m, two_j)
        errs.append(abs((two_j + 1) * factor ** m - target))
    logs_m = np.log(np.asarray(meshes, dtype=float))
    logs_e = np.log(np.maximum(errs, 1e-300))
    slope = -np.polyfit(logs_m, logs_e, 1)[0]
    return {"test": "weak-order", "t": t, "two_j": two_j, "meshes": list(meshes),
            "errors": errs, "order": float(slope), "pass": bool(slope >= 0.95)}


# ---------------------------------------------------------------------------
# Loop gauge action

@dataclass
class Loop:
    """Discretized finite-energy loop: node values on a uniform grid over
    [0, 1] with matching endpoints at the identity.

    Torus factors store a continuous angle lift so winding loops telescope
    exactly; SU(2) factors store node matrices.
    """

    group: object
    mesh: int
    parts: tuple                   # per factor: (mesh+1, d_f) lifts or (mesh+1, 2, 2)

    @classmethod
    def smooth_random(cls, group, mesh, rng, winding=0, amplitude=0.6):
        tau = np.linspace(0.0, 1.0, mesh + 1)
        parts = []
        for fac in group.factors:
            if isinstance(fac, TorusFactor):
                lift = np.zeros((mesh + 1, fac.dim))
                for k in range(fac.dim):
                    a1, a2 = rng.normal(size=2) * amplitude
                    lift[:, k] = (2.0 * math.pi * winding * tau
                                  + a1 * np.sin(math.pi * tau) ** 2
                                  + a2 * np.sin(2.0 * math.pi * tau))
                parts.append(lift)
            else:
                a = rng.normal(size=3) * amplitude
                b = rng.normal(size=3) * amplitude
                mats = np.empty((mesh + 1, 2, 2), dtype=complex)
                for i, s in enumerate(tau):
                    y = a * math.sin(math.pi * s) ** 2 + b * math.sin(2.0 * math.pi * s)
                    mats[i] = su2_exp(y)
                parts.append(mats)
        return cls(group, mesh, tuple(parts))

    def subsample(self, mesh):
        if self.mesh % mesh:
            raise ValueError("loop mesh not divisible")
        step = self.mesh // mesh
        return Loop(self.group, mesh,
                    tuple(p[::step] for p in self.parts))


def loop_action(loop, path):
    """Gauge transformation of the noise increments:

        dW_i  ->  Ad_{l(tau_i)} dW_i  -  (finite-difference log-derivative) dtau,

    whose holonomy converges to the untransformed one as the mesh refines
    (exactly, and with exact telescoping, on torus factors)."""
    if loop.mesh != path.mesh:
        raise ValueError("loop and path meshes differ")
    m = path.mesh
    group = path.group
    new_inc = np.empty_like(path.increments)
    for fac, sl, lpart in zip(group.factors, group.factor_slices(), loop.parts):
        inc = path.increments[:, sl]
        if isinstance(fac, TorusFactor):
            dl = lpart[1:] - lpart[:-1]
            new_inc[:, sl] = inc - dl
        else:
            for i in range(m):
                l_i = lpart[i]
                ad = _su2_adjoint(l_i)
                step_log = su2_log(lpart[i + 1] @ l_i.conj().T)
                new_inc[i, sl] = ad @ inc[i] - step_log
    return NoisePath(group, path.t, m, new_inc, path.seed, path.sample_index)


def _su2_adjoint(u):
    """Matrix of Ad_u on the orthonormal basis: Ad_u X_k = sum_l M[l,k] X_l."""
    from .groups import SU2_BASIS
    m = np.empty((3, 3))
    for k, xk in enumerate(SU2_BASIS):
        img = u @ np.asarray(xk) @ u.conj().T
        for l, xl in enumerate(SU2_BASIS):
            m[l, k] = float(np.real(np.trace(np.asarray(xl).conj().T @ img)))
    return m


def gauge_invariance_study(group, t, seed, meshes=(250, 1000, 4000), n_paths=32):
    """Distance between holonomies of gauged and ungauged refinements of the
    same Brownian paths; fits the convergence order."""
    rng = np.random.default_rng(seed)
    fine = max(meshes)
    loop_fine = Loop.smooth_random(group, fine, rng, winding=1)
    errs = {m: [] for m in meshes}
    for i in range(n_paths):
        path_fine = NoisePath.sample(group, t, fine, seed, i)
        for m in meshes:
            path = path_fine.coarsen(fine // m)
            loop = loop_fine.subsample(m)
            h0 = holonomy(path)
            h1 = holonomy(loop_action(loop, path))
            errs[m].append(group.distance(h0, h1))
    means = [float(np.mean(errs[m])) for m in meshes]
    logs_m = np.log(np.asarray(meshes, dtype=float))
    logs_e = np.log(np.maximum(means, 1e-300))
    slope = -np.polyfit(logs_m, logs_e, 1)[0] if max(means) > 0 else float("inf")
    return {"test": "loop-gauge-invariance", "group": group.kind, "t": t,
            "meshes": list(meshes), "mean_errors": means, "order": float(slope),
            "pass": bool(slope >= 0.9 or max(means) < 1e-14)}


# ---------------------------------------------------------------------------
# Chaos expansion

def chaos_residual_check(f, t, mesh, n_samples, seed, z_tol=3.0, batch=2048):
    """Variance of the order-<=2 chaos remainder of f(holonomy) against the
    tensor-norm tail.

    The order-n term is the iterated forward-difference integral of the
    degree-n Taylor coefficients; the residual's second moment should match
    sum_{n>2} (t^n/n!) |xi_n|^2 within Monte-Carlo error.
    """
    group = f.group
    xi = taylor_map(f, t, 2)
    xi0 = complex(xi.components[0])
    xi1 = np.asarray(xi.components[1])
    xi2 = np.asarray(xi.components[2])
    n_star = 80
    s = hermite_degree_norms(f, t, n_star)
    tail = math.fsum((t ** n / math.factorial(n)) * s[n] for n in range(3, n_star + 1))
    tail += hermite_tail_bound(f, t, n_star)

    sq_sums = []
    done = 0
    while done < n_samples:
        nb = min(batch, n_samples - done)
        inc = np.stack([
            _philox(seed, done + i).normal(0.0, math.sqrt(t / mesh), size=(mesh, group.dim))
            for i in range(nb)])
        parts = holonomy_batch(group, inc)
        fh = f.evaluate(parts)
        i1 = np.einsum("k,bik->b", xi1, inc)
        csum = np.cumsum(inc, axis=1)
        prior = np.concatenate([np.zeros((nb, 1, group.dim)), csum[:, :-1, :]], axis=1)
        i2 = np.einsum("jk,bij,bik->b", xi2, prior, inc)
        resid = fh - (xi0 + i1 + i2)
        sq_sums.append(np.abs(resid) ** 2)
        done += nb
    sq = np.concatenate(sq_sums)
    mean = float(np.mean(sq))
    stderr = float(np.std(sq, ddof=1) / math.sqrt(len(sq)))
    z = (mean - tail) / stderr if stderr > 0 else 0.0
    return {"test": "chaos-residual", "group": group.kind, "t": t, "mesh": mesh,
            "n_samples": n_samples, "residual_variance": mean, "stderr": stderr,
            "target_tail": tail, "z": z, "pass": bool(abs(z) <= z_tol)}


def wrapped_gaussian_cdf(x, t, n_images=60):
    """CDF on [-pi, pi) of the wrapped N(0, t) distribution."""
    from scipy.stats import norm
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for k in range(-n_images, n_images + 1):
        total += norm.cdf(x + 2.0 * math.pi * k, scale=math.sqrt(t)) \
            - norm.cdf(-math.pi + 2.0 * math.pi * k, scale=math.sqrt(t))
    return total


def torus_holonomy_ks_check(t, mesh, n_samples, seed, alpha=0.01):
    """Kolmogorov-Smirnov comparison of circle holonomy angles with the
    wrapped Gaussian law (the abelian case is exact at any mesh)."""
    from scipy.stats import kstest
    from .groups import make_group
    group = make_group("torus:1")
    angles = []
    for parts in sample_holonomies(group, t, mesh, n_samples, seed):
        angles.append(np.mod(parts[0][:, 0] + math.pi, 2.0 * math.pi) - math.pi)
    angles = np.concatenate(angles)
    res = kstest(angles, lambda x: wrapped_gaussian_cdf(x, t))
    return {"test": "torus-holonomy-ks", "t": t, "mesh": mesh, "n_samples": n_samples,
            "statistic": float(res.statistic), "pvalue": float(res.pvalue),
            "pass": bool(res.pvalue > alpha)}
