"""Flat-space reference: Gaussian measures, the classical transform on
polynomials, heat-evolved (Hermite) polynomials, and their exact moments.

Everything acts on multivariate polynomials stored as {exponent tuple:
coefficient} maps.  With Fraction coefficients and rational t all identities
here are exact in rational arithmetic; Gaussian integrals are evaluated by
moment recursion, never by quadrature.
"""

from __future__ import annotations

import math
from fractions import Fraction


def poly(d=1, **_):
    return {}


def poly_from_monomial(expts, coeff=1):
    return {tuple(expts): coeff}


def poly_add(p, q):
    out = dict(p)
    for e, c in q.items():
        out[e] = out.get(e, 0) + c
        if out[e] == 0:
            del out[e]
    return out


def poly_scale(p, c):
    return {e: c * v for e, v in p.items()} if c != 0 else {}


def poly_mul(p, q):
    out = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return {e: c for e, c in out.items() if c != 0}


def poly_eval(p, z):
    total = 0
    for e, c in p.items():
        term = c
        for a, zk in zip(e, z):
            term = term * zk ** a
        total += term
    return total


def laplacian(p):
    out = {}
    for e, c in p.items():
        for k, a in enumerate(e):
            if a >= 2:
                e2 = tuple(v - 2 if i == k else v for i, v in enumerate(e))
                out[e2] = out.get(e2, 0) + c * a * (a - 1)
    return {e: c for e, c in out.items() if c != 0}


def heat_evolve(p, t):
    """exp(t Lap / 2) on a polynomial: the terminating series."""
    out = dict(p)
    term = dict(p)
    n = 0
    while term:
        n += 1
        term = laplacian(term)
        if not term:
            break
        term = {e: c * t / (2 * n) if isinstance(c, Fraction) or not isinstance(t, Fraction)
                else c * t / (2 * n) for e, c in term.items()}
        term = {e: c for e, c in term.items() if c != 0}
        out = poly_add(out, term)
    return out


def bt_euclid(p, t, z):
    """Transform of a polynomial evaluated at a complex point: apply the
    heat operator, read off at z (the analytic continuation is literal for
    polynomials)."""
    return poly_eval(heat_evolve(p, t), z)


def hermite_euclid(multi_index, t):
    """Heat-inverse of the monomial: H = exp(-t Lap / 2) x^multi_index.
    The transform sends it back to the plain monomial in z."""
    p = poly_from_monomial(multi_index, Fraction(1) if isinstance(t, Fraction) else 1.0)
    return heat_evolve(p, -t)


def gaussian_moment(n, t):
    """E[x^n] under the variance-t Gaussian, by the moment recursion
    m_n = (n-1) t m_{n-2}."""
    if n % 2:
        return 0 if isinstance(t, Fraction) else 0.0
    m = Fraction(1) if isinstance(t, Fraction) else 1.0
    for k in range(2, n + 1, 2):
        m = m * (k - 1) * t
    return m


def gaussian_inner(p, q, t):
    """integral of conj(p) q against the variance-t Gaussian in each
    coordinate (real-coefficient polynomials: plain product)."""
    prod = poly_mul(_conj_poly(p), q)
    total = 0
    for e, c in prod.items():
        term = c
        for a in e:
            term = term * gaussian_moment(a, t)
        total += term
    return total


def _conj_poly(p):
    return {e: (c.conjugate() if isinstance(c, complex) else c) for e, c in p.items()}


def hermite_orthogonality(m, n, t):
    """<H_m, H_n> under the Gaussian; equals delta_{mn} t^n n! per coordinate."""
    hm = hermite_euclid(m, t)
    hn = hermite_euclid(n, t)
    return gaussian_inner(hm, hn, t)


def monomial_norm_closed(n, t):
    """|z^n|^2 in the holomorphic space over C (d = 1): t^n n!."""
    val = Fraction(1) if isinstance(t, Fraction) else 1.0
    for k in range(1, n + 1):
        val = val * t * k
    return val


def monomial_norm_quadrature(n, t, n_nodes=48):
    """|z^n|^2 over C by radial Gauss-Laguerre against the normalized
    Gaussian (pi t)^{-1} exp(-|z|^2/t).  (Node counts beyond ~120 are
    unstable in numpy's laggauss; 48 is exact far past our degrees.)"""
    import numpy as np
    x, w = np.polynomial.laguerre.laggauss(n_nodes)
    # substitute u = r^2 / t: integral r^{2n} e^{-r^2/t} (2 r dr)/t = t^n u^n e^{-u} du
    return float(np.sum(w * (t * x) ** n))


def monomial_norm_check(n, t):
    closed = monomial_norm_closed(n, t)
    quad = monomial_norm_quadrature(n, float(t))
    err = abs(float(closed) - quad) / max(float(closed), 1e-300)
    return {"test": "monomial-norm", "n": n, "t": float(t), "closed": float(closed),
            "quadrature": quad, "rel_err": err, "pass": bool(err <= 1e-10)}


def taylor_coefficients_euclid(p, t, max_degree):
    """All partial-derivative arrays of the heat-evolved polynomial at 0;
    the flat counterpart of the group-side coefficient map (d = 1 only
    needs the diagonal, but the full array is cheap)."""
    evolved = heat_evolve(p, t)
    d = len(next(iter(p))) if p else 1
    out = []
    import itertools
    import numpy as np
    for n in range(max_degree + 1):
        arr = np.zeros((d,) * n, dtype=complex)
        for kvec in itertools.product(range(d), repeat=n):
            e = [0] * d
            for k in kvec:
                e[k] += 1
            coef = evolved.get(tuple(e), 0)
            arr[kvec] = complex(coef) * math.prod(math.factorial(a) for a in e)
        out.append(arr)
    return out


def flat_norm_identity_check(p, t, max_degree=12):
    """|p|^2 under the Gaussian equals the weighted sum of squared
    derivative arrays of the heat-evolved polynomial; exact for rational
    data, so the residual is pure roundoff."""
    import numpy as np
    lhs = gaussian_inner(p, p, t)
    arrays = taylor_coefficients_euclid(p, float(t), max_degree)
    rhs = math.fsum(float(t) ** n / math.factorial(n) * float(np.sum(np.abs(a) ** 2))
                    for n, a in enumerate(arrays))
    err = abs(float(lhs) - rhs) / max(abs(float(lhs)), 1e-300)
    return {"test": "flat-norm-identity", "t": float(t), "lhs": float(lhs), "rhs": rhs,
            "rel_err": err, "pass": bool(err <= 1e-12)}
