"""Low-level numerical kernels: Bessel evaluations, root finding, quadrature, Hessians.

Every routine validates its domain and raises early; the physics modules above
rely on these contracts instead of re-checking. Bessel orders are limited to the
set actually used by the mode solver.
"""

import numpy as np
from scipy import integrate as _sci_integrate
from scipy import optimize as _sci_optimize
from scipy import special as _sci_special

from .errors import ConvergenceError, IntegrationError

SUPPORTED_ORDERS = (0, 1, 2, 3)

_ROOT_MAX_ITER = 200


def _check_order(order):
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported Bessel order {order!r}; supported: {SUPPORTED_ORDERS}")


def bessel_j(order, x):
    """Bessel function of the first kind J_order(x).

    Accepts scalars or arrays; order must be in SUPPORTED_ORDERS.
    """
    _check_order(order)
    return _sci_special.jv(order, x)


def _k_orders(arr, top):
    # Cephes k0/k1 are several times faster than the generic kv path on the
    # large arrays the field evaluator produces; higher orders follow the
    # upward recurrence, stable here because every term is positive.
    ks = [_sci_special.k0(arr), _sci_special.k1(arr)]
    for n in range(1, top):
        ks.append(ks[-1] * (2.0 * n / arr) + ks[-2])
    return ks


def bessel_k(order, x):
    """Modified Bessel function of the second kind K_order(x), x > 0.

    K_nu diverges at 0 and is undefined for x <= 0, so those inputs raise.
    """
    _check_order(order)
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("bessel_k requires x > 0")
    if order == 0:
        return _sci_special.k0(arr)
    if order == 1:
        return _sci_special.k1(arr)
    return _k_orders(arr, order)[order]


def bessel_j_deriv(order, x):
    """First derivative of J_order at x.

    Orders 0..2 follow J'_n = (J_{n-1} - J_{n+1})/2; order 3 uses the
    equivalent recurrence J'_3 = J_2 - (3/x) J_3 to stay inside the
    supported order set.
    """
    _check_order(order)
    arr = np.asarray(x, dtype=float)
    if order == 3:
        out = np.where(arr != 0.0,
                       _sci_special.jv(2, arr) - np.divide(3.0, arr, out=np.ones_like(arr),
                                                           where=arr != 0.0) * _sci_special.jv(3, arr),
                       0.0)
        return out if out.shape else float(out)
    return _sci_special.jvp(order, x)


def bessel_k_deriv(order, x):
    """First derivative of K_order at x, x > 0.

    Uses K'_n = -(K_{n-1} + K_{n+1})/2, with K_{-1} = K_1 for the n = 0 case.
    """
    _check_order(order)
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("bessel_k_deriv requires x > 0")
    if order == 0:
        return -_sci_special.k1(arr)
    ks = _k_orders(arr, order + 1)
    return -0.5 * (ks[order - 1] + ks[order + 1])


def bessel_deriv(kind, order, x):
    """Derivative of a Bessel function; kind is "J" or "K"."""
    if kind == "J":
        return bessel_j_deriv(order, x)
    if kind == "K":
        return bessel_k_deriv(order, x)
    raise ValueError(f"unknown Bessel kind {kind!r}; expected 'J' or 'K'")


def find_root(f, lo, hi, tol=1e-12):
    """Locate a root of f inside the bracket [lo, hi].

    The bracket must show a sign change. Uses a safeguarded bisection/secant
    scheme (Brent); deterministic for identical inputs. Raises ValueError when
    the bracket carries no sign change and ConvergenceError when f evaluates to
    a non-finite value or the iteration cap is hit.
    """
    if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
        raise ValueError(f"invalid bracket ({lo!r}, {hi!r})")

    def checked(x):
        y = f(x)
        if not np.isfinite(y):
            raise ConvergenceError(f"objective returned non-finite value {y!r} at x={x!r}")
        return y

    flo, fhi = checked(lo), checked(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError(f"no sign change on bracket ({lo!r}, {hi!r})")
    try:
        root, res = _sci_optimize.brentq(
            checked, lo, hi, xtol=tol, rtol=4.0 * np.finfo(float).eps,
            maxiter=_ROOT_MAX_ITER, full_output=True)
    except RuntimeError as exc:
        raise ConvergenceError(str(exc)) from exc
    if not res.converged:
        raise ConvergenceError(f"root iteration failed to converge in {_ROOT_MAX_ITER} steps")
    return root


def integrate(f, lo, hi, tol=1e-10):
    """Definite integral of f over [lo, hi]; hi may be numpy.inf.

    Adaptive quadrature with the infinite tail handled by the integrator's
    substitution. Raises IntegrationError (carrying the best estimate) when the
    error estimate misses the requested tolerance or the value is non-finite.
    """
    if not np.isfinite(lo):
        raise ValueError("lower limit must be finite")
    with np.errstate(over="ignore"):
        value, abserr = _sci_integrate.quad(f, lo, hi, epsabs=tol, epsrel=tol, limit=200)
    if not np.isfinite(value):
        raise IntegrationError("integral evaluated to a non-finite value", value)
    if abserr > 10.0 * max(tol, tol * abs(value)):
        raise IntegrationError(
            f"quadrature error estimate {abserr:.3e} exceeds tolerance {tol:.3e}", value)
    return value


def hessian(f, point, steps):
    """Symmetric 3x3 Hessian of a scalar field by central second differences.

    point and steps are length-3 sequences; steps are per-axis displacement
    magnitudes. Diagonal entries use the 3-point second difference, off-diagonal
    entries the 4-point mixed stencil. The result is symmetric by construction.
    """
    p = np.asarray(point, dtype=float)
    d = np.asarray(steps, dtype=float)
    if p.shape != (3,) or d.shape != (3,):
        raise ValueError("point and steps must be length-3 sequences")
    if np.any(d <= 0.0):
        raise ValueError("steps must be positive")

    def at(off):
        return float(f(p + off))

    h = np.empty((3, 3), dtype=float)
    f0 = at(np.zeros(3))
    for i in range(3):
        ei = np.zeros(3)
        ei[i] = d[i]
        h[i, i] = (at(ei) - 2.0 * f0 + at(-ei)) / d[i] ** 2
    for i in range(3):
        for j in range(i + 1, 3):
            ei = np.zeros(3)
            ej = np.zeros(3)
            ei[i] = d[i]
            ej[j] = d[j]
            hij = (at(ei + ej) - at(ei - ej) - at(-ei + ej) + at(-ei - ej)) / (4.0 * d[i] * d[j])
            h[i, j] = hij
            h[j, i] = hij
    if not np.all(np.isfinite(h)):
        raise ConvergenceError("Hessian stencil produced non-finite entries")
    return h
