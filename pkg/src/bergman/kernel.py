"""Truncated Poincare-series evaluation of the weight-2k Bergman kernel.

Each orbit term is (2k-1)/(4*pi) * u(gamma, z)^(2k) with
u = 2iy / ((z - conj(gamma z)) * conj(c z + d)); the magnitude of u is
1/cosh(d(z, gamma z)/2), so terms are stored in log-magnitude/phase
form and reduced by compensated summation after rescaling.  The series
splits into identity / cusp-stabilizer / rest buckets, with the
explicit bound constants attached.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

from scipy.special import gammaln

from .groups import FuchsianGroup, OrbitEnumeration, enumerate_group_elements
from .uhp import DomainError, MoebiusTransform, UhpPoint, apply_moebius

TWO_PI = 2.0 * math.pi


class NumericUnderflow(RuntimeError):
    """All non-identity terms underflowed double precision."""


def identity_term(k: int) -> float:
    """Leading coefficient (2k-1)/(4*pi) of the kernel series."""
    if k < 2:
        raise DomainError("k must be >= 2")
    return (2 * k - 1) / (4.0 * math.pi)


def gamma_ratio(k: int) -> float:
    """Gamma(k - 1/2) / Gamma(k), via log-gamma; ~ 1/sqrt(k) for large k."""
    if k < 2:
        raise DomainError("k must be >= 2")
    return math.exp(gammaln(k - 0.5) - gammaln(k))


def parabolic_term_bound(y: float, k: int) -> float:
    """Bound on the cusp-stabilizer block: y(2k-1)/sqrt(pi) * Gamma ratio."""
    if y <= 0:
        raise DomainError("y must be positive")
    if k < 3:
        raise DomainError("k must be >= 3")
    return y * (2 * k - 1) / math.sqrt(math.pi) * gamma_ratio(k)


@dataclass(frozen=True)
class CXConstant:
    r_x: float
    k: int
    value: float


def cx_constant(r_x: float, k: int) -> CXConstant:
    """Explicit constant bounding the non-parabolic block of the series."""
    if r_x <= 0:
        raise DomainError("injectivity radius must be positive")
    if k < 3:
        raise DomainError("k must be >= 3")
    if math.isinf(r_x):
        return CXConstant(r_x=r_x, k=k, value=0.0)
    ch4 = math.cosh(r_x / 4.0)
    ch2 = math.cosh(r_x / 2.0)
    sh4 = math.sinh(r_x / 4.0)
    value = (2 * k - 1) / (4.0 * math.pi) * (
        16.0 / ch4 ** (2 * k - 4) + 8.0 / ch2 ** (2 * k - 3)
    ) + (2 * k - 1) / (2.0 * math.pi * sh4 * sh4) * (
        1.0 / ch2 ** (2 * k - 3) + 1.0 / ch2 ** (2 * k - 4)
    )
    return CXConstant(r_x=r_x, k=k, value=value)


@dataclass
class TruncationReport:
    displacement_bound: float
    terms_used: int
    tail_estimate: float
    exhaustive: bool


@dataclass
class KernelEvaluation:
    value_diagonal: float
    identity_part: float
    parabolic_part: complex
    rest_part: complex
    truncation: TruncationReport
    imag_residual: float = 0.0
    min_nonparabolic_cosh2: float = math.inf


def term_log_phase(gamma: MoebiusTransform, z: UhpPoint, k: int):
    """(log magnitude, phase) of u(gamma, z)^(2k)."""
    w = apply_moebius(gamma, z)
    s = z.z - complex(w.x, -w.y)
    mu = (gamma.c * z.z + gamma.d).conjugate()
    u = 2j * z.y / (s * mu)
    return 2 * k * math.log(abs(u)), 2 * k * cmath.phase(u)


def term_value(gamma: MoebiusTransform, z: UhpPoint, k: int) -> complex:
    """Full series term (2k-1)/(4 pi) * u^(2k) for one group element."""
    lg, ph = term_log_phase(gamma, z, k)
    return identity_term(k) * cmath.exp(complex(lg, ph))


def _reduce_log_terms(terms) -> complex:
    """Sum exp(lg)*e^{i ph} over (lg, ph) pairs, rescaled by the max log."""
    if not terms:
        return 0j
    top = max(lg for lg, _ in terms)
    if top == -math.inf:
        return 0j
    re = math.fsum(math.exp(lg - top) * math.cos(ph) for lg, ph in terms)
    im = math.fsum(math.exp(lg - top) * math.sin(ph) for lg, ph in terms)
    return math.exp(top) * complex(re, im)


def kernel_diagonal_from_elements(
    elements,
    z: UhpPoint,
    k: int,
    displacement_bound: float,
    exhaustive: bool,
    frontier_count: int = 1,
) -> KernelEvaluation:
    """Bucketed diagonal sum over an explicit, deterministic element list."""
    id_coeff = identity_term(k)
    par_terms, rest_terms = [], []
    n_terms = 0
    min_rest = math.inf
    for item in elements:
        gamma = item[0] if isinstance(item, tuple) else item
        n_terms += 1
        if gamma.is_identity():
            continue
        lg_ph = term_log_phase(gamma, z, k)
        if gamma.is_cusp_translation():
            par_terms.append(lg_ph)
        else:
            rest_terms.append(lg_ph)
            t = math.exp(-lg_ph[0] / k)  # cosh^2 of half displacement
            min_rest = min(min_rest, t)
    parabolic = id_coeff * _reduce_log_terms(par_terms)
    rest = id_coeff * _reduce_log_terms(rest_terms)
    value = id_coeff + parabolic.real + rest.real
    tail = id_coeff * max(frontier_count, 1) * displacement_bound ** (-(k - 2)) \
        if exhaustive else math.inf
    return KernelEvaluation(
        value_diagonal=value,
        identity_part=id_coeff,
        parabolic_part=parabolic,
        rest_part=rest,
        truncation=TruncationReport(
            displacement_bound=displacement_bound,
            terms_used=n_terms,
            tail_estimate=tail,
            exhaustive=exhaustive,
        ),
        imag_residual=abs(parabolic.imag + rest.imag),
        min_nonparabolic_cosh2=min_rest,
    )


def bergman_kernel_diagonal(
    group: FuchsianGroup,
    z: UhpPoint,
    k: int,
    displacement_bound: float = 100.0,
    budget: int = 200_000,
    enumeration: Optional[OrbitEnumeration] = None,
) -> KernelEvaluation:
    """Diagonal Petersson norm of the kernel by truncated orbit summation."""
    if k < 2:
        raise DomainError("k must be >= 2")
    enum = enumeration or enumerate_group_elements(
        group, z, displacement_bound, budget=budget)
    return kernel_diagonal_from_elements(
        enum.elements, z, k,
        displacement_bound=enum.displacement_bound,
        exhaustive=enum.exhaustive_flag,
        frontier_count=enum.frontier_count,
    )


def alpha_decomposition(evaluation: KernelEvaluation, k: int) -> float:
    """alpha(z) = diagonal value minus the identity contribution."""
    return evaluation.value_diagonal - identity_term(k)


def bergman_kernel_offdiag(
    group: FuchsianGroup,
    z: UhpPoint,
    w: UhpPoint,
    k: int,
    displacement_bound: float = 100.0,
    budget: int = 200_000,
) -> complex:
    """Two-point weight-0 kernel B_k(z, w), for symmetry checks.

    Truncation is driven by the orbit of w; the bound on d(w, gamma w)
    is inflated by d(z, w) so that all terms down to the requested
    displacement of gamma w from z are present.
    """
    from .uhp import hyp_distance

    d_target = 2.0 * math.acosh(math.sqrt(displacement_bound))
    d_infl = d_target + hyp_distance(z, w)
    bound = math.cosh(d_infl / 2.0) ** 2
    enum = enumerate_group_elements(group, w, bound, budget=budget)
    coeff = (2 * k - 1) * (2j) ** (2 * k) / (4.0 * math.pi)
    total = 0j
    for gamma, _ in enum.elements:
        gw = apply_moebius(gamma, w)
        s = z.z - complex(gw.x, -gw.y)
        mu = (gamma.c * w.z + gamma.d).conjugate()
        total += 1.0 / (s ** (2 * k) * mu ** (2 * k))
    return coeff * total


def poincare_weight0_bundle(elements, z: UhpPoint, k: int):
    """Weight-0 kernel B(z) and its Wirtinger derivatives, term by term.

    Differentiates the two-variable series analytically and restricts
    to the diagonal.  Returns (B, dB/dz, d2B/dz dzbar); dB/dzbar is the
    conjugate of dB/dz.
    """
    coeff = (2 * k - 1) * (2j) ** (2 * k) / (4.0 * math.pi)
    vals, d1s, d2s = [], [], []
    for item in elements:
        gamma = item[0] if isinstance(item, tuple) else item
        gz = apply_moebius(gamma, z)
        s = z.z - complex(gz.x, -gz.y)
        mu = (gamma.c * z.z + gamma.d).conjugate()
        b = 1.0 / (s * mu)
        b2k = b ** (2 * k)
        vals.append(b2k)
        d1s.append(-2 * k * b2k * b * mu)
        d2s.append(-2 * k * (2 * k + 1) * b2k * b * b
                   + 4 * k * k * gamma.c * b2k * b)
    value = coeff * _csum(vals)
    d1 = coeff * _csum(d1s)
    d2 = coeff * _csum(d2s)
    return value.real, d1, d2


def _csum(values) -> complex:
    return complex(math.fsum(v.real for v in values),
                   math.fsum(v.imag for v in values))
