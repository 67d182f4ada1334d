"""Cusp forms given by truncated q-expansions.

Evaluation, Petersson Gram matrices by Gauss-Legendre quadrature with
an analytic exponential tail, orthonormalization, the basis-side
Bergman kernel, and JSON-lines ingestion.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cholesky, eigvalsh, solve_triangular
from scipy.special import gammaincc, gammaln
from scipy.special import roots_legendre

from .uhp import DomainError, MoebiusTransform, UhpPoint, apply_moebius

TWO_PI = 2.0 * math.pi


class QuadratureNotConverged(RuntimeError):
    pass


class GramSingular(RuntimeError):
    pass


@dataclass(frozen=True)
class QExpansionForm:
    """Weight-2k cusp form truncated to M Fourier coefficients a_1..a_M."""

    label: str
    weight: int
    coefficients: tuple  # complex a_m, m = 1..M
    growth_exponent: Optional[float] = None  # declared |a_m| growth, metadata

    def __post_init__(self):
        if len(self.coefficients) < 1:
            raise DomainError("need at least one coefficient")
        if self.weight < 2 or self.weight % 2:
            raise DomainError("weight must be an even integer >= 4")
        if any(not (math.isfinite(c.real) and math.isfinite(c.imag))
               for c in map(complex, self.coefficients)):
            raise DomainError("coefficients must be finite")

    @property
    def k(self) -> int:
        return self.weight // 2

    @property
    def truncation_length(self) -> int:
        return len(self.coefficients)

    def coefficient_array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=complex)


def evaluate_q_expansion(form: QExpansionForm, z: UhpPoint,
                         deriv_order: int = 0) -> complex:
    """Sum a_m q^m, or its deriv_order-th z-derivative (factor (2 pi i m)^r)."""
    q = cmath.exp(2j * math.pi * z.z)
    a = form.coefficient_array()
    m = np.arange(1, len(a) + 1)
    if deriv_order:
        a = a * (2j * math.pi * m) ** deriv_order
    powers = q ** m
    return complex(np.sum(a * powers))


def evaluation_truncation_bound(form: QExpansionForm, z: UhpPoint) -> float:
    """Geometric-tail bound on the omitted coefficients beyond M."""
    absq = math.exp(-TWO_PI * z.y)
    a_last = abs(complex(form.coefficients[-1]))
    growth = 1.0 + (form.growth_exponent or 0.0)
    return a_last * absq ** (form.truncation_length + 1) / (1.0 - absq) * growth


def modularity_defect(form: QExpansionForm, gamma: MoebiusTransform,
                      z: UhpPoint) -> float:
    """|f(gamma z) - (cz+d)^(2k) f(z)|, a data-validation diagnostic."""
    gz = apply_moebius(gamma, z)
    jac = (gamma.c * z.z + gamma.d) ** form.weight
    return abs(evaluate_q_expansion(form, gz) - jac * evaluate_q_expansion(form, z))


@dataclass
class CuspFormBasis:
    forms: list
    gram: Optional[np.ndarray] = None
    orthonormal_flag: bool = False
    change_of_basis: Optional[np.ndarray] = None

    def __post_init__(self):
        weights = {f.weight for f in self.forms}
        if len(weights) > 1:
            raise DomainError("mixed weights in basis")

    @property
    def weight(self) -> int:
        return self.forms[0].weight if self.forms else 0

    @property
    def k(self) -> int:
        return self.weight // 2

    @property
    def size(self) -> int:
        return len(self.forms)

    def coefficient_matrix(self) -> np.ndarray:
        m_max = max(f.truncation_length for f in self.forms)
        mat = np.zeros((len(self.forms), m_max), dtype=complex)
        for i, f in enumerate(self.forms):
            mat[i, : f.truncation_length] = f.coefficient_array()
        return mat

    def values(self, z: UhpPoint, deriv_order: int = 0) -> np.ndarray:
        """Vector (f_1(z), ..., f_n(z)) or its z-derivatives."""
        mat = self.coefficient_matrix()
        m = np.arange(1, mat.shape[1] + 1)
        q = cmath.exp(2j * math.pi * z.z)
        powers = q ** m
        if deriv_order:
            powers = powers * (2j * math.pi * m) ** deriv_order
        return mat @ powers


def model_basis(weight: int, coefficient_rows: Sequence[Sequence[complex]],
                label: str = "model", orthonormal: bool = True) -> CuspFormBasis:
    """Synthetic basis declared orthonormal; for formula-level checks."""
    forms = [
        QExpansionForm(label=f"{label}{i + 1}", weight=weight,
                       coefficients=tuple(complex(c) for c in row))
        for i, row in enumerate(coefficient_rows)
    ]
    basis = CuspFormBasis(forms=forms, orthonormal_flag=orthonormal)
    if orthonormal:
        basis.gram = np.eye(len(forms), dtype=complex)
    return basis


# ---------------------------------------------------------------------------
# Ramanujan tau coefficients: q * prod(1 - q^n)^24 by exact integer arithmetic

@lru_cache(maxsize=None)
def ramanujan_tau(m_max: int) -> tuple:
    """tau(1..m_max) from the 24th power of the Euler product."""
    # Euler function via pentagonal number theorem
    euler = [0] * (m_max + 1)
    euler[0] = 1
    j = 1
    while True:
        g1 = j * (3 * j - 1) // 2
        g2 = j * (3 * j + 1) // 2
        if g1 > m_max:
            break
        sign = -1 if j % 2 else 1
        if g1 <= m_max:
            euler[g1] += sign
        if g2 <= m_max:
            euler[g2] += sign
        j += 1

    def mult(p, q):
        out = [0] * (m_max + 1)
        for i, pi in enumerate(p):
            if pi == 0:
                continue
            for jj, qj in enumerate(q):
                if i + jj > m_max:
                    break
                out[i + jj] += pi * qj
        return out

    e2 = mult(euler, euler)
    e4 = mult(e2, e2)
    e8 = mult(e4, e4)
    e16 = mult(e8, e8)
    e24 = mult(e16, e8)
    # Delta = q * e24: tau(m) = e24[m-1]
    return tuple(e24[m - 1] for m in range(1, m_max + 1))


def delta_form(m_max: int = 200) -> QExpansionForm:
    """The weight-12 discriminant form with m_max exact coefficients."""
    return QExpansionForm(
        label="delta",
        weight=12,
        coefficients=tuple(float(t) for t in ramanujan_tau(m_max)),
        growth_exponent=5.5,
    )


# ---------------------------------------------------------------------------
# Petersson inner products

@dataclass(frozen=True)
class QuadratureDomain:
    """Fundamental-domain description for the Petersson integral.

    kind "modular": |x| <= 1/2, |z| >= 1 (the classical domain);
    kind "strip": x in [x0, x1], y >= y0.  Above the cutoff height the
    integral is completed analytically using the q-expansions, which is
    exact when the x-width is a full period.
    """

    kind: str = "modular"
    x0: float = -0.5
    x1: float = 0.5
    y0: float = 1.0
    cutoff: Optional[float] = None
    x_panels: int = 4
    y_panels: int = 8
    nodes: int = 16

    def x_range(self):
        if self.kind == "modular":
            return (-0.5, 0.5)
        return (self.x0, self.x1)

    def y_lower(self, x: float) -> float:
        if self.kind == "modular":
            return math.sqrt(max(1.0 - x * x, 0.0))
        return self.y0

    def full_period(self) -> bool:
        lo, hi = self.x_range()
        return abs((hi - lo) - 1.0) < 1e-12


def _upper_incomplete(s: float, a: float, lower: float) -> float:
    """Integral of y^(s-1) e^(-a y) over [lower, inf)."""
    # Gamma(s) * gammaincc(s, a*lower) / a^s, in log form for stability
    g = gammaincc(s, a * lower)
    if g <= 0.0:
        return 0.0
    return math.exp(gammaln(s) + math.log(g) - s * math.log(a))


def _tail_gram(basis: CuspFormBasis, cutoff: float) -> np.ndarray:
    """Analytic contribution above the cutoff height (full period in x)."""
    mat = basis.coefficient_matrix()
    n, m_max = mat.shape
    k = basis.k
    tail = np.zeros((n, n), dtype=complex)
    for m in range(1, m_max + 1):
        integral = _upper_incomplete(2 * k - 1, 4.0 * math.pi * m, cutoff)
        if integral == 0.0:
            continue
        col = mat[:, m - 1]
        tail += np.outer(col, col.conj()) * integral
    return tail


def _gram_once(basis: CuspFormBasis, domain: QuadratureDomain,
               x_panels: int, y_panels: int, nodes: int) -> np.ndarray:
    k = basis.k
    cutoff = domain.cutoff or max(4.0, 3.0 * (2 * k) / (4.0 * math.pi))
    xn, xw = roots_legendre(nodes)
    n = basis.size
    gram = np.zeros((n, n), dtype=complex)
    xlo, xhi = domain.x_range()
    for px in range(x_panels):
        a = xlo + (xhi - xlo) * px / x_panels
        b = xlo + (xhi - xlo) * (px + 1) / x_panels
        xs = 0.5 * (b - a) * xn + 0.5 * (a + b)
        for x, wx in zip(xs, xw * 0.5 * (b - a)):
            ylo = domain.y_lower(x)
            if ylo >= cutoff:
                continue
            for py in range(y_panels):
                ya = ylo + (cutoff - ylo) * py / y_panels
                yb = ylo + (cutoff - ylo) * (py + 1) / y_panels
                ys = 0.5 * (yb - ya) * xn + 0.5 * (ya + yb)
                for y, wy in zip(ys, xw * 0.5 * (yb - ya)):
                    v = basis.values(UhpPoint(x, y))
                    gram += np.outer(v, v.conj()) * (wx * wy * y ** (2 * k - 2))
    if domain.full_period():
        gram += _tail_gram(basis, cutoff)
    return gram


def petersson_gram(basis: CuspFormBasis, domain: QuadratureDomain,
                   tol: float = 1e-8) -> np.ndarray:
    """Petersson Gram matrix with a refinement-based error estimate."""
    coarse = _gram_once(basis, domain, domain.x_panels, domain.y_panels,
                        domain.nodes)
    fine = _gram_once(basis, domain, domain.x_panels, 2 * domain.y_panels,
                      domain.nodes + 8)
    scale = max(np.max(np.abs(fine)), 1e-300)
    err = np.max(np.abs(fine - coarse)) / scale
    if err > tol:
        raise QuadratureNotConverged(
            f"refinement change {err:.3e} exceeds tolerance {tol:.3e}")
    # enforce exact Hermitian symmetry of the numerical result
    return 0.5 * (fine + fine.conj().T)


def orthonormal_basis(basis: CuspFormBasis,
                      gram: Optional[np.ndarray] = None) -> CuspFormBasis:
    """Coefficient-level change of basis making the Gram the identity."""
    g = gram if gram is not None else basis.gram
    if g is None:
        raise DomainError("gram matrix not computed")
    g = np.asarray(g, dtype=complex)
    ev = eigvalsh(g)
    if ev[0] < 1e-12 * max(ev[-1], 1e-300):
        raise GramSingular(f"smallest eigenvalue ratio {ev[0] / ev[-1]:.3e}")
    lower = cholesky(g, lower=True)
    # rows of A give the new forms: A G A^H = I for A = L^{-1}
    a = solve_triangular(lower, np.eye(basis.size, dtype=complex), lower=True)
    mat = a @ basis.coefficient_matrix()
    forms = [
        replace(basis.forms[i], label=basis.forms[i].label + "*",
                coefficients=tuple(mat[i]))
        for i in range(basis.size)
    ]
    return CuspFormBasis(forms=forms, gram=np.eye(basis.size, dtype=complex),
                         orthonormal_flag=True, change_of_basis=a)


def bergman_from_basis(basis: CuspFormBasis, z: UhpPoint) -> float:
    """Diagonal Petersson norm y^(2k) sum |f_j(z)|^2 of the basis kernel."""
    if not basis.forms:
        return 0.0
    if not basis.orthonormal_flag:
        raise DomainError("basis must be orthonormal")
    v = basis.values(z)
    return z.y ** basis.weight * float(np.sum(np.abs(v) ** 2))


def basis_weight0_bundle(basis: CuspFormBasis, z: UhpPoint):
    """Weight-0 kernel B(z) = sum |f_j|^2 and its Wirtinger derivatives."""
    v = basis.values(z)
    dv = basis.values(z, deriv_order=1)
    value = float(np.sum(np.abs(v) ** 2))
    d1 = complex(np.sum(dv * v.conj()))
    d2 = float(np.sum(np.abs(dv) ** 2))
    return value, d1, d2


def first_coefficient_mass(basis: CuspFormBasis) -> float:
    """Sum of |a_{j,1}|^2 over an orthonormal basis."""
    if not basis.orthonormal_flag:
        raise DomainError("basis must be orthonormal")
    return float(sum(abs(complex(f.coefficients[0])) ** 2 for f in basis.forms))


# ---------------------------------------------------------------------------
# JSON-lines ingestion

def _parse_coefficient(entry) -> complex:
    if isinstance(entry, str):
        return complex(float(entry))
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, (list, tuple)) and len(entry) == 2:
        return complex(float(entry[0]), float(entry[1]))
    raise DomainError(f"unparseable coefficient {entry!r}")


def load_forms(path: str) -> list:
    forms = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            forms.append(QExpansionForm(
                label=doc["label"],
                weight=int(doc["weight"]),
                coefficients=tuple(_parse_coefficient(c)
                                   for c in doc["coefficients"]),
                growth_exponent=doc.get("growth_exponent"),
            ))
    if not forms:
        raise DomainError(f"no forms found in {path}")
    return forms


def save_forms(forms: Sequence[QExpansionForm], path: str) -> None:
    with open(path, "w") as fh:
        for f in forms:
            coeffs = []
            for c in map(complex, f.coefficients):
                if c.imag == 0.0:
                    coeffs.append(repr(c.real))
                else:
                    coeffs.append([c.real, c.imag])
            doc = {"label": f.label, "weight": f.weight, "coefficients": coeffs}
            if f.growth_exponent is not None:
                doc["growth_exponent"] = f.growth_exponent
            fh.write(json.dumps(doc) + "\n")
