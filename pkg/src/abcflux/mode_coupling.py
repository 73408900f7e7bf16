"""Closed-form fluctuating-hydrodynamics quantities for the two conserved species.

Everything here is a pure function of parameter values.  Matrices that carry
an overall N**-gamma factor (Jacobian, Hessians, coupling matrices) are
stored without it; ``scale`` holds the factor so that zero patterns and
classifications do not depend on N.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model_core import ModelParams

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class DensityPoint:
    rho_A: float
    rho_B: float

    def __post_init__(self):
        if not (0 <= self.rho_A <= 1 and 0 <= self.rho_B <= 1 and self.rho_A + self.rho_B <= 1 + 1e-15):
            raise ValueError(f"invalid densities ({self.rho_A}, {self.rho_B})")

    @property
    def rho_C(self) -> float:
        return 1.0 - self.rho_A - self.rho_B


EQUAL = DensityPoint(1 / 3, 1 / 3)


def _rel_strengths(params: ModelParams):
    return params.E_A - params.E_C, params.E_B - params.E_C


def _as_point(rho) -> DensityPoint:
    if isinstance(rho, DensityPoint):
        return rho
    return DensityPoint(*rho)


def average_current(rho, params: ModelParams) -> np.ndarray:
    """Stationary mean of the drift current (j_A, j_B) at the given densities."""
    rho = _as_point(rho)
    ea, eb = _rel_strengths(params)
    ra, rb = rho.rho_A, rho.rho_B
    s = params.asymmetry
    return s * np.array([ra * (1 - ra) * ea - ra * rb * eb,
                         rb * (1 - rb) * eb - ra * rb * ea])


def jacobian_unscaled(rho, ea: float, eb: float) -> np.ndarray:
    rho = _as_point(rho)
    ra, rb = rho.rho_A, rho.rho_B
    return np.array([[(1 - 2 * ra) * ea - rb * eb, -ra * eb],
                     [-rb * ea, -ra * ea + (1 - 2 * rb) * eb]])


def jacobian(rho, params: ModelParams) -> np.ndarray:
    """Derivative of average_current with respect to (rho_A, rho_B)."""
    ea, eb = _rel_strengths(params)
    return params.asymmetry * jacobian_unscaled(rho, ea, eb)


def hessians_unscaled(ea: float, eb: float):
    h1 = np.array([[-2 * ea, -eb], [-eb, 0.0]])
    h2 = np.array([[0.0, -ea], [-ea, -2 * eb]])
    return h1, h2


def _normalize(vec: np.ndarray) -> np.ndarray:
    """Second component 1 when possible, otherwise first component 1."""
    if abs(vec[1]) > ZERO_TOL * max(1.0, abs(vec[0])):
        return vec / vec[1]
    return vec / vec[0]


def eigen_structure(J: np.ndarray):
    """Eigen-decomposition of a real 2x2 matrix with real spectrum.

    Returns (v_plus, v_minus, tau_plus, tau_minus, R, R_inv) with
    v_plus >= v_minus, R_inv = [tau_plus | tau_minus] and R = R_inv^{-1}.
    """
    J = np.asarray(J, dtype=float)
    a, b = J[0]
    c, d = J[1]
    tr = a + d
    disc = (a - d) ** 2 + 4 * b * c
    scale = max(1.0, np.abs(J).max()) ** 2
    if disc < -ZERO_TOL * scale:
        raise ValueError("non-hyperbolic point: complex eigenvalues")
    root = math.sqrt(max(disc, 0.0))
    v_plus, v_minus = (tr + root) / 2, (tr - root) / 2
    if root <= ZERO_TOL * math.sqrt(scale):
        if np.abs(J - v_plus * np.eye(2)).max() <= ZERO_TOL * math.sqrt(scale):
            # scalar matrix (includes J = 0): symmetric-case convention
            tau_p, tau_m = np.array([-1.0, 1.0]), np.array([1.0, 1.0])
        else:
            raise ValueError("non-hyperbolic point: defective repeated eigenvalue")
    else:
        tau_p = _eigvec(J, v_plus)
        tau_m = _eigvec(J, v_minus)
    R_inv = np.column_stack([tau_p, tau_m])
    R = np.linalg.inv(R_inv)
    return v_plus, v_minus, tau_p, tau_m, R, R_inv


def _eigvec(J, lam):
    a, b = J[0]
    c, d = J[1]
    cand1 = np.array([lam - d, c])
    cand2 = np.array([b, lam - a])
    vec = cand1 if np.abs(cand1).max() >= np.abs(cand2).max() else cand2
    return _normalize(vec)


def coupling_matrices(R, R_inv, H1, H2):
    """G^i = 1/2 sum_j R[i, j] (R^{-1})^T H^j R^{-1}."""
    R = np.asarray(R, float)
    R_inv = np.asarray(R_inv, float)
    rot = [R_inv.T @ np.asarray(h, float) @ R_inv for h in (H1, H2)]
    G1 = 0.5 * (R[0, 0] * rot[0] + R[0, 1] * rot[1])
    G2 = 0.5 * (R[1, 0] * rot[0] + R[1, 1] * rot[1])
    return G1, G2


# ------------------------------------------------------- classification ----

@dataclass(frozen=True)
class UniversalityClass:
    name: str            # "EW", "KPZ" or "LEVY"
    z: float

    def __str__(self):
        if self.name == "LEVY":
            return f"LEVY({self.z:.6g})"
        return self.name


EW = UniversalityClass("EW", 2.0)
KPZ = UniversalityClass("KPZ", 1.5)


def _is_zero(val, ref):
    return abs(val) <= ZERO_TOL * max(1.0, ref)


def classify_modes(*G, max_iter: int = 200):
    """Per-mode class from the coupling matrices G^1, ..., G^n.

    Self-coupling G^a_aa != 0 gives KPZ.  Otherwise the mode couples to the
    set I_a = {b : G^a_bb != 0}; empty means EW, and a non-empty set gives a
    Levy class with z_a = min over I_a of 1 + 1/z_b, solved by fixed-point
    iteration started from z = 2.
    """
    if len(G) == 1 and np.ndim(G[0]) == 3:
        G = tuple(G[0])
    mats = [np.asarray(g, float) for g in G]
    n = len(mats)
    ref = max(np.abs(m).max() for m in mats)
    kinds = []
    couples = []
    for a in range(n):
        if not _is_zero(mats[a][a, a], ref):
            kinds.append("KPZ")
            couples.append([])
            continue
        ia = [b for b in range(n) if b != a and not _is_zero(mats[a][b, b], ref)]
        couples.append(ia)
        kinds.append("EW" if not ia else "LEVY")
    z = np.array([1.5 if k == "KPZ" else 2.0 for k in kinds])
    for _ in range(max_iter):
        new = z.copy()
        for a in range(n):
            if kinds[a] == "LEVY":
                new[a] = min(1 + 1 / z[b] for b in couples[a])
        if np.allclose(new, z, rtol=0, atol=1e-15):
            break
        z = new
    out = []
    for a in range(n):
        if kinds[a] == "KPZ":
            out.append(KPZ)
        elif kinds[a] == "EW":
            out.append(EW)
        else:
            out.append(UniversalityClass("LEVY", float(z[a])))
    return tuple(out)


def fibonacci_exponents(depth: int) -> list:
    """z values 2, 3/2, 5/3, 8/5, ... obtained by iterating z -> 1 + 1/z."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    z = Fraction(2)
    out = [z]
    for _ in range(depth - 1):
        z = 1 + 1 / z
        out.append(z)
    return out


GOLDEN = (1 + math.sqrt(5)) / 2


# ------------------------------------------------------------ report -------

@dataclass
class CouplingReport:
    rho: DensityPoint
    scale: float
    J: np.ndarray
    delta: float
    v_plus: float
    v_minus: float
    tau_plus: np.ndarray
    tau_minus: np.ndarray
    R: np.ndarray
    R_inv: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    class_plus: UniversalityClass
    class_minus: UniversalityClass

    def scaled(self, name: str):
        """Quantity including the N**-gamma factor (J, H*, G*, v_*)."""
        if name in ("J", "H1", "H2", "G1", "G2", "v_plus", "v_minus"):
            return self.scale * getattr(self, name)
        return getattr(self, name)

    def as_text(self) -> str:
        lines = [f"rho_A = {self.rho.rho_A:.12g}", f"rho_B = {self.rho.rho_B:.12g}",
                 f"scale = {self.scale:.12g}", f"delta = {self.delta:.12g}",
                 f"v_plus = {self.v_plus:.12g}", f"v_minus = {self.v_minus:.12g}",
                 f"tau_plus = {_vec(self.tau_plus)}", f"tau_minus = {_vec(self.tau_minus)}"]
        for name in ("J", "R", "R_inv", "H1", "H2", "G1", "G2"):
            lines.append(f"{name} = {_mat(getattr(self, name))}")
        lines += [f"class_plus = {self.class_plus}", f"class_minus = {self.class_minus}"]
        return "\n".join(lines) + "\n"

    def csv_rows(self):
        """(quantity, i, j, value) rows; scalars use i = j = 0."""
        rows = [("delta", 0, 0, self.delta), ("v_plus", 0, 0, self.v_plus),
                ("v_minus", 0, 0, self.v_minus), ("scale", 0, 0, self.scale)]
        for name in ("tau_plus", "tau_minus"):
            v = getattr(self, name)
            rows += [(name, i, 0, float(v[i])) for i in range(2)]
        for name in ("J", "R", "R_inv", "H1", "H2", "G1", "G2"):
            m = getattr(self, name)
            rows += [(name, i, j, float(m[i, j])) for i in range(2) for j in range(2)]
        return rows


def _vec(v):
    return "(" + ", ".join(f"{x:.12g}" for x in v) + ")"


def _mat(m):
    return "[" + "; ".join(", ".join(f"{x:.12g}" for x in row) for row in m) + "]"


def general_delta(rho, ea: float, eb: float) -> float:
    rho = _as_point(rho)
    ra, rb = rho.rho_A, rho.rho_B
    val = (ea * (1 - ra) - eb * (1 - rb)) ** 2 + 4 * ea * eb * ra * rb
    if val < 0:
        raise ValueError("non-hyperbolic point: complex eigenvalues")
    return math.sqrt(val)


def coupling_report(params: ModelParams, rho=EQUAL) -> CouplingReport:
    rho = _as_point(rho)
    ea, eb = _rel_strengths(params)
    J = jacobian_unscaled(rho, ea, eb)
    v_p, v_m, tau_p, tau_m, R, R_inv = eigen_structure(J)
    # case-II convention: the eigenvector with a nonzero A component is
    # oriented as (2, -1), so that the corresponding mode is +1/2 of the A field
    if abs(eb) <= ZERO_TOL and abs(ea) > ZERO_TOL and abs(rho.rho_A - rho.rho_B) <= ZERO_TOL:
        taus = [tau_p, tau_m]
        for i, tau in enumerate(taus):
            if abs(tau[0]) > ZERO_TOL and tau[1] > 0:
                taus[i] = -tau
        tau_p, tau_m = taus
        R_inv = np.column_stack([tau_p, tau_m])
        R = np.linalg.inv(R_inv)
    H1, H2 = hessians_unscaled(ea, eb)
    G1, G2 = coupling_matrices(R, R_inv, H1, H2)
    cp, cm = classify_modes(G1, G2)
    return CouplingReport(rho=rho, scale=params.asymmetry, J=J, delta=general_delta(rho, ea, eb),
                          v_plus=v_p, v_minus=v_m, tau_plus=tau_p, tau_minus=tau_m, R=R, R_inv=R_inv,
                          H1=H1, H2=H2, G1=G1, G2=G2, class_plus=cp, class_minus=cm)


# ------------------------------------------------ equal-density constants --

def delta_equal(params: ModelParams) -> float:
    ea, eb = _rel_strengths(params)
    return (2 / 3) * math.sqrt(ea * ea + eb * eb - ea * eb)


def c_constants(params: ModelParams):
    """(c_plus, c_minus) = E_A - E_B +- 3 delta / 2."""
    d = delta_equal(params)
    base = params.E_A - params.E_B
    return base + 1.5 * d, base - 1.5 * d


def g_constants_closed_form(params: ModelParams):
    """Closed-form (g1, g2) coefficients of the equal-density coupling matrices as
    printed in the reference derivation (without the N**-gamma factor).

    Kept for comparison against coupling_report; see the notes on the
    discrepancy in the decisions ledger.
    """
    cp, cm = c_constants(params)
    eb = params.E_B - params.E_C
    g1 = -(1 / 12) * (-cp ** 2 + eb * (cp - cm) + cm * cp)
    g2 = (1 / 12) * (-cm ** 2 + eb * (cm - cp) + cm * cp)
    return g1, g2


@dataclass(frozen=True)
class NormalModeSpec:
    """Z = D1 Y^A(T f) + D2 Y^B(T f) in a frame moving with v N^a t.

    ``v`` already includes the N**-gamma factor; ``lattice_velocity``
    gives the frame speed in sites per unit macroscopic time.
    """
    D1: float
    D2: float
    v: float
    label: str
    case_tag: str

    def lattice_velocity(self, params: ModelParams) -> float:
        return self.v * params.speed

    @property
    def sigma2(self) -> float:
        return (2 / 9) * (self.D1 ** 2 + self.D2 ** 2 - self.D1 * self.D2)


def system_residual(spec: NormalModeSpec, params: ModelParams) -> float:
    """Max absolute residual of the two drift-cancellation equations."""
    s = params.asymmetry
    EA, EB, EC = params.E_A, params.E_B, params.E_C
    D1, D2, v = spec.D1, spec.D2, spec.v
    r1 = s * (D1 * (EB - EA) / 3 + D2 * (EA - EC) / 3) + D1 * v
    r2 = s * (D1 * (EB - EC) / 3 - D2 * (EB - EA) / 3) + D2 * v
    return max(abs(r1), abs(r2))


def check_case(case_tag: str, params: ModelParams) -> list:
    """Violations of the parameter constraints attached to a case tag."""
    tag = case_tag.upper()
    EA, EB, EC = params.E_A, params.E_B, params.E_C
    out = []
    if tag not in ("I", "II", "III"):
        return [f"unknown case tag {case_tag!r}"]
    if tag == "I" and EA != EB:
        out.append("case I requires E_A = E_B")
    if tag == "II" and EB != EC:
        out.append("case II requires E_B = E_C")
    if EA == EC:
        out.append(f"case {tag} requires E_A != E_C")
    return out


def normal_mode_spec(case_tag: str, params: ModelParams):
    """The (+, -) pair of normal-mode fields at equal densities."""
    problems = check_case(case_tag, params)
    if problems:
        raise ValueError("; ".join(problems))
    tag = case_tag.upper()
    s = params.asymmetry
    if tag == "I":
        E = params.E_A - params.E_C
        plus = NormalModeSpec(1.0, -1.0, E * s / 3, "+", tag)
        minus = NormalModeSpec(1.0, 1.0, -E * s / 3, "-", tag)
    elif tag == "II":
        E = params.E_C - params.E_A
        plus = NormalModeSpec(1.0, 2.0, E * s / 3, "+", tag)
        minus = NormalModeSpec(1.0, 0.0, -E * s / 3, "-", tag)
    else:
        ea = params.E_A - params.E_C
        cp, cm = c_constants(params)
        d = delta_equal(params)
        plus = NormalModeSpec(1.0, cm / ea, d * s / 2, "+", tag)
        minus = NormalModeSpec(1.0, cp / ea, -d * s / 2, "-", tag)
    for spec in (plus, minus):
        res = system_residual(spec, params)
        ref = max(1.0, abs(params.E_A), abs(params.E_B), abs(params.E_C)) * s
        if res > 1e-12 * ref:
            raise ArithmeticError(f"drift-cancellation residual {res:g} for mode {spec.label}")
    return plus, minus


def theorem_coefficients(case_tag: str, params: ModelParams, gamma: float | None = None):
    """(lambda_plus, lambda_minus, sigma2_plus, sigma2_minus) of the limiting equations."""
    g = params.gamma if gamma is None else gamma
    if g < 0.5:
        raise ValueError("out of proven regime: gamma < 1/2")
    problems = check_case(case_tag, params)
    if problems:
        raise ValueError("; ".join(problems))
    tag = case_tag.upper()
    critical = abs(g - 0.5) < 1e-15
    if tag in ("I", "II"):
        s2p, s2m = 2 / 3, 2 / 9
        lp, lm = 0.0, (params.E_C - params.E_A if critical else 0.0)
        return lp, lm, s2p, s2m
    ea = params.E_A - params.E_C
    eb = params.E_B - params.E_C
    cp, cm = c_constants(params)
    d = delta_equal(params)
    s2p = (2 / 9) * (1 + cm ** 2 / ea ** 2 - cm / ea)
    s2m = (2 / 9) * (1 + cp ** 2 / ea ** 2 - cp / ea)
    if not critical:
        return 0.0, 0.0, s2p, s2m
    lp = -(ea / (3 * d)) * (cp - eb)
    lm = -(ea / (3 * d)) * (eb - cm)
    return lp, lm, s2p, s2m


def hydro_mobility(rho_A, rho_B):
    """chi(rho) = [[rA(1-rA), -rA rB], [-rA rB, rB(1-rB)]] (broadcasts over arrays)."""
    ra = np.asarray(rho_A, float)
    rb = np.asarray(rho_B, float)
    return np.array([[ra * (1 - ra), -ra * rb], [-ra * rb, rb * (1 - rb)]])
