"""Unified bias-corrected decentralized update families.

Each strategy is a triple of symmetric polynomials ``(a, b, c)`` of one mixing
matrix ``w``, driving the stacked recursion

    X+ = a (c X - mu_x Mx) - b Dx,      Dx+ = Dx + b X+

(and the mirrored ascent side).  The five members differ only in which
polynomial each slot carries:

    kind          a        b        c      correction style
    ed            w        (I-w)^.5 I      exact diffusion
    extra         I        (I-w)^.5 w      EXTRA
    atc_gt        w^2      I-w      I      adapt-then-combine gradient tracking
    semi_atc_gt   w        I-w      w      half-combined tracking
    non_atc_gt    I        I-w      w^2    tracking without combine step

All satisfy the structural identity ``I + a c - b^2 = 2 w``, which is what the
shared convergence argument actually uses; :func:`validate_assumption4` checks
it together with the rest of the structural assumptions at run time.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .topology import MixingMatrix

IDENTITY_TOL = 1e-10


class StrategyKind(str, enum.Enum):
    ED = "ed"
    EXTRA = "extra"
    ATC_GT = "atc_gt"
    SEMI_ATC_GT = "semi_atc_gt"
    NON_ATC_GT = "non_atc_gt"

    @classmethod
    def parse(cls, value: "StrategyKind | str") -> "StrategyKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown strategy kind {value!r}; expected one of: {names}") from None


#: spectral maps lambda -> (lambda_a, lambda_b^2, lambda_c) per family
_SPECTRAL_MAPS = {
    StrategyKind.ED: (lambda e: e, lambda e: 1.0 - e, lambda e: np.ones_like(e)),
    StrategyKind.EXTRA: (lambda e: np.ones_like(e), lambda e: 1.0 - e, lambda e: e),
    StrategyKind.ATC_GT: (lambda e: e**2, lambda e: (1.0 - e) ** 2, lambda e: np.ones_like(e)),
    StrategyKind.SEMI_ATC_GT: (lambda e: e, lambda e: (1.0 - e) ** 2, lambda e: e),
    StrategyKind.NON_ATC_GT: (lambda e: np.ones_like(e), lambda e: (1.0 - e) ** 2, lambda e: e**2),
}


@dataclass(eq=False)
class StrategySet:
    """Matrices and spectral data for one decentralized strategy.

    ``eig_a``, ``eig_b_sq``, ``eig_c`` are aligned with ``w_ref.eigenvalues``
    (consensus eigenvalue first), so entry ``j`` of each array is the action
    of the corresponding matrix on eigenvector ``w_ref.U[:, j]``.
    """

    kind: StrategyKind
    a: np.ndarray
    b: np.ndarray
    b_sq: np.ndarray
    c: np.ndarray
    w_ref: MixingMatrix = field(repr=False)
    eig_a: np.ndarray = field(repr=False)
    eig_b_sq: np.ndarray = field(repr=False)
    eig_c: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.w_ref.K


def _matrix_function(m: MixingMatrix, values: np.ndarray) -> np.ndarray:
    out = m.U @ np.diag(values) @ m.U.T
    return 0.5 * (out + out.T)  # scrub float asymmetry from the sandwich


def build_strategy(kind: StrategyKind | str, m: MixingMatrix) -> StrategySet:
    """Assemble the matrix set of one update family over a mixing matrix."""
    kind = StrategyKind.parse(kind)
    eye = np.eye(m.K)
    fa, fb_sq, fc = _SPECTRAL_MAPS[kind]
    eigs = m.eigenvalues
    eig_a, eig_b_sq, eig_c = fa(eigs), fb_sq(eigs), fc(eigs)

    if kind is StrategyKind.ED:
        a, c = m.w, eye
    elif kind is StrategyKind.EXTRA:
        a, c = eye, m.w
    elif kind is StrategyKind.ATC_GT:
        a, c = m.w @ m.w, eye
    elif kind is StrategyKind.SEMI_ATC_GT:
        a, c = m.w, m.w
    else:  # NON_ATC_GT
        a, c = eye, m.w @ m.w

    if kind in (StrategyKind.ED, StrategyKind.EXTRA):
        # eigenvalues of w never exceed 1; clamp float dust before the root
        b = _matrix_function(m, np.sqrt(np.clip(1.0 - eigs, 0.0, None)))
        b_sq = _matrix_function(m, 1.0 - eigs)
    else:
        b = eye - m.w
        b_sq = b @ b

    return StrategySet(
        kind=kind, a=a, b=b, b_sq=b_sq, c=c, w_ref=m,
        eig_a=eig_a, eig_b_sq=eig_b_sq, eig_c=eig_c,
    )


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the structural checks on a strategy set."""

    ok: bool
    residuals: dict[str, float]
    failures: tuple[str, ...]
    tol: float = IDENTITY_TOL

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        lines = [f"assumption check: {'ok' if self.ok else 'FAILED'} (tol={self.tol:g})"]
        for name, r in sorted(self.residuals.items()):
            flag = " <-- FAIL" if name in self.failures else ""
            lines.append(f"  {name:28s} {r:.3e}{flag}")
        return "\n".join(lines)


def validate_assumption4(s: StrategySet, *, tol: float = IDENTITY_TOL) -> ValidationReport:
    """Check the structural assumptions the unified analysis rests on.

    Verifies symmetry of all four matrices, commutation with ``w``, double
    stochasticity of ``a`` and ``c``, that ``b_sq`` is PSD with null space
    exactly the consensus line, consistency ``b @ b == b_sq``, and the
    defining identity ``I + a c - b_sq == 2 w``.
    """
    K = s.K
    w = s.w_ref.w
    eye = np.eye(K)
    ones = np.ones(K)

    residuals: dict[str, float] = {}

    def resid(name: str, value: float) -> None:
        residuals[name] = float(value)

    for name, mat in (("a", s.a), ("b", s.b), ("b_sq", s.b_sq), ("c", s.c)):
        resid(f"{name} symmetric", np.max(np.abs(mat - mat.T)))
        resid(f"{name} commutes with w", np.max(np.abs(mat @ w - w @ mat)))
    resid("a doubly stochastic", np.max(np.abs(s.a @ ones - ones)))
    resid("c doubly stochastic", np.max(np.abs(s.c @ ones - ones)))
    resid("b_sq kills consensus", np.max(np.abs(s.b_sq @ ones)))
    resid("b_sq == b @ b", np.max(np.abs(s.b @ s.b - s.b_sq)))
    resid("I + a c - b_sq == 2 w", np.max(np.abs(eye + s.a @ s.c - s.b_sq - 2.0 * w)))

    eig_bsq = np.linalg.eigvalsh(s.b_sq)
    resid("b_sq PSD", max(0.0, -float(eig_bsq[0])))
    # on a connected graph the only vanishing eigenvalue is the consensus one
    resid("b_sq null space is 1d", max(0.0, tol - float(np.sort(eig_bsq)[1])) if K > 1 else 0.0)

    failures = tuple(name for name, r in residuals.items() if r > tol)
    return ValidationReport(ok=not failures, residuals=residuals, failures=failures, tol=tol)


def strategy_diagnostics(s: StrategySet) -> dict[str, float]:
    """Spectral quantities that gate step-size choices.

    ``lambda_a``: largest magnitude of ``a`` on the complement of the
    consensus line.  ``min_nonzero_eig_bsq``: smallest eigenvalue of ``b_sq``
    there; both read straight off the cached eigen-triples.
    """
    return {
        "lambda_a": float(np.max(np.abs(s.eig_a[1:]))),
        "min_nonzero_eig_bsq": float(np.min(s.eig_b_sq[1:])),
    }
