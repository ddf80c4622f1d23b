"""
Structural Hypothesis Checks

Sampling checks of the two conditions the symmetry theory places on (g, f):

- p1 symmetry:         g(u, v, p1, p2) >= g(u, v, -p1, p2) for p1 < 0,
                       same for f; equality everywhere is the stronger
                       hypothesis under which full symmetry follows
- cross monotonicity:  dg/dv > 0 and df/du > 0

Points come from a scrambled Halton sequence over a SamplingBox, so a fixed
seed gives a fixed verdict. A pass only certifies the sampled box, which is
recorded in the report.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from nonlinearity.coupled_rhs import CoupledRHS, Which, eval_rhs

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 100_000
INFLATION = 0.1
MIN_HALF_WIDTH = 1e-3
EQUALITY_TOL = 1e-12

Range = Tuple[float, float]


def _check_range(label: str, bounds: Range) -> Range:
    lo, hi = (float(b) for b in bounds)
    if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
        raise ValueError(f"sampling range {label} must be finite with lo <= hi, got {bounds}")
    return lo, hi


@dataclass(frozen=True)
class SamplingBox:
    """Ranges of (u, v, p1, p2) on which the hypotheses are sampled"""
    u: Range = (-2.0, 2.0)
    v: Range = (-2.0, 2.0)
    p1: Range = (-2.0, 2.0)
    p2: Range = (-2.0, 2.0)

    def __post_init__(self):
        for label in ("u", "v", "p1", "p2"):
            object.__setattr__(self, label, _check_range(label, getattr(self, label)))

    @classmethod
    def default(cls) -> "SamplingBox":
        return cls()

    @classmethod
    def from_fields(cls, u, v, inflation: float = INFLATION) -> "SamplingBox":
        """
        Range attained by a solution pair, each half width inflated by the given fraction

        The gradient ranges cover both grad u and grad v.
        """
        gu1, gu2 = u.gradient_field()
        gv1, gv2 = v.gradient_field()
        p1 = np.concatenate([gu1, gv1])
        p2 = np.concatenate([gu2, gv2])
        return cls(
            u=_inflate(u.values, inflation),
            v=_inflate(v.values, inflation),
            p1=_inflate(p1, inflation),
            p2=_inflate(p2, inflation),
        )

    def negated_p2(self) -> "SamplingBox":
        return SamplingBox(u=self.u, v=self.v, p1=self.p1, p2=(-self.p2[1], -self.p2[0]))

    @property
    def p1_negative(self) -> Range:
        """Range of strictly negative p1 values sampled by the symmetry check"""
        reach = max(abs(self.p1[0]), abs(self.p1[1]), MIN_HALF_WIDTH)
        lo = self.p1[0] if self.p1[0] < 0.0 else -reach
        return lo, 0.0

    def as_dict(self) -> Dict[str, Range]:
        return {"u": self.u, "v": self.v, "p1": self.p1, "p2": self.p2}


def _inflate(values: np.ndarray, inflation: float) -> Range:
    lo, hi = float(np.min(values)), float(np.max(values))
    centre = 0.5 * (lo + hi)
    half = max(0.5 * (hi - lo), MIN_HALF_WIDTH) * (1.0 + inflation)
    return centre - half, centre + half


def _halton(n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    sampler = qmc.Halton(d=4, scramble=True, seed=seed)
    return sampler.random(n)


@dataclass
class HypothesisReport:
    """
    Outcome of a sampling check

    Attributes:
        check: "p1_symmetry" or "cross_monotonicity"
        passed: verdict on the certified box
        samples: number of points drawn
        box: the certified box
        worst_margin: smallest observed margin (negative means violated)
        witness: (u, v, p1, p2) and equation of the worst point
        equality: p1 symmetry holds with equality at every sample
        g_min, g_max, f_min, f_max: observed ranges of dg/dv and df/du
    """
    check: str
    passed: bool
    samples: int
    box: SamplingBox
    worst_margin: float
    witness: Optional[Dict[str, object]] = None
    equality: Optional[bool] = None
    g_min: Optional[float] = None
    g_max: Optional[float] = None
    f_min: Optional[float] = None
    f_max: Optional[float] = None

    def summary(self) -> Dict[str, object]:
        """Flat key/value entries for run manifests"""
        prefix = self.check
        out = {f"{prefix}.pass": self.passed, f"{prefix}.samples": self.samples,
               f"{prefix}.worst_margin": self.worst_margin}
        for label, bounds in self.box.as_dict().items():
            out[f"{prefix}.box.{label}"] = bounds
        for key in ("equality", "g_min", "g_max", "f_min", "f_max"):
            value = getattr(self, key)
            if value is not None:
                out[f"{prefix}.{key}"] = value
        if self.witness is not None:
            out[f"{prefix}.witness"] = " ".join(f"{k}={v}" for k, v in self.witness.items())
        return out


def _witness(which: str, u, v, p1, p2, k: int, margin: float) -> Dict[str, object]:
    return {"equation": which, "u": float(u[k]), "v": float(v[k]), "p1": float(p1[k]),
            "p2": float(p2[k]), "margin": float(margin)}


def check_p1_symmetry(rhs: CoupledRHS, box: Optional[SamplingBox] = None,
                      n: int = DEFAULT_SAMPLES, seed: int = 0) -> HypothesisReport:
    """
    Sample g(u, v, p1, p2) - g(u, v, -p1, p2) >= 0 and the f counterpart for p1 < 0

    Args:
        rhs: the coupling pair
        box: sampling box, SamplingBox.default() when omitted
        n: number of quasi-random points
        seed: scrambling seed

    Returns:
        HypothesisReport: worst margin, witness and whether equality holds
    """
    box = box or SamplingBox.default()
    s = _halton(n, seed)
    p1_lo, _ = box.p1_negative
    u = box.u[0] + s[:, 0] * (box.u[1] - box.u[0])
    v = box.v[0] + s[:, 1] * (box.v[1] - box.v[0])
    # strictly negative: (1 - s) lies in (0, 1]
    p1 = p1_lo * (1.0 - s[:, 2])
    p2 = box.p2[0] + s[:, 3] * (box.p2[1] - box.p2[0])

    passed, equality = True, True
    worst_margin, witness = np.inf, None
    for which in (Which.G, Which.F):
        here = eval_rhs(rhs, which, u, v, p1, p2).value
        mirror = eval_rhs(rhs, which, u, v, -p1, p2).value
        margin = here - mirror
        tol = EQUALITY_TOL * (1.0 + np.abs(here))
        passed &= bool(np.all(margin >= -tol))
        equality &= bool(np.all(np.abs(margin) <= tol))
        k = int(np.argmin(margin))
        if margin[k] < worst_margin:
            worst_margin = float(margin[k])
            witness = _witness(which.value, u, v, p1, p2, k, margin[k])

    if not passed:
        logger.info("p1 symmetry fails for %s: %s", rhs.name, witness)
    return HypothesisReport(
        check="p1_symmetry",
        passed=passed,
        samples=n,
        box=box,
        worst_margin=worst_margin,
        witness=None if passed else witness,
        equality=passed and equality,
    )


def check_cross_monotonicity(rhs: CoupledRHS, box: Optional[SamplingBox] = None,
                             n: int = DEFAULT_SAMPLES, seed: int = 0) -> HypothesisReport:
    """
    Sample dg/dv > 0 and df/du > 0 strictly

    Returns:
        HypothesisReport: with G_min/G_max (dg/dv) and F_min/F_max (df/du)
    """
    box = box or SamplingBox.default()
    s = _halton(n, seed)
    u = box.u[0] + s[:, 0] * (box.u[1] - box.u[0])
    v = box.v[0] + s[:, 1] * (box.v[1] - box.v[0])
    p1 = box.p1[0] + s[:, 2] * (box.p1[1] - box.p1[0])
    p2 = box.p2[0] + s[:, 3] * (box.p2[1] - box.p2[0])

    g_v = eval_rhs(rhs, Which.G, u, v, p1, p2).dv
    f_u = eval_rhs(rhs, Which.F, u, v, p1, p2).du
    kg, kf = int(np.argmin(g_v)), int(np.argmin(f_u))
    if g_v[kg] <= f_u[kf]:
        worst_margin, witness = float(g_v[kg]), _witness("g", u, v, p1, p2, kg, g_v[kg])
    else:
        worst_margin, witness = float(f_u[kf]), _witness("f", u, v, p1, p2, kf, f_u[kf])
    passed = worst_margin > 0.0

    if not passed:
        logger.info("cross monotonicity fails for %s: %s", rhs.name, witness)
    return HypothesisReport(
        check="cross_monotonicity",
        passed=passed,
        samples=n,
        box=box,
        worst_margin=worst_margin,
        witness=None if passed else witness,
        g_min=float(g_v[kg]),
        g_max=float(np.max(g_v)),
        f_min=float(f_u[kf]),
        f_max=float(np.max(f_u)),
    )


