"""Censored jump-measure families on an interval and their moment integrals.

A kernel here is a family of nonnegative measures {nu_x}, one per point x of a
bounded interval, whose supports never let a jump exit the closed interval.
Two analytic families are built in (both with density c_norm*|z|^(-1-sigma)):

* ``censored-stable``  -- support (a-x, b-x), i.e. all jumps staying in [a,b];
* ``regional-stable``  -- support (-d(x), d(x)) with d the boundary distance.

A third kind, ``table``, takes explicit per-node weight rows and represents a
purely atomic measure living on the grid offsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CENSORED = "censored-stable"
REGIONAL = "regional-stable"
TABLE = "table"
KINDS = (CENSORED, REGIONAL, TABLE)

SMALL_BALL = "small-ball"
TAIL = "tail"


@dataclass(frozen=True)
class Domain1D:
    """Open interval (a, b) with its boundary-distance function."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"domain requires a < b, got ({self.a}, {self.b})")

    @property
    def length(self) -> float:
        return self.b - self.a

    def contains(self, x: float) -> bool:
        return self.a <= x <= self.b

    def distance(self, x):
        """d(x) = min(x-a, b-x); vectorizes over numpy arrays."""
        return np.minimum(np.asarray(x) - self.a, self.b - np.asarray(x))


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """One censored measure family: kind, order sigma, scaling, domain.

    For kind="table", ``table`` holds the dense weight rows w[i, j] >= 0 of an
    atomic measure nu_{x_i} = sum_j w[i,j] * delta(x_j - x_i) on an implied
    uniform grid of table.shape[0]-1 intervals over the domain.
    """

    kind: str
    sigma: float
    domain: Domain1D
    c_norm: float = 1.0
    table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not 0.0 < self.sigma < 1.0:
            raise ValueError(f"sigma must lie in (0,1), got {self.sigma}")
        if not self.c_norm > 0.0:
            raise ValueError(f"c_norm must be positive, got {self.c_norm}")
        if self.kind == TABLE:
            if self.table is None:
                raise ValueError("kind='table' requires weight rows")
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or tab.shape[0] != tab.shape[1]:
                raise ValueError(f"table must be square, got shape {tab.shape}")
            if tab.shape[0] < 2:
                raise ValueError("table needs at least 2 nodes")
            if not np.all(np.isfinite(tab)) or np.any(tab < 0.0):
                raise ValueError("table weights must be finite and nonnegative")
            object.__setattr__(self, "table", tab)
        elif self.table is not None:
            raise ValueError(f"kind={self.kind!r} takes no table payload")

    # --- table helpers -------------------------------------------------

    def table_nodes(self) -> np.ndarray:
        tab = self.table
        n = tab.shape[0] - 1
        return self.domain.a + (self.domain.length / n) * np.arange(n + 1)

    def table_row(self, x: float) -> int:
        """Index of the node at x; table measures are defined only at nodes."""
        nodes = self.table_nodes()
        n = nodes.size - 1
        step = self.domain.length / n
        i = int(round((x - self.domain.a) / step))
        if i < 0 or i > n or abs(nodes[i] - x) > 1e-9 * step:
            raise ValueError(f"x={x} is not a node of the weight table")
        return i


def h_function(beta: float, sigma: float, delta: float) -> float:
    """Three-branch tail-growth gauge: delta^(beta-sigma), |ln delta|+1, or 1."""
    if not delta > 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    if not 0.0 <= beta <= 2.0:
        raise ValueError(f"beta must lie in [0,2], got {beta}")
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0,1), got {sigma}")
    if beta < sigma:
        return delta ** (beta - sigma)
    if beta == sigma:
        return abs(math.log(delta)) + 1.0
    return 1.0


def support_interval(spec: KernelSpec, x: float) -> tuple[float, float]:
    """Closed hull (z_lo, z_hi) of supp(nu_x); may be empty (z_lo == z_hi)."""
    if not spec.domain.contains(x):
        raise ValueError(f"x={x} outside domain [{spec.domain.a}, {spec.domain.b}]")
    if spec.kind == CENSORED:
        return (spec.domain.a - x, spec.domain.b - x)
    if spec.kind == REGIONAL:
        d = float(spec.domain.distance(x))
        return (-d, d)
    i = spec.table_row(x)
    row = spec.table[i]
    nz = np.nonzero(row)[0]
    if nz.size == 0:
        return (0.0, 0.0)
    nodes = spec.table_nodes()
    return (nodes[nz[0]] - nodes[i], nodes[nz[-1]] - nodes[i])


def _power_primitive(lo: float, hi: float, p: float) -> float:
    """Integral of z^p over [lo, hi] with 0 < lo <= hi (exact antiderivative)."""
    if hi <= lo:
        return 0.0
    if p == -1.0:
        return math.log(hi) - math.log(lo)
    return (hi ** (p + 1.0) - lo ** (p + 1.0)) / (p + 1.0)


def _sided_power_integral(z_lo, z_hi, r_lo, r_hi, p):
    """Integral of |z|^p over (z_lo,z_hi) intersected with r_lo<=|z|<=r_hi."""
    total = 0.0
    # positive side
    lo = max(z_lo, r_lo)
    hi = min(z_hi, r_hi)
    if hi > lo:
        total += _power_primitive(lo, hi, p)
    # negative side, mirrored
    lo = max(-z_hi, r_lo)
    hi = min(-z_lo, r_hi)
    if hi > lo:
        total += _power_primitive(lo, hi, p)
    return total


def moment_integral(spec: KernelSpec, x: float, region: str, delta: float,
                    beta: float) -> float:
    """Moment of nu_x over a ball or its complement.

    region="small-ball": integral of |z|^beta over {|z| < delta}; requires
    beta > sigma or the integral diverges at the origin.
    region="tail": integral of min(1, |z|^beta) over {|z| >= delta}, with the
    convention |z|^0 = 1.

    An empty integration region gives 0.
    """
    if not delta > 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    if not 0.0 <= beta <= 2.0:
        raise ValueError(f"beta must lie in [0,2], got {beta}")
    if region not in (SMALL_BALL, TAIL):
        raise ValueError(f"unknown region {region!r}")
    if region == SMALL_BALL and beta <= spec.sigma:
        raise ValueError(
            f"small-ball moment diverges for beta={beta} <= sigma={spec.sigma}")

    if spec.kind == TABLE:
        i = spec.table_row(x)
        nodes = spec.table_nodes()
        z = nodes - nodes[i]
        w = spec.table[i]
        az = np.abs(z)
        if region == SMALL_BALL:
            mask = (az < delta) & (az > 0)
            return float(np.sum(w[mask] * az[mask] ** beta))
        mask = az >= delta
        weight = np.ones_like(az) if beta == 0.0 else np.minimum(1.0, az ** beta)
        return float(np.sum(w[mask] * weight[mask]))

    z_lo, z_hi = support_interval(spec, x)
    p = beta - 1.0 - spec.sigma
    if region == SMALL_BALL:
        return spec.c_norm * _sided_power_integral(z_lo, z_hi, 0.0, delta, p)
    if beta == 0.0:
        return spec.c_norm * _sided_power_integral(
            z_lo, z_hi, delta, math.inf, -1.0 - spec.sigma)
    # weight min(1,|z|^beta): |z|^beta on [delta,1), constant 1 beyond
    total = _sided_power_integral(z_lo, z_hi, delta, 1.0, p)
    if max(z_hi, -z_lo) > 1.0:
        total += _sided_power_integral(z_lo, z_hi, max(delta, 1.0), math.inf,
                                       -1.0 - spec.sigma)
    return spec.c_norm * total


def total_variation_moment(spec: KernelSpec, x: float, y: float, delta: float,
                           beta: float) -> float:
    """Integral of |z|^beta over {|z|>=delta} against |nu_x - nu_y|.

    For the analytic kinds both measures share the density
    c_norm*|z|^(-1-sigma), so the total variation lives on the symmetric
    difference of the two support intervals.
    """
    if not delta > 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    if spec.kind == TABLE:
        i, j = spec.table_row(x), spec.table_row(y)
        tab = spec.table
        n = tab.shape[0] - 1
        step = spec.domain.length / n
        total = 0.0
        for k in range(-n, n + 1):
            wx = tab[i, i + k] if 0 <= i + k <= n else 0.0
            wy = tab[j, j + k] if 0 <= j + k <= n else 0.0
            az = abs(k) * step
            if az >= delta and (wx or wy):
                total += abs(wx - wy) * az ** beta
        return total

    (xl, xr) = support_interval(spec, x)
    (yl, yr) = support_interval(spec, y)
    p = beta - 1.0 - spec.sigma
    # symmetric difference of two intervals = up to two disjoint pieces
    pieces = []
    for (l1, r1), (l2, r2) in (((xl, xr), (yl, yr)), ((yl, yr), (xl, xr))):
        # parts of (l1,r1) not covered by (l2,r2)
        if l1 < l2:
            pieces.append((l1, min(r1, l2)))
        if r1 > r2:
            pieces.append((max(l1, r2), r1))
    total = 0.0
    for lo, hi in pieces:
        if hi > lo:
            total += _sided_power_integral(lo, hi, delta, math.inf, p)
    return spec.c_norm * total


@dataclass
class AssumptionReport:
    """Fitted tail/small-ball constants and the pairwise measure-variation table."""

    sigma: float
    kind: str
    tail_ratios: list          # (beta, delta, sup-over-x of tail / h(beta, delta))
    small_ball_ratios: list    # (beta, delta, sup-over-x of ball / delta^(beta-sigma))
    c1: float
    c2: float
    tv_table: list             # (|x-y|, beta, delta, tv moment / (1 + h(beta, delta)))
    flags: list

    def empirical_modulus(self):
        """Max normalized variation at or below each pair distance."""
        rows = sorted(self.tv_table)
        out, running = [], 0.0
        for dist, _beta, _delta, val in rows:
            running = max(running, val)
            out.append((dist, running))
        return out

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "kind": self.kind,
            "c1": self.c1,
            "c2": self.c2,
            "tail_ratios": [list(t) for t in self.tail_ratios],
            "small_ball_ratios": [list(t) for t in self.small_ball_ratios],
            "tv_table": [list(t) for t in self.tv_table],
            "flags": list(self.flags),
        }


def validate_assumptions(spec: KernelSpec, x_samples, delta_samples,
                         beta_samples) -> AssumptionReport:
    """Sweep moment ratios over samples and fit the tail/ball constants.

    The tail constant c1 is the largest ratio tail_moment / h(beta, delta)
    seen over the sweep; c2 likewise for small-ball moments (beta > sigma
    only) against delta^(beta-sigma).  Pairwise total-variation moments are
    tabulated against |x - y| so the caller can inspect the continuity
    modulus; no functional form is asserted.
    """
    xs = [float(v) for v in np.atleast_1d(x_samples)]
    deltas = [float(v) for v in np.atleast_1d(delta_samples)]
    betas = [float(v) for v in np.atleast_1d(beta_samples)]
    if not xs or not deltas or not betas:
        raise ValueError("sample sets must be nonempty")
    for x in xs:
        if not spec.domain.contains(x):
            raise ValueError(f"sample x={x} outside domain")

    tail_rows, ball_rows, flags = [], [], []
    for beta in betas:
        for delta in deltas:
            hval = h_function(beta, spec.sigma, delta)
            sup = max(moment_integral(spec, x, TAIL, delta, beta) for x in xs)
            tail_rows.append((beta, delta, sup / hval))
            if beta > spec.sigma:
                sup = max(moment_integral(spec, x, SMALL_BALL, delta, beta)
                          for x in xs)
                ball_rows.append((beta, delta, sup / delta ** (beta - spec.sigma)))
    c1 = max(r for _, _, r in tail_rows)
    c2 = max((r for _, _, r in ball_rows), default=0.0)

    # a ratio grid whose spread keeps growing as delta shrinks suggests the
    # claimed order sigma is wrong for this family
    for beta in betas:
        rows = sorted((d, r) for b, d, r in tail_rows if b == beta)
        if len(rows) >= 3 and rows[0][1] > 10.0 * max(rows[-1][1], 1e-300):
            flags.append(f"tail ratio grows as delta shrinks at beta={beta}")

    tv_rows = []
    for beta in betas:
        for delta in deltas:
            norm = 1.0 + h_function(beta, spec.sigma, delta)
            for ix, x in enumerate(xs):
                for y in xs[ix:]:
                    tv = total_variation_moment(spec, x, y, delta, beta)
                    tv_rows.append((abs(x - y), beta, delta, tv / norm))

    return AssumptionReport(sigma=spec.sigma, kind=spec.kind,
                            tail_ratios=tail_rows, small_ball_ratios=ball_rows,
                            c1=c1, c2=c2, tv_table=tv_rows, flags=flags)
