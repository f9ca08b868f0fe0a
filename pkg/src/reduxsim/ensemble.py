"""Monte Carlo ensembles, the quadrature oracle for first-hit probabilities, and
the ensemble-versus-single-run comparison behind the causality argument."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from . import kernels
from .config import ConfigError, ScenarioConfig
from .dynamics import CurrentModel
from .minkowski import BoundaryStrategy, IntervalKind, SpacetimeEvent, hk_boundary_time, interval
from .state import CODES

SIGMAS = 3.0
# Below this many runs the normal approximation behind the 3-sigma rule is not trusted.
MIN_RUNS = 30


def binomial_radius(p: float, n: int, sigmas: float = SIGMAS) -> float:
    return sigmas * math.sqrt(max(p * (1.0 - p), 0.0) / n)


# -- oracle ----------------------------------------------------------------------

def selection_probability_oracle(model: CurrentModel, horizon: float, s: float = 1.0,
                                 t0: float = 0.0, root: str = "00") -> dict[str, float]:
    """Probability that each component is the first one hit before ``horizon``.

    Integrates ``P_n = int (J_n/s) exp(-int sum_m J_m/s)`` by adaptive
    quadrature over the point rates of the edges leaving ``root``; the key
    ``"none"`` holds the survival probability. Assumes the total modulus stays
    at ``s`` and no current leaves the targets before the first hit.
    """
    targets: dict[str, list] = {}
    for key, prof in model.profiles.items():
        src, tgt = key.split("->")
        if src == root:
            targets.setdefault(tgt, []).append(prof)
    breaks = sorted({b for profs in targets.values() for p in profs for b in p.breakpoints()
                     if t0 < b < horizon})

    def rate(code, t):
        return sum(p.at(t) for p in targets[code]) / s

    def total_rate(t):
        return sum(rate(c, t) for c in targets)

    def quad(f, a, b):
        pts = [x for x in breaks if a < x < b]
        val, err = integrate.quad(f, a, b, points=pts or None, limit=400, epsabs=1e-12, epsrel=1e-11)
        if not math.isfinite(val):
            raise ValueError("profile is not integrable on the horizon")
        return val

    def cumulative(t):
        return quad(total_rate, t0, t) if t > t0 else 0.0

    out = {}
    for code in sorted(targets, key=CODES.index):
        out[code] = quad(lambda t, c=code: rate(c, t) * math.exp(-cumulative(t)), t0, horizon)
    out["none"] = math.exp(-cumulative(horizon))
    return out


# -- ensembles ----------------------------------------------------------------------

@dataclass
class EnsembleStats:
    n_runs: int
    base_seed: int
    choice_counts: dict[str, int]
    no_hit_count: int
    mean_hit_time: dict[str, Optional[float]]
    hit_count_hist: list[int]
    dual_hits: int
    backend: str
    oracle: Optional[dict[str, float]] = None
    batch: Optional[kernels.BatchResult] = field(default=None, repr=False)

    @property
    def frequencies(self) -> dict[str, float]:
        f = {c: k / self.n_runs for c, k in self.choice_counts.items()}
        f["none"] = self.no_hit_count / self.n_runs
        return f

    def radius(self, key: str) -> float:
        """3-sigma binomial radius, taken at the oracle probability when one is attached."""
        p = self.oracle[key] if self.oracle and key in self.oracle else self.frequencies[key]
        return binomial_radius(p, self.n_runs)

    def agrees_with_oracle(self) -> dict[str, bool]:
        if self.oracle is None:
            raise ValueError("no oracle attached")
        freqs = self.frequencies
        return {k: abs(freqs.get(k, 0.0) - p) < self.radius(k) for k, p in self.oracle.items()}

    def to_dict(self) -> dict:
        freqs = self.frequencies
        return {
            "n_runs": self.n_runs,
            "base_seed": self.base_seed,
            "backend": self.backend,
            "counts": {**self.choice_counts, "none": self.no_hit_count},
            "frequencies": freqs,
            "sigma": {k: self.radius(k) / SIGMAS for k in freqs},
            "radius_3sigma": {k: self.radius(k) for k in freqs},
            "mean_hit_time": self.mean_hit_time,
            "hit_count_hist": self.hit_count_hist,
            "dual_hits": self.dual_hits,
            "oracle": self.oracle,
        }


def simulate_batch(config: ScenarioConfig, n_runs: int, base_seed: int,
                   backend: Optional[str] = None) -> kernels.BatchResult:
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    uniforms = np.random.default_rng(base_seed).random((n_runs, kernels.DRAWS_PER_RUN))
    return kernels.run_batch(config.compiled(), uniforms, backend)


def summarize(batch: kernels.BatchResult, base_seed: int, backend: str) -> EnsembleStats:
    n = batch.n_runs
    first = batch.hit_slot[:, 0]
    counts, means = {}, {}
    for slot in range(1, kernels.N_SLOTS):
        mask = first == slot
        counts[CODES[slot]] = int(mask.sum())
        means[CODES[slot]] = float(batch.hit_time[mask, 0].mean()) if mask.any() else None
    hist = np.bincount(batch.n_hits, minlength=kernels.MAX_HITS + 1)
    return EnsembleStats(
        n_runs=n, base_seed=base_seed, choice_counts=counts, no_hit_count=int((first < 0).sum()),
        mean_hit_time=means, hit_count_hist=[int(x) for x in hist],
        dual_hits=int((batch.hit_ncap > 1).sum()), backend=backend, batch=batch,
    )


def run_ensemble(config: ScenarioConfig, n_runs: int, base_seed: int, backend: Optional[str] = None,
                 with_oracle: bool = False) -> EnsembleStats:
    """Run ``n_runs`` seeded runs and tally which component each run's first hit chose."""
    backend = backend or kernels.default_backend()
    stats = summarize(simulate_batch(config, n_runs, base_seed, backend), base_seed, backend)
    if with_oracle:
        stats.oracle = selection_probability_oracle(config.currents, config.t_end)
    return stats


# -- causality -------------------------------------------------------------------

def _a_support(profile, t_end: float) -> tuple[float, float]:
    start = getattr(profile, "start", 0.0)
    stop = getattr(profile, "stop", t_end)
    return max(0.0, start), min(t_end, stop)


def causality_arms(config: ScenarioConfig) -> tuple[ScenarioConfig, ScenarioConfig, str]:
    """The A-side scenario without and with the far B-side reduction.

    Raises :class:`ConfigError` unless B is spacelike to every A-side event and
    its reduction boundary, for the configured strategy, precedes A's window.
    """
    c = config.causality
    if c is None:
        raise ConfigError("config has no 'causality' section")
    prof = config.currents.get(c.a_edge)
    if prof is None:
        raise ConfigError(f"no current on {c.a_edge}")
    x_a = config.x_a if c.a_edge == "00->10" else config.x_b
    x_b = config.x_b if c.a_edge == "00->10" else config.x_a
    b_event = SpacetimeEvent(c.b_time, x_b)
    start, stop = _a_support(prof, config.t_end)
    for t in (start, stop):
        if interval(b_event, SpacetimeEvent(t, x_a)).kind is not IntervalKind.SPACELIKE:
            raise ConfigError("B reduction is not spacelike to the A-side window (timelike geometry)")
    if config.strategy is BoundaryStrategy.HELLWIG_KRAUS:
        switch = hk_boundary_time(b_event, x_a)
    else:
        switch = c.b_time
    if switch > start:
        raise ConfigError("B reduction boundary does not precede the A-side window in the evaluation frame")
    base = config.with_currents(CurrentModel({c.a_edge: prof}))
    reduced = config.with_currents(CurrentModel({c.a_edge: prof.scaled(c.factor)}))
    return base, reduced, c.a_edge.split("->")[1]


def causality_demo(config: ScenarioConfig, n_runs: int = 100_000, base_seed: int = 0,
                   backend: Optional[str] = None) -> dict:
    """Compare A-capture frequencies with and without a spacelike B reduction.

    Each arm is an independent ensemble (seeds ``base_seed`` and
    ``base_seed + 1``). The single-run view looks at run 0 of each arm only.
    """
    base, reduced, code = causality_arms(config)
    arms = {}
    for name, cfg, seed in (("without_b", base, base_seed), ("with_b", reduced, base_seed + 1)):
        stats = run_ensemble(cfg, n_runs, seed, backend, with_oracle=True)
        p_hat = stats.frequencies[code]
        arms[name] = {
            "seed": seed,
            "count": stats.choice_counts[code],
            "frequency": p_hat,
            "oracle": stats.oracle[code],
            "radius_3sigma": stats.radius(code),
            "matches_oracle": abs(p_hat - stats.oracle[code]) < stats.radius(code),
            "first_run_outcome": bool(stats.batch.hit_slot[0, 0] == CODES.index(code)),
        }
    p1, p2 = arms["without_b"]["frequency"], arms["with_b"]["frequency"]
    diff = p1 - p2
    sigma_diff = math.sqrt((p1 * (1 - p1) + p2 * (1 - p2)) / n_runs)
    enough = n_runs >= MIN_RUNS
    distinguishes = enough and sigma_diff > 0 and abs(diff) > SIGMAS * sigma_diff

    q1, q2 = arms["without_b"]["oracle"], arms["with_b"]["oracle"]
    # A single run yields one binary outcome; both outcomes are possible in both arms,
    # so the best likelihood ratio a lone observer could form stays bounded.
    lr = max(abs(math.log(q1 / q2)), abs(math.log((1 - q1) / (1 - q2)))) if 0 < q1 < 1 and 0 < q2 < 1 else math.inf
    return {
        "n_runs": n_runs,
        "component": code,
        "factor": config.causality.factor,
        "arms": arms,
        "difference": diff,
        "sigma_difference": sigma_diff,
        "z": diff / sigma_diff if sigma_diff > 0 else None,
        "ensemble_distinguishes": distinguishes,
        "conclusive": enough,
        "note": None if enough else f"insufficient data: {n_runs} run(s) per arm, need at least {MIN_RUNS}",
        "single_run": {
            "outcomes": {k: v["first_run_outcome"] for k, v in arms.items()},
            "both_outcomes_possible_in_both_arms": bool(0 < q1 < 1 and 0 < q2 < 1),
            "max_log_likelihood_ratio": lr,
            "conclusive": False,
        },
    }
