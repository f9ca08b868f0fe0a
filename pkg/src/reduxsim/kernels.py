"""Batch simulation kernels.

The component universe is fixed to four slots (codes 00, 10, 01, 11) and
five Hamiltonian edges, so a whole run fits in a handful of small arrays.
Two interchangeable backends consume the same pre-drawn uniforms:

* ``"numba"``: one compiled scalar loop per run.
* ``"numpy"``: all runs advance together, vectorised over the run axis.

Both reproduce :func:`reduxsim.dynamics.run_scenario` step for step. The
default backend is numba unless it is missing or ``REDUXSIM_DISABLE_JIT`` is set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import HAVE_NUMBA, njit

N_SLOTS = 4
N_EDGES = 5
MAX_HITS = 2
DRAWS_PER_RUN = 2 * MAX_HITS

EDGE_SRC = np.array([0, 0, 1, 2, 0], dtype=np.int64)
EDGE_TGT = np.array([1, 2, 3, 3, 3], dtype=np.int64)
SLOT_BITS = np.array([0, 1, 2, 3], dtype=np.int64)  # bit0: detector 1, bit1: detector 2

KIND_ZERO, KIND_CONSTANT, KIND_GAUSSIAN, KIND_WINDOW = 0, 1, 2, 3

STEP_GUARD = 0.1

ERR_NONE = 0
ERR_STEP = 1

_SQRT2 = math.sqrt(2.0)
_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


class StepSizeError(ValueError):
    """Integrated hazard over one step reached the guard; reduce dt."""


# -- profile math (shared by every code path) ------------------------------

@njit(cache=True)
def profile_rate(kind, p0, p1, p2, t):
    if kind == KIND_CONSTANT:
        return p0
    if kind == KIND_GAUSSIAN:
        z = (t - p1) / p2
        return p0 * math.exp(-0.5 * z * z)
    if kind == KIND_WINDOW:
        return p0 if p1 <= t < p2 else 0.0
    return 0.0


@njit(cache=True)
def profile_antideriv(kind, p0, p1, p2, t):
    if kind == KIND_CONSTANT:
        return p0 * t
    if kind == KIND_GAUSSIAN:
        return p0 * p2 * _SQRT_HALF_PI * math.erf((t - p1) / (p2 * _SQRT2))
    if kind == KIND_WINDOW:
        return p0 * (min(max(t, p1), p2) - p1)
    return 0.0


@njit(cache=True)
def profile_tail(kind, p0, p1, p2, t):
    """Integral of the profile from ``t`` to infinity."""
    if p0 == 0.0:
        return 0.0
    if kind == KIND_CONSTANT:
        return math.inf
    if kind == KIND_GAUSSIAN:
        return p0 * p2 * _SQRT_HALF_PI * math.erfc((t - p1) / (p2 * _SQRT2))
    if kind == KIND_WINDOW:
        return p0 * max(0.0, p2 - max(t, p1))
    return 0.0


# -- compiled scenario -------------------------------------------------------

@dataclass(frozen=True)
class CompiledScenario:
    kinds: np.ndarray        # (5,) int64
    params: np.ndarray       # (5, 3) float64
    hamiltonian: np.ndarray  # (5,) bool, which couplings exist
    rule_on: bool            # unrealized -> unrealized couplings forbidden
    t_end: float
    dt: float

    @property
    def n_steps(self) -> int:
        return n_steps(self.t_end, self.dt)


def n_steps(t_end: float, dt: float) -> int:
    return max(1, int(math.ceil(t_end / dt - 1e-9)))


def grid_tables(sc: CompiledScenario) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Antiderivative at each step start and end, and remaining tail at each step end: (n_steps, 5) each."""
    m = sc.n_steps
    f_lo = np.empty((m, N_EDGES))
    f_hi = np.empty((m, N_EDGES))
    tail = np.empty((m, N_EDGES))
    for k in range(m):
        t0 = k * sc.dt
        t1 = min((k + 1) * sc.dt, sc.t_end)
        for e in range(N_EDGES):
            kind, (p0, p1, p2) = int(sc.kinds[e]), sc.params[e]
            f_lo[k, e] = profile_antideriv(kind, p0, p1, p2, t0)
            f_hi[k, e] = profile_antideriv(kind, p0, p1, p2, t1)
            tail[k, e] = profile_tail(kind, p0, p1, p2, t1)
    return f_lo, f_hi, tail


@dataclass
class BatchResult:
    n_hits: np.ndarray           # (N,)
    hit_slot: np.ndarray         # (N, 2), -1 if absent
    hit_time: np.ndarray         # (N, 2), nan if absent
    hit_ncap: np.ndarray         # (N, 2) detectors captured by each hit
    hit_born: np.ndarray         # (N, 2) creation time of the chosen component
    final_exists: np.ndarray     # (N, 4)
    final_realized: np.ndarray   # (N, 4)
    final_weight: np.ndarray     # (N, 4)
    phantom_time: np.ndarray     # (N, 4), nan if never phantom
    max_w11_before_hit: np.ndarray  # (N,)
    max_step_drift: np.ndarray   # (N,)
    total_drift: np.ndarray      # (N,)

    @property
    def n_runs(self) -> int:
        return int(self.n_hits.shape[0])

    def equals(self, other: "BatchResult") -> bool:
        for name in self.__dataclass_fields__:
            a, b = getattr(self, name), getattr(other, name)
            if not np.array_equal(a, b, equal_nan=a.dtype.kind == "f"):
                return False
        return True


def _alloc(n: int) -> BatchResult:
    return BatchResult(
        n_hits=np.zeros(n, np.int64),
        hit_slot=np.full((n, MAX_HITS), -1, np.int64),
        hit_time=np.full((n, MAX_HITS), np.nan),
        hit_ncap=np.zeros((n, MAX_HITS), np.int64),
        hit_born=np.full((n, MAX_HITS), np.nan),
        final_exists=np.zeros((n, N_SLOTS), np.bool_),
        final_realized=np.zeros((n, N_SLOTS), np.bool_),
        final_weight=np.zeros((n, N_SLOTS)),
        phantom_time=np.full((n, N_SLOTS), np.nan),
        max_w11_before_hit=np.zeros(n),
        max_step_drift=np.zeros(n),
        total_drift=np.zeros(n),
    )


def clock_threshold(u: float) -> float:
    """Unit-exponential threshold from a uniform in [0, 1)."""
    return -math.log(1.0 - u)


# -- numba backend ---------------------------------------------------------------

@njit(cache=True)
def _derive(exists, realized, phantom, weight, born, active, t, ham, rule_on):
    for e in range(N_EDGES):
        active[e] = False
    for e in range(N_EDGES):
        if not ham[e]:
            continue
        s = EDGE_SRC[e]
        g = EDGE_TGT[e]
        if not exists[s] or phantom[s]:
            continue
        if not exists[g]:
            if rule_on and not realized[s]:
                continue
            exists[g] = True
            realized[g] = False
            phantom[g] = False
            weight[g] = 0.0
            born[g] = t
        elif rule_on and not realized[s] and not realized[g]:
            continue
        active[e] = not phantom[g]


@njit(cache=True)
def _run_one(kinds, params, ham, rule_on, t_end, dt, nsteps, f_lo, f_hi, tails, u, r,
             n_hits, hit_slot, hit_time, hit_ncap, hit_born,
             final_exists, final_realized, final_weight, phantom_time,
             max_w11, max_step_drift, total_drift):
    exists = np.zeros(N_SLOTS, np.bool_)
    realized = np.zeros(N_SLOTS, np.bool_)
    phantom = np.zeros(N_SLOTS, np.bool_)
    weight = np.zeros(N_SLOTS)
    born = np.zeros(N_SLOTS)
    active = np.zeros(N_EDGES, np.bool_)
    nominal = np.zeros(N_EDGES)
    tr = np.zeros(N_EDGES)
    out_tot = np.zeros(N_SLOTS)
    scale = np.zeros(N_SLOTS)
    net = np.zeros(N_SLOTS)
    expo = np.zeros(N_SLOTS)

    exists[0] = True
    realized[0] = True
    weight[0] = 1.0
    _derive(exists, realized, phantom, weight, born, active, 0.0, ham, rule_on)
    s_init = 1.0
    lam = 0.0
    thresh = -math.log(1.0 - u[0])
    hits = 0
    m11 = 0.0
    mdrift = 0.0

    for k in range(nsteps):
        t0 = k * dt
        t1 = min((k + 1) * dt, t_end)
        s_step = 0.0
        for c in range(N_SLOTS):
            s_step += weight[c]
        a = t0
        first = True
        while True:
            s = 0.0
            for c in range(N_SLOTS):
                s += weight[c]
            for e in range(N_EDGES):
                if active[e]:
                    if first:
                        nominal[e] = f_hi[k, e] - f_lo[k, e]
                    else:
                        nominal[e] = f_hi[k, e] - profile_antideriv(kinds[e], params[e, 0], params[e, 1],
                                                                    params[e, 2], a)
                else:
                    nominal[e] = 0.0
            for c in range(N_SLOTS):
                out_tot[c] = 0.0
                net[c] = 0.0
            for e in range(N_EDGES):
                out_tot[EDGE_SRC[e]] += nominal[e]
            for c in range(N_SLOTS):
                scale[c] = weight[c] / out_tot[c] if out_tot[c] > weight[c] else 1.0
            for e in range(N_EDGES):
                tr[e] = nominal[e] * scale[EDGE_SRC[e]]
            for e in range(N_EDGES):
                net[EDGE_TGT[e]] += tr[e]
                net[EDGE_SRC[e]] -= tr[e]
            dl = 0.0
            for c in range(N_SLOTS):
                if net[c] > 0.0 and exists[c] and not phantom[c]:
                    expo[c] = net[c] / s
                else:
                    expo[c] = 0.0
                dl += expo[c]
            if dl >= STEP_GUARD:
                return ERR_STEP
            if dl > 0.0 and lam + dl >= thresh:
                frac = (thresh - lam) / dl
                th = a + frac * (t1 - a)
                target = u[2 * hits + 1] * dl
                acc = 0.0
                chosen = -1
                for c in range(N_SLOTS):
                    if expo[c] > 0.0:
                        chosen = c
                        acc += expo[c]
                        if target < acc:
                            break
                root_bits = 0
                for c in range(N_SLOTS):
                    if exists[c] and realized[c]:
                        root_bits = SLOT_BITS[c]
                new_bits = SLOT_BITS[chosen] & ~root_bits
                ncap = (new_bits & 1) + ((new_bits >> 1) & 1)
                hit_slot[r, hits] = chosen
                hit_time[r, hits] = th
                hit_ncap[r, hits] = ncap
                hit_born[r, hits] = born[chosen]
                for c in range(N_SLOTS):
                    if c != chosen:
                        exists[c] = False
                        realized[c] = False
                        phantom[c] = False
                        weight[c] = 0.0
                weight[chosen] = s
                realized[chosen] = True
                phantom[chosen] = False
                _derive(exists, realized, phantom, weight, born, active, th, ham, rule_on)
                hits += 1
                lam = 0.0
                if hits < MAX_HITS:
                    thresh = -math.log(1.0 - u[2 * hits])
                else:
                    thresh = math.inf
                a = th
                first = False
                continue
            for e in range(N_EDGES):
                weight[EDGE_SRC[e]] -= tr[e]
                weight[EDGE_TGT[e]] += tr[e]
            for c in range(N_SLOTS):
                if weight[c] < 0.0:
                    weight[c] = 0.0
            lam += dl
            break

        if hits == 0 and weight[3] > m11:
            m11 = weight[3]
        for c in range(N_SLOTS):
            if exists[c] and not realized[c] and not phantom[c]:
                fut = 0.0
                for e in range(N_EDGES):
                    if active[e] and (EDGE_SRC[e] == c or EDGE_TGT[e] == c):
                        fut += tails[k, e]
                if fut == 0.0:
                    phantom[c] = True
                    phantom_time[r, c] = t1
                    for e in range(N_EDGES):
                        if EDGE_SRC[e] == c or EDGE_TGT[e] == c:
                            active[e] = False
        s_end = 0.0
        for c in range(N_SLOTS):
            s_end += weight[c]
        d = abs(s_end - s_step)
        if d > mdrift:
            mdrift = d

    s_fin = 0.0
    for c in range(N_SLOTS):
        s_fin += weight[c]
        final_exists[r, c] = exists[c]
        final_realized[r, c] = realized[c]
        final_weight[r, c] = weight[c]
    n_hits[r] = hits
    max_w11[r] = m11
    max_step_drift[r] = mdrift
    total_drift[r] = abs(s_fin - s_init)
    return ERR_NONE


@njit(cache=True)
def _batch_numba(kinds, params, ham, rule_on, t_end, dt, nsteps, f_lo, f_hi, tails, uniforms,
                 n_hits, hit_slot, hit_time, hit_ncap, hit_born,
                 final_exists, final_realized, final_weight, phantom_time,
                 max_w11, max_step_drift, total_drift):
    for r in range(uniforms.shape[0]):
        err = _run_one(kinds, params, ham, rule_on, t_end, dt, nsteps, f_lo, f_hi, tails, uniforms[r], r,
                       n_hits, hit_slot, hit_time, hit_ncap, hit_born,
                       final_exists, final_realized, final_weight, phantom_time,
                       max_w11, max_step_drift, total_drift)
        if err != ERR_NONE:
            return err
    return ERR_NONE


def _run_numba(sc: CompiledScenario, uniforms: np.ndarray) -> BatchResult:
    res = _alloc(uniforms.shape[0])
    f_lo, f_hi, tails = grid_tables(sc)
    err = _batch_numba(sc.kinds, sc.params, sc.hamiltonian, sc.rule_on, sc.t_end, sc.dt,
                       sc.n_steps, f_lo, f_hi, tails, uniforms,
                       res.n_hits, res.hit_slot, res.hit_time, res.hit_ncap, res.hit_born,
                       res.final_exists, res.final_realized, res.final_weight, res.phantom_time,
                       res.max_w11_before_hit, res.max_step_drift, res.total_drift)
    if err == ERR_STEP:
        raise StepSizeError(f"integrated hazard per step reached {STEP_GUARD}; reduce dt (now {sc.dt})")
    return res


# -- numpy backend ---------------------------------------------------------------

def _antideriv_at(sc: CompiledScenario, e: int, ts: np.ndarray) -> np.ndarray:
    vals, inv = np.unique(ts, return_inverse=True)
    k, (p0, p1, p2) = int(sc.kinds[e]), sc.params[e]
    f = np.array([profile_antideriv(k, p0, p1, p2, float(v)) for v in vals])
    return f[inv]


def _derive_rows(rows, exists, realized, phantom, weight, born, active, ts, sc):
    active[rows] = False
    for e in range(N_EDGES):
        if not sc.hamiltonian[e]:
            continue
        s, g = EDGE_SRC[e], EDGE_TGT[e]
        ok = exists[rows, s] & ~phantom[rows, s]
        new = ok & ~exists[rows, g]
        if sc.rule_on:
            new &= realized[rows, s]
        nr = rows[new]
        exists[nr, g] = True
        realized[nr, g] = False
        phantom[nr, g] = False
        weight[nr, g] = 0.0
        born[nr, g] = ts[new]
        link = ok & exists[rows, g]
        if sc.rule_on:
            link &= realized[rows, s] | realized[rows, g]
        active[rows[link], e] = ~phantom[rows[link], g]


def _apply_hits(sc, r, expo, dl, s, t1, uniforms, a, lam, thresh, hits,
                exists, realized, phantom, weight, born, active, res):
    frac = (thresh[r] - lam[r]) / dl
    th = a[r] + frac * (t1 - a[r])
    h = hits[r]
    target = uniforms[r, 2 * h + 1] * dl
    positive = expo > 0.0
    cum = np.cumsum(expo, axis=1)
    below = positive & (target[:, None] < cum)
    last_pos = N_SLOTS - 1 - np.argmax(positive[:, ::-1], axis=1)
    chosen = np.where(below.any(axis=1), np.argmax(below, axis=1), last_pos)
    root = np.argmax(exists[r] & realized[r], axis=1)
    new_bits = SLOT_BITS[chosen] & ~SLOT_BITS[root]
    res.hit_slot[r, h] = chosen
    res.hit_time[r, h] = th
    res.hit_ncap[r, h] = (new_bits & 1) + ((new_bits >> 1) & 1)
    res.hit_born[r, h] = born[r, chosen]
    exists[r] = False
    realized[r] = False
    phantom[r] = False
    weight[r] = 0.0
    exists[r, chosen] = True
    realized[r, chosen] = True
    weight[r, chosen] = s
    _derive_rows(r, exists, realized, phantom, weight, born, active, th, sc)
    hits[r] = h + 1
    lam[r] = 0.0
    thresh[r] = [clock_threshold(float(uniforms[i, 2 * k])) if k < MAX_HITS else math.inf
                 for i, k in zip(r, hits[r])]
    a[r] = th


def _run_numpy(sc: CompiledScenario, uniforms: np.ndarray) -> BatchResult:
    n = uniforms.shape[0]
    res = _alloc(n)
    exists = np.zeros((n, N_SLOTS), np.bool_)
    realized = np.zeros((n, N_SLOTS), np.bool_)
    phantom = np.zeros((n, N_SLOTS), np.bool_)
    weight = np.zeros((n, N_SLOTS))
    born = np.zeros((n, N_SLOTS))
    active = np.zeros((n, N_EDGES), np.bool_)
    exists[:, 0] = realized[:, 0] = True
    weight[:, 0] = 1.0
    all_rows = np.arange(n)
    _derive_rows(all_rows, exists, realized, phantom, weight, born, active, np.zeros(n), sc)

    lam = np.zeros(n)
    # libm log, not numpy's vectorised one: keeps thresholds bit-equal to the scalar paths.
    thresh = np.array([clock_threshold(float(u)) for u in uniforms[:, 0]])
    hits = np.zeros(n, np.int64)
    m11 = np.zeros(n)
    mdrift = np.zeros(n)

    lo_table, hi_table, tail_table = grid_tables(sc)
    for k in range(sc.n_steps):
        t0 = k * sc.dt
        t1 = min((k + 1) * sc.dt, sc.t_end)
        s_step = ((weight[:, 0] + weight[:, 1]) + weight[:, 2]) + weight[:, 3]
        f_lo, f_hi = lo_table[k], hi_table[k]
        a = np.full(n, t0)
        pending = np.ones(n, np.bool_)
        for sub in range(MAX_HITS + 1):
            rows = np.nonzero(pending)[0]
            if rows.size == 0:
                break
            # Whole-array views on the first pass; gathers only for runs that hit mid-step.
            sel = slice(None) if rows.size == n else rows
            w = weight[sel].copy()
            s = ((w[:, 0] + w[:, 1]) + w[:, 2]) + w[:, 3]
            act_all = active[sel]
            if sub == 0:
                nominal = np.where(act_all, f_hi - f_lo, 0.0)
            else:
                nominal = np.zeros((rows.size, N_EDGES))
                for e in range(N_EDGES):
                    act = act_all[:, e]
                    if act.any():
                        nominal[act, e] = f_hi[e] - _antideriv_at(sc, e, a[rows][act])
            out_tot = np.zeros((rows.size, N_SLOTS))
            for e in range(N_EDGES):
                out_tot[:, EDGE_SRC[e]] += nominal[:, e]
            with np.errstate(divide="ignore", invalid="ignore"):
                scale = np.where(out_tot > w, w / out_tot, 1.0)
            tr = nominal * scale[:, EDGE_SRC]
            net = np.zeros((rows.size, N_SLOTS))
            for e in range(N_EDGES):
                net[:, EDGE_TGT[e]] += tr[:, e]
                net[:, EDGE_SRC[e]] -= tr[:, e]
            live = (net > 0.0) & exists[sel] & ~phantom[sel]
            with np.errstate(divide="ignore", invalid="ignore"):
                expo = np.where(live, net / s[:, None], 0.0)
            dl = ((expo[:, 0] + expo[:, 1]) + expo[:, 2]) + expo[:, 3]
            if np.any(dl >= STEP_GUARD):
                raise StepSizeError(f"integrated hazard per step reached {STEP_GUARD}; reduce dt (now {sc.dt})")
            hit = (dl > 0.0) & (lam[sel] + dl >= thresh[sel])

            new_w = w.copy()
            for e in range(N_EDGES):
                new_w[:, EDGE_SRC[e]] -= tr[:, e]
                new_w[:, EDGE_TGT[e]] += tr[:, e]
            new_w[new_w < 0.0] = 0.0
            weight[sel] = np.where(hit[:, None], w, new_w)
            lam[sel] += np.where(hit, 0.0, dl)
            pending[sel] = hit

            j = np.nonzero(hit)[0]
            if j.size:
                _apply_hits(sc, rows[j], expo[j], dl[j], s[j], t1, uniforms, a, lam, thresh, hits,
                            exists, realized, phantom, weight, born, active, res)

        before = hits == 0
        m11[before] = np.maximum(m11[before], weight[before, 3])
        tails = tail_table[k]
        for c in range(N_SLOTS):
            cand = exists[:, c] & ~realized[:, c] & ~phantom[:, c]
            if not cand.any():
                continue
            touching = (EDGE_SRC == c) | (EDGE_TGT == c)
            fut = np.where(active[:, touching], tails[touching], 0.0).sum(axis=1)
            newly = cand & (fut == 0.0)
            phantom[newly, c] = True
            res.phantom_time[newly, c] = t1
            for e in np.nonzero(touching)[0]:
                active[newly, e] = False
        s_end = ((weight[:, 0] + weight[:, 1]) + weight[:, 2]) + weight[:, 3]
        mdrift = np.maximum(mdrift, np.abs(s_end - s_step))

    res.n_hits[:] = hits
    res.final_exists[:] = exists
    res.final_realized[:] = realized
    res.final_weight[:] = weight
    res.max_w11_before_hit[:] = m11
    res.max_step_drift[:] = mdrift
    s_fin = ((weight[:, 0] + weight[:, 1]) + weight[:, 2]) + weight[:, 3]
    res.total_drift[:] = np.abs(s_fin - 1.0)
    return res


# -- dispatch --------------------------------------------------------------------

def default_backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


def run_batch(sc: CompiledScenario, uniforms: np.ndarray, backend: str | None = None) -> BatchResult:
    """Simulate ``len(uniforms)`` runs; row ``i`` of ``uniforms`` drives run ``i``."""
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    if uniforms.ndim != 2 or uniforms.shape[1] != DRAWS_PER_RUN:
        raise ValueError(f"uniforms must have shape (n, {DRAWS_PER_RUN})")
    backend = backend or default_backend()
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable or disabled")
        return _run_numba(sc, uniforms)
    if backend == "numpy":
        return _run_numpy(sc, uniforms)
    raise ValueError(f"unknown backend {backend!r}")
