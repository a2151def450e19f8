"""Five-phase adiabatic global optimizer for rugged discrete landscapes.

Pipeline: reduce a landscape (explicit energy table or Ising couplings) to a
normalized model with a neighbor relation; map a working gap to an annealing
schedule via the gap-time condition tau = E / g^2; mine the landscape by
greedy descent into a sorted candidate list; evolve a walker that always
accepts downhill moves and escapes uphill with a barrier-transmission
probability scaled by the instantaneous drive level; report instrumented
counters (the selection stage is the only O(log k) step, and is counted).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import NoAdmissibleGapError, ScheduleError
from .tunneling import ELECTRON_MASS, TunnelBarrier, transmission

BarrierMap = Callable[[float, float], TunnelBarrier]


# ---------------------------------------------------------------------------
# Reduction phase
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsingSpec:
    """Pairwise-coupled spin landscape: H = -sum_ij J_ij s_i s_j, plus a
    transverse drive amplitude used only through the escape-rate mapping."""

    site_count: int
    couplings: Mapping[tuple[int, int], float]
    transverse_field: float = 0.0


class EnergyModel:
    """Discrete landscape with an explicit neighbor relation.

    kind "table": configurations are indices into an energy array, neighbors
    are i-1/i+1.  kind "ising": configurations are spin bitmasks (bit set =
    spin down), neighbors are single-spin flips, and the energy is
    -sum over the coupling map of J_ij s_i s_j.
    """

    def __init__(self, kind: str, *, energies: Optional[np.ndarray] = None,
                 site_count: int = 0, j_matrix: Optional[np.ndarray] = None,
                 transverse_field: float = 0.0):
        self.kind = kind
        self.energies = energies
        self.site_count = site_count
        self.j_matrix = j_matrix
        self.transverse_field = transverse_field

    @property
    def config_count(self) -> int:
        if self.kind == "table":
            return int(self.energies.size)
        return 1 << self.site_count

    def _spins(self, cid: int) -> np.ndarray:
        bits = (cid >> np.arange(self.site_count)) & 1
        return (1 - 2 * bits).astype(np.float64)

    def energy(self, cid: int) -> float:
        if self.kind == "table":
            return float(self.energies[cid])
        s = self._spins(cid)
        return float(-0.5 * s @ self.j_matrix @ s)

    def neighbor_energies(self, cid: int) -> tuple[np.ndarray, np.ndarray]:
        """Adjacent configuration ids and their energies."""
        if self.kind == "table":
            n = self.config_count
            ids = [i for i in (cid - 1, cid + 1) if 0 <= i < n]
            ids = np.asarray(ids, dtype=np.int64)
            return ids, self.energies[ids]
        s = self._spins(cid)
        # flipping spin i changes the energy by 2 s_i (J s)_i
        deltas = 2.0 * s * (self.j_matrix @ s)
        ids = cid ^ (np.int64(1) << np.arange(self.site_count, dtype=np.int64))
        return ids, self.energy(cid) + deltas

    def all_energies(self) -> np.ndarray:
        """Exhaustive energy vector; intended for oracle-scale models only."""
        if self.kind == "table":
            return self.energies
        n = self.site_count
        ids = np.arange(self.config_count, dtype=np.int64)
        spins = 1.0 - 2.0 * ((ids[:, None] >> np.arange(n)) & 1)
        return -0.5 * np.einsum("ci,ij,cj->c", spins, self.j_matrix, spins)


def reduce(landscape: Union[Sequence[float], np.ndarray, IsingSpec]) -> EnergyModel:
    """Normalize a raw energy table or Ising spec into an EnergyModel."""
    if isinstance(landscape, IsingSpec):
        n = landscape.site_count
        if n < 1:
            raise ValueError("site_count must be >= 1")
        if landscape.transverse_field < 0:
            raise ValueError("transverse field must be >= 0")
        j = np.zeros((n, n), dtype=np.float64)
        seen: dict[tuple[int, int], float] = {}
        for (i, k), val in landscape.couplings.items():
            if not (0 <= i < n and 0 <= k < n):
                raise ValueError(f"coupling index ({i},{k}) out of range for {n} sites")
            if i == k:
                raise ValueError(f"diagonal coupling at site {i}; J must have zero diagonal")
            key = (min(i, k), max(i, k))
            if key in seen and seen[key] != val:
                raise ValueError(
                    f"asymmetric couplings for pair {key}: {seen[key]} vs {val}")
            seen[key] = val
        for (i, k), val in seen.items():
            j[i, k] = j[k, i] = val
        return EnergyModel("ising", site_count=n, j_matrix=j,
                           transverse_field=landscape.transverse_field)
    energies = np.asarray(landscape, dtype=np.float64)
    if energies.ndim != 1 or energies.size == 0:
        raise ValueError("energy table must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(energies)):
        raise ValueError("energy table must be finite")
    return EnergyModel("table", energies=energies)


# ---------------------------------------------------------------------------
# Mining + selection (the logarithmic stage)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CandidateList:
    """Ground-state candidates sorted by energy ascending (ties by id)."""

    ids: np.ndarray
    energies: np.ndarray

    def __len__(self) -> int:
        return int(self.ids.size)


def greedy_descent(model: EnergyModel, start: int) -> tuple[int, float, list[int]]:
    """Steepest-descent walk to a local minimum; ties go to the lowest id."""
    cur = int(start)
    e_cur = model.energy(cur)
    path = [cur]
    while True:
        ids, energies = model.neighbor_energies(cur)
        if ids.size == 0:
            return cur, e_cur, path
        order = np.lexsort((ids, energies))  # energy first, then id
        best = order[0]
        if energies[best] < e_cur:
            cur = int(ids[best])
            e_cur = float(energies[best])
            path.append(cur)
        else:
            return cur, e_cur, path


def enumerate_candidates(model: EnergyModel, *, seed: int = 0,
                         n_seeds: int = 32) -> CandidateList:
    """Mine basin minima and return them sorted by energy ascending.

    Explicit tables are scanned for every local-minimum index; Ising models
    are hill-climbed from n_seeds seeded random configurations.
    """
    if model.kind == "table":
        e = model.energies
        n = e.size
        if n == 1:
            ids = np.array([0], dtype=np.int64)
        else:
            is_min = np.empty(n, dtype=bool)
            is_min[0] = e[0] <= e[1]
            is_min[-1] = e[-1] <= e[-2]
            is_min[1:-1] = (e[1:-1] <= e[:-2]) & (e[1:-1] <= e[2:])
            ids = np.nonzero(is_min)[0].astype(np.int64)
    else:
        rng = np.random.default_rng([seed, model.site_count])
        found: set[int] = set()
        for _ in range(max(1, n_seeds)):
            start = int(rng.integers(0, model.config_count))
            cid, _, _ = greedy_descent(model, start)
            found.add(cid)
        ids = np.fromiter(sorted(found), dtype=np.int64)
    energies = np.array([model.energy(int(i)) for i in ids], dtype=np.float64)
    order = np.lexsort((ids, energies))
    return CandidateList(ids=ids[order], energies=energies[order])


def select_best(candidates: CandidateList) -> tuple[int, int]:
    """Pick the lowest-energy candidate off the sorted list.

    Positional binary search for the head of the ascending order: the probe
    index halves until it pins the boundary, so the instrumented cost is
    floor(log2 k) + 1 <= ceil(log2 k) + 1 comparisons.
    """
    e = candidates.energies
    k = len(candidates)
    if k == 0:
        raise ValueError("no candidates to select from")
    lo, hi = 0, k
    comparisons = 0
    while lo < hi:
        mid = (lo + hi) // 2
        comparisons += 1
        if e[mid] < e[lo]:
            lo = mid + 1
        else:
            hi = mid
    return int(candidates.ids[lo]), comparisons


# ---------------------------------------------------------------------------
# Gap selection + schedule mapping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapCandidate:
    gap: float
    transition_time: float
    stability_score: float


@dataclass(frozen=True)
class WorkingGap:
    candidates: tuple[GapCandidate, ...]
    chosen_index: int

    @property
    def chosen(self) -> GapCandidate:
        return self.candidates[self.chosen_index]


def select_gap(candidates: Sequence[Union[GapCandidate, tuple]],
               min_transition: float, min_stability: float) -> WorkingGap:
    """Filter by transition time and stability, then take the smallest gap.

    The smallest admissible gap maximizes the evolution-time headroom of the
    inverse gap-time relation; a large gap with a fast, unstable level is
    rejected outright.  Ties prefer the higher stability score, then input
    order.
    """
    cands = tuple(c if isinstance(c, GapCandidate) else GapCandidate(*c)
                  for c in candidates)
    if not cands:
        raise ValueError("candidate list must be non-empty")
    admissible = [(c.gap, -c.stability_score, i)
                  for i, c in enumerate(cands)
                  if c.transition_time >= min_transition
                  and c.stability_score >= min_stability]
    if not admissible:
        raise NoAdmissibleGapError(
            f"no gap candidate meets transition_time >= {min_transition} "
            f"and stability >= {min_stability}")
    _, _, idx = min(admissible)
    return WorkingGap(candidates=cands, chosen_index=idx)


@dataclass(frozen=True)
class AdiabaticSchedule:
    total_time: float     # tau, schedule units
    gap: float            # g, energy units
    drive_energy: float   # E, energy units
    ramp: tuple[tuple[int, float], ...]  # (sweep index, drive level)

    def __post_init__(self):
        levels = [d for _, d in self.ramp]
        if any(b < a for a, b in zip(levels, levels[1:])):
            raise ScheduleError("ramp drive levels must be non-decreasing")
        if levels and (levels[0] < 0 or levels[-1] > self.drive_energy):
            raise ScheduleError("ramp drive levels must lie within [0, E]")

    @property
    def admissible(self) -> bool:
        return self.total_time * self.gap**2 >= self.drive_energy


def map_schedule(gap: Union[WorkingGap, float], drive_energy: float,
                 safety: float = 1.0, ramp_steps: Optional[int] = None) -> AdiabaticSchedule:
    """Annealing schedule from the chosen gap: tau = safety * E / g^2.

    The ramp is a linear monotone drive from 0 to E.  tau is nudged up by
    ulps if needed so that tau * g^2 >= E holds exactly in float64.
    """
    g = gap.chosen.gap if isinstance(gap, WorkingGap) else float(gap)
    if g == 0:
        raise ValueError("degenerate gap g = 0 admits no finite schedule")
    if g < 0:
        raise ValueError("gap must be > 0")
    if drive_energy <= 0:
        raise ValueError("drive energy must be > 0")
    if safety < 1.0:
        raise ValueError("safety factor must be >= 1")
    tau = safety * drive_energy / g**2
    while tau * g**2 < drive_energy:
        tau = math.nextafter(tau, math.inf)
    if ramp_steps is None:
        ramp_steps = int(min(20_000, max(16, round(16 * tau))))
    if ramp_steps < 1:
        raise ValueError("ramp_steps must be >= 1")
    if ramp_steps == 1:
        ramp = ((0, drive_energy),)
    else:
        ramp = tuple((i, drive_energy * (i / (ramp_steps - 1)))
                     for i in range(ramp_steps))
    return AdiabaticSchedule(total_time=tau, gap=g, drive_energy=drive_energy,
                             ramp=ramp)


# ---------------------------------------------------------------------------
# Evolution phase
# ---------------------------------------------------------------------------

def make_barrier_map(energy_scale_ev: float = 1.0,
                     length_scale: float = 0.5e-9,
                     mass: float = ELECTRON_MASS) -> BarrierMap:
    """Map an uphill move (dE, hop count) onto a rectangular barrier.

    dE is read in units of energy_scale_ev electron-volts above the walker,
    and one hop spans length_scale metres.
    """
    def barrier(delta_e: float, width_hops: float) -> TunnelBarrier:
        return TunnelBarrier.from_ev(
            barrier_height_ev=delta_e * energy_scale_ev,
            particle_energy_ev=0.0,
            width=width_hops * length_scale,
            mass=mass,
        )
    return barrier


@dataclass(frozen=True)
class OptimizerReport:
    best_id: int
    best_energy: float
    visited_count: int
    candidate_count: int    # mined basin minima
    comparison_count: int   # selection-phase comparisons only
    escape_count: int       # accepted uphill (tunnelling) moves
    seed: int
    phase_timings: dict[str, float] = field(compare=False, default_factory=dict)


def evolve(model: EnergyModel, schedule: AdiabaticSchedule,
           barrier_map: Optional[BarrierMap] = None, seed: int = 0,
           start: Optional[int] = None, n_seeds: int = 32) -> OptimizerReport:
    """Drive a walker over the landscape for one sweep per ramp entry.

    Downhill neighbor moves are always taken; when the walker sits in a local
    minimum, a random neighbor is attempted and accepted with probability
    T(barrier(dE, 1)) * drive/E.  The report's best is the minimum over
    everything visited plus the mined candidate list, so it can never lose to
    plain greedy descent.  Deterministic for a fixed seed.
    """
    if not schedule.admissible:
        raise ScheduleError(
            f"inadmissible schedule: tau*g^2 = "
            f"{schedule.total_time * schedule.gap**2:g} < E = {schedule.drive_energy:g}")
    if barrier_map is None:
        barrier_map = make_barrier_map()
    rng = np.random.default_rng([seed, 0x5EED])

    t0 = time.perf_counter()
    candidates = enumerate_candidates(model, seed=seed, n_seeds=n_seeds)
    t1 = time.perf_counter()
    incumbent_id, comparisons = select_best(candidates)
    t2 = time.perf_counter()

    if start is None:
        cur = incumbent_id
    else:
        cur = int(start)
    cur, e_cur, path = greedy_descent(model, cur)
    visited: dict[int, float] = {int(p): model.energy(int(p)) for p in path}
    escapes = 0
    e_drive = schedule.drive_energy

    for _, drive in schedule.ramp:
        ids, energies = model.neighbor_energies(cur)
        if ids.size == 0:
            break
        order = np.lexsort((ids, energies))
        best = order[0]
        if energies[best] < e_cur:
            cur, e_cur = int(ids[best]), float(energies[best])
            visited[cur] = e_cur
            continue
        if drive <= 0.0:
            continue
        pick = int(rng.integers(0, ids.size))
        delta = float(energies[pick]) - e_cur
        if delta <= 0.0:
            accept_p = drive / e_drive  # flat move: zero-height barrier
        else:
            accept_p = (transmission(barrier_map(delta, 1.0)).transmission
                        * drive / e_drive)
        if rng.random() < accept_p:
            cur, e_cur = int(ids[pick]), float(energies[pick])
            visited[cur] = e_cur
            escapes += 1
    t3 = time.perf_counter()

    pool_ids = np.concatenate([np.fromiter(visited.keys(), dtype=np.int64),
                               candidates.ids])
    pool_e = np.concatenate([np.fromiter(visited.values(), dtype=np.float64),
                             candidates.energies])
    order = np.lexsort((pool_ids, pool_e))
    best_id = int(pool_ids[order[0]])
    best_energy = float(pool_e[order[0]])

    return OptimizerReport(
        best_id=best_id,
        best_energy=best_energy,
        visited_count=len(visited),
        candidate_count=len(candidates),
        comparison_count=comparisons,
        escape_count=escapes,
        seed=seed,
        phase_timings={
            "mining": t1 - t0,
            "selection": t2 - t1,
            "evolution": t3 - t2,
        },
    )


# ---------------------------------------------------------------------------
# Simulation phase: instrumented scaling runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingRow:
    n: int
    mean_time_s: float
    mean_comparisons: float
    trials: int
    bound_ok: bool  # every trial had comparisons <= ceil(log2 k) + 1


def scaling_experiment(sizes: Sequence[int], trials: int = 5,
                       seed: int = 0) -> list[ScalingRow]:
    """Full pipeline over seeded random tables of each size.

    Records wall time and the instrumented selection-comparison count; the
    comparison means are the deterministic, machine-independent signal.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    for n in sizes:
        if n < 1:
            raise ValueError("sizes must be positive")
    schedule = map_schedule(1.0, 1.0, safety=1.0)
    rows = []
    for n in sizes:
        times = []
        comps = []
        bound_ok = True
        for trial in range(trials):
            rng = np.random.default_rng([seed, int(n), trial])
            table = rng.random(int(n))
            t0 = time.perf_counter()
            model = reduce(table)
            report = evolve(model, schedule, seed=trial)
            times.append(time.perf_counter() - t0)
            comps.append(report.comparison_count)
            limit = math.ceil(math.log2(report.candidate_count)) + 1 \
                if report.candidate_count > 1 else 1
            bound_ok = bound_ok and report.comparison_count <= limit
        rows.append(ScalingRow(n=int(n), mean_time_s=float(np.mean(times)),
                               mean_comparisons=float(np.mean(comps)),
                               trials=trials, bound_ok=bound_ok))
    return rows
