"""Classical solvers and analyses for binary quadratic models.

``solve_exhaustive`` enumerates every assignment. ``solve_free`` enumerates
only the free variables of a circuit model and derives everything else by
forward evaluation; when all pins have strength 1 its result is also the
global minimum (any assignment that breaks a gate pays at least 1, and a
forward-consistent one pays either 0 or the OR-output pin).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .btor2 import TransitionModel, first_bad
from .bqm import (BinaryQuadraticModel, energies, evaluate_energy, forward_assignment,
                  forward_lanes, lane_energies)
from .unroll import UnrolledModel, free_assignment, translate

DEFAULT_VAR_LIMIT = 24
DEFAULT_FREE_LIMIT = 1 << 20
CHUNK = 1 << 15
LANES = 2048


def var_limit() -> int:
    return int(os.environ.get("QUBOT_VAR_LIMIT", DEFAULT_VAR_LIMIT))


class VariableLimitError(RuntimeError):
    pass


@dataclass
class SolveResult:
    best_energy: int
    best_assignment: list[int]
    samples_taken: int
    seed: int | None = None
    method: str = "exhaustive"


def _lex_index_bits(start: int, count: int, k: int) -> np.ndarray:
    """Rows ``start..start+count-1`` of the lexicographic enumeration, var 0 most significant."""
    idx = np.arange(start, start + count, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def solve_exhaustive(model: BinaryQuadraticModel, limit: int | None = None) -> SolveResult:
    """Global minimum over all ``2**num_vars`` assignments; ties go to the smallest bit string."""
    k = model.num_vars
    limit = var_limit() if limit is None else limit
    if k > limit:
        raise VariableLimitError(f"{k} variables exceed the exhaustive limit of {limit}")
    total = 1 << k
    best, best_idx = None, 0
    for start in range(0, total, CHUNK):
        count = min(CHUNK, total - start)
        e = energies(model, _lex_index_bits(start, count, k))
        i = int(np.argmin(e))
        if best is None or e[i] < best:
            best, best_idx = int(e[i]), start + i
    assignment = [(best_idx >> (k - 1 - j)) & 1 for j in range(k)]
    return SolveResult(best, assignment, total)


def _free_masks(start: int, count: int, free_count: int) -> list[int]:
    rows = _lex_index_bits(start, count, free_count)
    packed = np.packbits(rows, axis=0, bitorder="little")
    return [int.from_bytes(packed[:, j].tobytes(), "little") for j in range(free_count)]


def enumerate_free(model: BinaryQuadraticModel, limit: int | None = None, budget: int | None = None,
                   lanes: int = LANES):
    """Yield ``(start, count, values)`` batches of forward evaluations in lexicographic order."""
    free = model.trace.free
    total = 1 << len(free)
    if budget is not None:
        total = min(total, budget)
    elif limit is not None and total > limit:
        raise VariableLimitError(f"{len(free)} free variables exceed the enumeration limit of {limit}")
    for start in range(0, total, lanes):
        count = min(lanes, total - start)
        masks = _free_masks(start, count, len(free))
        yield start, count, forward_lanes(model, dict(zip(free, masks)), count)


def solve_free(model: BinaryQuadraticModel, limit: int = DEFAULT_FREE_LIMIT) -> SolveResult:
    free = model.trace.free
    best, best_idx = None, 0
    samples = 0
    for start, count, values in enumerate_free(model, limit):
        e = lane_energies(model, values, count)
        i = int(np.argmin(e))
        samples += count
        if best is None or e[i] < best:
            best, best_idx = int(e[i]), start + i
    f = len(free)
    chosen = {v: (best_idx >> (f - 1 - j)) & 1 for j, v in enumerate(free)}
    assignment = forward_assignment(model, chosen)
    return SolveResult(best, assignment, samples, method="free")


def zero_energy_assignments(model: BinaryQuadraticModel, limit: int | None = None) -> list[list[int]]:
    """Every ground-energy-0 assignment by full enumeration."""
    k = model.num_vars
    limit = var_limit() if limit is None else limit
    if k > limit:
        raise VariableLimitError(f"{k} variables exceed the exhaustive limit of {limit}")
    out = []
    for start in range(0, 1 << k, CHUNK):
        count = min(CHUNK, (1 << k) - start)
        rows = _lex_index_bits(start, count, k)
        e = energies(model, rows)
        out.extend(rows[i].tolist() for i in np.flatnonzero(e == 0))
    return out


# --------------------------------------------------------------------------
# simulated annealing


@dataclass
class AnnealParams:
    sweeps: int = 1000
    restarts: int = 8
    initial_temperature: float | None = None
    final_temperature: float = 0.05
    seed: int = 0
    stop_energy: int | None = None  # finish early once some restart reaches this energy


def _csr(model: BinaryQuadraticModel):
    n = model.num_vars
    h = np.zeros(n, dtype=np.float64)
    for v, c in model.linear.items():
        h[v] = c
    if model.quadratic:
        pairs = np.array(list(model.quadratic.keys()), dtype=np.int64)
        coef = np.fromiter(model.quadratic.values(), dtype=np.float64, count=len(model.quadratic))
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        data = np.concatenate([coef, coef])
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        data = np.zeros(0)
    order = np.argsort(rows, kind="stable")
    rows, cols, data = rows[order], cols[order], data[order]
    indptr = np.searchsorted(rows, np.arange(n + 1))
    return h, indptr, cols, data


def _color_classes(n: int, indptr, cols, data):
    """Greedy colouring; variables of one class share no coupling and flip together."""
    color = np.full(n, -1, dtype=np.int64)
    for j in range(n):
        used = set(color[cols[indptr[j]:indptr[j + 1]]].tolist())
        c = 0
        while c in used:
            c += 1
        color[j] = c
    classes = []
    for c in range(int(color.max(initial=-1)) + 1):
        members = np.flatnonzero(color == c)
        spans = [np.arange(indptr[j], indptr[j + 1]) for j in members]
        owner = np.concatenate([np.full(len(sp), i, dtype=np.int64) for i, sp in enumerate(spans)]) \
            if spans else np.zeros(0, dtype=np.int64)
        edges = np.concatenate(spans) if spans else np.zeros(0, dtype=np.int64)
        classes.append((members, owner, cols[edges], data[edges]))
    return classes


def solve_anneal(model: BinaryQuadraticModel, params: AnnealParams | None = None, **overrides) -> SolveResult:
    """Metropolis annealing with a geometric temperature schedule.

    Each sweep visits the colour classes in order; uncoupled variables of a
    class are proposed and flipped together, which is equivalent to flipping
    them one at a time.

    Restarts draw from independent streams spawned from ``seed``; the best
    assignment across restarts wins, ties broken lexicographically.
    """
    params = params or AnnealParams()
    for key, value in overrides.items():
        setattr(params, key, value)
    n = model.num_vars
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(params.seed).spawn(params.restarts)]
    x = np.stack([rng.integers(0, 2, n, dtype=np.int8) for rng in streams]) if n else \
        np.zeros((params.restarts, 0), dtype=np.int8)
    h, indptr, cols, data = _csr(model)
    field_ = np.tile(h, (params.restarts, 1))
    for j in range(n):
        nb = cols[indptr[j]:indptr[j + 1]]
        if len(nb):
            field_[:, j] += x[:, nb] @ data[indptr[j]:indptr[j + 1]]

    scale = np.abs(h) + np.bincount(cols, weights=np.abs(data), minlength=n) if n else np.zeros(0)
    t0 = params.initial_temperature or max(float(scale.max(initial=1.0)), 1.0)
    t1 = min(params.final_temperature, t0)
    sweeps = params.sweeps
    ratio = (t1 / t0) ** (1.0 / max(sweeps - 1, 1))

    def energy_rows(xs):
        return energies(model, xs.astype(np.uint8))

    best_x = x.copy()
    best_e = energy_rows(x)
    current_e = best_e.astype(np.float64)
    temperature = t0
    done = 0
    classes = _color_classes(n, indptr, cols, data)
    rows_idx = np.arange(params.restarts)[:, None]
    for _ in range(sweeps):
        if params.stop_energy is not None and best_e.min() <= params.stop_energy:
            break
        done += 1
        uniforms = np.stack([rng.random(n) for rng in streams]) if n else None
        for members, edge_owner, edge_cols, edge_data in classes:
            xs = x[:, members]
            delta = (1 - 2 * xs) * field_[:, members]
            accept = (delta <= 0) | (uniforms[:, members] < np.exp(-np.maximum(delta, 0) / temperature))
            if not accept.any():
                continue
            step = np.where(accept, 1 - 2 * xs, 0).astype(np.float64)
            x[:, members] = np.where(accept, 1 - xs, xs)
            current_e += np.where(accept, delta, 0.0).sum(axis=1)
            if len(edge_cols):
                np.add.at(field_, (rows_idx, edge_cols[None, :]), step[:, edge_owner] * edge_data)
        improved = current_e < best_e - 0.5
        if improved.any():
            exact = energy_rows(x)
            better = exact < best_e
            best_e = np.where(better, exact, best_e)
            best_x[better] = x[better]
            current_e = exact.astype(np.float64)
        temperature *= ratio

    candidates = sorted((int(best_e[r]), best_x[r].tolist()) for r in range(params.restarts))
    energy, assignment = candidates[0]
    assert energy == evaluate_energy(model, assignment)
    return SolveResult(energy, assignment, params.restarts * done * n, params.seed, "anneal")


# --------------------------------------------------------------------------
# validation


@dataclass
class Validation:
    energy: int
    simulator_bad: bool
    agrees: bool
    bad_step: int | None = None
    bads: tuple[int, ...] = ()


def validate_on_input(unrolled: UnrolledModel, model: TransitionModel | None,
                      inputs: Sequence[Mapping[int, int]],
                      initial: Mapping[int, int] | None = None) -> Validation:
    """Energy of the forward assignment for ``inputs`` and whether the simulator agrees."""
    model = model or unrolled.model
    inputs = list(inputs)[:len(unrolled.frames)]
    free = free_assignment(unrolled, inputs, initial)
    assignment = forward_assignment(unrolled.bqm, free)
    energy = evaluate_energy(unrolled.bqm, assignment)
    hit = first_bad(model, inputs, initial)
    simulator_bad = hit is not None
    return Validation(energy, simulator_bad, (energy == 0) == simulator_bad,
                      hit[0] if hit else None, hit[1] if hit else ())


def validate_many(unrolled: UnrolledModel, sequences: Sequence[Sequence[Mapping[int, int]]],
                  check_simulator: bool = True) -> list[Validation]:
    """Batched ``validate_on_input`` using one bit-sliced forward pass."""
    bqm = unrolled.bqm
    out: list[Validation] = []
    for base in range(0, len(sequences), LANES):
        batch = sequences[base:base + LANES]
        lanes = len(batch)
        frees = [free_assignment(unrolled, list(s)[:len(unrolled.frames)]) for s in batch]
        masks = {}
        for v in bqm.trace.free:
            m = 0
            for lane, f in enumerate(frees):
                if f[v]:
                    m |= 1 << lane
            masks[v] = m
        e = lane_energies(bqm, forward_lanes(bqm, masks, lanes), lanes)
        for lane, seq in enumerate(batch):
            energy = int(e[lane])
            if check_simulator:
                hit = first_bad(unrolled.model, list(seq)[:len(unrolled.frames)])
            else:
                hit = None
            bad = hit is not None
            out.append(Validation(energy, bad, (energy == 0) == bad or not check_simulator,
                                  hit[0] if hit else None, hit[1] if hit else ()))
    return out


# --------------------------------------------------------------------------
# qubit status and quantum advantage


class Status(Enum):
    DETERMINED = "determined"
    APPROXIMATED = "approximated"
    SUPERPOSITION = "superposition"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class QubitStatus:
    status: Status
    value: int | None = None


@dataclass
class QubitCounts:
    bound: int
    total: int
    determined: int
    approximated: int
    superposition: int
    undetermined: int
    evaluations: int

    @property
    def size(self) -> int:
        """Qubits left after replacing determined ones by their values."""
        return self.total - self.determined

    @property
    def unresolved(self) -> int:
        """Qubits that are neither determined nor known to be in superposition."""
        return self.approximated + self.undetermined


def classify_qubits(unrolled: UnrolledModel | BinaryQuadraticModel, budget: int) -> dict[int, QubitStatus]:
    """Status of every variable after ``budget`` forward evaluations.

    All qubits share one lexicographic enumeration of the free variables.
    """
    bqm = unrolled.bqm if isinstance(unrolled, UnrolledModel) else unrolled
    free = bqm.trace.free
    complete = budget >= 1 << len(free)
    seen0 = [False] * bqm.num_vars
    seen1 = [False] * bqm.num_vars
    evaluations = 0
    if budget > 0:
        for _, count, values in enumerate_free(bqm, budget=budget):
            evaluations += count
            full = (1 << count) - 1
            for v, mask in enumerate(values):
                if mask:
                    seen1[v] = True
                if mask != full:
                    seen0[v] = True
    free_set = set(free)
    out = {}
    for v in range(bqm.num_vars):
        if v in free_set or (seen0[v] and seen1[v]):
            out[v] = QubitStatus(Status.SUPERPOSITION)
        elif evaluations == 0:
            out[v] = QubitStatus(Status.UNDETERMINED)
        else:
            value = 1 if seen1[v] else 0
            out[v] = QubitStatus(Status.DETERMINED if complete else Status.APPROXIMATED, value)
    return out


def count_statuses(statuses: Mapping[int, QubitStatus], bound: int = 0, evaluations: int = 0) -> QubitCounts:
    tally = {s: 0 for s in Status}
    for st in statuses.values():
        tally[st.status] += 1
    return QubitCounts(bound, len(statuses), tally[Status.DETERMINED], tally[Status.APPROXIMATED],
                       tally[Status.SUPERPOSITION], tally[Status.UNDETERMINED], evaluations)


@dataclass
class Advantage:
    transitions: int | None
    qubits: int | None
    start: int | None
    last_fitting: int | None
    counts: list[QubitCounts] = field(default_factory=list)
    note: str = ""

    @property
    def negative(self) -> bool:
        return self.transitions is not None and (self.transitions < 0 or self.qubits < 0)

    @property
    def found(self) -> bool:
        return self.transitions is not None


def compute_quantum_advantage(model: TransitionModel, capacity: int, budget: int, max_n: int,
                              strength: int = 1) -> Advantage:
    """Transitions and qubits gained before the capacity runs out.

    ``start`` is the first bound whose model is fully resolved while the next
    one is not; ``last_fitting`` is the largest bound whose model still fits
    the capacity. The advantage is ``(last_fitting - start, capacity - size at start)``.
    When no model is ever fully resolved, bound 0 serves as the start, which
    yields a negative advantage when even that model exceeds the capacity.
    """
    counts: list[QubitCounts] = []
    for n in range(max_n + 2):
        unrolled = translate(model, n, strength)
        statuses = classify_qubits(unrolled, budget)
        evaluations = min(budget, 1 << len(unrolled.bqm.trace.free))
        counts.append(count_statuses(statuses, n, evaluations))

    start = next((i for i in range(max_n + 1)
                  if counts[i].unresolved == 0 and counts[i + 1].unresolved > 0), None)
    note = ""
    if start is None:
        if counts[0].unresolved > 0:
            start = 0
            note = "bound 0 already has unresolved qubits"
        else:
            return Advantage(None, None, None, None, counts,
                             f"no unresolved qubits appear up to bound {max_n + 1}")
    sizes = [c.size for c in counts]
    if sizes[start] <= capacity:
        last = next((j for j in range(start, max_n + 1) if sizes[j + 1] > capacity), None)
        if last is None:
            return Advantage(None, None, start, None, counts,
                             f"capacity not exhausted up to bound {max_n + 1}")
    else:
        last = max((j for j in range(start) if sizes[j] <= capacity), default=-1)
    return Advantage(last - start, capacity - counts[start].size, start, last, counts, note)
