"""The data-hiding scheme: admissibility, sizing, simulation, coalition bounds.

An orthogonal ensemble whose largest bipartition bound stays below ``2/n``
hides an n-ary datum: the hider prepares ``L`` states, broadcasts the datum
shifted by the modulo-n class of the preparation, and only a global
measurement can undo the shift.  This module decides admissibility, sizes the
fold count for a target leakage, simulates seeded protocol runs with
reproducible transcripts, and tabulates per-coalition guessing bounds.

Simulation never materializes ``dim**L`` matrices: the recovery measurement on
an orthogonal ensemble returns the preparation class deterministically, so
sampling the base priors suffices.  An explicit-matrix cross-check path exists
for small ``L`` and must agree in distribution with the structural path.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np
from scipy.stats import chi2 as _chi2

from .discrimination import (
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_SOLVER_TOL,
    max_bipartition_bound,
)
from .ensembles import Ensemble, is_orthogonal, max_pairwise_overlap
from .folding import FoldSpec, coarse_ensemble, fold_bound, fold_probs, mod_sum
from .partitions import all_partitions, coarser_bipartitions
from .tensor import (
    DEFAULT_DIM_CAP,
    DimensionCapError,
    MultiPartyOperator,
    hermitian_eigensystem,
)

NEGLIGIBLE_CLASS_PROB = 1e-12
_MAX_FOLD_SEARCH = 100_000


class HidingError(ValueError):
    """The requested operation needs an admissible ensemble."""


@dataclass(frozen=True)
class HidingReport:
    """Admissibility verdict with the evidence behind it.

    ``admissible`` is ``True``/``False`` when decidable and ``None`` when some
    bipartition stayed uncertified with its upper bound at or above the
    threshold.  ``q_values`` are dual upper bounds keyed by the canonical
    bipartition string; ``q_exact`` marks values obtained from the dominance
    certificate (exact, gap zero).  ``min_folds`` is the fold count reaching
    ``1/n + epsilon``, or ``None`` when inadmissible or out of search range.
    """

    n: int
    threshold: float
    orthogonal: bool
    max_overlap: float
    p_global: float | None
    q_values: dict[str, float]
    q_certified: dict[str, bool]
    q_exact: dict[str, bool]
    solver_failures: dict[str, str]
    max_q: float
    fast_path: bool
    pivot: int
    pivot_weight: float
    admissible: bool | None
    epsilon: float
    bound_curve: tuple[float, ...]
    min_folds: int | None
    lower_bounds: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "threshold": self.threshold,
            "orthogonal": self.orthogonal,
            "max_overlap": self.max_overlap,
            "p_global": self.p_global,
            "q_values": dict(self.q_values),
            "q_certified": dict(self.q_certified),
            "q_exact": dict(self.q_exact),
            "solver_failures": dict(self.solver_failures),
            "max_q": self.max_q,
            "fast_path": self.fast_path,
            "pivot": self.pivot,
            "pivot_weight": self.pivot_weight,
            "admissible": self.admissible,
            "epsilon": self.epsilon,
            "bound_curve": list(self.bound_curve),
            "min_folds": self.min_folds,
        }
        if self.lower_bounds:
            out["lower_bounds"] = dict(self.lower_bounds)
        return out


def _fold_count_for(n: int, max_q: float, epsilon: float) -> int:
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    floor = 1.0 / n
    for L in range(1, _MAX_FOLD_SEARCH + 1):
        if fold_bound(n, max_q, L) - floor <= epsilon:
            return L
    raise HidingError(
        f"bound did not reach 1/n + {epsilon} within {_MAX_FOLD_SEARCH} folds"
    )


def _admissibility_verdict(
    orthogonal: bool,
    max_dual: float,
    best_primal: float,
    has_failures: bool,
    threshold: float,
) -> bool | None:
    """Three-way hiding verdict from the bipartition scan evidence.

    Duals are valid upper bounds (converged or not), so all duals below the
    threshold settle admissibility; a primal value is achieved by an explicit
    POVM, so one at or above the threshold settles inadmissibility without
    certification.  Anything else (a gap straddling the threshold, or a failed
    bipartition) is honestly undecided.
    """
    if not orthogonal:
        return False
    if not has_failures and max_dual < threshold:
        return True
    if best_primal >= threshold:
        return False
    return None


def check_hiding(
    e: Ensemble,
    tol: float = DEFAULT_SOLVER_TOL,
    epsilon: float = 1e-6,
    curve_lmax: int = 20,
    lower_bounds: Mapping[str, float] | None = None,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> HidingReport:
    """Decide whether an ensemble can back the hiding scheme.

    Admissible means: the states are mutually orthogonal (global recovery is
    exact) and every bipartition upper bound is below ``2/n``.  Dominance
    certificates are tried before the solver, so GHZ-style families are
    decided exactly without iteration.
    """
    orthogonal = is_orthogonal(e)
    overlap = max_pairwise_overlap(e)
    scan = max_bipartition_bound(e, tol=tol, max_iterations=max_iterations)
    n = e.n
    threshold = 2.0 / n

    q_values = {key: res.dual_value for key, res in scan.results.items()}
    q_certified = {key: res.certified for key, res in scan.results.items()}
    q_exact = {key: res.method == "dominance" for key, res in scan.results.items()}
    fast_path = bool(q_exact) and all(q_exact.values()) and not scan.failures
    pivot = int(np.argmax(e.probs))
    pivot_weight = float(e.probs[pivot])

    admissible = _admissibility_verdict(
        orthogonal=orthogonal,
        max_dual=scan.max_value,
        best_primal=max(res.primal_value for res in scan.results.values()),
        has_failures=bool(scan.failures),
        threshold=threshold,
    )

    curve_q = max(scan.max_value, 1.0 / n)
    curve = tuple(fold_bound(n, curve_q, L) for L in range(1, curve_lmax + 1))
    folds = None
    if admissible:
        try:
            folds = _fold_count_for(n, curve_q, epsilon)
        except HidingError:
            folds = None  # bound decays too slowly to size within the search cap

    return HidingReport(
        n=n,
        threshold=threshold,
        orthogonal=orthogonal,
        max_overlap=overlap,
        p_global=1.0 if orthogonal else None,
        q_values=q_values,
        q_certified=q_certified,
        q_exact=q_exact,
        solver_failures=dict(scan.failures),
        max_q=scan.max_value,
        fast_path=fast_path,
        pivot=pivot,
        pivot_weight=pivot_weight,
        admissible=admissible,
        epsilon=epsilon,
        bound_curve=curve,
        min_folds=folds,
        lower_bounds=dict(lower_bounds or {}),
    )


def min_folds(
    e: Ensemble | HidingReport,
    epsilon: float,
    tol: float = DEFAULT_SOLVER_TOL,
) -> int:
    """Smallest fold count whose bound is within ``epsilon`` of random guessing."""
    report = e if isinstance(e, HidingReport) else check_hiding(e, tol=tol)
    if report.admissible is not True:
        raise HidingError(
            "fold sizing needs an admissible ensemble; the bound does not converge"
        )
    return _fold_count_for(report.n, max(report.max_q, 1.0 / report.n), epsilon)


@dataclass(frozen=True)
class SchemeConfig:
    """Parameters of one hiding scheme instance.

    Built via :meth:`create`, which checks admissibility and records the
    report; an inadmissible ensemble is usable only with ``force=True`` and
    every simulation summary then carries a "no hiding guarantee" warning.
    """

    ensemble: Ensemble
    L: int
    seed: int
    mode: str
    report: HidingReport
    force: bool = False

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"fold count must be >= 1, got {self.L}")
        if self.mode not in ("broadcast", "direct"):
            raise ValueError(f"mode must be 'broadcast' or 'direct', got {self.mode!r}")

    @classmethod
    def create(
        cls,
        ensemble: Ensemble,
        L: int,
        seed: int = 0,
        mode: str = "broadcast",
        force: bool = False,
        tol: float = DEFAULT_SOLVER_TOL,
    ) -> "SchemeConfig":
        report = check_hiding(ensemble, tol=tol)
        if report.admissible is not True and not force:
            raise HidingError(
                "ensemble is not admissible for hiding; pass force=True to simulate anyway"
            )
        return cls(ensemble=ensemble, L=L, seed=int(seed), mode=mode,
                   report=report, force=force)


@dataclass(frozen=True)
class ProtocolTranscript:
    """One simulated run: preparation vector, datum, broadcast, recovery."""

    trial: int
    c_vec: tuple[int, ...]
    x: int
    y: int
    z: int
    recovered: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "trial": self.trial,
            "c_vec": list(self.c_vec),
            "x": self.x,
            "y": self.y,
            "z": self.z,
            "recovered": self.recovered,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ProtocolSummary:
    trials: int
    x: int
    L: int
    seed: int
    mode: str
    recovery_rate: float
    class_counts: tuple[int, ...]
    expected_class_probs: tuple[float, ...]
    negligible_classes: tuple[int, ...]
    warning: str | None

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "x": self.x,
            "L": self.L,
            "seed": self.seed,
            "mode": self.mode,
            "recovery_rate": self.recovery_rate,
            "class_counts": list(self.class_counts),
            "expected_class_probs": list(self.expected_class_probs),
            "negligible_classes": list(self.negligible_classes),
            "warning": self.warning,
        }


class ProtocolRun(NamedTuple):
    transcripts: tuple[ProtocolTranscript, ...]
    summary: ProtocolSummary


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    # Substream per trial: parallel execution cannot reorder the transcripts.
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _sample_indices(cdf: np.ndarray, rng: np.random.Generator, count: int) -> np.ndarray:
    return np.searchsorted(cdf, rng.random(count), side="right")


def run_protocol(cfg: SchemeConfig, x: int, trials: int) -> ProtocolRun:
    """Simulate seeded broadcast rounds and verify exact recovery.

    Per trial the preparation vector is drawn from the base priors by
    inverse-CDF using a per-trial substream of the configured seed; the
    broadcast is the datum plus the class label modulo n, and global recovery
    subtracts the deterministically measured class.  Identical seeds produce
    identical transcripts.
    """
    if trials <= 0:
        raise ValueError(f"trials must be positive, got {trials}")
    n = cfg.ensemble.n
    if not 0 <= x < n:
        raise ValueError(f"datum x={x} out of range 0..{n - 1}")
    if cfg.report.admissible is not True and not cfg.force:
        raise HidingError("ensemble is not admissible; create the config with force=True")

    cdf = np.cumsum(np.asarray(cfg.ensemble.probs))
    cdf[-1] = 1.0
    expected = fold_probs(cfg.ensemble.probs, n, cfg.L)

    transcripts: list[ProtocolTranscript] = []
    class_counts = [0] * n
    recovered_ok = 0
    for t in range(trials):
        rng = _trial_rng(cfg.seed, t)
        c_vec = tuple(int(c) for c in _sample_indices(cdf, rng, cfg.L))
        y = mod_sum(c_vec, n)
        z = (x + y) % n
        # Recovery side: the class measurement on an orthogonal ensemble
        # returns y deterministically, so the estimate is z - y mod n.
        recovered = (z - y) % n
        transcripts.append(
            ProtocolTranscript(trial=t, c_vec=c_vec, x=x, y=y, z=z,
                               recovered=recovered, seed=cfg.seed)
        )
        class_counts[y] += 1
        recovered_ok += int(recovered == x)

    negligible = tuple(i for i, p in enumerate(expected) if p < NEGLIGIBLE_CLASS_PROB)
    warning = None
    if cfg.report.admissible is not True:
        warning = "no hiding guarantee: ensemble failed the admissibility condition"
    summary = ProtocolSummary(
        trials=trials,
        x=x,
        L=cfg.L,
        seed=cfg.seed,
        mode=cfg.mode,
        recovery_rate=recovered_ok / trials,
        class_counts=tuple(class_counts),
        expected_class_probs=tuple(float(p) for p in expected),
        negligible_classes=negligible,
        warning=warning,
    )
    return ProtocolRun(tuple(transcripts), summary)


def transcripts_to_jsonl(run: ProtocolRun) -> str:
    """One JSON object per line, key-sorted: byte-stable for a fixed seed."""
    lines = [
        json.dumps(t.to_dict(), sort_keys=True, separators=(",", ":"))
        for t in run.transcripts
    ]
    return "\n".join(lines) + "\n"


def class_measurement(coarse: Ensemble, cutoff: float = 1e-10) -> list[np.ndarray]:
    """Projector per class onto the support of its state.

    Any subspace unused by every class is assigned to class 0 so the
    projectors form a complete measurement.  Meaningful for orthogonal
    ensembles, where the outcome identifies the class with certainty.
    """
    dim = coarse.dim
    projectors: list[np.ndarray] = []
    for state in coarse.states:
        vals, vecs = hermitian_eigensystem(state)
        keep = vals > cutoff * max(float(vals[-1]), 1.0)
        basis = vecs[:, keep]
        projectors.append(basis @ basis.conj().T)
    leftover = np.eye(dim, dtype=np.complex128) - sum(projectors)
    projectors[0] = projectors[0] + leftover
    return projectors


@dataclass(frozen=True)
class DirectEncoding:
    """Descriptor of a directly encoded datum plus the recovery check."""

    x: int
    L: int
    state: MultiPartyOperator
    class_probs: tuple[float, ...]
    recovery_ok: bool

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "L": self.L,
            "dim": self.state.dim,
            "class_probs": list(self.class_probs),
            "recovery_ok": self.recovery_ok,
        }


def direct_encode(
    cfg: SchemeConfig, x: int, cap: int = DEFAULT_DIM_CAP, tol: float = 1e-8
) -> DirectEncoding:
    """Pick the coarse class state for ``x`` and verify exact recovery.

    Builds the explicit coarse ensemble (dimension-capped), forms the class
    measurement, and checks that it identifies ``x`` with probability one.
    """
    if cfg.mode != "direct":
        raise ValueError(f"direct encoding needs mode='direct', got {cfg.mode!r}")
    n = cfg.ensemble.n
    if not 0 <= x < n:
        raise ValueError(f"datum x={x} out of range 0..{n - 1}")
    coarse = coarse_ensemble(FoldSpec(cfg.ensemble, cfg.L), cap=cap)
    projectors = class_measurement(coarse)
    probs = tuple(
        float(np.trace(coarse.states[x].matrix @ proj).real) for proj in projectors
    )
    ok = abs(probs[x] - 1.0) <= tol and all(
        p <= tol for j, p in enumerate(probs) if j != x
    )
    return DirectEncoding(x=x, L=cfg.L, state=coarse.states[x],
                          class_probs=probs, recovery_ok=ok)


class CoalitionRow(NamedTuple):
    partition: str
    L: int
    value: float
    kind: str


def coalition_report(
    e: Ensemble,
    L: int,
    tol: float = DEFAULT_SOLVER_TOL,
    report: HidingReport | None = None,
    force: bool = False,
    max_parties: int = 6,
) -> list[CoalitionRow]:
    """Guessing bound per nontrivial coalition partition after ``L`` folds.

    Each partition inherits the best (smallest) fold bound among the
    bipartitions coarser than it.  For a two-state ensemble whose dominance
    certificate holds on every bipartition the value is exact (the dominant
    coarse class probability) and reported as such.  The trivial partition is
    the recovery side and excluded.
    """
    if len(e.parties) > max_parties:
        raise ValueError(
            f"coalition table limited to {max_parties} parties, got {len(e.parties)}"
        )
    if L < 1:
        raise ValueError(f"fold count must be >= 1, got {L}")
    if report is None:
        report = check_hiding(e, tol=tol)
    if report.admissible is not True and not force:
        raise HidingError("coalition bounds need an admissible ensemble (or force=True)")

    exact_mode = e.n == 2 and report.fast_path
    exact_value = float(np.max(fold_probs(e.probs, e.n, L))) if exact_mode else None

    rows: list[CoalitionRow] = []
    for partition in all_partitions(e.parties):
        if partition.is_trivial:
            continue
        if exact_mode:
            rows.append(CoalitionRow(partition.to_string(), L, exact_value, "exact"))
            continue
        candidates = [
            report.q_values[bp.to_string()]
            for bp in coarser_bipartitions(partition)
            if bp.to_string() in report.q_values
        ]
        if not candidates:
            rows.append(CoalitionRow(partition.to_string(), L, float("nan"), "unavailable"))
            continue
        value = min(fold_bound(e.n, max(q, 1.0 / e.n), L) for q in candidates)
        rows.append(CoalitionRow(partition.to_string(), L, value, "bound"))
    return rows


class CrosscheckResult(NamedTuple):
    """Agreement of structural and explicit-matrix sampling paths.

    Counts are over the product-basis outcomes of all ``L`` preparations
    (``dim**L`` cells).  ``recovery_deviation`` is the largest deviation of
    the explicit class measurement from deterministically returning the
    preparation class.
    """

    counts_structural: np.ndarray
    counts_born: np.ndarray
    chi2_stat: float
    dof: int
    p_value: float
    recovery_deviation: float


def _state_diagonals(e: Ensemble) -> np.ndarray:
    diags = np.stack([np.clip(state.matrix.diagonal().real, 0.0, None)
                      for state in e.states])
    return diags / diags.sum(axis=1, keepdims=True)


def sampling_crosscheck(
    e: Ensemble,
    L: int,
    trials: int,
    seed: int = 0,
    cap: int = DEFAULT_DIM_CAP,
) -> CrosscheckResult:
    """Compare per-fold structural sampling against explicit Born sampling.

    Structural path: draw each preparation index from the priors, then a
    product-basis outcome per fold from that state's diagonal; no matrix of
    dimension ``dim**L`` is ever formed.  Explicit path: draw the index
    vector the same way from an independent substream, build the full
    Kronecker product, and sample a basis outcome from its diagonal.  The two
    empirical distributions are compared with a two-sample chi-square.
    """
    if trials <= 0:
        raise ValueError(f"trials must be positive, got {trials}")
    n = e.n
    dim = e.dim
    cells = dim**L
    if cells > cap:
        raise DimensionCapError(
            f"explicit cross-check dimension {cells} exceeds the dimension cap {cap}"
        )

    prior_cdf = np.cumsum(np.asarray(e.probs))
    prior_cdf[-1] = 1.0
    diag_cdfs = np.cumsum(_state_diagonals(e), axis=1)
    diag_cdfs[:, -1] = 1.0
    weights = dim ** np.arange(L - 1, -1, -1)

    # Structural path: per-fold categorical draws only.
    rng_s = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    choices_s = np.searchsorted(prior_cdf, rng_s.random((trials, L)), side="right")
    u = rng_s.random((trials, L))
    outcomes = (diag_cdfs[choices_s] <= u[..., None]).sum(axis=-1)
    idx_structural = outcomes @ weights
    counts_structural = np.bincount(idx_structural, minlength=cells)

    # Explicit path: materialize every Kronecker product and sample its diagonal.
    explicit_diag: dict[tuple[int, ...], np.ndarray] = {}
    recovery_deviation = 0.0
    coarse = coarse_ensemble(FoldSpec(e, L), cap=cap)
    projectors = class_measurement(coarse)
    for choice in itertools.product(range(n), repeat=L):
        mat = np.array([[1.0]], dtype=np.complex128)
        for c in choice:
            mat = np.kron(mat, e.states[c].matrix)
        label = mod_sum(choice, n)
        for j, proj in enumerate(projectors):
            prob = float(np.trace(mat @ proj).real)
            recovery_deviation = max(
                recovery_deviation, abs(prob - (1.0 if j == label else 0.0))
            )
        diag = np.clip(mat.diagonal().real, 0.0, None)
        explicit_diag[choice] = np.cumsum(diag / diag.sum())

    rng_b = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    choices_b = np.searchsorted(prior_cdf, rng_b.random((trials, L)), side="right")
    u_b = rng_b.random(trials)
    idx_born = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        cdf = explicit_diag[tuple(int(c) for c in choices_b[t])]
        idx_born[t] = np.searchsorted(cdf, u_b[t], side="right")
    counts_born = np.bincount(idx_born, minlength=cells)

    both = counts_structural + counts_born
    mask = both > 0
    diff = counts_structural[mask] - counts_born[mask]
    stat = float(np.sum(diff.astype(float) ** 2 / both[mask]))
    dof = int(mask.sum()) - 1
    p_value = float(_chi2.sf(stat, dof)) if dof > 0 else 1.0
    return CrosscheckResult(
        counts_structural=counts_structural,
        counts_born=counts_born,
        chi2_stat=stat,
        dof=dof,
        p_value=p_value,
        recovery_deviation=recovery_deviation,
    )
