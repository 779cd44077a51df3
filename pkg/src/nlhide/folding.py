"""Repeated preparations, modulo-n class coarse-graining, and bound curves.

Preparing ``L`` independent states from a base ensemble and keeping only the
modulo-n sum of the chosen indices yields a coarse ensemble with the same
member count: class probabilities are the L-fold cyclic convolution of the
base priors, and class states are the normalized weighted sums of Kronecker
products.  Closed-form curves quantify how fast restricted-measurement bounds
decay in ``L``; probability-only paths never materialize large matrices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensembles import Ensemble
from .tensor import DEFAULT_DIM_CAP, DimensionCapError, MultiPartyOperator


class DegenerateClassError(ValueError):
    """A coarse class has zero probability and cannot be normalized."""


@dataclass(frozen=True)
class FoldSpec:
    """A base ensemble and a fold count ``L >= 1``."""

    base: Ensemble
    L: int

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"fold count must be >= 1, got {self.L}")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def explicit_dim(self) -> int:
        return self.base.dim**self.L


def mod_sum(vec: Sequence[int], n: int) -> int:
    """Modulo-n sum of the entries; the class label of an index vector.

    The empty vector sums to 0.
    """
    if n < 1:
        raise ValueError(f"modulus must be positive, got {n}")
    total = 0
    for k, entry in enumerate(vec):
        entry = int(entry)
        if not 0 <= entry < n:
            raise ValueError(f"entry {entry} at position {k} out of range 0..{n - 1}")
        total += entry
    return total % n


def fold_probs(probs: Sequence[float], n: int, L: int) -> np.ndarray:
    """Class probabilities of the L-fold preparation: cyclic convolution.

    Computed by iterated convolution, so no ``n**L`` enumeration happens and
    arbitrary ``L`` is cheap.
    """
    p = np.asarray([float(x) for x in probs])
    if len(p) != n:
        raise ValueError(f"expected {n} probabilities, got {len(p)}")
    if L < 0:
        raise ValueError(f"fold count must be >= 0, got {L}")
    out = np.zeros(n)
    out[0] = 1.0
    for _ in range(L):
        nxt = np.zeros(n)
        for shift in range(n):
            nxt += out[shift] * np.roll(p, shift)
        out = nxt
    return out


def coarse_ensemble(spec: FoldSpec, cap: int = DEFAULT_DIM_CAP) -> Ensemble:
    """Explicitly build the coarse ensemble of an L-fold preparation.

    Class ``i`` collects every index vector with modulo-n sum ``i``; its state
    is the probability-weighted average of the Kronecker products, and its
    slot structure repeats the base slots ``L`` times with party labels kept,
    so partial transposition over party bipartitions needs no index surgery.
    """
    base = spec.base
    n, L = spec.n, spec.L
    if spec.explicit_dim > cap:
        raise DimensionCapError(
            f"explicit fold dimension {spec.explicit_dim} exceeds the dimension cap {cap}"
        )
    slots = base.slots
    for _ in range(L - 1):
        slots = slots.concat(base.slots)

    dim = spec.explicit_dim
    class_sums = [np.zeros((dim, dim), dtype=np.complex128) for _ in range(n)]
    class_probs = [0.0] * n
    for choice in itertools.product(range(n), repeat=L):
        weight = 1.0
        mat = np.array([[1.0]], dtype=np.complex128)
        for c in choice:
            weight *= base.probs[c]
            mat = np.kron(mat, base.states[c].matrix)
        label = mod_sum(choice, n)
        class_probs[label] += weight
        class_sums[label] += weight * mat

    states: list[MultiPartyOperator] = []
    for i in range(n):
        if class_probs[i] <= 1e-15:
            raise DegenerateClassError(
                f"coarse class {i} has probability {class_probs[i]:.3e}; cannot normalize"
            )
        states.append(MultiPartyOperator(class_sums[i] / class_probs[i], slots))
    return Ensemble(base.parties, tuple(class_probs), tuple(states))


def uniform_coarse_ensemble(spec: FoldSpec, cap: int = DEFAULT_DIM_CAP) -> Ensemble:
    """The coarse states re-weighted uniformly: the direct-encoding ensemble."""
    coarse = coarse_ensemble(spec, cap=cap)
    uniform = (1.0 / spec.n,) * spec.n
    return Ensemble(coarse.parties, uniform, coarse.states)


def exact_two_state_curve(eta0: float, lmax: int) -> list[float]:
    """Exact dominant-class probability of a two-state fold, for L = 1..lmax.

    ``1/2 + (2*eta0 - 1)**L / 2``; requires ``1/2 <= eta0 <= 1`` (a dominated
    heavy member is what makes the value exact).
    """
    if not 0.5 <= eta0 <= 1.0:
        raise ValueError(f"eta0 must lie in [1/2, 1], got {eta0}")
    if lmax < 1:
        raise ValueError(f"lmax must be >= 1, got {lmax}")
    return [0.5 + 0.5 * (2.0 * eta0 - 1.0) ** L for L in range(1, lmax + 1)]


def fold_bound(n: int, qx: float, L: int) -> float:
    """Upper bound on the L-fold restricted-measurement value from a base bound.

    ``1/n + (n-1)/n * (n*qx - 1)**L``; decays to ``1/n`` exponentially fast
    whenever ``qx < 2/n``.  Values of ``qx`` below the guessing floor ``1/n``
    are rejected.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if L < 1:
        raise ValueError(f"fold count must be >= 1, got {L}")
    if qx < 1.0 / n:
        raise ValueError(f"bound {qx} is below the guessing floor 1/{n}")
    return 1.0 / n + (n - 1.0) / n * (n * qx - 1.0) ** L
