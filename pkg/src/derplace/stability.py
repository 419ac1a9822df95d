"""Discrete-time stability test and the stable-fraction score.

A discrete LTI system ``x_{k+1} = M x_k`` is stable in the sense of
Lyapunov (bounded trajectories) when every eigenvalue lies on or inside the
unit circle and the on-circle eigenvalues carry only 1x1 Jordan blocks.
Computing the Jordan form is both expensive and numerically fragile, so the
block-size condition is tested through nullity: the number of Jordan blocks
of eigenvalue ``lam`` equals nullity(M - lam I), and all blocks are 1x1 iff
that nullity equals the algebraic multiplicity of ``lam``.

Floating point never lands exactly on the unit circle, so every
classification here carries an explicit tolerance (see ``Tolerances``).

Boundedness alone does not give phasor tracking: the marginal (on-circle)
modes contribute constants to the state.  Those constants vanish on the
tracked indices p whenever the gain columns at p are nonzero, because every
on-circle eigenvector is then forced to zero at p (B is invertible and the
p-columns of F are linearly independent).  ``unit_eigvec_support`` measures
the worst tracked component of any on-circle eigenvector, and
``stable_fraction`` only counts a gain sample as good when that support is
numerically zero as well.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .control import (
    Configuration,
    GainSample,
    SamplingParams,
    assemble_B,
    build_F,
    closed_loop,
    gain_bounds,
    sample_gains,
    structural_identity,
)
from .feeder import Feeder
from .sensitivity import SensitivityMatrices

SUPPORT_TOLERANCE = 1e-8


@dataclass(frozen=True)
class Tolerances:
    """Numerical slack for eigenvalue classification.

    eps_lambda   slack on the inside-the-circle test |lam| <= 1 + eps_lambda
    eps_unit     half-width of the on-circle band ||lam| - 1| <= eps_unit
    eps_cluster  complex distance under which eigenvalues count as equal
    eps_rank     relative singular-value cutoff for nullity; None picks
                 dim * machine-epsilon (scaled by the largest singular value)
    """

    eps_lambda: float = 1e-9
    eps_unit: float = 1e-7
    eps_cluster: float = 1e-7
    eps_rank: float | None = None

    def __post_init__(self):
        for name in ("eps_lambda", "eps_unit", "eps_cluster"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.eps_rank is not None and self.eps_rank <= 0:
            raise ValueError("eps_rank must be positive")


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True)
class UnitEigenvalue:
    """One distinct on-circle eigenvalue with its multiplicities."""

    value: complex
    multiplicity: int
    nullity: int


@dataclass(eq=False)
class StabilityVerdict:
    eigenvalues: np.ndarray
    max_abs: float
    cond1_pass: bool  # all |lam| <= 1 + eps_lambda
    unit_set: list[UnitEigenvalue]
    cond2_pass: bool  # every on-circle nullity equals its multiplicity
    sisl: bool
    tolerances: Tolerances
    note: str | None = None


def _cluster(eigenvalues: np.ndarray, eps: float) -> list[np.ndarray]:
    """Group eigenvalues within complex distance eps (union-find)."""
    k = len(eigenvalues)
    parent = list(range(k))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            if abs(eigenvalues[i] - eigenvalues[j]) <= eps:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[ri] = rj
    groups: dict[int, list[int]] = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    return [eigenvalues[idx] for idx in groups.values()]


def _nullity(m: np.ndarray, tol: Tolerances, cluster_spread: float = 0.0) -> int:
    """Nullity by singular-value rank.

    The cutoff is the relative floor eps_rank * sigma_max, raised to twice
    the cluster spread: eigenvalues merged within eps_cluster shift the
    shifted matrix by up to the spread, and singular values at that scale
    belong to the merged eigenvalue rather than to genuine rank.
    """
    sing = np.linalg.svd(m, compute_uv=False)
    if sing.size == 0 or sing[0] == 0.0:
        return m.shape[0]
    rel = tol.eps_rank if tol.eps_rank is not None else m.shape[0] * np.finfo(float).eps
    cutoff = max(rel * sing[0], 2.0 * cluster_spread)
    return int(np.sum(sing < cutoff))


def check_sisl(M: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> StabilityVerdict:
    """Stability-in-the-sense-of-Lyapunov verdict for x_{k+1} = M x_k.

    Condition 1: every |eigenvalue| <= 1 + eps_lambda.  Condition 2: for
    each distinct on-circle eigenvalue, nullity(M - lam I) equals its
    algebraic multiplicity (all 1x1 Jordan blocks).  A failed eigensolve
    returns a diagnostic verdict rather than raising.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    try:
        eigenvalues = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        return StabilityVerdict(
            eigenvalues=np.empty(0, dtype=complex),
            max_abs=float("nan"),
            cond1_pass=False,
            unit_set=[],
            cond2_pass=False,
            sisl=False,
            tolerances=tol,
            note=f"eigensolver failed: {exc}",
        )

    max_abs = float(np.abs(eigenvalues).max()) if eigenvalues.size else 0.0
    cond1 = bool(np.all(np.abs(eigenvalues) <= 1.0 + tol.eps_lambda))

    unit_set: list[UnitEigenvalue] = []
    cond2 = True
    for cluster in _cluster(eigenvalues, tol.eps_cluster):
        rep = complex(cluster.mean())
        if abs(abs(rep) - 1.0) > tol.eps_unit:
            continue
        spread = float(np.abs(cluster - rep).max())
        nullity = _nullity(M - rep * np.eye(M.shape[0]), tol, cluster_spread=spread)
        unit_set.append(
            UnitEigenvalue(value=rep, multiplicity=len(cluster), nullity=nullity)
        )
        if nullity != len(cluster):
            cond2 = False
    unit_set.sort(key=lambda u: (u.value.real, u.value.imag))
    return StabilityVerdict(
        eigenvalues=eigenvalues,
        max_abs=max_abs,
        cond1_pass=cond1,
        unit_set=unit_set,
        cond2_pass=cond2,
        sisl=cond1 and cond2,
        tolerances=tol,
    )


def unit_eigvec_support(
    A_cl: np.ndarray,
    p: tuple[int, ...] | list[int],
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """Largest tracked component over all on-circle eigenvectors.

    Eigenvectors are unit 2-norm.  For a system that passed ``check_sisl``
    with nonzero gain columns at p this must be numerically zero; it is
    reported as a raw magnitude so callers choose their own threshold.
    Empty p or an empty on-circle set gives 0 by convention.
    """
    p = tuple(p)
    if not p:
        return 0.0
    eigenvalues, vectors = np.linalg.eig(np.asarray(A_cl, dtype=float))
    on_circle = np.abs(np.abs(eigenvalues) - 1.0) <= tol.eps_unit
    if not on_circle.any():
        return 0.0
    sub = vectors[np.ix_(list(p), list(np.nonzero(on_circle)[0]))]
    return float(np.abs(sub).max())


@dataclass(eq=False)
class StableFractionResult:
    """Share of sampled gain pairs that are stable with tracking."""

    fraction: float
    n_stable: int
    n_samples: int
    witnesses: list[GainSample]  # first stable samples, at most five
    no_tracked_states: bool = False
    witness_spectral_radius: float | None = None
    stable_mask: list[bool] = field(default_factory=list)
    samples: list[GainSample] = field(default_factory=list)


def _evaluate_sample(
    B: np.ndarray,
    iw,
    g: GainSample,
    tol: Tolerances,
    support_tol: float,
) -> tuple[bool, float]:
    F = build_F(iw, g)
    a_cl, tracked = closed_loop(B, F)
    verdict = check_sisl(a_cl, tol)
    if not verdict.sisl or not tracked:
        return False, verdict.max_abs
    support = unit_eigvec_support(a_cl, tracked, tol)
    return support < support_tol, verdict.max_abs


def stable_fraction(
    c: Configuration,
    f: Feeder,
    s: SensitivityMatrices,
    sampling: SamplingParams = SamplingParams(),
    tol: Tolerances = DEFAULT_TOLERANCES,
    support_tol: float = SUPPORT_TOLERANCE,
    workers: int | None = None,
) -> StableFractionResult:
    """Evaluate every sampled gain pair and count the good ones.

    Good means SISL *and* tracking: on-circle eigenvector support on the
    tracked indices below ``support_tol``.  The result is deterministic for
    a given (scheme, count, seed) and independent of evaluation order.  An
    empty configuration tracks nothing and scores 0 with a flag.
    """
    if not c.pairs:
        return StableFractionResult(
            fraction=0.0,
            n_stable=0,
            n_samples=0,
            witnesses=[],
            no_tracked_states=True,
        )
    bounds = gain_bounds(c, s)
    samples = sample_gains(bounds, sampling.scheme, sampling.count, sampling.seed)
    iw = structural_identity(c, f)
    B = assemble_B(s)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(lambda g: _evaluate_sample(B, iw, g, tol, support_tol), samples)
            )
    else:
        results = [_evaluate_sample(B, iw, g, tol, support_tol) for g in samples]

    mask = [ok for ok, _ in results]
    n_stable = sum(mask)
    witnesses = [g for g, ok in zip(samples, mask) if ok][:5]
    radius = next((r for (ok, r) in results if ok), None)
    return StableFractionResult(
        fraction=n_stable / len(samples),
        n_stable=n_stable,
        n_samples=len(samples),
        witnesses=witnesses,
        witness_spectral_radius=radius,
        stable_mask=mask,
        samples=samples,
    )
