"""
Sensing matrix design for fixed per-mode dictionaries.

Two designs are provided: the closed-form separable design, where every equivalent matrix A_i = Phi_i Psi_i becomes
a Parseval tight frame, and cyclic gradient descent on the weighted objective

    f = (1 - beta) ||G_Psi - G_A||_F^2 + alpha ||Phi||_F^2 + beta ||I - G_A||_F^2

over the Kronecker products Psi = Psi_n kron ... kron Psi_1, Phi = Phi_n kron ... kron Phi_1, A = Phi Psi. Both are
evaluated through per-mode quantities only.
"""

from collections import namedtuple
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from metrics.frame import frame_objective
from tensor.decomposition import numerical_rank, svd
from tensor.ops import kron_factors
from util.detail import LOGGER
from util.errors import InvalidArgument, NumericalFailure, StepSizeFailure, require
from util.event_stats import Event

SEPARABLE_DESIGN_EVENT = Event('separable_design')
GRADIENT_CYCLE_EVENT = Event('gradient_cycle')

RANK_REL_TOL = 1e-10

INITS = ('separable', 'given')


@dataclass(frozen=True)
class DesignConfig:
    alpha: float = 1.0
    beta: float = 0.8
    eta: float = 1e-7  # Initial step when adaptive_step is set
    max_iters: int = 5000
    stop_rel_tol: float = 1e-8
    seed: int = 0
    random_orthonormal: bool = False  # Random U, V in the separable solution family instead of identities
    divergence_patience: int = 10
    # 'separable': gradient design starts at the separable design. 'given': it starts at phis0, and the separable
    # design picks the member of its family aligned with phis0
    init: str = 'separable'
    adaptive_step: bool = True
    step_growth: float = 1.2
    step_shrink: float = 0.5

    def __post_init__(self):
        require(self.alpha >= 0, f"alpha must be >= 0, got {self.alpha}")
        require(0 <= self.beta <= 1, f"beta must be in [0, 1], got {self.beta}")
        require(self.eta > 0, f"eta must be > 0, got {self.eta}")
        require(self.max_iters >= 0, f"max_iters must be >= 0, got {self.max_iters}")
        require(self.stop_rel_tol > 0, f"stop_rel_tol must be > 0, got {self.stop_rel_tol}")
        require(self.seed >= 0, f"seed must be unsigned, got {self.seed}")
        require(self.divergence_patience >= 1, "divergence_patience must be >= 1")
        require(self.init in INITS, f"init must be one of {INITS}, got {self.init!r}")
        require(self.step_growth >= 1, f"step_growth must be >= 1, got {self.step_growth}")
        require(0 < self.step_shrink < 1, f"step_shrink must be in (0, 1), got {self.step_shrink}")


DesignResult = namedtuple('DesignResult', (
    'phis',  # Normalized sensing matrices
    'objective_trace',
    'iterations_used',
    'raw_phis',  # Iterate before the final normalization
    'increases',  # Cycles rejected because they raised the objective, retried with a smaller step
    'method',
))

_ModeTerms = namedtuple('_ModeTerms', ('a', 'gram_a_sq', 'a_sq', 'phi_sq', 'gram_psi_sq', 'cross_sq'))


def _check_pairs(phis: Sequence[np.ndarray], psis: Sequence[np.ndarray]):
    if len(phis) != len(psis) or len(psis) == 0:
        raise InvalidArgument(f"Got {len(phis)} sensing matrices and {len(psis)} dictionaries")
    pairs = []
    for i, (phi, psi) in enumerate(zip(phis, psis), start=1):
        phi = np.asarray(phi, dtype=np.float64)
        psi = np.asarray(psi, dtype=np.float64)
        if phi.ndim != 2 or psi.ndim != 2 or phi.shape[1] != psi.shape[0]:
            raise InvalidArgument(f"Mode {i}: Phi {phi.shape} incompatible with Psi {psi.shape}")
        pairs.append((phi, psi))
    return pairs


def _mode_terms(phi: np.ndarray, psi: np.ndarray) -> _ModeTerms:
    a = phi @ psi
    # ||A^T A||_F = ||A A^T||_F and ||Psi^T Psi||_F = ||Psi Psi^T||_F, the smaller Gram is used
    return _ModeTerms(
        a=a,
        gram_a_sq=float(np.sum((a @ a.T) ** 2)),
        a_sq=float(np.sum(a ** 2)),
        phi_sq=float(np.sum(phi ** 2)),
        gram_psi_sq=float(np.sum((psi @ psi.T) ** 2)),
        cross_sq=float(np.sum((psi @ a.T) ** 2)),
    )


def _prod(terms: Sequence[_ModeTerms], field: str, skip: Optional[int] = None) -> float:
    return float(np.prod([getattr(t, field) for k, t in enumerate(terms) if k != skip]))


def approach2_objective(phis: Sequence[np.ndarray], psis: Sequence[np.ndarray], cfg: DesignConfig) -> float:
    pairs = _check_pairs(phis, psis)
    terms = [_mode_terms(phi, psi) for phi, psi in pairs]
    nhat = float(np.prod([psi.shape[1] for _, psi in pairs]))

    gram_a_sq = _prod(terms, 'gram_a_sq')
    coupling = _prod(terms, 'gram_psi_sq') - 2 * _prod(terms, 'cross_sq') + gram_a_sq
    frame = nhat - 2 * _prod(terms, 'a_sq') + gram_a_sq
    return (1 - cfg.beta) * coupling + cfg.alpha * _prod(terms, 'phi_sq') + cfg.beta * frame


def approach2_objective_explicit(phis: Sequence[np.ndarray], psis: Sequence[np.ndarray], cfg: DesignConfig) -> float:
    """Reference evaluation of approach2_objective on the explicit Kronecker products."""
    pairs = _check_pairs(phis, psis)
    phi = kron_factors([p for p, _ in pairs])
    psi = kron_factors([p for _, p in pairs])
    a = phi @ psi
    gram_psi = psi.T @ psi
    gram_a = a.T @ a
    return float((1 - cfg.beta) * np.sum((gram_psi - gram_a) ** 2) + cfg.alpha * np.sum(phi ** 2)
                 + cfg.beta * np.sum((np.eye(gram_a.shape[0]) - gram_a) ** 2))


def approach2_gradient(phis: Sequence[np.ndarray], psis: Sequence[np.ndarray], cfg: DesignConfig,
                       mode: int) -> np.ndarray:
    """
    Gradient of approach2_objective with respect to Phi_mode for any number of modes. Products over the other modes:
    w = prod ||G_Aj||^2, t = prod ||A_j||^2, e = prod ||Phi_j||^2, r = prod ||Psi_j A_j^T||^2, then

        4 w A G_A Psi^T - 4 beta t A Psi^T + 2 alpha e Phi + 4 (beta - 1) r A G_Psi Psi^T

    :param mode: 1-based mode
    """
    pairs = _check_pairs(phis, psis)
    if not isinstance(mode, (int, np.integer)) or not 1 <= mode <= len(pairs):
        raise InvalidArgument(f"Mode {mode} out of range for {len(pairs)} modes")
    i = int(mode) - 1

    terms = [_mode_terms(phi, psi) for phi, psi in pairs]
    w = _prod(terms, 'gram_a_sq', skip=i)
    t = _prod(terms, 'a_sq', skip=i)
    e = _prod(terms, 'phi_sq', skip=i)
    r = _prod(terms, 'cross_sq', skip=i)

    phi, psi = pairs[i]
    a = terms[i].a
    a_psi_t = a @ psi.T
    return (4 * w * ((a @ a.T) @ a_psi_t)
            - 4 * cfg.beta * t * a_psi_t
            + 2 * cfg.alpha * e * phi
            + 4 * (cfg.beta - 1) * r * (a_psi_t @ (psi @ psi.T)))


def normalize_sensing(phi) -> np.ndarray:
    """Scales Phi (M x N) to squared Frobenius norm N."""
    phi = np.asarray(phi, dtype=np.float64)
    norm = np.linalg.norm(phi)
    if not np.isfinite(norm) or norm == 0:
        raise NumericalFailure(f"Cannot normalize sensing matrix with norm {norm}")
    return np.sqrt(phi.shape[1]) * phi / norm


def gaussian_sensing(ms: Sequence[int], ns: Sequence[int], rng: np.random.Generator) -> List[np.ndarray]:
    require(len(ms) == len(ns), "Need one row count per mode")
    return [normalize_sensing(rng.standard_normal((m, n))) for m, n in zip(ms, ns)]


def random_orthonormal(n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1
    return q * signs


def _separable_mode(psi: np.ndarray, m: int, mode: int, rng: Optional[np.random.Generator],
                    anchor: Optional[np.ndarray]) -> np.ndarray:
    n, nhat = psi.shape
    require(nhat >= n, f"Mode {mode}: dictionary needs at least as many columns as rows, got {psi.shape}")
    require(m >= 1, f"Mode {mode}: need at least one measurement, got {m}")

    decomposition = svd(psi)
    rank = numerical_rank(decomposition.s, RANK_REL_TOL)
    if m > rank:
        raise InvalidArgument(f"Mode {mode}: M={m} exceeds the numerical rank {rank} of Psi")
    s = decomposition.s[:rank]
    basis = decomposition.u[:, :rank]

    if anchor is not None:
        anchor = np.asarray(anchor, dtype=np.float64)
        require(anchor.shape == (m, n), f"Mode {mode}: anchor {anchor.shape} does not match ({m}, {n})")
        # Every member is W diag(1/s) U^T with W (M x rank) having orthonormal rows; the closest W to the anchor is
        # the polar factor of anchor U diag(s)
        polar = svd(anchor @ basis * s, full_matrices=False)
        w = polar.u @ polar.v.T
    else:
        u = random_orthonormal(m, rng) if rng is not None else np.eye(m)
        v = random_orthonormal(rank, rng) if rng is not None else np.eye(rank)
        w = u @ v.T[:m, :]
    return (w / s) @ basis.T


def design_separable(psis: Sequence[np.ndarray], ms: Sequence[int], cfg: Optional[DesignConfig] = None,
                     anchors: Optional[Sequence[np.ndarray]] = None) -> DesignResult:
    """
    Closed-form separable design. Each raw Phi_i makes A_i = Phi_i Psi_i a Parseval tight frame, which minimizes
    ||I - G_A||_F^2 at prod N^_i - prod M_i. The returned phis are normalized to ||Phi_i||_F^2 = N_i.

    The solutions form a family parametrized by orthonormal U and V. Without anchors U = V = I (or random ones with
    cfg.random_orthonormal); with anchors the member aligned with the anchor is picked (the polar factor of anchor U_Psi
    diag(s)), which keeps repeated designs on slowly changing dictionaries continuous.

    :param psis: Dictionaries Psi_i (N_i x N^_i), N^_i >= N_i
    :param ms: Measurement counts M_i <= rank(Psi_i)
    :param cfg: Only seed and random_orthonormal are used
    :param anchors: Optional sensing matrices M_i x N_i
    """
    cfg = cfg or DesignConfig()
    if len(ms) != len(psis) or len(psis) == 0:
        raise InvalidArgument(f"Got {len(psis)} dictionaries and {len(ms)} measurement counts")
    if anchors is not None and len(anchors) != len(psis):
        raise InvalidArgument(f"Got {len(anchors)} anchors for {len(psis)} dictionaries")

    rng = np.random.default_rng(cfg.seed) if cfg.random_orthonormal and anchors is None else None
    psis = [np.asarray(psi, dtype=np.float64) for psi in psis]
    anchors = anchors if anchors is not None else [None] * len(psis)
    raw = [_separable_mode(psi, int(m), i, rng, anchor)
           for i, (psi, m, anchor) in enumerate(zip(psis, ms, anchors), start=1)]
    SEPARABLE_DESIGN_EVENT.increment()

    objective = frame_objective(psis, raw)
    LOGGER.debug(f"Separable design for sizes {[p.shape for p in raw]}: frame objective {objective}")
    return DesignResult(
        phis=[normalize_sensing(phi) for phi in raw],
        objective_trace=[objective],
        iterations_used=0,
        raw_phis=raw,
        increases=0,
        method='approach1',
    )


def _cycle(phis: List[np.ndarray], psis: List[np.ndarray], cfg: DesignConfig, eta: float) -> List[np.ndarray]:
    phis = list(phis)
    for mode in range(1, len(phis) + 1):
        phis[mode - 1] = phis[mode - 1] - eta * approach2_gradient(phis, psis, cfg, mode)
    return phis


def design_gradient(psis: Sequence[np.ndarray], phis0: Sequence[np.ndarray], cfg: DesignConfig) -> DesignResult:
    """
    Cyclic gradient descent over modes, Phi_i <- Phi_i - eta * df/dPhi_i, started at phis0.

    A cycle that raises the objective (or makes it non-finite) is never kept, so the trace, which holds the objective
    at the start and after every accepted cycle, is non-increasing. With cfg.adaptive_step the step grows by
    step_growth after an accepted cycle and a rejected cycle is retried from the same iterate with the step scaled by
    step_shrink. Without it eta is constant and the first rejected cycle fails.

    Iteration stops once a cycle changes the objective by less than stop_rel_tol (relative) in either direction, or
    after max_iters attempted cycles. Normalization is applied once, after the loop.

    :raises StepSizeFailure: divergence_patience consecutive cycles were rejected, or a fixed step was rejected.
        last_phis holds the last accepted iterate.
    """
    pairs = _check_pairs(phis0, psis)
    psis = [psi for _, psi in pairs]
    phis = [phi.copy() for phi, _ in pairs]

    previous = approach2_objective(phis, psis, cfg)
    if not np.isfinite(previous):
        raise NumericalFailure(f"Initial objective is {previous}")

    trace = [previous]
    eta = cfg.eta
    streak = 0
    rejected = 0
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        with np.errstate(over='ignore', invalid='ignore'):
            candidate = _cycle(phis, psis, cfg, eta)
            current = approach2_objective(candidate, psis, cfg)
        GRADIENT_CYCLE_EVENT.increment()

        tolerance = cfg.stop_rel_tol * abs(previous)
        if np.isfinite(current) and current <= previous + tolerance:
            # A change within the tolerance either way ends the descent, an increase is not kept
            if current <= previous:
                phis = candidate
                trace.append(current)
            streak = 0
            if cfg.adaptive_step:
                eta *= cfg.step_growth
            if previous - current <= tolerance:
                break
            previous = current
            continue

        rejected += 1
        streak += 1
        if not cfg.adaptive_step or streak >= cfg.divergence_patience:
            raise StepSizeFailure(f"Objective went from {previous} to {current} at cycle {iterations} with "
                                  f"eta={eta}, {streak} consecutive rejected cycles",
                                  last_phis=[phi.copy() for phi in phis], objective_trace=trace)
        eta *= cfg.step_shrink

    LOGGER.debug(f"Gradient design finished after {iterations} cycles ({rejected} rejected), objective {trace[-1]}, "
                 f"final step {eta}")

    return DesignResult(
        phis=[normalize_sensing(phi) for phi in phis],
        objective_trace=trace,
        iterations_used=iterations,
        raw_phis=phis,
        increases=rejected,
        method='approach2',
    )
