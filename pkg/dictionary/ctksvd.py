"""
Coupled tensor KSVD (cTKSVD) and its uncoupled form (TKSVD).

Each outer iteration sparse-codes every slice of the coupled tensor Z against the coupled matrices D_i with a
Kronecker-OMP budget of K atoms, then sweeps the atoms of every mode once (sum of N^_i inner updates). An atom update
restricts the residual to the slices that use the atom, takes its leading rank-1 term, maps the mode vector back to
the dictionary through the coupling pseudo-inverse, normalizes it, and refits the affected codes by least squares on
their fixed supports. The least squares column for the current codes competes with it, so an update never leaves a
larger restricted residual than the atom it replaces.
"""

from collections import Counter, namedtuple
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from metrics.quality import are
from recovery.least_squares import solve_normal_equations
from recovery.omp import sparse_code_stack
from recovery.operator import KronOperator
from recovery.sparse import as_code_stack, stack_to_sparse
from tensor.decomposition import hosvd_rank1, leading_triple
from tensor.ops import as_tensor, mode_product, multi_mode_product, unfold
from util.detail import LOGGER
from util.errors import InvalidArgument, require
from util.event_stats import Event
from .coupling import TrainingSet, build_coupled_tensor, coupling_pinv, coupling_stack

ATOM_UPDATE_EVENT = Event('atom_update')
ATOM_REPLACED_EVENT = Event('atom_replaced')
ATOM_REJECTED_EVENT = Event('atom_rejected')
OUTER_ITERATION_EVENT = Event('outer_iteration')


@dataclass(frozen=True)
class LearnConfig:
    gamma: float = 1 / 64
    sparsity_k: int = 4
    outer_iters: int = 10
    seed: int = 0
    coupled: bool = True
    omp_tol: float = 0.0
    noise_var: float = 0.0  # Noise variance of generated training measurement stacks
    carry_codes: bool = True  # A slice keeps its previous code when that beats the fresh sparse code

    def __post_init__(self):
        require(self.gamma > 0, f"gamma must be > 0, got {self.gamma}")
        require(self.sparsity_k >= 1, f"sparsity_k must be >= 1, got {self.sparsity_k}")
        require(self.outer_iters >= 1, f"outer_iters must be >= 1, got {self.outer_iters}")
        require(self.seed >= 0, f"seed must be unsigned, got {self.seed}")
        require(self.omp_tol >= 0, f"omp_tol must be >= 0, got {self.omp_tol}")
        require(self.noise_var >= 0, f"noise_var must be >= 0, got {self.noise_var}")


class LearnResult(namedtuple('LearnResult', (
        'psis',  # Learned dictionaries, unit-norm columns
        'are_trace',  # ARE after the coding step of every outer iteration
        'codes',  # Dense codes of the last iteration, shape (N^_1, ..., N^_n, T)
        'ds',  # Coupled matrices matching psis (equal to psis when uncoupled)
        'coder_failures',
        'replaced_atoms',
        'inner_updates',  # Atom updates per outer iteration
))):
    __slots__ = ()

    def sparse_codes(self):
        return stack_to_sparse(self.codes)


AtomUpdate = namedtuple('AtomUpdate', (
    'psi',  # Dictionary column
    'atom',  # Coupled column, D_i[:, p]
    'slice_codes',  # Codes of atom p for every slice, shape (others..., T)
    'used',  # Slices whose codes use the atom
    'residual_before',
    'residual_after',
    'replaced',  # Atom was unused and got replaced
    'step',  # 'rank1', 'least_squares', 'kept' (no candidate improved) or 'replaced'
    'worst_slice',  # Slice used for a replacement, -1 otherwise
))

_Candidate = namedtuple('_Candidate', ('psi', 'atom', 'codes', 'residual', 'step'))


def _spread(slice_codes: np.ndarray, ds: Sequence[np.ndarray], axis: int) -> np.ndarray:
    """Codes of one atom carried through the other modes, with a singleton axis in place of the atom's mode."""
    expanded = np.expand_dims(slice_codes, axis)
    return multi_mode_product(expanded, [None if j == axis else d for j, d in enumerate(ds)])


def _atom_contribution(atom: np.ndarray, slice_codes: np.ndarray, ds: Sequence[np.ndarray], axis: int) -> np.ndarray:
    return mode_product(_spread(slice_codes, ds, axis), atom[:, None], axis + 1)


def _refit(residual: np.ndarray, atom: np.ndarray, ds: Sequence[np.ndarray], axis: int,
           slice_codes: np.ndarray) -> np.ndarray:
    """
    Least squares codes for a fixed atom on the supports of slice_codes. Minimizing ||R - atom o W|| over W equals
    fitting W to the projection of R onto the atom, so every slice reduces to a small problem on the other modes.
    """
    projected = np.squeeze(mode_product(residual, atom[None, :] / np.dot(atom, atom), axis + 1), axis)
    others = [d for j, d in enumerate(ds) if j != axis]
    if not others:
        return projected * (slice_codes != 0)

    count = slice_codes.shape[-1]
    inner_shape = slice_codes.shape[:-1]
    flat_codes = np.reshape(slice_codes, (-1, count), order='F')
    targets = np.reshape(projected, (-1, count), order='F')
    nonzero = flat_codes != 0
    sizes = nonzero.sum(axis=0)

    refit = np.zeros_like(flat_codes)
    for size in np.unique(sizes[sizes > 0]):
        group = np.flatnonzero(sizes == size)
        rows = np.nonzero(nonzero[:, group].T)[1].reshape(group.size, size)

        multi = np.unravel_index(rows, inner_shape, order='F')
        cols = np.ones((1, group.size, size))
        for d, idx in zip(others, multi):
            cols = np.einsum('agc,bgc->abgc', cols, d[:, idx]).reshape((-1, group.size, size), order='F')

        gram = np.einsum('lgc,lgd->gcd', cols, cols)
        rhs = np.einsum('lgc,lg->gc', cols, targets[:, group])
        refit[rows, group[:, None]] = solve_normal_equations(gram, rhs)

    return np.reshape(refit, slice_codes.shape, order='F')


def _to_dictionary(u: np.ndarray, pinv: Optional[np.ndarray]):
    psi = u if pinv is None else pinv @ u
    norm = np.linalg.norm(psi)
    if norm == 0 or not np.isfinite(norm):
        return None
    return psi / norm


def _least_squares_direction(residual: np.ndarray, slice_codes: np.ndarray, ds: Sequence[np.ndarray],
                             axis: int) -> np.ndarray:
    """Column minimizing ||R - d o W|| for the current codes W, before the coupling left inverse."""
    spread = unfold(_spread(slice_codes, ds, axis), axis + 1)[0]
    energy = float(np.dot(spread, spread))
    if energy == 0:
        return np.zeros(residual.shape[axis])
    return unfold(residual, axis + 1) @ spread / energy


def _candidate(residual, psi, stack, ds, axis, slice_codes, step) -> _Candidate:
    atom = psi if stack is None else stack @ psi
    refit = _refit(residual, atom, ds, axis, slice_codes)
    after = float(np.linalg.norm(residual - _atom_contribution(atom, refit, ds, axis)))
    return _Candidate(psi, atom, refit, after, step)


def update_atom(z, ds: Sequence[np.ndarray], codes, mode: int, p: int, phi: Optional[np.ndarray] = None,
                gamma: Optional[float] = None, exclude: Iterable[int] = ()) -> AtomUpdate:
    """
    Update of atom p of mode `mode` on the slices that use it.

    Two columns compete, both mapped through the coupling left inverse, normalized and followed by a least squares
    refit of the codes on their supports: the mode vector of the leading rank-1 term of the restricted residual, and
    the least squares column for the current codes. The one leaving the smaller restricted residual wins; the second
    never leaves more than the current atom does, so the restricted residual does not grow.

    :param z: Coupled tensor (or plain training stack when uncoupled), shape (L_1, ..., L_n, T)
    :param ds: Current coupled matrices D_i (L_i x N^_i)
    :param codes: Current codes, dense stack or list of SparseTensors
    :param mode: 1-based mode
    :param p: 0-based atom index
    :param phi: Sensing matrix of this mode, None for the uncoupled update
    :param gamma: Coupling weight, required with phi
    :param exclude: Slices not to be picked again for a replacement
    """
    z = as_tensor(z)
    codes = as_code_stack(codes)
    n = len(ds)
    if not isinstance(mode, (int, np.integer)) or not 1 <= mode <= n:
        raise InvalidArgument(f"Mode {mode} out of range for {n} modes")
    axis = int(mode) - 1
    if not 0 <= p < ds[axis].shape[1]:
        raise InvalidArgument(f"Atom {p} out of range for {ds[axis].shape[1]} atoms")
    if z.ndim != n + 1 or codes.shape != tuple(d.shape[1] for d in ds) + (z.shape[-1],):
        raise InvalidArgument(f"Codes {codes.shape} and data {z.shape} do not match {n} dictionaries")

    if phi is not None:
        require(gamma is not None and gamma > 0, "gamma is required with phi")
        stack = coupling_stack(phi, gamma)
        pinv = coupling_pinv(phi, gamma)
    else:
        stack = pinv = None

    d_old = ds[axis][:, p]
    psi_old = d_old if pinv is None else pinv @ d_old
    slice_all = np.take(codes, p, axis=axis)
    used = np.flatnonzero(np.any(np.reshape(slice_all != 0, (-1, slice_all.shape[-1])), axis=0))

    ATOM_UPDATE_EVENT.increment()
    if used.size == 0:
        return _replace_unused(z, ds, codes, axis, psi_old, d_old, slice_all, stack, pinv, set(exclude))

    z_used = z[..., used]
    slice_used = slice_all[..., used]
    contribution = _atom_contribution(d_old, slice_used, ds, axis)
    residual = z_used - multi_mode_product(codes[..., used], ds) + contribution
    before = float(np.linalg.norm(residual - contribution))

    candidates = []
    leading = hosvd_rank1(residual)
    psi = None if leading.degenerate else _to_dictionary(leading.vectors[axis], pinv)
    if psi is not None:
        candidates.append(_candidate(residual, psi, stack, ds, axis, slice_used, 'rank1'))
    psi = _to_dictionary(_least_squares_direction(residual, slice_used, ds, axis), pinv)
    if psi is not None:
        candidates.append(_candidate(residual, psi, stack, ds, axis, slice_used, 'least_squares'))

    best = min(candidates, key=lambda c: c.residual, default=None)
    if best is not None and best.residual <= before:
        updated = slice_all.copy()
        updated[..., used] = best.codes
        return AtomUpdate(best.psi, best.atom, updated, used, before, best.residual, False, best.step, -1)

    # Only reachable through rounding, the old atom stays with its codes
    ATOM_REJECTED_EVENT.increment()
    LOGGER.debug(f"Mode {mode} atom {p}: no candidate improved on residual {before}, atom kept")
    return AtomUpdate(psi_old, d_old, slice_all.copy(), used, before, before, False, 'kept', -1)


def _replace_unused(z, ds, codes, axis, psi_old, d_old, slice_all, stack, pinv, exclude) -> AtomUpdate:
    residual = z - multi_mode_product(codes, ds)
    norms = np.sqrt(np.sum(np.reshape(residual ** 2, (-1, residual.shape[-1]), order='F'), axis=0))
    for t in exclude:
        if 0 <= t < norms.size:
            norms[t] = -1
    worst = int(np.argmax(norms))

    psi = None
    if norms[worst] > 0:
        direction = leading_triple(unfold(residual[..., worst], axis + 1))[0]
        psi = _to_dictionary(direction, pinv)
    if psi is None:
        return AtomUpdate(psi_old, d_old, slice_all, np.zeros(0, dtype=np.intp), 0.0, 0.0, False, 'kept', -1)

    ATOM_REPLACED_EVENT.increment()
    LOGGER.debug(f"Mode {axis + 1}: unused atom replaced from slice {worst}")
    atom = psi if stack is None else stack @ psi
    return AtomUpdate(psi, atom, slice_all, np.zeros(0, dtype=np.intp), 0.0, 0.0, True, 'replaced', worst)


def update_atom_mode1(z, ds, codes, p: int, phi=None, gamma=None, exclude: Iterable[int] = ()) -> AtomUpdate:
    return update_atom(z, ds, codes, 1, p, phi, gamma, exclude)


def update_atom_mode2(z, ds, codes, p: int, phi=None, gamma=None, exclude: Iterable[int] = ()) -> AtomUpdate:
    return update_atom(z, ds, codes, 2, p, phi, gamma, exclude)


def normalize_columns(m) -> np.ndarray:
    m = np.array(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=0)
    if np.any(norms == 0):
        raise InvalidArgument(f"Dictionary has zero column(s) {np.flatnonzero(norms == 0).tolist()}")
    return m / norms


def _slice_errors(z: np.ndarray, codes: np.ndarray, ds: Sequence[np.ndarray]) -> np.ndarray:
    residual = z - multi_mode_product(codes, ds)
    return np.sum(np.reshape(residual ** 2, (-1, residual.shape[-1]), order='F'), axis=0)


def _keep_better_codes(z: np.ndarray, ds: Sequence[np.ndarray], fresh: np.ndarray, carried: np.ndarray) -> int:
    """Puts the carried code into fresh for every slice where it represents the slice better. Returns that count."""
    better = np.flatnonzero(_slice_errors(z, carried, ds) < _slice_errors(z, fresh, ds))
    fresh[..., better] = carried[..., better]
    return better.size


def learn(train: TrainingSet, phis: Optional[Sequence[np.ndarray]], psis0: Sequence[np.ndarray],
          cfg: LearnConfig) -> LearnResult:
    """
    cTKSVD when cfg.coupled, otherwise TKSVD on Z = X with D_i = Psi_i (phis are then ignored and may be None).

    :param train: Training stack, measurement stacks are generated when missing
    :param phis: Fixed sensing matrices
    :param psis0: Initial dictionaries (N_i x N^_i), columns are normalized first
    :param cfg: Learning parameters
    """
    n = len(psis0)
    require(n == train.order, f"Need {train.order} dictionaries, got {n}")
    psis = [normalize_columns(psi) for psi in psis0]
    for i, (psi, size) in enumerate(zip(psis, train.signal_shape), start=1):
        require(psi.ndim == 2 and psi.shape[0] == size, f"Mode {i}: dictionary {psi.shape} does not fit N_{i}={size}")
    atoms = int(np.prod([psi.shape[1] for psi in psis]))
    require(cfg.sparsity_k <= atoms, f"Sparsity {cfg.sparsity_k} exceeds the {atoms} available atoms")

    rng = np.random.default_rng(cfg.seed)
    if cfg.coupled:
        require(phis is not None, "Coupled learning needs sensing matrices")
        phis = [np.asarray(phi, dtype=np.float64) for phi in phis]
        z, stacks = build_coupled_tensor(train, phis, cfg.gamma, cfg.noise_var, rng)
        ds = [stack @ psi for stack, psi in zip(stacks, psis)]
    else:
        phis = [None] * n
        z = train.signals
        ds = [psi.copy() for psi in psis]

    are_trace: List[float] = []
    inner_updates: List[int] = []
    failures = 0
    replaced = 0
    steps = Counter()
    codes = None
    for iteration in range(1, cfg.outer_iters + 1):
        coding = sparse_code_stack(KronOperator(ds), z, cfg.sparsity_k, cfg.omp_tol)
        failures += coding.failures
        carried = 0
        if codes is not None and cfg.carry_codes:
            carried = _keep_better_codes(z, ds, coding.codes, codes)
        codes = coding.codes
        are_trace.append(are(z, codes, ds))

        updates = 0
        for mode in range(1, n + 1):
            axis = mode - 1
            exclude = set()
            index = [slice(None)] * codes.ndim
            for p in range(psis[axis].shape[1]):
                update = update_atom(z, ds, codes, mode, p, phis[axis], cfg.gamma if cfg.coupled else None, exclude)
                psis[axis][:, p] = update.psi
                ds[axis][:, p] = update.atom
                index[axis] = p
                codes[tuple(index)] = update.slice_codes
                steps[update.step] += 1
                if update.replaced:
                    replaced += 1
                    exclude.add(update.worst_slice)
                updates += 1
        inner_updates.append(updates)
        OUTER_ITERATION_EVENT.increment()
        LOGGER.debug(f"Outer iteration {iteration}: ARE {are_trace[-1]}, {updates} atom updates, "
                     f"{carried} slices kept their previous codes")

    LOGGER.info(f"{'cTKSVD' if cfg.coupled else 'TKSVD'} finished {cfg.outer_iters} iterations, "
                f"ARE {are_trace[0]} -> {are_trace[-1]}, {replaced} atoms replaced, {failures} coder failures, "
                f"atom steps {dict(steps)}")
    return LearnResult(psis, are_trace, codes, ds, failures, replaced, inner_updates)
