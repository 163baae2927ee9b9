"""Work-distribution schemes: each maps a Scenario to a WorkDistribution.

All schemes share the atom representation (work value, real weight); quasi
schemes may carry negative weights.  Work values closer than ``W_MERGE_TOL``
are merged by weight addition, which also absorbs spectral degeneracies.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DecompositionMismatch,
    DegenerateRhoWarning,
    ImaginaryResidue,
    NotPositive,
    TrajectoryBudgetExceeded,
)
from .linalg import (
    DEGENERACY_GAP,
    EIG_FLOOR,
    dag,
    eig_hermitian,
    max_abs,
    projector,
    tensor,
)
from .scenario import Scenario, compile_unitary

W_MERGE_TOL = 1e-9
WEIGHT_SUM_TOL = 1e-9
IMAG_RESIDUE_TOL = 1e-10
TRAJ_CAP = 2 ** 20
LAMBDA_BISECTION_TOL = 1e-6
POVM_EIG_TOL = 1e-10
_ATOM_PRUNE = 1e-15


class SchemeId(str, Enum):
    TPM = "tpm"
    OPERATOR_OF_WORK = "operator_of_work"
    FCS = "fcs"
    MARGENAU_HILL = "margenau_hill"
    CONSISTENT_HISTORIES = "consistent_histories"
    STATE_DEPENDENT = "state_dependent"
    SUB_ENSEMBLE = "sub_ensemble"
    COLLECTIVE_TWO_COPY = "collective_two_copy"
    GAUSSIAN_POINTER = "gaussian_pointer"


def merge_atoms(works, weights, tol: float = W_MERGE_TOL):
    """Sort atoms by work value and merge values closer than ``tol``.

    Merging is chained on adjacent gaps; the merged work value is the plain
    mean of the member values (weights may be negative, so a weighted mean
    would be ill-conditioned).
    """
    works = np.asarray(works, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if works.size == 0:
        return works, weights
    order = np.argsort(works, kind="stable")
    works = works[order]
    weights = weights[order]
    out_w: list[float] = []
    out_p: list[float] = []
    start = 0
    for k in range(1, works.size + 1):
        if k == works.size or works[k] - works[k - 1] > tol:
            out_w.append(float(np.mean(works[start:k])))
            out_p.append(float(np.sum(weights[start:k])))
            start = k
    return np.array(out_w), np.array(out_p)


@dataclass(frozen=True, eq=False)
class WorkDistribution:
    """Finite list of (work value, weight) atoms; quasi weights may be negative."""

    works: np.ndarray
    weights: np.ndarray
    scheme: SchemeId
    is_quasi: bool

    @classmethod
    def from_atoms(cls, works, weights, scheme: SchemeId, is_quasi: bool,
                   prune: float = _ATOM_PRUNE) -> "WorkDistribution":
        w, p = merge_atoms(works, weights)
        keep = np.abs(p) > prune
        w, p = w[keep], p[keep]
        total = float(np.sum(p))
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        if not is_quasi and p.size and float(p.min()) < -1e-12:
            raise ValueError(f"negative weight {p.min():.3e} in a probability scheme")
        w.setflags(write=False)
        p.setflags(write=False)
        return cls(works=w, weights=p, scheme=scheme, is_quasi=is_quasi)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.works.tolist(), self.weights.tolist()))

    def __len__(self) -> int:
        return int(self.works.size)

    def moment(self, k: int = 1) -> float:
        return float(np.sum((self.works ** k) * self.weights))

    def mean(self) -> float:
        return self.moment(1)

    def min_weight(self) -> float:
        return float(self.weights.min()) if len(self) else 0.0

    def weight_at(self, w: float, tol: float = W_MERGE_TOL) -> float:
        hit = np.abs(self.works - w) <= tol
        return float(self.weights[hit].sum())

    def tv_distance(self, other: "WorkDistribution") -> float:
        """Total-variation distance after merging the two supports."""
        works = np.concatenate([self.works, other.works])
        signed = np.concatenate([self.weights, -other.weights])
        _, net = merge_atoms(works, signed)
        return 0.5 * float(np.sum(np.abs(net)))


@dataclass(frozen=True, eq=False)
class JointWorkTable:
    """Joint (initial index, final index) weights with matching work values."""

    initial_energies: np.ndarray
    final_energies: np.ndarray
    weights: np.ndarray      # shape (n_initial, n_final)
    work_values: np.ndarray  # shape (n_initial, n_final)

    def to_distribution(self, scheme: SchemeId, is_quasi: bool) -> WorkDistribution:
        return WorkDistribution.from_atoms(
            self.work_values.ravel(), self.weights.ravel(), scheme, is_quasi
        )

    def initial_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def final_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=0)


@dataclass(frozen=True, eq=False)
class PureDecomposition:
    """Convex decomposition of a density operator into pure states."""

    weights: np.ndarray
    states: np.ndarray  # shape (n_members, dim), rows are unit vectors

    def reconstruct(self) -> np.ndarray:
        return (self.states.T * self.weights) @ np.conj(self.states)

    def check_against(self, rho: np.ndarray, tol: float = 1e-9) -> None:
        if np.any(self.weights < -1e-12) or abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise DecompositionMismatch("decomposition weights are not a probability vector")
        gap = max_abs(self.reconstruct() - rho)
        if gap > tol:
            raise DecompositionMismatch(
                f"decomposition reconstructs rho only to {gap:.3e} (tolerance {tol})"
            )


@dataclass(frozen=True, eq=False)
class Povm:
    """Labelled positive operators summing to the identity."""

    elements: tuple[tuple[object, np.ndarray], ...]

    def min_eigenvalue(self) -> float:
        return min(float(eig_hermitian(op).eigenvalues[0]) for _, op in self.elements)

    def completeness_defect(self) -> float:
        total = sum(op for _, op in self.elements)
        return max_abs(total - np.eye(total.shape[0]))

    def check(self, eig_tol: float = 1e-8, sum_tol: float = 1e-8) -> None:
        lo = self.min_eigenvalue()
        if lo < -eig_tol:
            raise ValueError(f"POVM element min eigenvalue {lo:.3e} < -{eig_tol}")
        defect = self.completeness_defect()
        if defect > sum_tol:
            raise ValueError(f"POVM completeness defect {defect:.3e} > {sum_tol}")


def _eigensystems(s: Scenario):
    """(initial decomposition, final decomposition, U)."""
    return eig_hermitian(s.h_initial), eig_hermitian(s.h_final), s.unitary()


def tpm(s: Scenario) -> tuple[WorkDistribution, JointWorkTable]:
    """Two-projective-measurement scheme.

    Joint weights Tr(Q_j U P_i rho P_i U^dag) over eigenspace projectors of the
    initial and final Hamiltonians; work values are the energy differences.
    """
    dec_i, dec_f, u = _eigensystems(s)
    init = dec_i.projectors()
    fin = dec_f.projectors()
    e_i = np.array([e for e, _ in init])
    e_f = np.array([e for e, _ in fin])
    weights = np.empty((len(init), len(fin)))
    for a, (_, p) in enumerate(init):
        evolved = u @ (p @ s.rho @ p) @ dag(u)
        for b, (_, q) in enumerate(fin):
            weights[a, b] = float(np.trace(q @ evolved).real)
    table = JointWorkTable(
        initial_energies=e_i,
        final_energies=e_f,
        weights=weights,
        work_values=e_f[None, :] - e_i[:, None],
    )
    return table.to_distribution(SchemeId.TPM, is_quasi=False), table


def work_operator(s: Scenario) -> tuple[np.ndarray, WorkDistribution]:
    """Spectral statistics of W = U^dag H_final U - H."""
    u = s.unitary()
    w_op = dag(u) @ s.h_final @ u - s.h_initial
    w_op = (w_op + dag(w_op)) / 2.0
    dec = eig_hermitian(w_op)
    works, weights = [], []
    for val, proj in dec.projectors():
        works.append(val)
        weights.append(float(np.trace(proj @ s.rho).real))
    dist = WorkDistribution.from_atoms(works, weights, SchemeId.OPERATOR_OF_WORK, is_quasi=False)
    return w_op, dist


def fcs_quasiprob(s: Scenario) -> WorkDistribution:
    """Full-counting-statistics quasi-probability.

    Atom at E'_m - (E_n + E_n')/2 with weight <E_n|rho|E_n'> times the
    transition kernel; conjugate (n, n') pairs share a work value, so the
    grouped weights must be real up to ``IMAG_RESIDUE_TOL``.
    """
    dec_i, dec_f, u = _eigensystems(s)
    v_i, e_i = dec_i.eigenvectors, dec_i.eigenvalues
    v_f, e_f = dec_f.eigenvectors, dec_f.eigenvalues
    t = dag(v_f) @ u @ v_i            # t[m, n] = <E'_m|U|E_n>
    r = dag(v_i) @ s.rho @ v_i        # rho in the initial energy basis
    q = np.einsum("mn,mo,no->mno", t, np.conj(t), r)
    works = e_f[:, None, None] - (e_i[None, :, None] + e_i[None, None, :]) / 2.0
    # merge as usual but carry complex weights so the imaginary residue is visible
    order = np.argsort(works.ravel(), kind="stable")
    sorted_w = works.ravel()[order]
    sorted_q = q.ravel()[order]
    out_w, out_q = [], []
    start = 0
    for k in range(1, sorted_w.size + 1):
        if k == sorted_w.size or sorted_w[k] - sorted_w[k - 1] > W_MERGE_TOL:
            out_w.append(float(np.mean(sorted_w[start:k])))
            out_q.append(complex(np.sum(sorted_q[start:k])))
            start = k
    residue = max((abs(z.imag) for z in out_q), default=0.0)
    if residue > IMAG_RESIDUE_TOL:
        raise ImaginaryResidue(f"grouped FCS weight has imaginary part {residue:.3e}")
    return WorkDistribution.from_atoms(
        out_w, [z.real for z in out_q], SchemeId.FCS, is_quasi=True
    )


def fcs_characteristic(s: Scenario, u_var: float) -> complex:
    """Characteristic function Tr[U^dag e^{iuH'} U e^{-iuH/2} rho e^{-iuH/2}]."""
    dec_i, dec_f, u = _eigensystems(s)
    half = dec_i.apply(lambda lam: np.exp(-1j * u_var * lam / 2.0))
    final = dec_f.apply(lambda lam: np.exp(1j * u_var * lam))
    return complex(np.trace(dag(u) @ final @ u @ half @ s.rho @ half))


def margenau_hill(s: Scenario) -> tuple[JointWorkTable, WorkDistribution]:
    """Margenau-Hill joint quasi-probability Re Tr[rho P_k U^dag Q_m U]."""
    dec_i, dec_f, u = _eigensystems(s)
    init = dec_i.projectors()
    fin = dec_f.projectors()
    e_i = np.array([e for e, _ in init])
    e_f = np.array([e for e, _ in fin])
    weights = np.empty((len(init), len(fin)))
    for a, (_, p) in enumerate(init):
        left = s.rho @ p @ dag(u)
        for b, (_, q) in enumerate(fin):
            weights[a, b] = float(np.trace(left @ q @ u).real)
    table = JointWorkTable(
        initial_energies=e_i,
        final_energies=e_f,
        weights=weights,
        work_values=e_f[None, :] - e_i[:, None],
    )
    return table, table.to_distribution(SchemeId.MARGENAU_HILL, is_quasi=True)


def consistent_histories(s: Scenario, k_steps: int) -> WorkDistribution:
    """Consistent-histories work quasi-probability on a K-step time grid.

    Builds the Heisenberg power operator X(t_j) = U^dag(t_j) dH/dt(t_j) U(t_j)
    on K+1 equally spaced grid points, enumerates projector trajectories, and
    weights each grouped history by Re Tr(C_w rho).  The two endpoint
    projector sums telescope to the identity (work values depend only on the
    interior points), so only interior trajectories are enumerated; the
    trajectory budget is still enforced on the full count d^(K+1).
    """
    if not s.is_driven:
        raise ValueError("consistent_histories requires a driving-protocol scenario")
    if k_steps < 2:
        raise ValueError("need at least 2 grid steps")
    d = s.dim
    if d ** (k_steps + 1) > TRAJ_CAP:
        raise TrajectoryBudgetExceeded(
            f"d^(K+1) = {d ** (k_steps + 1)} exceeds cap {TRAJ_CAP}"
        )
    protocol = s.evolution
    tau = protocol.duration
    dt = tau / k_steps
    grid = [tau * j / k_steps for j in range(k_steps + 1)]
    _, records = compile_unitary(protocol, grid=grid)
    if len(records) != k_steps + 1:
        raise ValueError("grid times collapsed; use a coarser grid")

    prods = np.eye(d, dtype=np.complex128)[None, :, :]
    works = np.zeros(1)
    for j in range(1, k_steps):
        t_j, u_j = records[j]
        x_op = dag(u_j) @ protocol.derivative_at(t_j) @ u_j
        x_op = (x_op + dag(x_op)) / 2.0
        clusters = eig_hermitian(x_op).projectors()
        prods = np.concatenate([np.einsum("ij,njk->nik", proj, prods)
                                for _, proj in clusters])
        works = np.concatenate([works + val * dt for val, _ in clusters])
    weights = np.einsum("nij,ji->n", prods, s.rho).real
    return WorkDistribution.from_atoms(works, weights, SchemeId.CONSISTENT_HISTORIES,
                                       is_quasi=True)


def state_dependent(s: Scenario) -> WorkDistribution:
    """Projective measurement in the eigenbasis of rho itself.

    The initial energy label of a rho eigenstate is its energy expectation
    value (a convention: the statistics carry no canonical energy assignment
    when rho and H do not commute, so this choice is flagged in reports).
    """
    dec_rho = eig_hermitian(s.rho)
    lam = dec_rho.eigenvalues
    if np.any(np.diff(lam) < DEGENERACY_GAP):
        warnings.warn(
            "rho has (near-)degenerate eigenvalues; its eigenbasis is ambiguous",
            DegenerateRhoWarning,
            stacklevel=2,
        )
    dec_f = eig_hermitian(s.h_final)
    fin = dec_f.projectors()
    u = s.unitary()
    works, weights = [], []
    for a in range(lam.size):
        if lam[a] <= EIG_FLOOR:
            continue
        phi = dec_rho.eigenvectors[:, a]
        e_a = float((np.conj(phi) @ s.h_initial @ phi).real)
        evolved = u @ phi
        for e_j, q in fin:
            works.append(e_j - e_a)
            weights.append(float(lam[a]) * float((np.conj(evolved) @ q @ evolved).real))
    return WorkDistribution.from_atoms(works, weights, SchemeId.STATE_DEPENDENT,
                                       is_quasi=False)


def spectral_pure_decomposition(rho: np.ndarray) -> PureDecomposition:
    """Canonical decomposition of rho into its eigenstates."""
    dec = eig_hermitian(rho)
    keep = dec.eigenvalues > EIG_FLOOR
    weights = dec.eigenvalues[keep]
    states = dec.eigenvectors[:, keep].T
    return PureDecomposition(weights=weights / weights.sum(), states=states)


def random_pure_decomposition(rho: np.ndarray, size: int, seed) -> PureDecomposition:
    """Random pure-state decomposition of rho with ``size`` members.

    Members are built by mixing the spectral decomposition through the first
    columns of a Haar unitary, which reconstructs rho exactly.
    """
    from .linalg import random_unitary

    dec = eig_hermitian(rho)
    keep = dec.eigenvalues > EIG_FLOOR
    lam = dec.eigenvalues[keep]
    vecs = dec.eigenvectors[:, keep]
    rank = int(lam.size)
    if size < rank:
        raise ValueError(f"need at least rank(rho)={rank} members")
    if size == 1:
        mix = np.ones((1, 1), dtype=np.complex128)
    else:
        mix = random_unitary(size, seed)[:, :rank]  # orthonormal columns
    unnormalized = (vecs * np.sqrt(lam)) @ mix.T    # columns are members
    weights = np.sum(np.abs(unnormalized) ** 2, axis=0)
    states = (unnormalized / np.sqrt(weights)).T
    return PureDecomposition(weights=weights, states=states)


def sub_ensemble(s: Scenario, decomp: PureDecomposition) -> WorkDistribution:
    """One work atom per decomposition member: its mean energy change."""
    decomp.check_against(s.rho)
    u = s.unitary()
    h_evolved = dag(u) @ s.h_final @ u
    works = []
    for psi in decomp.states:
        e_out = float((np.conj(psi) @ h_evolved @ psi).real)
        e_in = float((np.conj(psi) @ s.h_initial @ psi).real)
        works.append(e_out - e_in)
    return WorkDistribution.from_atoms(works, decomp.weights, SchemeId.SUB_ENSEMBLE,
                                       is_quasi=False)


def _collective_factors(s: Scenario):
    """Per-(i, j) second-copy factors <i|T_j|i> I + lambda T_j^offdiag (lambda folded later)."""
    dec_i, dec_f, u = _eigensystems(s)
    basis = dec_i.eigenvectors
    fin = dec_f.projectors()
    d = s.dim
    diag_parts = np.empty((d, len(fin)))
    off_parts = []
    for j, (_, q) in enumerate(fin):
        t_j = dag(u) @ q @ u
        t_basis = dag(basis) @ t_j @ basis
        diag_parts[:, j] = np.diag(t_basis).real
        off = t_basis - np.diag(np.diag(t_basis))
        off_parts.append(basis @ off @ dag(basis))
    e_i = dec_i.eigenvalues
    e_f = np.array([e for e, _ in fin])
    return basis, e_i, e_f, diag_parts, off_parts


def _collective_min_eig(diag_parts, off_parts, lam: float) -> float:
    lo = 0.0
    d = diag_parts.shape[0]
    for j, off in enumerate(off_parts):
        if max_abs(off) == 0.0:
            lo = min(lo, float(diag_parts[:, j].min()))
            continue
        off_min = float(eig_hermitian(off).eigenvalues[0])
        for i in range(d):
            lo = min(lo, diag_parts[i, j] + lam * off_min)
    return lo


def lambda_max(s: Scenario) -> float:
    """Largest lambda in [0, 1] keeping every two-copy element positive.

    Bisection to 1e-6; lambda = 0 always qualifies (it reproduces TPM).
    """
    _, _, _, diag_parts, off_parts = _collective_factors(s)

    def ok(lam: float) -> bool:
        return _collective_min_eig(diag_parts, off_parts, lam) >= -POVM_EIG_TOL

    if ok(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > LAMBDA_BISECTION_TOL:
        mid = (lo + hi) / 2.0
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def collective_two_copy(s: Scenario, lam: float | str = "auto") -> tuple[Povm, WorkDistribution]:
    """Two-copy collective measurement M_(ij) = |i><i| (x) (<i|T_j|i> I + lam T_j^off).

    Weights are Tr(M_(ij) rho (x) rho) at the TPM work values E'_j - E_i.
    ``lam="auto"`` selects lambda_max.
    """
    if lam == "auto":
        lam_val = lambda_max(s)
    else:
        lam_val = float(lam)
        if not 0.0 <= lam_val <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
    basis, e_i, e_f, diag_parts, off_parts = _collective_factors(s)
    lo = _collective_min_eig(diag_parts, off_parts, lam_val)
    if lo < -POVM_EIG_TOL:
        raise NotPositive(lam_val, lo)

    d = s.dim
    eye = np.eye(d, dtype=np.complex128)
    rho2 = tensor(s.rho, s.rho)
    elements = []
    works, weights = [], []
    for i in range(d):
        p_i = projector(basis[:, i])
        for j in range(len(e_f)):
            factor = diag_parts[i, j] * eye + lam_val * off_parts[j]
            m_ij = tensor(p_i, factor)
            elements.append(((i, j), m_ij))
            works.append(float(e_f[j] - e_i[i]))
            weights.append(float(np.trace(m_ij @ rho2).real))
    povm = Povm(elements=tuple(elements))
    dist = WorkDistribution.from_atoms(works, weights, SchemeId.COLLECTIVE_TWO_COPY,
                                       is_quasi=False)
    return povm, dist


def tpm_povm(s: Scenario) -> Povm:
    """Analytic TPM POVM: Pi_w = sum over (i,j) at w of |<E'_j|U|E_i>|^2 projectors."""
    dec_i, dec_f, u = _eigensystems(s)
    init = dec_i.projectors()
    fin = dec_f.projectors()
    pieces = []
    for e_a, p in init:
        for e_b, q in fin:
            strength = p @ dag(u) @ q @ u @ p
            pieces.append((float(e_b - e_a), (strength + dag(strength)) / 2.0))
    works = np.array([w for w, _ in pieces])
    merged_w, _ = merge_atoms(works, np.zeros(works.size))
    elements = []
    for w in merged_w:
        total = sum(op for val, op in pieces if abs(val - w) <= W_MERGE_TOL + 1e-15)
        elements.append((float(w), total))
    return Povm(elements=tuple(elements))


def distribution(scheme: SchemeId | str, s: Scenario, **opts) -> WorkDistribution:
    """Uniform dispatcher used by audits and the CLI."""
    scheme = SchemeId(scheme)
    if scheme is SchemeId.TPM:
        return tpm(s)[0]
    if scheme is SchemeId.OPERATOR_OF_WORK:
        return work_operator(s)[1]
    if scheme is SchemeId.FCS:
        return fcs_quasiprob(s)
    if scheme is SchemeId.MARGENAU_HILL:
        return margenau_hill(s)[1]
    if scheme is SchemeId.CONSISTENT_HISTORIES:
        return consistent_histories(s, int(opts.get("k_steps", 8)))
    if scheme is SchemeId.STATE_DEPENDENT:
        return state_dependent(s)
    if scheme is SchemeId.SUB_ENSEMBLE:
        decomp = opts.get("decomposition") or spectral_pure_decomposition(s.rho)
        return sub_ensemble(s, decomp)
    if scheme is SchemeId.COLLECTIVE_TWO_COPY:
        return collective_two_copy(s, opts.get("lam", "auto"))[1]
    raise ValueError(f"no atom-valued distribution for scheme {scheme}")
