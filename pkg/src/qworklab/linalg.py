"""Dense complex linear algebra and quantum-state utilities.

Everything here works on plain ``numpy`` complex arrays.  Operators are
validated by the ``require_*`` functions, which return a defensive complex128
copy; downstream code treats validated arrays as immutable.  The eigensolver
is a cyclic Jacobi iteration written for small dense Hermitian matrices
(dimension <= 64), favouring robustness and determinism over speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonConvergence, ValidationError

HERMITICITY_TOL = 1e-10
UNITARITY_TOL = 1e-10
DENSITY_TRACE_TOL = 1e-10
DENSITY_EIG_TOL = 1e-10
EIG_FLOOR = 1e-14          # eigenvalues below this contribute 0 to entropies
DEGENERACY_GAP = 1e-9      # eigenvalues closer than this share an eigenspace
MAX_SWEEPS = 100
JACOBI_TOL = 1e-12         # off-diagonal convergence target (relative to scale)

_EIG_CACHE: dict[bytes, "SpectralDecomposition"] = {}
_EIG_CACHE_CAP = 512


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d complex128 array."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValidationError("DimMismatch", name, f"expected a matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise ValidationError("DimMismatch", name, "entries must be finite (no NaN/Inf)")
    return arr


def require_square(m, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(m, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValidationError("DimMismatch", name, f"expected square matrix, got {arr.shape}")
    return arr


def dag(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def max_abs(m: np.ndarray) -> float:
    """Max-norm of a matrix (largest entry magnitude)."""
    return float(np.max(np.abs(m))) if np.size(m) else 0.0


def is_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    return max_abs(m - dag(m)) <= tol


def require_hermitian(m, name: str = "operator", tol: float = HERMITICITY_TOL) -> np.ndarray:
    arr = require_square(m, name)
    defect = max_abs(arr - dag(arr))
    if defect > tol:
        raise ValidationError("NotHermitian", name, f"||M - M^dag||_max = {defect:.3e} > {tol}")
    return arr.copy()


def require_unitary(m, name: str = "operator", tol: float = UNITARITY_TOL) -> np.ndarray:
    arr = require_square(m, name)
    defect = max_abs(dag(arr) @ arr - np.eye(arr.shape[0]))
    if defect > tol:
        raise ValidationError("NotUnitary", name, f"||U^dag U - I||_max = {defect:.3e} > {tol}")
    return arr.copy()


def require_density(m, name: str = "state") -> np.ndarray:
    """Validate a density operator: Hermitian, unit trace, positive semidefinite."""
    arr = require_hermitian(m, name)
    tr = complex(np.trace(arr))
    if abs(tr - 1.0) > DENSITY_TRACE_TOL:
        raise ValidationError("NotDensity", name, f"trace = {tr:.12g}, expected 1")
    lo = float(eig_hermitian(arr).eigenvalues[0])
    if lo < -DENSITY_EIG_TOL:
        raise ValidationError("NotDensity", name, f"min eigenvalue {lo:.3e} < -{DENSITY_EIG_TOL}")
    return arr


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])

    def reconstruct(self) -> np.ndarray:
        """Sum_k lambda_k v_k v_k^dag."""
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dag(v)

    def apply(self, fn) -> np.ndarray:
        """Matrix function f(M) = V f(lambda) V^dag for a scalar callable."""
        v = self.eigenvectors
        return (v * fn(self.eigenvalues)) @ dag(v)

    def projectors(self, gap: float = DEGENERACY_GAP) -> list[tuple[float, np.ndarray]]:
        """Eigenspace projectors, clustering eigenvalues closer than ``gap``.

        Degenerate eigenvector orientations are solver-dependent, so any
        consumer facing possible degeneracies must work with these projectors
        rather than raw columns.  Cluster label is the mean eigenvalue.
        """
        vals = self.eigenvalues
        vecs = self.eigenvectors
        out: list[tuple[float, np.ndarray]] = []
        start = 0
        for k in range(1, len(vals) + 1):
            if k == len(vals) or vals[k] - vals[k - 1] > gap:
                block = vecs[:, start:k]
                out.append((float(np.mean(vals[start:k])), block @ dag(block)))
                start = k
        return out


def _jacobi(a: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi diagonalization of a Hermitian matrix."""
    d = a.shape[0]
    A = a.astype(np.complex128, copy=True)
    V = np.eye(d, dtype=np.complex128)
    if d == 1:
        return np.array([A[0, 0].real]), V
    scale = max(1.0, max_abs(A))
    tol = JACOBI_TOL * scale
    skip = 0.5 * tol

    for _ in range(max_sweeps):
        off = 0.0
        for p in range(d - 1):
            row = np.abs(A[p, p + 1:])
            if row.size:
                off = max(off, float(row.max()))
        if off <= tol:
            diag = np.real(np.diag(A)).copy()
            order = np.argsort(diag, kind="stable")
            vals = diag[order]
            vecs = V[:, order]
            vals.setflags(write=False)
            vecs.setflags(write=False)
            return vals, vecs
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                mag = abs(apq)
                if mag <= skip:
                    continue
                phase = apq / mag
                tau = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = -math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                sp = s * phase           # rotation applies s e^{+i phi} / s e^{-i phi}
                # columns: [col_p, col_q] <- [col_p, col_q] @ [[c, -sp], [conj(sp), c]]
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p + np.conj(sp) * col_q
                A[:, q] = -sp * col_p + c * col_q
                # rows: apply the conjugate transpose from the left
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p + sp * row_q
                A[q, :] = -np.conj(sp) * row_p + c * row_q
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                vcol_p = V[:, p].copy()
                vcol_q = V[:, q].copy()
                V[:, p] = c * vcol_p + np.conj(sp) * vcol_q
                V[:, q] = -sp * vcol_p + c * vcol_q
    raise NonConvergence(
        f"Jacobi eigensolver did not reach off-diagonal {tol:.1e} in {max_sweeps} sweeps"
    )


def eig_hermitian(op, max_sweeps: int = MAX_SWEEPS) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian operator.

    Uses cyclic Jacobi rotations with a fixed sweep order, so the result is
    deterministic for a fixed input.  Raises :class:`NonConvergence` if the
    off-diagonal mass is not eliminated within ``max_sweeps`` sweeps.
    """
    arr = require_hermitian(op)
    key = arr.shape[0].to_bytes(2, "little") + arr.tobytes()
    hit = _EIG_CACHE.get(key)
    if hit is not None and max_sweeps == MAX_SWEEPS:
        return hit
    vals, vecs = _jacobi(arr, max_sweeps)
    dec = SpectralDecomposition(vals, vecs)
    if max_sweeps == MAX_SWEEPS:
        if len(_EIG_CACHE) >= _EIG_CACHE_CAP:
            _EIG_CACHE.clear()
        _EIG_CACHE[key] = dec
    return dec


def tensor(a, b) -> np.ndarray:
    """Kronecker product."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def partial_trace(m, dims: tuple[int, int], keep: str) -> np.ndarray:
    """Trace out one factor of a bipartite operator on dims (dA, dB).

    ``keep`` selects the surviving factor, "A" or "B".
    """
    da, db = int(dims[0]), int(dims[1])
    arr = require_square(m)
    if arr.shape[0] != da * db:
        raise DimensionMismatch(
            f"operator of size {arr.shape[0]} does not factor as {da}x{db}"
        )
    four = arr.reshape(da, db, da, db)
    if keep == "A":
        return np.einsum("ibjb->ij", four)
    if keep == "B":
        return np.einsum("aiaj->ij", four)
    raise DimensionMismatch(f"keep must be 'A' or 'B', got {keep!r}")


def dephase(rho, basis: SpectralDecomposition) -> np.ndarray:
    """Remove coherences between the eigenspaces of ``basis``.

    Populations are preserved.  Degenerate clusters are handled via eigenspace
    projectors, so the result does not depend on the orientation of
    eigenvectors inside a cluster.
    """
    arr = require_square(rho)
    out = np.zeros_like(arr)
    for _, proj in basis.projectors():
        out += proj @ arr @ proj
    return out


def von_neumann_entropy(rho) -> float:
    """Von Neumann entropy in nats; eigenvalues below EIG_FLOOR contribute zero."""
    vals = eig_hermitian(rho).eigenvalues
    mask = vals > EIG_FLOOR
    lam = vals[mask]
    return float(-np.sum(lam * np.log(lam))) if lam.size else 0.0


def relative_entropy(rho, sigma) -> float:
    """Quantum relative entropy S(rho || sigma) in nats.

    Returns ``math.inf`` when the support of rho is not contained in the
    support of sigma.
    """
    dr = eig_hermitian(rho)
    ds = eig_hermitian(sigma)
    r_vals, r_vecs = dr.eigenvalues, dr.eigenvectors
    s_vals, s_vecs = ds.eigenvalues, ds.eigenvectors

    kernel = s_vals <= EIG_FLOOR
    if np.any(kernel):
        amps = dag(s_vecs[:, kernel]) @ r_vecs
        kernel_mass = float(np.sum((np.abs(amps) ** 2) * r_vals[None, :]))
        if kernel_mass > 1e-10:
            return math.inf

    r_mask = r_vals > EIG_FLOOR
    term_r = float(np.sum(r_vals[r_mask] * np.log(r_vals[r_mask])))

    s_mask = s_vals > EIG_FLOOR
    # overlap matrix |<u_i|v_j>|^2 between rho and sigma eigenvectors
    ov = np.abs(dag(r_vecs[:, r_mask]) @ s_vecs[:, s_mask]) ** 2
    term_s = float(r_vals[r_mask] @ ov @ np.log(s_vals[s_mask]))
    return term_r - term_s


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _ginibre(dim: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)


def random_unitary(dim: int, seed) -> np.ndarray:
    """Haar-random unitary: modified Gram-Schmidt orthonormalization of a
    complex-normal matrix (the QR factor with positive-real diagonal)."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = _rng(seed)
    g = _ginibre(dim, rng)
    q = np.zeros_like(g)
    for k in range(dim):
        v = g[:, k].copy()
        for j in range(k):
            v -= (q[:, j].conj() @ v) * q[:, j]
        v /= np.linalg.norm(v)
        q[:, k] = v
    return q


def random_density(dim: int, seed) -> np.ndarray:
    """Full-rank random density operator via normalized Wishart construction."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = _rng(seed)
    g = _ginibre(dim, rng)
    w = g @ dag(g)
    return w / np.trace(w).real


def random_pure(dim: int, seed) -> np.ndarray:
    """Haar-random pure state vector."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = _rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_hermitian(dim: int, seed, spread: float = 1.0) -> np.ndarray:
    """Random Hermitian matrix (GUE-style), for audits and searches."""
    rng = _rng(seed)
    g = _ginibre(dim, rng) * spread
    return (g + dag(g)) / 2.0


def projector(vec: np.ndarray) -> np.ndarray:
    """Rank-one projector |v><v| for a (normalized) vector."""
    v = np.asarray(vec, dtype=np.complex128).reshape(-1)
    return np.outer(v, v.conj())
