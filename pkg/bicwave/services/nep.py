"""
Block Sakurai-Sugiura solver for nonlinear eigenproblems F(z) phi = 0.

Moments of U^H F(z)^{-1} V over a circular contour are assembled into
block Hankel matrices; a rank-revealing SVD reduces them to a small
linear pencil whose eigenvalues are the eigenvalues of F inside the
contour.
"""

import concurrent.futures as futures
import logging
from typing import Callable, List, Optional

import numpy as np
from scipy import linalg

from bicwave.core.config import settings
from bicwave.core.errors import DegenerateEigenvalueError, QuadratureNodeError
from bicwave.models.eigen import ContourSpec, EigenPair, SsmResult

logger = logging.getLogger(__name__)

MatrixFunction = Callable[[complex], np.ndarray]

# Hankel-pencil artifacts just inside the circle are discarded
_BOUNDARY_MARGIN = 1e-8
_SINGULAR_PIVOT = 1e-14


def probe_matrices(n: int, probes: int, seed: int):
    """Seeded complex Gaussian probes U, V with unit-norm columns."""
    rng = np.random.default_rng(seed)

    def draw():
        block = rng.standard_normal((n, probes)) + 1j * rng.standard_normal((n, probes))
        return block / np.linalg.norm(block, axis=0)

    u = draw()
    v = draw()
    return u, v


def _solve_node(F: MatrixFunction, z: complex, v: np.ndarray) -> np.ndarray:
    matrix = np.asarray(F(z), dtype=complex)
    lu, piv = linalg.lu_factor(matrix, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= _SINGULAR_PIVOT * max(pivots.max(), 1.0):
        raise QuadratureNodeError(
            f"F is singular at quadrature node z={z:.6g}",
            {"z": [z.real, z.imag]},
        )
    return linalg.lu_solve((lu, piv), v, check_finite=False)


def relative_residual(F: MatrixFunction, z: complex, vec: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(F(z)) @ vec) / np.linalg.norm(vec))


def ssm_solve(F: MatrixFunction, contour: ContourSpec,
              workers: Optional[int] = None) -> SsmResult:
    """
    Eigenvalues of F strictly inside ``contour``.

    Args:
        F: analytic matrix-valued function, safe to call from several threads
        contour: circle and block-SS parameters
        workers: threads for the quadrature nodes (default from config)

    Returns:
        SsmResult; pairs with residual above ``contour.residual_tol`` are
        reported in ``rejected``

    Raises:
        QuadratureNodeError: F(z) singular at a node
    """
    nodes = contour.nodes()
    n = np.asarray(F(nodes[0])).shape[0]
    probes = contour.probes
    u, v = probe_matrices(n, probes, contour.seed)

    workers = workers or settings.WORKERS
    with futures.ThreadPoolExecutor(max_workers=workers) as pool:
        solves = list(pool.map(lambda z: _solve_node(F, z, v), nodes))

    w = (nodes - contour.center) / contour.radius
    scale = contour.radius / contour.quad_points
    K = contour.moments
    powers = w[None, :] ** (np.arange(2 * K)[:, None] + 1)
    stacked = np.stack(solves)
    # S_p = (rho/N) sum_j w_j^{p+1} F(z_j)^{-1} V
    s_blocks = scale * np.einsum("pj,jnl->pnl", powers, stacked)
    moments = np.einsum("na,pnl->pal", u.conj(), s_blocks)

    size = probes * K
    hankel = np.empty((size, size), dtype=complex)
    shifted = np.empty((size, size), dtype=complex)
    for a in range(K):
        for b in range(K):
            rows, cols = slice(a * probes, (a + 1) * probes), slice(b * probes, (b + 1) * probes)
            hankel[rows, cols] = moments[a + b]
            shifted[rows, cols] = moments[a + b + 1]

    left, sigma, right_h = linalg.svd(hankel)
    if sigma[0] == 0:
        logger.info("SSM: zero Hankel matrix, no eigenvalues inside the contour")
        return SsmResult(singular_values=sigma)
    rank = int(np.sum(sigma > contour.rank_tol * sigma[0]))
    if rank == 0:
        return SsmResult(singular_values=sigma)
    if rank == size:
        logger.warning(
            f"SSM Hankel matrix has full rank {rank}; increase probes or moments"
        )

    w_r = left[:, :rank]
    x_r = right_h[:rank].conj().T
    inv_sigma = 1.0 / sigma[:rank]
    reduced = (w_r.conj().T @ shifted @ x_r) * inv_sigma[None, :]
    lam, y = linalg.eig(reduced)

    basis = np.concatenate([s_blocks[p] for p in range(K)], axis=1)
    vectors = basis @ (x_r * inv_sigma[None, :]) @ y

    pairs: List[EigenPair] = []
    rejected: List[EigenPair] = []
    for j in np.argsort(lam.real + 1e-3 * lam.imag):
        if abs(lam[j]) >= 1.0 - _BOUNDARY_MARGIN:
            logger.debug(f"SSM: discarding {lam[j]:.4g} outside the unit circle")
            continue
        z = contour.center + contour.radius * lam[j]
        vec = vectors[:, j]
        if np.linalg.norm(vec) == 0:
            continue
        pair = EigenPair(z, vec, relative_residual(F, z, vec))
        if pair.residual <= contour.residual_tol:
            pairs.append(pair)
        else:
            rejected.append(pair)

    if rejected:
        logger.warning(
            f"SSM: {len(rejected)} candidate(s) failed the residual filter "
            f"(tol {contour.residual_tol:g})"
        )
    logger.info(f"SSM: rank {rank}, {len(pairs)} eigenvalue(s) inside |z - {contour.center:.4g}| < {contour.radius:g}")
    return SsmResult(pairs, rejected, rank, sigma)


def left_eigenvector(F: MatrixFunction, z: complex, separation: float = 1e-3) -> np.ndarray:
    """
    Left null vector of F(z): the left singular vector of its smallest
    singular value, unit 2-norm.

    The eigenvalue counts as simple when the smallest singular value is
    below ``separation`` times the next one. The ratio ignores the largest
    singular value, which grows with the truncation order.

    Raises:
        DegenerateEigenvalueError: the two smallest singular values are not separated
    """
    matrix = np.asarray(F(complex(z)), dtype=complex)
    left, sigma, _ = linalg.svd(matrix)
    if sigma.size > 1 and (sigma[-2] == 0.0 or sigma[-1] >= separation * sigma[-2]):
        raise DegenerateEigenvalueError(
            f"Eigenvalue {complex(z):.6g} looks degenerate; left vector is not unique",
            {"smallest_singular_values": sigma[-2:].tolist()},
        )
    return left[:, -1]


def refine_eigenpair(F: MatrixFunction, z0: complex, pair: EigenPair, max_iter: int = 5,
                     tol: float = 1e-12, step: float = 1e-7,
                     dF: Optional[MatrixFunction] = None) -> EigenPair:
    """
    Newton polish on the bordered system [F(z) phi; e^H phi - 1] = 0.

    Returns the input pair when it is already converged, when the Jacobian
    is singular (marked ``refinement="skipped"``) or when the residual
    fails to decrease.
    """
    if pair.residual <= tol:
        return pair

    phi = pair.right_vec.copy()
    e = phi.copy()
    z = complex(z0)
    n = phi.size
    best = EigenPair(z, phi, relative_residual(F, z, phi), pair.left_vec)

    for _ in range(max_iter):
        matrix = np.asarray(F(z), dtype=complex)
        if dF is not None:
            derivative = np.asarray(dF(z), dtype=complex)
        else:
            derivative = (np.asarray(F(z + step)) - np.asarray(F(z - step))) / (2 * step)

        jac = np.zeros((n + 1, n + 1), dtype=complex)
        jac[:n, :n] = matrix
        jac[:n, n] = derivative @ phi
        jac[n, :n] = e.conj()
        rhs = -np.concatenate([matrix @ phi, [e.conj() @ phi - 1.0]])
        try:
            lu = linalg.lu_factor(jac, check_finite=True)
            if np.min(np.abs(np.diag(lu[0]))) == 0:
                raise linalg.LinAlgError("singular bordered Jacobian")
            delta = linalg.lu_solve(lu, rhs)
        except (linalg.LinAlgError, ValueError):
            logger.warning(f"Newton refinement skipped at z={z:.6g}: singular Jacobian")
            return EigenPair(pair.z, pair.right_vec, pair.residual, pair.left_vec, "skipped")

        phi = phi + delta[:n]
        z = z + delta[n]
        candidate = EigenPair(z, phi, relative_residual(F, z, phi), pair.left_vec, "newton")
        if not np.isfinite(candidate.residual) or candidate.residual >= best.residual:
            break
        best = candidate
        if best.residual <= tol:
            break

    if best.residual >= pair.residual:
        return EigenPair(pair.z, pair.right_vec, pair.residual, pair.left_vec, "skipped")
    return EigenPair(best.z, best.right_vec, best.residual, pair.left_vec, "newton")
