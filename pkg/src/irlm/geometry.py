"""Convex-geometry toolkit: column-span factorization, minimum-volume
enclosing ellipsoids of symmetric hulls, contact points, L1 lower constants
over contact sets, frame completion, and maxvol basis selection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import nnls

from . import rng
from .errors import (
    DegenerateSpanError,
    NonconvergenceError,
    ParameterError,
    RankDeficiencyError,
    SizeCapError,
)
from .matrices import FactoredMatrix


# ---------------------------------------------------------------------------
# rank factorization


@dataclass(frozen=True)
class Subspace:
    """Orthonormal frame for the column span plus coordinates of the columns."""

    ambient_dim: int
    dim: int
    basis: np.ndarray  # ambient_dim x dim, orthonormal columns
    coords: np.ndarray  # dim x ambient_dim, basis @ coords reconstructs


def rank_factorize(a: FactoredMatrix, tol: float) -> Subspace:
    """Split A into an orthonormal basis of its column span and coordinates.

    The dimension is the numerical rank at relative tolerance tol, computed
    on the factor core so only thin decompositions are needed.
    """
    if not 0 < tol < 1:
        raise ParameterError(f"tol must be in (0, 1), got {tol}")
    q, r_l = np.linalg.qr(a.left)
    core = r_l @ a.right
    u, s, vt = np.linalg.svd(core, full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        dim = 0
    else:
        dim = int(np.count_nonzero(s > tol * s[0]))
    basis = q @ u[:, :dim]
    coords = s[:dim, None] * vt[:dim]
    return Subspace(a.n_dim, dim, basis, coords)


# ---------------------------------------------------------------------------
# ellipsoids


@dataclass(frozen=True)
class Ellipsoid:
    """Origin-centered ellipsoid {x : x' M x <= 1} with M positive definite."""

    dim: int
    shape: np.ndarray
    log_det: float

    def norm(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return float(np.sqrt(max(x @ self.shape @ x, 0.0)))
        return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", x, self.shape, x), 0.0))

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.asarray(a) @ self.shape @ np.asarray(b))


@dataclass(frozen=True)
class ContactSet:
    """Input points on the ellipsoid boundary, with certificate weights.

    weights sum to the dimension and sum(w * (M^(1/2) p)(M^(1/2) p)') should
    be the identity; residual is the Frobenius defect of that identity.
    """

    indices: np.ndarray  # indices into the point list
    signs: np.ndarray  # orientation of the stored representative, +-1
    weights: np.ndarray
    residual: float

    def __len__(self) -> int:
        return int(self.indices.size)


def _design_leverages(points: np.ndarray, inv_u: np.ndarray) -> np.ndarray:
    return np.einsum("ij,jk,ik->i", points, inv_u, points)


def mvee(
    points: np.ndarray | Sequence[np.ndarray],
    tol: float = 1e-7,
    max_iter: int = 200_000,
) -> tuple[Ellipsoid, ContactSet]:
    """Minimum-volume origin-centered ellipsoid of conv(+-p_1, ..., +-p_m).

    Frank-Wolfe with away steps on the log-det design problem: maximize
    log det sum(u_j p_j p_j') over the simplex, with shape M = (n U)^(-1).
    Stops when every leverage is below n(1+tol) and every support leverage
    is above n(1-tol); contact points are those with p' M p >= 1 - 2 tol.
    """
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    m, n = p.shape
    if not 0 < tol < 0.1:
        raise ParameterError(f"tol must be in (0, 0.1), got {tol}")
    if m < n:
        raise DegenerateSpanError(f"{m} points cannot span dimension {n}")
    u = np.full(m, 1.0 / m)
    u_mat = (p * u[:, None]).T @ p
    try:
        inv_u = np.linalg.inv(u_mat)
        if not np.all(np.isfinite(inv_u)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        raise DegenerateSpanError("points do not span the ambient dimension") from None
    g = _design_leverages(p, inv_u)
    refresh = 0
    for _ in range(max_iter):
        j_add = int(np.argmax(g))
        add_gap = g[j_add] / n - 1.0
        support = u > 0
        sup_idx = np.flatnonzero(support)
        j_away = int(sup_idx[np.argmin(g[sup_idx])])
        away_gap = 1.0 - g[j_away] / n
        if add_gap <= tol and away_gap <= tol:
            break
        if add_gap >= away_gap:
            j = j_add
            gj = g[j]
            theta = (gj / n - 1.0) / (gj - 1.0)
        else:
            j = j_away
            gj = g[j]
            theta_floor = -u[j] / (1.0 - u[j]) if u[j] < 1.0 else 0.0
            if gj <= 1.0 + 1e-14:
                theta = theta_floor
            else:
                theta = max((gj / n - 1.0) / (gj - 1.0), theta_floor)
        if theta == 0.0:
            break
        # Sherman-Morrison update of U^(-1) and all leverages.
        w = inv_u @ p[j]
        h = p @ w
        ratio = theta / (1.0 - theta)
        c = ratio / (1.0 + ratio * g[j])
        inv_u = (inv_u - c * np.outer(w, w)) / (1.0 - theta)
        g = (g - c * h * h) / (1.0 - theta)
        u *= 1.0 - theta
        u[j] += theta
        if theta < 0 and u[j] < 1e-17:
            u[j] = 0.0
        u = np.maximum(u, 0.0)
        refresh += 1
        if refresh % 500 == 0:
            u /= u.sum()
            u_mat = (p * u[:, None]).T @ p
            inv_u = np.linalg.inv(u_mat)
            g = _design_leverages(p, inv_u)
    else:
        gap = max(float(np.max(g)) / n - 1.0, 0.0)
        raise NonconvergenceError(
            f"ellipsoid solver hit {max_iter} iterations at gap {gap:.3e}", gap=gap
        )
    u = np.maximum(u, 0.0)
    u /= u.sum()
    u_mat = (p * u[:, None]).T @ p
    inv_u = np.linalg.inv(u_mat)
    shape = inv_u / n
    shape = (shape + shape.T) / 2.0
    sign, log_det = np.linalg.slogdet(shape)
    if sign <= 0:
        raise DegenerateSpanError("ellipsoid shape matrix is not positive definite")
    ell = Ellipsoid(n, shape, float(log_det))
    g = _design_leverages(p, inv_u)
    members = np.flatnonzero(g / n >= 1.0 - 2.0 * tol)
    weights = n * u[members]
    residual = _john_residual(p[members], weights, ell)
    contacts = ContactSet(
        indices=members,
        signs=np.ones(members.size, dtype=np.int64),
        weights=weights,
        residual=residual,
    )
    return ell, contacts


def _sqrt_pd(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    vals = np.maximum(vals, 0.0)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _john_residual(points: np.ndarray, weights: np.ndarray, ell: Ellipsoid) -> float:
    root = _sqrt_pd(ell.shape)
    v = points @ root
    total = (v * weights[:, None]).T @ v if len(points) else np.zeros((ell.dim, ell.dim))
    return float(np.linalg.norm(total - np.eye(ell.dim)))


def contact_points(ell: Ellipsoid, points: np.ndarray, tol: float) -> ContactSet:
    """Points whose D-norm is within tol of 1, antipodal duplicates collapsed,
    with nonnegative-least-squares certificate weights."""
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    norms = ell.norm(p)
    candidates = np.flatnonzero((norms >= 1.0 - tol) & (norms <= 1.0 + tol))
    kept: list[int] = []
    signs: list[int] = []
    for j in candidates:
        duplicate = False
        for i in kept:
            # collapse exact or antipodal duplicates to one representative
            if np.allclose(p[j], p[i], atol=1e-12) or np.allclose(p[j], -p[i], atol=1e-12):
                duplicate = True
                break
        if not duplicate:
            kept.append(int(j))
            signs.append(1)
    kept_arr = np.array(kept, dtype=np.intp)
    if kept_arr.size == 0:
        return ContactSet(
            indices=kept_arr,
            signs=np.zeros(0, dtype=np.int64),
            weights=np.zeros(0),
            residual=float(np.sqrt(ell.dim)),
        )
    root = _sqrt_pd(ell.shape)
    v = p[kept_arr] @ root
    design = np.stack([np.outer(row, row).ravel() for row in v], axis=1)
    target = np.eye(ell.dim).ravel()
    weights, rnorm = nnls(design, target)
    return ContactSet(
        indices=kept_arr,
        signs=np.array(signs, dtype=np.int64),
        weights=weights,
        residual=float(rnorm),
    )


# ---------------------------------------------------------------------------
# L1 lower constant over a contact set


class L1LowerBound(NamedTuple):
    value: float
    normalized: float  # value * sqrt(dim)
    certified: bool
    facets_examined: int


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(v - theta, 0.0)


def _kkt_residual(q_mat: np.ndarray, r: np.ndarray) -> float:
    grad = 2.0 * q_mat @ r
    return float(np.max(np.abs(r - _project_simplex(r - grad))))


def _pg_simplex_qp(q_mat: np.ndarray, r: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Projected gradient with exact quadratic line search and Armijo guard."""
    lip = 2.0 * float(np.linalg.norm(q_mat, 2)) + 1e-30
    step = 1.0 / lip
    val = float(r @ q_mat @ r)
    for _ in range(max_iter):
        grad = 2.0 * q_mat @ r
        trial = _project_simplex(r - step * grad)
        d = trial - r
        if np.max(np.abs(d)) < 1e-18:
            break
        qd = q_mat @ d
        denom = 2.0 * float(d @ qd)
        t = 1.0 if denom <= 0 else min(1.0, max(0.0, -float(grad @ d) / denom))
        cand = r + t * d
        cand_val = float(cand @ q_mat @ cand)
        # Armijo fallback: halve the move until it does not increase.
        shrink = 0
        while cand_val > val + 1e-18 and shrink < 60:
            t *= 0.5
            cand = r + t * d
            cand_val = float(cand @ q_mat @ cand)
            shrink += 1
        r, val = cand, cand_val
        if _kkt_residual(q_mat, r) <= tol:
            break
    return r


def _solve_facet_qp(q_mat: np.ndarray, kkt_tol: float = 1e-9) -> tuple[np.ndarray, float, float]:
    """Minimize r' Q r over the probability simplex.

    Primary path is an active-set method on the equality KKT system; if it
    cycles, a projected-gradient pass finishes the job.  Returns the point,
    the value, and the KKT residual.
    """
    k = q_mat.shape[0]
    if k == 1:
        return np.ones(1), float(q_mat[0, 0]), 0.0
    support = np.ones(k, dtype=bool)
    best: tuple[np.ndarray, float] | None = None
    for _ in range(3 * k + 60):
        idx = np.flatnonzero(support)
        ks = idx.size
        kkt = np.zeros((ks + 1, ks + 1))
        kkt[:ks, :ks] = 2.0 * q_mat[np.ix_(idx, idx)]
        kkt[:ks, ks] = 1.0
        kkt[ks, :ks] = 1.0
        rhs = np.zeros(ks + 1)
        rhs[ks] = 1.0
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        r_s = sol[:ks]
        if np.min(r_s) < -1e-13:
            drop = idx[int(np.argmin(r_s))]
            support[drop] = False
            if not support.any():
                break
            continue
        r = np.zeros(k)
        r[idx] = np.maximum(r_s, 0.0)
        total = r.sum()
        if total <= 0:
            break
        r /= total
        grad = 2.0 * q_mat @ r
        nu = float(grad @ r)
        off = np.flatnonzero(~support)
        if off.size:
            viol = nu - grad[off]
            j = int(np.argmax(viol))
            if viol[j] > 1e-12:
                support[off[j]] = True
                continue
        best = (r, float(r @ q_mat @ r))
        break
    if best is None:
        r = _pg_simplex_qp(q_mat, np.full(k, 1.0 / k), kkt_tol, 100_000)
        best = (r, float(r @ q_mat @ r))
    r, val = best
    res = _kkt_residual(q_mat, r)
    if res > kkt_tol:
        r = _pg_simplex_qp(q_mat, r, kkt_tol, 100_000)
        val = float(r @ q_mat @ r)
        res = _kkt_residual(q_mat, r)
    return r, val, res


def _facet_value(gram: np.ndarray, s: np.ndarray) -> tuple[float, np.ndarray]:
    q_mat = gram * np.outer(s, s)
    r, val, _ = _solve_facet_qp(q_mat)
    return val, r


def _polish_patterns(gram: np.ndarray, s: np.ndarray, val: float, r: np.ndarray, cap: int = 100):
    """Descend across adjacent sign facets through coordinates at zero."""
    k = s.size
    for _ in range(cap):
        zero = np.flatnonzero(r <= 1e-12)
        improved = False
        for i in zero:
            s2 = s.copy()
            s2[i] = -s2[i]
            v2, r2 = _facet_value(gram, s2)
            if v2 < val - 1e-15:
                s, val, r = s2, v2, r2
                improved = True
                break
        if not improved:
            break
    return val, s, r


def l1_lower_constant(
    contacts: np.ndarray,
    ell: Ellipsoid,
    method: str = "exact",
    n_samples: int = 64,
    seed: int = 0,
    extra_patterns: np.ndarray | None = None,
) -> L1LowerBound:
    """Smallest D-norm of a combination of the contact vectors with unit
    L1 coefficient norm: min |sum t_m x_m|_D over ||t||_1 = 1.

    The exact method enumerates all sign-pattern facets of the L1 sphere
    (up to antipodal symmetry, so 2^(k-1) quadratic programs) and is capped
    at k <= 20.  The sampled method minimizes over a pattern subset (always
    including the all-plus facet, caller-provided patterns, and seeded
    random ones) followed by adjacent-facet descent; its result is an upper
    estimate of the true minimum and is flagged as not certified.
    """
    x = np.atleast_2d(np.asarray(contacts, dtype=np.float64))
    k = x.shape[0]
    if k < 1:
        raise ParameterError("need at least one contact vector")
    gram = x @ ell.shape @ x.T
    gram = (gram + gram.T) / 2.0
    sqrt_dim = math.sqrt(ell.dim)
    if method == "exact":
        if k > 20:
            raise SizeCapError(f"exact facet enumeration capped at k <= 20, got k={k}")
        best = math.inf
        count = 0
        for code in range(1 << (k - 1)):
            s = np.ones(k)
            for bit in range(k - 1):
                if code >> bit & 1:
                    s[bit + 1] = -1.0
            val, _ = _facet_value(gram, s)
            best = min(best, val)
            count += 1
        mu = math.sqrt(max(best, 0.0))
        return L1LowerBound(mu, mu * sqrt_dim, True, count)
    if method != "sampled":
        raise ParameterError(f"method must be 'exact' or 'sampled', got {method!r}")
    patterns = [np.ones(k)]
    if extra_patterns is not None:
        for row in np.atleast_2d(np.asarray(extra_patterns, dtype=np.float64)):
            s = np.where(row < 0, -1.0, 1.0)
            patterns.append(s)
    stream = rng.SplitMix64(rng.derive_key(seed, k))
    for _ in range(max(0, n_samples - len(patterns))):
        patterns.append(stream.next_signs(k))
    seen: set[bytes] = set()
    best = math.inf
    best_s = patterns[0]
    best_r = np.full(k, 1.0 / k)
    count = 0
    for s in patterns:
        if s[0] < 0:
            s = -s  # antipodal facets are equivalent
        key = s.tobytes()
        if key in seen:
            continue
        seen.add(key)
        val, r = _facet_value(gram, s)
        count += 1
        if val < best:
            best, best_s, best_r = val, s, r
    best, _, _ = _polish_patterns(gram, best_s, best, best_r)
    mu = math.sqrt(max(best, 0.0))
    return L1LowerBound(mu, mu * sqrt_dim, False, count)


# ---------------------------------------------------------------------------
# contact subset selection and frame completion


def _independent_prefix(
    vectors: np.ndarray, ell: Ellipsoid, det_floor: float
) -> list[int]:
    """Greedy maximal subset, in input order, whose D-Gram determinant stays
    above det_floor."""
    kept: list[int] = []
    basis: list[np.ndarray] = []  # D-orthonormalized kept vectors
    log_det = 0.0
    for j, v in enumerate(vectors):
        w = v.copy()
        for b in basis:
            w = w - ell.inner(b, v) * b
        res_sq = max(ell.inner(w, w), 0.0)
        if res_sq <= 1e-14:
            continue
        if log_det + math.log(res_sq) <= math.log(det_floor):
            continue
        kept.append(j)
        log_det += math.log(res_sq)
        basis.append(w / math.sqrt(res_sq))
    return kept


def select_contact_subset(
    contacts: np.ndarray,
    ell: Ellipsoid,
    target_k: int,
    det_floor: float = 1e-12,
    selection_samples: int = 4,
    seed: int = 0,
) -> np.ndarray:
    """Drop-one greedy subset of the contacts maximizing the L1 lower constant.

    First enforces linear independence (D-Gram determinant above det_floor,
    which also collapses antipodal duplicates), then repeatedly removes the
    vector whose removal maximizes the sampled L1 lower constant of the
    remainder, until target_k vectors are left.
    """
    x = np.atleast_2d(np.asarray(contacts, dtype=np.float64))
    if target_k < 1:
        raise ParameterError(f"target_k must be >= 1, got {target_k}")
    if target_k > x.shape[0]:
        raise ParameterError(f"target_k={target_k} exceeds {x.shape[0]} contacts")
    current = _independent_prefix(x, ell, det_floor)
    if len(current) < target_k:
        raise RankDeficiencyError(
            f"only {len(current)} independent contacts, need {target_k}"
        )
    while len(current) > target_k:
        best_mu = -math.inf
        best_pos = 0
        for pos in range(len(current)):
            cand = current[:pos] + current[pos + 1 :]
            mu = l1_lower_constant(
                x[cand], ell, method="sampled", n_samples=selection_samples, seed=seed
            ).value
            if mu > best_mu + 1e-15:
                best_mu = mu
                best_pos = pos
        current = current[:best_pos] + current[best_pos + 1 :]
    return np.array(current, dtype=np.intp)


@dataclass(frozen=True)
class Frame:
    """Contact vectors plus a D-orthonormal complement spanning the space."""

    contacts: np.ndarray  # k x n
    complement: np.ndarray  # (n - k) x n, D-orthonormal, D-orthogonal to contacts
    ellipsoid: Ellipsoid


def complete_frame(subset: np.ndarray, ell: Ellipsoid, subspace: Subspace | None = None) -> Frame:
    """Extend independent contact vectors to a basis by adjoining vectors
    D-orthogonal to their span, D-orthonormalized."""
    x = np.atleast_2d(np.asarray(subset, dtype=np.float64))
    if x.shape[0] == 0:
        x = x.reshape(0, ell.dim)
    n = ell.dim
    if subspace is not None and subspace.dim != n:
        raise ParameterError(f"subspace dim {subspace.dim} != ellipsoid dim {n}")
    k = x.shape[0]
    if k > n:
        raise RankDeficiencyError(f"{k} contacts cannot be independent in dimension {n}")
    if k == n:
        comp = np.zeros((0, n))
    else:
        if k == 0:
            null = np.eye(n)
        else:
            _, s, vt = np.linalg.svd(x @ ell.shape, full_matrices=True)
            if s.size and s[-1] <= 1e-12 * s[0]:
                raise RankDeficiencyError("contact vectors are not independent")
            null = vt[k:].T  # n x (n - k), D-orthogonal to every contact
        gram = null.T @ ell.shape @ null
        chol = np.linalg.cholesky((gram + gram.T) / 2.0)
        comp = np.linalg.solve(chol, null.T)  # rows are D-orthonormal
    return Frame(contacts=x, complement=comp, ellipsoid=ell)


def expand_coefficients(columns: np.ndarray, frame: Frame) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (t, s) with column = contacts' t + complement' s.

    The complement part is read off exactly as D-inner products; the contact
    part solves the remaining system by least squares.
    """
    v = np.atleast_2d(np.asarray(columns, dtype=np.float64))
    if v.shape[0] != frame.ellipsoid.dim:
        v = v.T
    m_shape = frame.ellipsoid.shape
    y = frame.complement
    s = y @ m_shape @ v if y.shape[0] else np.zeros((0, v.shape[1]))
    residual = v - (y.T @ s if y.shape[0] else 0.0)
    if frame.contacts.shape[0]:
        t, *_ = np.linalg.lstsq(frame.contacts.T, residual, rcond=None)
    else:
        t = np.zeros((0, v.shape[1]))
    return t, s


# ---------------------------------------------------------------------------
# maxvol basis


class AuerbachBasis(NamedTuple):
    indices: np.ndarray
    signs: np.ndarray
    coefficient_bound: float
    swaps: int


def _complete_pivot_init(points: np.ndarray) -> list[int]:
    """Gaussian-elimination complete pivoting over the point matrix; the
    pivot columns index an independent, large-volume starting basis."""
    work = points.T.copy()  # n x m, variables x points
    n, m = work.shape
    scale = float(np.abs(work).max()) or 1.0
    row_free = np.ones(n, dtype=bool)
    col_free = np.ones(m, dtype=bool)
    selected: list[int] = []
    for _ in range(n):
        sub = np.abs(work[np.ix_(row_free, col_free)])
        if sub.size == 0 or sub.max() <= 1e-12 * scale:
            raise RankDeficiencyError("points do not span the ambient dimension")
        rows = np.flatnonzero(row_free)
        cols = np.flatnonzero(col_free)
        ri, ci = np.unravel_index(int(np.argmax(sub)), sub.shape)
        r, c = int(rows[ri]), int(cols[ci])
        selected.append(c)
        pivot = work[r, c]
        for j in np.flatnonzero(col_free):
            if j == c:
                continue
            factor = work[r, j] / pivot
            work[:, j] -= factor * work[:, c]
        row_free[r] = False
        col_free[c] = False
    return selected


def auerbach_basis(
    points: np.ndarray,
    delta: float = 0.01,
    max_swaps: int = 10_000,
) -> AuerbachBasis:
    """Select n points whose determinant is locally maximal so every input
    point expands over them with coefficients bounded by 1 + delta.

    Greedy complete-pivoting initialization followed by swap ascent: any
    selected/unselected swap improving |det| by a factor above 1 + delta is
    taken (each swap multiplies |det| by the corresponding expansion
    coefficient).  On termination the largest coefficient magnitude is at
    most 1 + delta, which is returned as the achieved bound.
    """
    if not 0 < delta <= 0.5:
        raise ParameterError(f"delta must be in (0, 0.5], got {delta}")
    p = np.atleast_2d(np.asarray(points, dtype=np.float64))
    m, n = p.shape
    if m < n:
        raise RankDeficiencyError(f"{m} points cannot span dimension {n}")
    selected = _complete_pivot_init(p)
    swaps = 0
    for _ in range(max_swaps):
        basis = p[selected]
        coeff = np.linalg.solve(basis.T, p.T).T  # p = coeff @ basis
        flat = int(np.argmax(np.abs(coeff)))
        i, j = np.unravel_index(flat, coeff.shape)
        if abs(coeff[i, j]) <= 1.0 + delta:
            return AuerbachBasis(
                indices=np.array(selected, dtype=np.intp),
                signs=np.ones(n, dtype=np.int64),
                coefficient_bound=float(np.max(np.abs(coeff))),
                swaps=swaps,
            )
        selected[j] = int(i)
        swaps += 1
    raise NonconvergenceError(f"maxvol swap ascent hit {max_swaps} swaps")
