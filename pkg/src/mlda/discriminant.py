"""Fisher objectives and their optimizers under orthogonality constraints.

Four classical objectives are evaluated for a projection W given a between-
scatter Sb and within-scatter Sw:

* trace ratio      J_TR = tr(W^T Sb W) / tr(W^T Sw W)
* ratio trace      J_RT = tr((W^T Sw W)^{-1} W^T Sb W)
* determinant ratio J_DR = det(W^T Sb W) / det(W^T Sw W)
* trace difference  J_TD = tr(W^T Sb W) - tr(W^T Sw W)

Under total-scatter orthogonality (W^T St_ml W = I_r) all four are maximized
by the same whitened eigenvector frame; under the Stiefel constraint
(W^T W = I_r) they genuinely diverge, and the divergence is driven by the
cardinality excess R = St_ml - St and by non-commutativity of Sb with St.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidGap, InvalidInput, NotConverged, SingularTotalScatter
from .spectral import (
    Frame,
    numeric_rank,
    principal_angle_sin,
    sym_eig,
    symmetrize,
)

# Log-space floor under which a determinant counts as vanished.
DET_FLOOR_LOG = np.log(1e-300)
# Absolute eigenvalue-tie threshold for flagging a degenerate cut.
GAP_TIE_TOL = 1e-12


# ---------------------------------------------------------------------------
# objective evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectiveValues:
    """The four Fisher objective values at one projection.

    ``within_singular`` is set when W^T Sw W is numerically singular; the
    ratio-type objectives are then reported as +inf rather than raising.
    ``dr_flagged`` is set when the determinant ratio's denominator falls
    below the log-space floor (the value is unreliable); a vanishing
    numerator is a legitimate J_DR = 0 and is not flagged.
    """

    j_tr: float
    j_rt: float
    j_dr: float
    j_td: float
    within_singular: bool
    dr_flagged: bool


def _projected(W, S):
    W = np.asarray(W, dtype=float)
    return symmetrize(W.T @ S @ W)


def eval_objectives(W, Sb, Sw):
    """Evaluate all four Fisher objectives at a projection W.

    W need not be orthonormal (total-scatter-orthogonal frames are not).
    Singularity of the projected within-scatter is reported through flags,
    never exceptions. The determinant ratio is computed in log space.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise InvalidInput(f"W must be 2-D, got shape {W.shape}")
    Wb = _projected(W, Sb)
    Ww = _projected(W, Sw)
    r = W.shape[1]
    tb = float(np.trace(Wb))
    tw = float(np.trace(Ww))
    j_td = tb - tw

    within_singular = numeric_rank(Ww) < r if np.abs(Ww).max() > 0 else True
    if within_singular:
        j_tr = np.inf if tw <= 0 else tb / tw
        j_rt = np.inf
    else:
        j_tr = tb / tw
        j_rt = float(np.trace(np.linalg.solve(Ww, Wb)))

    sign_b, log_b = np.linalg.slogdet(Wb)
    sign_w, log_w = np.linalg.slogdet(Ww)
    dr_flagged = bool(sign_w <= 0 or log_w <= DET_FLOOR_LOG)
    if dr_flagged:
        j_dr = np.inf
    elif sign_b <= 0 or log_b <= DET_FLOOR_LOG:
        j_dr = 0.0
    else:
        j_dr = float(np.exp(log_b - log_w))
    return ObjectiveValues(
        j_tr=float(j_tr), j_rt=float(j_rt), j_dr=float(j_dr), j_td=float(j_td),
        within_singular=bool(within_singular), dr_flagged=dr_flagged,
    )


def theta_form(theta):
    """Closed-form objective values from generalized eigenvalues theta.

    For a frame with W^T St_ml W = I_r whose projected between-scatter has
    eigenvalues theta (each in [0, 1)), the objectives depend on theta only.
    Returns a dict with keys j_tr, j_rt, j_dr, j_td.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.size == 0 or theta.min() < 0 or theta.max() >= 1:
        raise InvalidInput(f"theta must lie in [0, 1), got {theta}")
    r = theta.size
    s = theta.sum()
    return {
        "j_tr": s / (r - s),
        "j_rt": float((theta / (1.0 - theta)).sum()),
        "j_dr": float(np.prod(theta / (1.0 - theta))),
        "j_td": 2.0 * s - r,
    }


# ---------------------------------------------------------------------------
# optimizers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenspaceResult:
    """Top-r eigenspace of a symmetric objective matrix.

    ``gap`` is the eigenvalue gap at the cut; ``degenerate_gap`` flags a tie
    within GAP_TIE_TOL (the frame is still returned, chosen deterministically
    by the eigendecomposition's sign and ordering conventions).
    """

    frame: Frame
    values: np.ndarray
    gap: float
    degenerate_gap: bool


def top_eigenspace(C, r):
    """Deterministic top-r eigenspace of a symmetric matrix."""
    ep = sym_eig(C)
    d = ep.values.size
    if not 1 <= r <= d:
        raise InvalidInput(f"need 1 <= r <= d={d}, got r={r}")
    gap = float(ep.values[r - 1] - ep.values[r]) if r < d else np.inf
    return EigenspaceResult(
        frame=ep.top(r),
        values=ep.values,
        gap=gap,
        degenerate_gap=bool(gap <= GAP_TIE_TOL),
    )


def opt_td(ss, r):
    """Stiefel maximizer of the trace difference: top-r of 2 Sb - St_ml."""
    return top_eigenspace(2.0 * ss.Sb - ss.St_ml, r)


@dataclass(frozen=True)
class WhitenedFrame:
    """Total-scatter-orthogonal optimizer (columns are NOT orthonormal).

    Satisfies columns^T (St + gamma I) columns = I_r. ``gen_values`` are the
    generalized eigenvalues of (Sb, St + gamma I) in descending order; the
    leading r of them are the projected between-scatter spectrum theta.
    """

    columns: np.ndarray
    gen_values: np.ndarray
    r: int
    gamma: float

    @property
    def theta(self):
        return self.gen_values[: self.r]


def opt_stml(Sb, St_total, r, gamma=0.0):
    """Common maximizer of all four objectives under W^T St W = I_r.

    Parameters
    ----------
    Sb, St_total : (d, d) array_like
        Between-scatter and (cardinality-weighted) total scatter.
    r : int
    gamma : float
        Optional ridge added to St_total before whitening.

    Raises
    ------
    SingularTotalScatter
        If St_total + gamma I is numerically singular.
    """
    if gamma < 0:
        raise InvalidInput(f"gamma must be >= 0, got {gamma}")
    Sb = symmetrize(Sb)
    St = symmetrize(St_total)
    d = St.shape[0]
    if not 1 <= r <= d:
        raise InvalidInput(f"need 1 <= r <= d={d}, got r={r}")
    St_g = St + gamma * np.eye(d)
    ep = sym_eig(St_g)
    if ep.values[0] <= 0 or ep.values[-1] <= 1e-12 * ep.values[0]:
        raise SingularTotalScatter(
            f"total scatter is numerically singular at gamma={gamma} "
            f"(eigenvalues in [{ep.values[-1]:.3e}, {ep.values[0]:.3e}])"
        )
    T_isqrt = (ep.vectors / np.sqrt(ep.values)) @ ep.vectors.T
    P = symmetrize(T_isqrt @ Sb @ T_isqrt)
    epP = sym_eig(P)
    W = T_isqrt @ epP.vectors[:, :r]
    defect = np.linalg.norm(W.T @ St_g @ W - np.eye(r))
    if defect > 1e-8:
        raise ArithmeticError(f"whitened frame lost St-orthogonality ({defect:.3e})")
    return WhitenedFrame(columns=W, gen_values=epP.values, r=r, gamma=float(gamma))


@dataclass(frozen=True)
class TraceRatioResult:
    """Fixed point of the trace-ratio iteration on the Stiefel manifold.

    ``residual`` is the stationarity defect |sum of the top-r eigenvalues of
    (Sb - lambda_star Sw)| evaluated on Frobenius-normalized inputs, so the
    1e-10 scale is meaningful regardless of the data's magnitude.
    """

    frame: Frame
    lambda_star: float
    iterations: int
    residual: float


def trace_ratio_stiefel(Sb, Sw, r, tol=1e-10, max_iter=500):
    """Maximize tr(W^T Sb W)/tr(W^T Sw W) over Stiefel frames.

    Classic alternating scheme: given lambda, W maximizes the trace of
    W^T (Sb - lambda Sw) W (a top-r eigenspace); given W, lambda is the
    objective value. The lambda sequence is non-decreasing and converges to
    the unique root of f(lambda) = sum of top-r eigenvalues of
    (Sb - lambda Sw).

    Raises
    ------
    NotConverged
        If max_iter is exceeded; the last iterate rides along on the error.
    """
    Sb = symmetrize(Sb)
    Sw = symmetrize(Sw)
    d = Sb.shape[0]
    if Sw.shape != Sb.shape:
        raise InvalidInput(f"shape mismatch: Sb {Sb.shape} vs Sw {Sw.shape}")
    if not 1 <= r <= d:
        raise InvalidInput(f"need 1 <= r <= d={d}, got r={r}")
    if max_iter < 1:
        raise InvalidInput(f"max_iter must be >= 1, got {max_iter}")
    scale = max(np.linalg.norm(Sb), np.linalg.norm(Sw))
    if scale <= 0:
        raise InvalidInput("both scatters vanish")
    Sb_n, Sw_n = Sb / scale, Sw / scale

    W = sym_eig(Sb_n).vectors[:, :r]
    lam = -np.inf
    for it in range(1, max_iter + 1):
        tb = float(np.trace(W.T @ Sb_n @ W))
        tw = float(np.trace(W.T @ Sw_n @ W))
        if tw <= 1e-300:
            raise InvalidInput(
                "within-scatter vanishes on the iterate span; trace ratio unbounded"
            )
        lam_new = tb / tw
        if lam_new < lam - 1e-10 * max(1.0, abs(lam)):
            raise ArithmeticError(
                f"trace-ratio iteration decreased: {lam!r} -> {lam_new!r}"
            )
        ep = sym_eig(Sb_n - lam_new * Sw_n)
        W = ep.vectors[:, :r]
        residual = abs(float(ep.values[:r].sum()))
        converged = lam > -np.inf and abs(lam_new - lam) <= tol and residual <= 1e-10
        lam = lam_new
        if converged:
            return TraceRatioResult(
                frame=Frame(W), lambda_star=lam, iterations=it, residual=residual,
            )
    raise NotConverged(
        f"trace-ratio iteration did not converge in {max_iter} steps",
        result=TraceRatioResult(
            frame=Frame(W), lambda_star=lam, iterations=max_iter, residual=residual,
        ),
    )


# ---------------------------------------------------------------------------
# divergence diagnostics
# ---------------------------------------------------------------------------


def commutativity_defect(Sb, St):
    """Normalized commutator size ||Sb St - St Sb||_F / (||Sb||_F ||St||_F).

    Zero iff the two matrices share an eigenbasis; invariant under separate
    positive rescaling of either matrix.
    """
    Sb = symmetrize(Sb)
    St = symmetrize(St)
    denom = np.linalg.norm(Sb) * np.linalg.norm(St)
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(Sb @ St - St @ Sb) / denom)


def ordering_consistent(Sb, St, defect_tol=1e-12):
    """For commuting scatters: do their eigenvalue orderings agree?

    Returns None when the matrices do not commute (within ``defect_tol`` of
    normalized defect); otherwise True/False for whether sorting the shared
    eigenbasis by St eigenvalues descending also sorts the Sb eigenvalues
    descending. Ties are reported as consistent.
    """
    if commutativity_defect(Sb, St) > defect_tol:
        return None
    ep = sym_eig(symmetrize(St))
    diag_b = np.einsum("ij,jk,ki->i", ep.vectors.T, symmetrize(Sb), ep.vectors)
    tol = 1e-10 * max(1.0, np.abs(diag_b).max())
    return bool(np.all(np.diff(diag_b) <= tol))


@dataclass(frozen=True)
class DavisKahanReport:
    angle: float
    bound: float
    holds: bool


def davis_kahan_check(U_hat, U_ref, pert_norm, gap):
    """Check a sin-theta perturbation bound: angle <= pert_norm / gap.

    ``holds`` is vacuously true when the bound exceeds one (the sine of any
    angle is at most one).
    """
    if gap <= 0:
        raise InvalidGap(f"need a positive gap, got {gap}")
    if pert_norm < 0:
        raise InvalidInput(f"perturbation norm must be >= 0, got {pert_norm}")
    angle = principal_angle_sin(U_hat, U_ref)
    bound = pert_norm / gap
    holds = bool(angle <= bound * (1 + 1e-8) or bound >= 1.0)
    return DavisKahanReport(angle=angle, bound=float(bound), holds=holds)


# ---------------------------------------------------------------------------
# ridge regularization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularizationRow:
    """Effect of one ridge level gamma on the discriminant structure."""

    gamma: float
    rank_sb: int
    kappa_sw_gamma: float
    kappa_infinite: bool
    gap_td: float


def regularization_report(ss, gammas, r):
    """Ridge sweep: rank of Sb, condition of Sw + gamma I, TD gap at r.

    The between-scatter rank never depends on gamma; the trace-difference
    matrix merely shifts by -gamma I, so its gap at any cut is unchanged
    (each row recomputes it from a fresh eigendecomposition as a check); the
    condition number strictly improves as gamma grows (unless Sw is already
    a multiple of the identity).
    """
    gammas = list(gammas)
    if not gammas:
        raise InvalidInput("need at least one gamma")
    if any(g < 0 for g in gammas):
        raise InvalidInput(f"gammas must be >= 0: {gammas}")
    if any(b <= a for a, b in zip(gammas, gammas[1:])):
        raise InvalidInput(f"gammas must be strictly increasing: {gammas}")
    rank_sb = numeric_rank(ss.Sb)
    sw_vals = np.linalg.eigvalsh(ss.Sw)
    lam_min, lam_max = float(sw_vals[0]), float(sw_vals[-1])
    C = 2.0 * ss.Sb - ss.St_ml
    d = C.shape[0]
    if not 1 <= r < d:
        raise InvalidInput(f"need 1 <= r < d={d}, got r={r}")
    rows = []
    for gamma in gammas:
        gamma = float(gamma)
        top, bot = lam_max + gamma, lam_min + gamma
        infinite = bot <= 1e-12 * max(top, 1e-300)
        kappa = np.inf if infinite else top / bot
        vals = sym_eig(C - gamma * np.eye(d)).values
        rows.append(
            RegularizationRow(
                gamma=gamma,
                rank_sb=rank_sb,
                kappa_sw_gamma=float(kappa),
                kappa_infinite=bool(infinite),
                gap_td=float(vals[r - 1] - vals[r]),
            )
        )
    finite = [row.kappa_sw_gamma for row in rows if not row.kappa_infinite]
    isotropic = (lam_max - lam_min) <= 1e-12 * max(lam_max, 1e-300)
    if not isotropic:
        for a, b in zip(finite, finite[1:]):
            if not b < a:
                raise ArithmeticError(
                    f"condition number failed to decrease: {a!r} -> {b!r}"
                )
    return rows
