"""Multilabel scatter algebra on finite samples.

A sample can carry several labels at once, so the class-indicator matrix Y has
row sums k_i >= 1 and the within/between scatters count each sample once per
label it carries. The central algebraic facts wired into this module:

* between + within = cardinality-weighted total:
  Sb + Sw = sum_i k_i (x_i - mu)(x_i - mu)^T,
* Sb factorizes as M M^T with M = Xc^T Y D_n^{-1/2},
* the excess R = St_ml - St = sum_i (k_i - 1)(x_i - mu)(x_i - mu)^T is PSD.

Construction cross-checks both routes and fails loudly on disagreement.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, MissingLabel, UnlabeledSample
from .spectral import numeric_rank, symmetrize

# Relative tolerance for the internal two-route cross-checks.
CROSSCHECK_TOL = 1e-8
# Default dense-storage caps; callers may override per call.
MAX_ROWS = 5000
MAX_COLS = 500


@dataclass(frozen=True)
class LabelMatrix:
    """Validated binary label assignment for n samples over L labels.

    Attributes
    ----------
    bits : (n, L) ndarray of {0, 1}
    n_ell : (L,) ndarray
        Per-label sample counts, all >= 1.
    k : (n,) ndarray
        Per-sample cardinalities, all >= 1.
    K : int
        Total assignment count, sum of k.
    gram : (L, L) ndarray
        Co-occurrence matrix Y^T Y; its diagonal equals n_ell.
    one_in_colspace : bool
        Whether the all-ones vector lies in the column space of Y
        (always true when every row has the same cardinality).
    """

    bits: np.ndarray
    n_ell: np.ndarray
    k: np.ndarray
    K: int
    gram: np.ndarray
    one_in_colspace: bool

    @property
    def n(self):
        return self.bits.shape[0]

    @property
    def L(self):
        return self.bits.shape[1]


def build_labels(bits):
    """Validate a 0/1 matrix and derive its label-count structure.

    Raises
    ------
    MissingLabel
        If some label column is all zero.
    UnlabeledSample
        If some sample row is all zero.
    """
    bits = np.asarray(bits)
    if bits.ndim != 2 or bits.size == 0:
        raise InvalidInput(f"label matrix must be non-empty 2-D, got shape {bits.shape}")
    if not np.isin(bits, (0, 1)).all():
        raise InvalidInput("label matrix entries must be 0 or 1")
    bits = bits.astype(np.int64)
    n_ell = bits.sum(axis=0)
    if (n_ell == 0).any():
        missing = np.flatnonzero(n_ell == 0)
        raise MissingLabel(f"labels with no samples: {missing.tolist()}")
    k = bits.sum(axis=1)
    if (k == 0).any():
        empty = np.flatnonzero(k == 0)
        raise UnlabeledSample(f"samples with no labels: {empty.tolist()}")
    gram = bits.T @ bits
    Y = bits.astype(float)
    ones = np.ones((bits.shape[0], 1))
    one_in = numeric_rank(np.hstack([Y, ones])) == numeric_rank(Y)
    return LabelMatrix(
        bits=bits,
        n_ell=n_ell,
        k=k,
        K=int(k.sum()),
        gram=gram,
        one_in_colspace=bool(one_in),
    )


@dataclass(frozen=True)
class Dataset:
    """Feature matrix bound to a validated label matrix, with cached means."""

    X: np.ndarray
    labels: LabelMatrix
    mu: np.ndarray
    mu_ell: np.ndarray
    X_centered: np.ndarray

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]


def _corrected_mean(X, weights=None):
    """Two-pass (compensated) mean of rows, optionally 0/1-weighted."""
    if weights is None:
        m = X.mean(axis=0)
        return m + (X - m).mean(axis=0)
    total = weights.sum()
    m = (weights @ X) / total
    return m + (weights @ (X - m)) / total


def build_dataset(X, labels, max_rows=MAX_ROWS, max_cols=MAX_COLS):
    """Bind features to labels, computing global and per-label means.

    Means use a two-pass compensated summation so that centering is accurate
    for feature dimensions into the hundreds.

    Parameters
    ----------
    X : (n, d) array_like
    labels : LabelMatrix
    max_rows, max_cols : int or None
        Dense-storage guard rails (defaults 5000 x 500); pass None to lift.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.size == 0:
        raise InvalidInput(f"feature matrix must be non-empty 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInput("feature matrix contains non-finite entries")
    if X.shape[0] != labels.n:
        raise InvalidInput(
            f"feature rows ({X.shape[0]}) do not match label rows ({labels.n})"
        )
    if max_rows is not None and X.shape[0] > max_rows:
        raise InvalidInput(f"n={X.shape[0]} exceeds dense cap {max_rows}; pass max_rows=None")
    if max_cols is not None and X.shape[1] > max_cols:
        raise InvalidInput(f"d={X.shape[1]} exceeds dense cap {max_cols}; pass max_cols=None")

    mu = _corrected_mean(X)
    Y = labels.bits.astype(float)
    mu_ell = np.vstack([_corrected_mean(X, Y[:, ell]) for ell in range(labels.L)])
    Xc = X - mu
    drift = np.linalg.norm(Xc.sum(axis=0))
    if drift > 1e-8 * X.shape[0] * max(1.0, np.abs(X).max()):
        raise ArithmeticError(f"centering drift {drift:.3e} too large")
    return Dataset(X=X, labels=labels, mu=mu, mu_ell=mu_ell, X_centered=Xc)


@dataclass(frozen=True)
class ScatterSet:
    """The five scatter matrices of a dataset plus the between-scatter factor.

    Attributes
    ----------
    Sb : (d, d) ndarray
        Between-scatter, sum_ell n_ell (mu_ell - mu)(mu_ell - mu)^T.
    Sw : (d, d) ndarray
        Within-scatter, summed over every (sample, label) incidence.
    St_ml : (d, d) ndarray
        Sb + Sw; equal to the cardinality-weighted total scatter.
    St : (d, d) ndarray
        Plain total scatter Xc^T Xc.
    R : (d, d) ndarray
        St_ml - St, the PSD cardinality excess (zero for single-label data).
    M : (d, L) ndarray
        Factor with Sb = M M^T, namely Xc^T Y diag(n_ell)^{-1/2}.
    """

    Sb: np.ndarray
    Sw: np.ndarray
    St_ml: np.ndarray
    St: np.ndarray
    R: np.ndarray
    M: np.ndarray


def _rel_defect(lhs, rhs, scale=0.0):
    # `scale` lets callers anchor the comparison to the magnitude of the
    # accumulations both sides were computed from; without it a pair that is
    # mathematically zero (e.g. Sb when every label mean coincides with the
    # global mean) would divide rounding dust by itself.
    denom = max(np.linalg.norm(lhs), np.linalg.norm(rhs), scale, 1e-300)
    return np.linalg.norm(lhs - rhs) / denom


def build_scatter(ds):
    """Compute all scatter matrices of a dataset, cross-checking identities.

    The cardinality-weighted total scatter is computed both as Sb + Sw and as
    sum_i k_i (x_i - mu)(x_i - mu)^T; the factorization Sb = M M^T is checked
    as well. Disagreement beyond CROSSCHECK_TOL raises ArithmeticError.
    """
    labels = ds.labels
    Y = labels.bits.astype(float)
    Xc = ds.X_centered

    dev = ds.mu_ell - ds.mu
    Sb = symmetrize((dev.T * labels.n_ell) @ dev)

    Sw = np.zeros((ds.d, ds.d))
    for ell in range(labels.L):
        member = labels.bits[:, ell] == 1
        D = ds.X[member] - ds.mu_ell[ell]
        Sw += D.T @ D
    Sw = symmetrize(Sw)

    St = symmetrize(Xc.T @ Xc)
    St_ml = symmetrize(Sb + Sw)
    St_ml_weighted = symmetrize((Xc * labels.k[:, None]).T @ Xc)
    defect = _rel_defect(St_ml, St_ml_weighted)
    if defect > CROSSCHECK_TOL:
        raise ArithmeticError(
            f"total-scatter routes disagree (relative defect {defect:.3e})"
        )

    M = Xc.T @ (Y / np.sqrt(labels.n_ell))
    factor_defect = _rel_defect(Sb, M @ M.T, scale=np.linalg.norm(St_ml))
    if factor_defect > CROSSCHECK_TOL:
        raise ArithmeticError(
            f"between-scatter factorization defect {factor_defect:.3e}"
        )

    R = St_ml - St
    # R is a difference of two same-scale accumulations, so when it is
    # mathematically zero (all cardinalities 1) its computed eigenvalues are
    # rounding dust proportional to the scatter magnitude, not to ||R||.
    dust = 128.0 * np.finfo(float).eps * max(np.abs(np.linalg.eigvalsh(St_ml)).max(), 1e-300)
    for name, S in (("Sb", Sb), ("Sw", Sw), ("R", R)):
        evals = np.linalg.eigvalsh(S)
        floor = -max(CROSSCHECK_TOL * np.abs(evals).max(), dust)
        if evals.min() < floor:
            raise ArithmeticError(
                f"{name} has negative eigenvalue {evals.min():.3e} beyond tolerance"
            )

    return ScatterSet(Sb=Sb, Sw=Sw, St_ml=St_ml, St=St, R=R, M=M)


@dataclass(frozen=True)
class RankReport:
    """Rank structure of the between-scatter and its governing bound."""

    rank_sb: int
    rank_XtY: int
    rank_Y: int
    rank_HY: int
    bound: int
    one_in_colspace: bool
    excess: bool


def rank_analysis(ds, ss=None):
    """Ranks of the between-scatter and related matrices, with the rank bound.

    The bound is min(d, n-1, rank(Y) - [all-ones in col(Y)]); ``excess`` flags
    rank(Sb) > L - 1, which can only happen when the all-ones vector is NOT
    in the label column space (variable cardinality).
    """
    if ss is None:
        ss = build_scatter(ds)
    labels = ds.labels
    Y = labels.bits.astype(float)
    # Anchor the rank decisions to the scale of the accumulations the
    # matrices were computed from: Sb inherits rounding noise of size
    # eps * ||St_ml||, and Xc^T Y of size eps * ||Xc|| * ||Y||, even when the
    # result itself is mathematically zero (e.g. every sample carries every
    # label, so all label means coincide with the global mean).
    eps = np.finfo(float).eps
    sigma_x = np.linalg.norm(ds.X_centered, 2)
    sigma_y = np.linalg.norm(Y, 2)
    scale_sb = max(np.abs(np.linalg.eigvalsh(ss.St_ml)).max(), 1e-300)
    rank_sb = numeric_rank(ss.Sb, tol=ds.d * eps * scale_sb)
    rank_XtY = numeric_rank(
        ds.X_centered.T @ Y, tol=max(ds.d, labels.L) * eps * sigma_x * sigma_y
    )
    if rank_sb != rank_XtY:
        raise ArithmeticError(
            f"rank(Sb)={rank_sb} disagrees with rank(Xc^T Y)={rank_XtY}"
        )
    rank_Y = numeric_rank(Y)
    rank_HY = numeric_rank(Y - Y.mean(axis=0))
    bound = min(ds.d, ds.n - 1, rank_Y - (1 if labels.one_in_colspace else 0))
    return RankReport(
        rank_sb=rank_sb,
        rank_XtY=rank_XtY,
        rank_Y=rank_Y,
        rank_HY=rank_HY,
        bound=bound,
        one_in_colspace=labels.one_in_colspace,
        excess=bool(rank_sb > labels.L - 1),
    )


def residual_bound(ds, ss):
    """Spectral-norm bound on the cardinality excess R = St_ml - St.

    Returns a dict with ``lhs`` = ||R||_2, ``rhs`` = max_i (k_i - 1) times the
    top eigenvalue of the total scatter restricted to multi-label samples,
    and ``holds``. Equality holds when all multi-label weights k_i - 1 agree
    (in particular for uniform cardinality).
    """
    k = ds.labels.k
    lhs = float(np.abs(np.linalg.eigvalsh(ss.R)).max())
    multi = k > 1
    if not multi.any():
        return {"lhs": lhs, "rhs": 0.0, "holds": bool(lhs <= 1e-8)}
    Xm = ds.X_centered[multi]
    St_K = symmetrize(Xm.T @ Xm)
    lam = float(np.linalg.eigvalsh(St_K).max())
    rhs = float((k.max() - 1) * lam)
    return {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs * (1 + 1e-8) + 1e-12)}


# ---------------------------------------------------------------------------
# CSV import/export
# ---------------------------------------------------------------------------

def load_dataset_csv(features_path, labels_path, max_rows=MAX_ROWS, max_cols=MAX_COLS):
    """Load a dataset from two headerless CSV files (features and 0/1 labels)."""
    X = _read_numeric_csv(features_path, "features")
    bits = _read_numeric_csv(labels_path, "labels")
    if X.shape[0] != bits.shape[0]:
        raise InvalidInput(
            f"row mismatch: {X.shape[0]} feature rows vs {bits.shape[0]} label rows"
        )
    return build_dataset(X, build_labels(bits), max_rows=max_rows, max_cols=max_cols)


def save_dataset_csv(ds, features_path, labels_path):
    """Write a dataset to two headerless CSV files."""
    np.savetxt(features_path, ds.X, delimiter=",", fmt="%.17g")
    np.savetxt(labels_path, ds.labels.bits, delimiter=",", fmt="%d")


def _read_numeric_csv(path, name):
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise InvalidInput(f"{name} CSV line {lineno}: {exc}") from exc
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise InvalidInput(
                    f"{name} CSV line {lineno}: expected {len(rows[0])} columns, "
                    f"got {len(rows[-1])}"
                )
    if not rows:
        raise InvalidInput(f"{name} CSV {path} is empty")
    return np.asarray(rows)
