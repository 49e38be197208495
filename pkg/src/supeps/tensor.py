"""Dense tensors with named legs, plus the three decompositions the
network engine is built from: pairwise contraction, QR bond projection
and rank-truncated SVD with discarded-weight bookkeeping.

Conventions
-----------
* Data is always complex128 in C (row-major) layout: the last leg runs
  fastest in memory. Reshapes between tensors and matrices rely on this.
* Legs are addressed by string label, never by position. Labels are
  unique within one tensor.
* Matricisation for QR/SVD puts the requested row legs first (in their
  original relative order), the remaining legs after (same rule).
"""

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateInputError,
    DimensionError,
    LegLabelError,
    ParameterError,
    SplitError,
)

__all__ = [
    "DenseTensor",
    "SvdResult",
    "contract",
    "qr_split",
    "gram_split",
    "svd_truncated",
    "scale_leg",
]


class DenseTensor:
    """A complex128 array with one string label per leg.

    Args:
        data: array-like, cast to complex128. Scalars are degree-0.
        legs: iterable of unique labels, one per array dimension.
    """

    __slots__ = ("data", "legs")

    def __init__(self, data, legs):
        arr = np.asarray(data)
        if arr.dtype != np.complex128:
            arr = arr.astype(np.complex128)
        legs = tuple(legs)
        if len(legs) != arr.ndim:
            raise LegLabelError(
                f"{len(legs)} labels for a degree-{arr.ndim} tensor"
            )
        if len(set(legs)) != len(legs):
            raise LegLabelError(f"duplicate leg labels in {legs}")
        self.data = arr
        self.legs = legs

    @property
    def dims(self):
        return self.data.shape

    def axis(self, leg):
        try:
            return self.legs.index(leg)
        except ValueError:
            raise LegLabelError(f"no leg {leg!r} on tensor with legs {self.legs}") from None

    def extent(self, leg):
        return self.data.shape[self.axis(leg)]

    def rename(self, mapping):
        """New view with labels replaced per ``mapping`` (missing keys keep theirs)."""
        return DenseTensor(self.data, tuple(mapping.get(l, l) for l in self.legs))

    def transpose(self, legs):
        """New tensor with legs reordered to ``legs`` (must be a permutation)."""
        legs = tuple(legs)
        if sorted(legs) != sorted(self.legs):
            raise LegLabelError(f"{legs} is not a permutation of {self.legs}")
        if legs == self.legs:
            return self
        perm = tuple(self.legs.index(l) for l in legs)
        return DenseTensor(self.data.transpose(perm), legs)

    def conj(self):
        return DenseTensor(np.conj(self.data), self.legs)

    def norm(self):
        return float(np.linalg.norm(self.data))

    def copy(self):
        return DenseTensor(self.data.copy(), self.legs)

    def __repr__(self):
        pairs = ", ".join(f"{l}:{d}" for l, d in zip(self.legs, self.dims))
        return f"DenseTensor({pairs})"


class SvdResult:
    """Outcome of a rank-truncated SVD across a named leg split.

    Fields:
        left_isometry: DenseTensor with legs (row legs..., bond).
        singular_values: 1-d float array, non-increasing, length kept_rank.
        right_isometry: DenseTensor with legs (bond, col legs...).
        discarded_weight: sum of dropped sigma^2 over sum of all sigma^2.
        kept_rank: number of retained singular values.
    """

    __slots__ = (
        "left_isometry",
        "singular_values",
        "right_isometry",
        "discarded_weight",
        "kept_rank",
    )

    def __init__(self, left_isometry, singular_values, right_isometry,
                 discarded_weight, kept_rank):
        self.left_isometry = left_isometry
        self.singular_values = singular_values
        self.right_isometry = right_isometry
        self.discarded_weight = discarded_weight
        self.kept_rank = kept_rank


def _split_axes(t, row_legs, op):
    """Validate a leg split and return (row axes, col axes) index tuples."""
    row_legs = tuple(row_legs)
    if len(set(row_legs)) != len(row_legs):
        raise LegLabelError(f"duplicate labels in row legs {row_legs}")
    for l in row_legs:
        if l not in t.legs:
            raise LegLabelError(f"no leg {l!r} on tensor with legs {t.legs}")
    if not row_legs:
        raise SplitError(f"{op}: row side of the split is empty")
    if len(row_legs) == len(t.legs):
        raise SplitError(f"{op}: column side of the split is empty")
    rows = tuple(t.legs.index(l) for l in row_legs)
    cols = tuple(i for i in range(len(t.legs)) if i not in rows)
    return rows, cols


def _as_matrix(t, rows, cols):
    """Permute to (rows..., cols...) and flatten each group."""
    a = t.data.transpose(rows + cols)
    m = int(np.prod([a.shape[i] for i in range(len(rows))], dtype=np.int64)) if rows else 1
    n = int(np.prod([a.shape[i] for i in range(len(rows), a.ndim)], dtype=np.int64)) if cols else 1
    return np.ascontiguousarray(a).reshape(m, n), a.shape[: len(rows)], a.shape[len(rows):]


def contract(a, legs_a, b, legs_b):
    """Contract tensor ``a`` with tensor ``b`` over paired named legs.

    Pairing is positional between ``legs_a`` and ``legs_b``; paired legs
    must have equal extents. The result carries the uncontracted legs of
    ``a`` followed by those of ``b``, in their original orders.

    Raises:
        LegLabelError: unknown label, or the result would carry duplicates.
        DimensionError: a paired extent mismatch.
    """
    legs_a = tuple(legs_a)
    legs_b = tuple(legs_b)
    if len(legs_a) != len(legs_b):
        raise LegLabelError(
            f"cannot pair {len(legs_a)} legs with {len(legs_b)} legs"
        )
    ax_a = tuple(a.axis(l) for l in legs_a)
    ax_b = tuple(b.axis(l) for l in legs_b)
    for la, lb in zip(legs_a, legs_b):
        da, db = a.extent(la), b.extent(lb)
        if da != db:
            raise DimensionError(
                f"extent mismatch contracting {la!r} ({da}) with {lb!r} ({db})"
            )
    out_legs = tuple(l for l in a.legs if l not in legs_a) + tuple(
        l for l in b.legs if l not in legs_b
    )
    if len(set(out_legs)) != len(out_legs):
        raise LegLabelError(f"result would carry duplicate legs {out_legs}")
    out = np.tensordot(a.data, b.data, axes=(ax_a, ax_b))
    return DenseTensor(out, out_legs)


def scale_leg(t, leg, weights):
    """Multiply ``t`` along ``leg`` by a 1-d weight vector (diagonal absorb).

    Raises:
        DimensionError: weight length does not match the leg extent.
    """
    ax = t.axis(leg)
    w = np.asarray(weights)
    if w.ndim != 1 or w.shape[0] != t.data.shape[ax]:
        raise DimensionError(
            f"weight vector of length {w.shape} against leg {leg!r} "
            f"of extent {t.data.shape[ax]}"
        )
    shape = [1] * t.data.ndim
    shape[ax] = w.shape[0]
    return DenseTensor(t.data * w.reshape(shape), t.legs)


def qr_split(t, row_legs, bond="bond"):
    """Reduced QR of ``t`` across the named split: t = q . r.

    ``q`` carries (row legs..., bond) and is an isometry from the new
    bond into the row space; ``r`` carries (bond, col legs...). The new
    bond extent is min(prod row extents, prod col extents). Phases are
    fixed so the diagonal of the r matrix is real and non-negative.

    Raises:
        SplitError: empty row or column side.
        LegLabelError: unknown row label, or ``bond`` collides.
    """
    rows, cols = _split_axes(t, row_legs, "qr_split")
    if bond in t.legs:
        raise LegLabelError(f"bond label {bond!r} collides with existing legs")
    mat, rshape, cshape = _as_matrix(t, rows, cols)
    q, r = np.linalg.qr(mat, mode="reduced")
    # phase fix: rotate so diag(r) >= 0, making the factorization unique
    d = np.where(np.abs(np.diagonal(r)) > 0, np.diagonal(r), 1.0)
    ph = d / np.abs(d)
    q = q * ph[np.newaxis, :]
    r = r * np.conj(ph)[:, np.newaxis]
    k = q.shape[1]
    q_legs = tuple(t.legs[i] for i in rows) + (bond,)
    r_legs = (bond,) + tuple(t.legs[i] for i in cols)
    return (
        DenseTensor(q.reshape(rshape + (k,)), q_legs),
        DenseTensor(r.reshape((k,) + cshape), r_legs),
    )


def gram_split(t, row_legs, bond="bond"):
    """Factor t = q . r through the Gram matrix of the column side.

    Same interface and leg layout as :func:`qr_split` but built from an
    eigendecomposition of M†M where M is the matricised tensor, which is
    several times faster than Householder QR when the row space is much
    larger than the column space. The product q . r reconstructs ``t``
    to machine precision regardless of conditioning, but columns of q
    whose singular value is below ~1e-8 of the largest are not reliably
    orthonormal (the Gram step squares the condition number). Use it
    where the factors feed a contraction, not where q's isometry itself
    is measured.

    The new bond extent is the full column-side extent (no rank bound
    from the row side), so it requires prod(row extents) >= prod(col
    extents).

    Raises:
        SplitError: empty side, or the row side is smaller than the column side.
    """
    rows, cols = _split_axes(t, row_legs, "gram_split")
    if bond in t.legs:
        raise LegLabelError(f"bond label {bond!r} collides with existing legs")
    mat, rshape, cshape = _as_matrix(t, rows, cols)
    m, n = mat.shape
    if m < n:
        raise SplitError(f"gram_split needs rows >= cols, got {m} x {n}")
    g = mat.conj().T @ mat
    s, v = np.linalg.eigh(g)
    s = s[::-1].copy()
    v = v[:, ::-1].copy()
    # roundoff can push trailing eigenvalues to ~ -eps*|g|; floor keeps sqrt real
    floor = max(float(s[0]), 0.0) * 1e-32 + np.finfo(np.float64).tiny
    sig = np.sqrt(np.maximum(s, floor))
    q = (mat @ v) / sig[np.newaxis, :]
    r = sig[:, np.newaxis] * v.conj().T
    q_legs = tuple(t.legs[i] for i in rows) + (bond,)
    r_legs = (bond,) + tuple(t.legs[i] for i in cols)
    return (
        DenseTensor(q.reshape(rshape + (n,)), q_legs),
        DenseTensor(r.reshape((n,) + cshape), r_legs),
    )


def _svd_with_fallback(mat):
    try:
        return np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but robust
        return scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")


def svd_truncated(t, row_legs, max_rank, cutoff=0.0, bond="bond",
                  strict_rank=False):
    """Rank-truncated SVD of ``t`` across the named split.

    Keeps the ``kept_rank`` largest singular values where kept_rank is
    the smallest of ``max_rank``, the count of values exceeding
    ``cutoff`` times the largest, and the full matrix rank bound.
    Discarded weight is sum(dropped sigma^2) / sum(all sigma^2), so a
    pure rank cut on an exactly rank-deficient tensor reports 0.

    Args:
        t: tensor to split.
        row_legs: labels forming the row side.
        max_rank: hard cap on kept singular values (>= 1).
        cutoff: relative floor; values <= cutoff * sigma_max are dropped.
        bond: label for the new bond leg.
        strict_rank: keep exactly min(max_rank, matrix rank bound) values,
            ignoring ``cutoff``. Used where a bond extent must not change.

    Raises:
        ParameterError: max_rank < 1 or cutoff outside [0, 1).
        DegenerateInputError: ``t`` is identically zero.
        SplitError / LegLabelError: as for :func:`qr_split`.
    """
    if max_rank < 1:
        raise ParameterError(f"max_rank must be >= 1, got {max_rank}")
    if not 0.0 <= cutoff < 1.0:
        raise ParameterError(f"cutoff must lie in [0, 1), got {cutoff}")
    rows, cols = _split_axes(t, row_legs, "svd_truncated")
    if bond in t.legs:
        raise LegLabelError(f"bond label {bond!r} collides with existing legs")
    mat, rshape, cshape = _as_matrix(t, rows, cols)
    u, s, vh = _svd_with_fallback(mat)
    if s[0] == 0.0:
        raise DegenerateInputError("svd_truncated on an identically zero tensor")
    if strict_rank:
        keep = min(int(max_rank), s.shape[0])
    else:
        keep = min(int(max_rank), int(np.count_nonzero(s > cutoff * s[0])))
    total = float(np.dot(s, s))
    kept = float(np.dot(s[:keep], s[:keep]))
    w = max(0.0, 1.0 - kept / total)
    u_legs = tuple(t.legs[i] for i in rows) + (bond,)
    v_legs = (bond,) + tuple(t.legs[i] for i in cols)
    return SvdResult(
        left_isometry=DenseTensor(
            np.ascontiguousarray(u[:, :keep]).reshape(rshape + (keep,)), u_legs
        ),
        singular_values=s[:keep].copy(),
        right_isometry=DenseTensor(
            np.ascontiguousarray(vh[:keep]).reshape((keep,) + cshape), v_legs
        ),
        discarded_weight=w,
        kept_rank=keep,
    )
