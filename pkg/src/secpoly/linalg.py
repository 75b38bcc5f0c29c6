"""Exact rational linear algebra: sparse matrices, fraction-free rank,
canonical kernel bases, integer (saturated) kernel lattices, and graded chain
complexes with cohomology and quasi-isomorphism testing.

Vectors are tuples of Fraction; matrices act on column vectors, so a matrix
with shape (m, n) maps Q^n -> Q^m.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Mapping, Sequence

Q = Fraction

# ---------------------------------------------------------------------------
# sparse rational matrices


class MatrixQ:
    """Sparse rational matrix: shape plus a map (row, col) -> nonzero Fraction."""

    __slots__ = ("nrows", "ncols", "entries")

    def __init__(self, nrows: int, ncols: int,
                 entries: Mapping[tuple[int, int], Fraction] | None = None):
        if nrows < 0 or ncols < 0:
            raise ValueError("matrix shape must be nonnegative")
        self.nrows = nrows
        self.ncols = ncols
        self.entries: dict[tuple[int, int], Fraction] = {}
        if entries:
            for (i, j), v in entries.items():
                if not (0 <= i < nrows and 0 <= j < ncols):
                    raise ValueError(f"entry ({i},{j}) outside shape ({nrows},{ncols})")
                v = Q(v)
                if v:
                    self.entries[(i, j)] = v

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Fraction]]) -> "MatrixQ":
        nrows = len(rows)
        ncols = len(rows[0]) if rows else 0
        ent = {}
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise ValueError("ragged rows")
            for j, v in enumerate(row):
                if v:
                    ent[(i, j)] = Q(v)
        return cls(nrows, ncols, ent)

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence[Fraction]]) -> "MatrixQ":
        ncols = len(cols)
        nrows = len(cols[0]) if cols else 0
        ent = {}
        for j, col in enumerate(cols):
            for i, v in enumerate(col):
                if v:
                    ent[(i, j)] = Q(v)
        return cls(nrows, ncols, ent)

    @classmethod
    def zero(cls, nrows: int, ncols: int) -> "MatrixQ":
        return cls(nrows, ncols, {})

    @classmethod
    def identity(cls, n: int) -> "MatrixQ":
        return cls(n, n, {(i, i): Q(1) for i in range(n)})

    def row(self, i: int) -> tuple[Fraction, ...]:
        return tuple(self.entries.get((i, j), Q(0)) for j in range(self.ncols))

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(self.entries.get((i, j), Q(0)) for i in range(self.nrows))

    def to_rows(self) -> list[list[Fraction]]:
        out = [[Q(0)] * self.ncols for _ in range(self.nrows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def transpose(self) -> "MatrixQ":
        return MatrixQ(self.ncols, self.nrows,
                       {(j, i): v for (i, j), v in self.entries.items()})

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other) -> bool:
        return (isinstance(other, MatrixQ)
                and self.nrows == other.nrows and self.ncols == other.ncols
                and self.entries == other.entries)

    def __hash__(self):
        return hash((self.nrows, self.ncols, frozenset(self.entries.items())))

    def __add__(self, other: "MatrixQ") -> "MatrixQ":
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise ValueError("shape mismatch in matrix sum")
        ent = dict(self.entries)
        for k, v in other.entries.items():
            s = ent.get(k, Q(0)) + v
            if s:
                ent[k] = s
            else:
                ent.pop(k, None)
        return MatrixQ(self.nrows, self.ncols, ent)

    def __neg__(self) -> "MatrixQ":
        return MatrixQ(self.nrows, self.ncols,
                       {k: -v for k, v in self.entries.items()})

    def __sub__(self, other: "MatrixQ") -> "MatrixQ":
        return self + (-other)

    def scale(self, c: Fraction) -> "MatrixQ":
        c = Q(c)
        if not c:
            return MatrixQ.zero(self.nrows, self.ncols)
        return MatrixQ(self.nrows, self.ncols,
                       {k: c * v for k, v in self.entries.items()})

    def __matmul__(self, other: "MatrixQ") -> "MatrixQ":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch in matrix product")
        # group other's entries by row for sparse accumulation
        by_row: dict[int, list[tuple[int, Fraction]]] = {}
        for (i, j), v in other.entries.items():
            by_row.setdefault(i, []).append((j, v))
        acc: dict[tuple[int, int], Fraction] = {}
        for (i, k), a in self.entries.items():
            for j, b in by_row.get(k, ()):
                key = (i, j)
                s = acc.get(key, Q(0)) + a * b
                if s:
                    acc[key] = s
                else:
                    acc.pop(key, None)
        return MatrixQ(self.nrows, other.ncols, acc)

    def apply(self, vec: Sequence[Fraction]) -> tuple[Fraction, ...]:
        if len(vec) != self.ncols:
            raise ValueError("vector length mismatch")
        out = [Q(0)] * self.nrows
        for (i, j), v in self.entries.items():
            if vec[j]:
                out[i] += v * vec[j]
        return tuple(out)

    def __repr__(self):
        return f"MatrixQ({self.nrows}x{self.ncols}, {len(self.entries)} nonzero)"


# ---------------------------------------------------------------------------
# elimination primitives (operate on lists of row-lists)


def _clear_row_denominators(row: Sequence[Fraction]) -> list[int]:
    lcm = 1
    for v in row:
        d = Q(v).denominator
        lcm = lcm * d // gcd(lcm, d)
    return [int(Q(v) * lcm) for v in row]


def rank(m: MatrixQ | Sequence[Sequence[Fraction]]) -> int:
    """Rank via Bareiss fraction-free elimination on denominator-cleared rows."""
    rows = m.to_rows() if isinstance(m, MatrixQ) else [list(r) for r in m]
    if not rows or not rows[0]:
        return 0
    a = [_clear_row_denominators(r) for r in rows]
    nrows, ncols = len(a), len(a[0])
    r = 0
    prev = 1
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(r + 1, nrows):
            for j in range(c + 1, ncols):
                a[i][j] = (a[r][c] * a[i][j] - a[i][c] * a[r][j]) // prev
            a[i][c] = 0
        prev = a[r][c]
        r += 1
        if r == nrows:
            break
    return r


def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot column indices).

    The RREF of a row space is unique, so the output is a canonical basis of
    the span -- several sign conventions elsewhere lean on this.
    """
    a = [[Q(v) for v in row] for row in rows]
    if not a:
        return [], []
    ncols = len(a[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(a)) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = a[r][c]
        a[r] = [v / inv for v in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a[:r], pivots


def kernel_basis(m: MatrixQ | Sequence[Sequence[Fraction]]) -> list[tuple[Fraction, ...]]:
    """Canonical basis of the right kernel {x : m x = 0}.

    One vector per free column: 1 in the free slot, pivot slots back-filled
    from the RREF, zeros elsewhere.  Ordered by free column index.
    """
    rows = m.to_rows() if isinstance(m, MatrixQ) else [list(r) for r in m]
    if not rows:
        # kernel of the empty map out of Q^n is everything -- but with no rows
        # we cannot know n; treat as 0 columns
        return []
    ncols = len(rows[0])
    red, pivots = rref(rows)
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = [Q(0)] * ncols
        vec[free] = Q(1)
        for r, pc in enumerate(pivots):
            vec[pc] = -red[r][free]
        basis.append(tuple(vec))
    return basis


def solve(a_rows: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> tuple[Fraction, ...] | None:
    """One solution of A x = b, or None if inconsistent.

    Free variables are set to 0, so the answer is deterministic.
    """
    if not a_rows:
        return ()
    ncols = len(a_rows[0])
    aug = [list(map(Q, row)) + [Q(bv)] for row, bv in zip(a_rows, b)]
    red, pivots = rref(aug)
    if ncols in pivots:
        return None
    x = [Q(0)] * ncols
    for r, pc in enumerate(pivots):
        x[pc] = red[r][ncols]
    return tuple(x)


def det(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    """Exact determinant by fraction-free elimination with denominator tracking."""
    n = len(rows)
    if n == 0:
        return Q(1)
    if any(len(r) != n for r in rows):
        raise ValueError("determinant needs a square matrix")
    denom = 1
    a = []
    for row in rows:
        lcm = 1
        for v in row:
            d = v.denominator if isinstance(v, Fraction) else 1
            lcm = lcm * d // gcd(lcm, d)
        denom *= lcm
        if lcm == 1:
            a.append([v.numerator if isinstance(v, Fraction) else v for v in row])
        else:
            a.append([int(v * lcm) for v in row])
    if n == 1:
        return Q(a[0][0], denom)
    if n == 2:
        return Q(a[0][0] * a[1][1] - a[0][1] * a[1][0], denom)
    if n == 3:
        (p, q, r), (s, t, u), (v, w, x) = a
        return Q(p * (t * x - u * w) - q * (s * x - u * v) + r * (s * w - t * v),
                 denom)
    sign = 1
    prev = 1
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c]), None)
        if piv is None:
            return Q(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            sign = -sign
        for i in range(c + 1, n):
            for j in range(c + 1, n):
                a[i][j] = (a[c][c] * a[i][j] - a[i][c] * a[c][j]) // prev
            a[i][c] = 0
        prev = a[c][c]
    return Q(sign * a[n - 1][n - 1]) / denom


def in_span(vectors: Sequence[Sequence[Fraction]], target: Sequence[Fraction]) -> bool:
    """Is target in the row span of vectors?"""
    vecs = [list(v) for v in vectors]
    base = rank(vecs) if vecs else 0
    return rank(vecs + [list(target)]) == base


def coordinates_in_basis(basis: Sequence[Sequence[Fraction]],
                         target: Sequence[Fraction]) -> tuple[Fraction, ...] | None:
    """Coefficients c with sum c_i basis_i = target, or None if not in span."""
    if not basis:
        return () if not any(target) else None
    cols = [list(v) for v in basis]
    a_rows = [[cols[k][j] for k in range(len(basis))] for j in range(len(target))]
    return solve(a_rows, list(target))


# ---------------------------------------------------------------------------
# integer kernels (saturated lattice bases via HNF)


def _hnf_with_transform(mat: list[list[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Row-style Hermite normal form H = U A with U unimodular.

    Returns (H, U).  Rows of H with all zeros sit at the bottom; the matching
    rows of U generate the integer row-kernel of A.
    """
    a = [row[:] for row in mat]
    m = len(a)
    n = len(a[0]) if a else 0
    u = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    r = 0
    for c in range(n):
        piv = None
        for i in range(r, m):
            if a[i][c]:
                piv = i
                break
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        u[r], u[piv] = u[piv], u[r]
        # euclidean reduction below the pivot
        while True:
            nz = [i for i in range(r + 1, m) if a[i][c]]
            if not nz:
                break
            # smallest absolute pivot entry to row r
            best = min([r] + nz, key=lambda i: abs(a[i][c]))
            if best != r:
                a[r], a[best] = a[best], a[r]
                u[r], u[best] = u[best], u[r]
            for i in range(r + 1, m):
                if a[i][c]:
                    q = a[i][c] // a[r][c]
                    a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                    u[i] = [x - q * y for x, y in zip(u[i], u[r])]
        if a[r][c] < 0:
            a[r] = [-x for x in a[r]]
            u[r] = [-x for x in u[r]]
        r += 1
        if r == m:
            break
    return a, u


def integer_kernel_basis(int_rows: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Basis of the saturated lattice {x in Z^n : A x = 0} for integer A.

    Works on the transpose: integer row-kernel of A^T equals the column
    kernel of A.  HNF transform rows matching zero rows of H form a lattice
    basis, and since they generate the full integer kernel of the transpose
    map the result is saturated (every rational kernel vector with integer
    entries is an integer combination).
    """
    if not int_rows:
        return []
    at = [list(col) for col in zip(*int_rows)]  # n x m
    h, u = _hnf_with_transform(at)
    out = []
    for hrow, urow in zip(h, u):
        if not any(hrow):
            out.append(tuple(urow))
    # canonicalize: HNF of the kernel-basis rows themselves
    if out:
        kb, _ = _hnf_with_transform([list(t) for t in out])
        out = [tuple(r) for r in kb if any(r)]
    return out


# ---------------------------------------------------------------------------
# graded chain complexes


@dataclass(frozen=True)
class ChainComplexQ:
    """Cochain complex of finite-dimensional Q-spaces with d raising degree.

    basis_labels[k] gives the ordered basis labels in degree k; the
    differential out of degree k is a MatrixQ of shape (dim_{k+1}, dim_k).
    Degrees not listed are zero.  Construction checks d o d = 0.
    """

    basis_labels: dict[int, tuple]
    differentials: dict[int, MatrixQ] = field(default_factory=dict)

    def __post_init__(self):
        for k, d in self.differentials.items():
            src = len(self.basis_labels.get(k, ()))
            tgt = len(self.basis_labels.get(k + 1, ()))
            if (d.nrows, d.ncols) != (tgt, src):
                raise ValueError(
                    f"differential out of degree {k} has shape "
                    f"({d.nrows},{d.ncols}), expected ({tgt},{src})")
        for k, d in self.differentials.items():
            dn = self.differentials.get(k + 1)
            if dn is not None and not (dn @ d).is_zero():
                raise ValueError(f"d o d != 0 out of degree {k}")

    def degrees(self) -> list[int]:
        return sorted(self.basis_labels)

    def dim(self, k: int) -> int:
        return len(self.basis_labels.get(k, ()))

    def differential(self, k: int) -> MatrixQ:
        d = self.differentials.get(k)
        if d is None:
            return MatrixQ.zero(self.dim(k + 1), self.dim(k))
        return d

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * self.dim(k) for k in self.degrees())

    def cohomology(self) -> dict[int, int]:
        """Degree -> dim H^k = dim ker(d_k) - rank(d_{k-1})."""
        out = {}
        for k in self.degrees():
            n = self.dim(k)
            dk = self.differential(k)
            kdim = n - rank(dk) if n else 0
            rprev = rank(self.differential(k - 1)) if self.dim(k - 1) else 0
            out[k] = kdim - rprev
        return out

    def cohomology_representatives(self) -> dict[int, list[tuple[Fraction, ...]]]:
        """Cocycle vectors whose classes form a basis of H^k, per degree.

        Deterministic: kernel vectors (canonical order) greedily extending a
        basis of the image of the previous differential.
        """
        out: dict[int, list[tuple[Fraction, ...]]] = {}
        for k in self.degrees():
            n = self.dim(k)
            if n == 0:
                out[k] = []
                continue
            ker = kernel_basis(self.differential(k).to_rows() or [[Q(0)] * n])
            img_rows = []
            dprev = self.differentials.get(k - 1)
            if dprev is not None:
                img_rows = [list(dprev.column(j)) for j in range(dprev.ncols)]
            span = [r for r in img_rows]
            base_rank = rank(span) if span else 0
            reps = []
            for v in ker:
                if rank(span + [list(v)]) > base_rank:
                    span.append(list(v))
                    base_rank += 1
                    reps.append(v)
            out[k] = reps
        return out


@dataclass(frozen=True)
class QuasiIsoReport:
    """Outcome of a quasi-isomorphism test, with the first failure if any."""

    is_quasi_iso: bool
    failure_degree: int | None = None
    failure_kind: str | None = None  # "chain_map" | "induced_map"
    induced_dims: dict[int, tuple[int, int]] = field(default_factory=dict)


def is_quasi_iso(f: Mapping[int, MatrixQ],
                 source: ChainComplexQ,
                 target: ChainComplexQ) -> QuasiIsoReport:
    """Check that f is a chain map inducing isomorphisms on all cohomology.

    f maps degree k of source to degree k of target; missing degrees mean the
    zero map (legal only when one side is zero-dimensional there).
    """
    degrees = sorted(set(source.basis_labels) | set(target.basis_labels))

    def fmat(k: int) -> MatrixQ:
        m = f.get(k)
        if m is None:
            return MatrixQ.zero(target.dim(k), source.dim(k))
        if (m.nrows, m.ncols) != (target.dim(k), source.dim(k)):
            raise ValueError(f"component of f in degree {k} has wrong shape")
        return m

    for k in degrees:
        lhs = fmat(k + 1) @ source.differential(k)
        rhs = target.differential(k) @ fmat(k)
        if lhs != rhs:
            return QuasiIsoReport(False, failure_degree=k, failure_kind="chain_map")

    src_h = source.cohomology()
    tgt_h = target.cohomology()
    induced: dict[int, tuple[int, int]] = {}
    for k in degrees:
        hs = src_h.get(k, 0)
        ht = tgt_h.get(k, 0)
        induced[k] = (hs, ht)
        if hs != ht:
            return QuasiIsoReport(False, failure_degree=k,
                                  failure_kind="induced_map", induced_dims=induced)
        if hs == 0:
            continue
        # image of source cocycles under f, modulo target coboundaries
        n_src = source.dim(k)
        ker_src = kernel_basis(source.differential(k).to_rows() or [[Q(0)] * n_src])
        fk = fmat(k)
        mapped = [list(fk.apply(v)) for v in ker_src]
        dprev = target.differentials.get(k - 1)
        img_rows = ([list(dprev.column(j)) for j in range(dprev.ncols)]
                    if dprev is not None else [])
        base = rank(img_rows) if img_rows else 0
        total = rank(img_rows + mapped)
        if total - base != hs:
            return QuasiIsoReport(False, failure_degree=k,
                                  failure_kind="induced_map", induced_dims=induced)
    return QuasiIsoReport(True, induced_dims=induced)
