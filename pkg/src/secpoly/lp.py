"""Exact rational linear programming for subdivision-regularity certificates.

Feasibility of systems  {a.x = b}  cup  {c.x > d}  over free rational
variables is decided by maximizing a slack t in  c.x >= d + t,  t <= 1,
with a two-phase simplex under Bland's rule (deterministic, no cycling).
A Fourier-Motzkin oracle covers small instances as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

Q = Fraction


@dataclass(frozen=True)
class LPResult:
    feasible: bool
    witness: tuple[Fraction, ...] | None = None  # values of the free variables
    slack: Fraction | None = None                # achieved min strict margin


class SimplexError(RuntimeError):
    """Internal invariant failure inside the simplex pivoting."""


def _pivot(tab: list[list[int]], q: int, leave: int, enter: int) -> int:
    """One fraction-free pivot.  The integer tableau satisfies (true rational
    tableau) = tab / q with q > 0; entries are minors of the original integer
    system, so the division below is exact (Bareiss/Edmonds pivoting).  The
    pivot row is left unscaled; the new q is the pivot entry itself.
    """
    piv = tab[leave][enter]
    prow = tab[leave]
    for i in range(len(tab)):
        if i == leave:
            continue
        f = tab[i][enter]
        if f:
            row = tab[i]
            tab[i] = [(piv * x - f * y) // q for x, y in zip(row, prow)]
        elif piv != q:
            row = tab[i]
            tab[i] = [(piv * x) // q for x in row]
    return piv


def _simplex_min(tab: list[list[int]], basis: list[int], ncols: int, q: int) -> int:
    """Minimize row -1 (objective) over {Az=b, z>=0} given a basic feasible
    integer tableau scaled by q; Bland's rule.  Mutates tab/basis in place and
    returns the updated scale q.

    Tableau layout: rows 0..m-1 are constraints [coeffs | rhs], last row is
    the objective in reduced form [costs | -value], all times q.
    """
    m = len(tab) - 1
    while True:
        obj = tab[-1]
        enter = next((j for j in range(ncols) if obj[j] < 0), None)
        if enter is None:
            return q
        # ratio test tab[i][rhs]/tab[i][enter] by cross-multiplication
        # (q cancels); Bland tie-break on basis variable index
        best = None
        for i in range(m):
            coef = tab[i][enter]
            if coef > 0:
                num = tab[i][ncols]
                if best is None or num * best[1] < best[0] * coef or (
                        num * best[1] == best[0] * coef and basis[i] < best[2]):
                    best = (num, coef, basis[i], i)
        if best is None:
            raise SimplexError("unbounded objective in bounded-by-construction LP")
        leave = best[3]
        q = _pivot(tab, q, leave, enter)
        basis[leave] = enter


def _solve_standard(a_rows: list[list[Fraction]], b: list[Fraction],
                    cost: list[Fraction]) -> tuple[Fraction, list[Fraction]] | None:
    """min cost.z  s.t.  A z = b, z >= 0.  Returns (value, z) or None if
    infeasible.  Assumes the objective is bounded below on the feasible set.
    """
    m = len(a_rows)
    n = len(cost)
    rows: list[list[int]] = []
    rhs: list[int] = []
    for row, bv in zip(a_rows, b):
        sg = -1 if bv < 0 else 1
        den = _lcm_den(row, bv)
        rows.append([int(v * den) * sg for v in row])
        rhs.append(int(bv * den) * sg)
    cden = _lcm_den(cost, Q(0))
    icost = [int(c * cden) for c in cost]
    # phase 1: artificials with unit cost each, q = 1
    total = n + m
    tab = []
    for i in range(m):
        tab.append(rows[i] + [1 if j == i else 0 for j in range(m)] + [rhs[i]])
    objrow = [0] * (total + 1)
    for i in range(m):
        objrow = [o - v for o, v in zip(objrow, tab[i])]
    # reduced costs: +1 on each artificial minus its defining row
    for j in range(n, total):
        objrow[j] += 1
    tab.append(objrow)
    basis = list(range(n, total))
    q = _simplex_min(tab, basis, total, 1)
    if tab[-1][total] != 0:
        return None  # phase-1 optimum positive: infeasible
    # drive remaining artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n:
            enter = next((j for j in range(n) if tab[i][j]), None)
            if enter is None:
                continue  # redundant row
            if tab[i][enter] < 0:
                tab[i] = [-v for v in tab[i]]
            q = _pivot(tab, q, i, enter)
            basis[i] = enter
    # phase 2: rebuild the objective in one shot,
    # obj = q*cost - sum_i cost[basis_i] * tab_i  (integral: q/det clears)
    obj = [q * c for c in icost] + [0] * m + [0]
    for i in range(m):
        ci = icost[basis[i]] if basis[i] < n else 0
        if ci:
            obj = [x - ci * y for x, y in zip(obj, tab[i])]
    tab[-1] = obj
    # artificials must not re-enter; delete their columns outright
    for i in range(m + 1):
        tab[i] = tab[i][:n] + [tab[i][total]]
    q = _simplex_min(tab, basis, n, q)
    z = [Q(0)] * n
    for i in range(m):
        if basis[i] < n:
            z[basis[i]] = Q(tab[i][n], q)
    value = Q(-tab[-1][n], q * cden)
    return value, z


def _lcm_den(row, extra: Fraction) -> int:
    den = extra.denominator if isinstance(extra, Fraction) else 1
    for v in row:
        d = v.denominator if isinstance(v, Fraction) else 1
        den = den * d // gcd(den, d)
    return den


def lp_strict_feasible(equalities: Sequence[tuple[Sequence[Fraction], Fraction]],
                       stricts: Sequence[tuple[Sequence[Fraction], Fraction]],
                       nvars: int) -> LPResult:
    """Decide feasibility of {a.x = b} and {c.x > d} over x in Q^nvars.

    Free variables are split x = x+ - x-.  A slack t with c.x - t >= d and
    t <= 1 is maximized; feasibility <=> max t > 0.  The witness is exact and
    satisfies every strict inequality with margin >= the reported slack.
    """
    for a, _ in list(equalities) + list(stricts):
        if len(a) != nvars:
            raise ValueError("coefficient vector length != nvars")
    if not stricts:
        # pure equality system: solve directly
        from .linalg import solve
        if not equalities:
            return LPResult(True, tuple(Q(0) for _ in range(nvars)), None)
        sol = solve([list(a) for a, _ in equalities], [b for _, b in equalities])
        if sol is None:
            return LPResult(False)
        return LPResult(True, sol, None)

    # variables: x+ (nvars), x- (nvars), t, then slacks per strict, per <=1 row
    ns = len(stricts)
    n = 2 * nvars + 1 + ns + 1
    ti = 2 * nvars

    a_rows: list[list[Fraction]] = []
    b_vec: list[Fraction] = []
    for a, b in equalities:
        row = [Q(v) for v in a] + [-Q(v) for v in a] + [Q(0)] * (1 + ns + 1)
        a_rows.append(row)
        b_vec.append(Q(b))
    for k, (c, d) in enumerate(stricts):
        row = [Q(v) for v in c] + [-Q(v) for v in c] + [Q(0)] * (1 + ns + 1)
        row[ti] = Q(-1)
        row[ti + 1 + k] = Q(-1)  # c.x - t - s_k = d
        a_rows.append(row)
        b_vec.append(Q(d))
    bound = [Q(0)] * n
    bound[ti] = Q(1)
    bound[n - 1] = Q(1)  # t + s = 1
    a_rows.append(bound)
    b_vec.append(Q(1))

    cost = [Q(0)] * n
    cost[ti] = Q(-1)  # maximize t
    res = _solve_standard(a_rows, b_vec, cost)
    if res is None:
        return LPResult(False)
    value, z = res
    t = -value
    if t <= 0:
        return LPResult(False)
    x = tuple(z[i] - z[nvars + i] for i in range(nvars))
    return LPResult(True, x, t)


# ---------------------------------------------------------------------------
# Fourier-Motzkin oracle (small systems)


def fourier_motzkin_feasible(equalities: Sequence[tuple[Sequence[Fraction], Fraction]],
                             stricts: Sequence[tuple[Sequence[Fraction], Fraction]],
                             nvars: int, max_vars: int = 8) -> bool:
    """Independent feasibility check by variable elimination.

    Equalities are eliminated by substitution, strict inequalities by the
    classic positive/negative pairing.  Exponential; refuses nvars beyond
    max_vars after substitution.
    """
    eqs = [([Q(v) for v in a], Q(b)) for a, b in equalities]
    ineqs = [([Q(v) for v in c], Q(d)) for c, d in stricts]  # c.x > d

    # substitute equalities away
    live = list(range(nvars))
    while eqs:
        a, b = eqs.pop()
        j = next((k for k in range(len(a)) if a[k]), None)
        if j is None:
            if b != 0:
                return False
            continue
        coef = a[j]
        # x_j = (b - sum_{k!=j} a_k x_k)/coef
        def subst(vec, rhs):
            f = vec[j] / coef
            newv = [vk - f * ak for vk, ak in zip(vec, a)]
            newv[j] = Q(0)
            return newv, rhs - f * b
        eqs = [subst(v, r) for v, r in eqs]
        ineqs = [subst(v, r) for v, r in ineqs]

    active = [k for k in range(nvars) if any(v[k] for v, _ in ineqs)]
    if len(active) > max_vars:
        raise ValueError(f"fourier_motzkin_feasible limited to {max_vars} variables")

    for j in active:
        pos = [(v, r) for v, r in ineqs if v[j] > 0]
        neg = [(v, r) for v, r in ineqs if v[j] < 0]
        rest = [(v, r) for v, r in ineqs if not v[j]]
        new = rest
        for vp, rp in pos:
            for vn, rn in neg:
                # vp.x > rp with vp_j>0  and  vn.x > rn with vn_j<0
                # scale to cancel j: (-vn_j)*vp + vp_j*(-(-vn)) ...
                sp = -vn[j]
                sn = vp[j]
                vec = [sp * a + sn * b for a, b in zip(vp, vn)]
                vec[j] = Q(0)
                new.append((vec, sp * rp + sn * rn))
        ineqs = new

    return all(r < 0 for v, r in ineqs if not any(v))
