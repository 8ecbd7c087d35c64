"""Symbolic recursion for F_{k,Z}(m, n).

A case is a window of the m x n matrix holding zeros and "special" entries;
everything else is a fresh exp(1) variable.  A special entry is an
independent sum of exponential stages, each stage given by its rate.

One step of the recursion takes a minimum cover of the zeros, lets the
uncovered entries race, and hands the winner's position to the child as a
new zero.  The race time epsilon is charged ``k - |cover|`` times and is
added to every doubly covered entry as extra stages.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .exact import ONE, ZERO, RatFunc
from .pattern import (
    CoverSet,
    ZeroPattern,
    all_min_covers,
    avoid_cost,
    canonical_key,
    nu,
)

DEFAULT_DEPTH_LIMIT = 64


class EngineError(RuntimeError):
    pass


class CorrelationHazard(EngineError):
    """Two surviving entries would share the same epsilon stages."""


class DepthLimitExceeded(EngineError):
    pass


class AltInapplicable(EngineError):
    pass


class MemoConflict(AssertionError):
    pass


Cell = tuple[int, int]


@dataclass(frozen=True)
class Special:
    stages: tuple  # of RatFunc rates, never empty
    tag: Optional[int] = None  # id of the race whose epsilon was last appended

    def signature(self) -> str:
        return ",".join(str(r) for r in self.stages)


def _canon_stages(stages: Iterable[RatFunc]) -> tuple:
    # the sum of independent exponentials does not depend on stage order
    return tuple(sorted(stages, key=str))


@dataclass(frozen=True)
class CaseMatrix:
    k: int
    pattern: ZeroPattern
    specials: tuple = ()  # sorted tuple of (cell, Special)
    dims: Optional[tuple[int, int]] = None  # concrete (m0, n0), or None for symbolic
    depth: int = 0

    @classmethod
    def build(
        cls,
        k: int,
        pattern: ZeroPattern,
        specials: Mapping[Cell, Iterable] | None = None,
        dims: Optional[tuple[int, int]] = None,
    ) -> "CaseMatrix":
        sp = {}
        for cell, st in (specials or {}).items():
            if isinstance(st, Special):
                sp[cell] = st
                continue
            stages = tuple(RatFunc.coerce(x) for x in st)
            if not stages:
                raise ValueError("a special entry needs at least one stage")
            if dims is not None:
                stages = tuple(RatFunc.const(s.evaluate(*dims)) for s in stages)
            sp[cell] = Special(_canon_stages(stages))
        for cell in sp:
            if cell in pattern.zeros:
                raise ValueError(f"special at zero position {cell}")
            if not (0 <= cell[0] < pattern.rows and 0 <= cell[1] < pattern.cols):
                raise ValueError(f"special {cell} outside the window")
        if k < 0:
            raise ValueError("k must be nonnegative")
        return cls(k, pattern, tuple(sorted(sp.items())), dims)

    @property
    def special_map(self) -> dict:
        return dict(self.specials)

    def m(self) -> RatFunc:
        return RatFunc.m() if self.dims is None else RatFunc.const(self.dims[0])

    def n(self) -> RatFunc:
        return RatFunc.n() if self.dims is None else RatFunc.const(self.dims[1])

    def key(self):
        ex = {cell: sp.signature() for cell, sp in self.specials}
        return (self.k, self.dims, canonical_key(self.pattern, ex))

    def with_parts(self, k, pattern, specials: dict, dims) -> "CaseMatrix":
        return CaseMatrix(k, pattern, tuple(sorted(specials.items())), dims, self.depth)


@dataclass
class BranchOutcome:
    probability: RatFunc
    conditional_eps_mean: RatFunc
    child: CaseMatrix
    eps_stage_rates: list


@dataclass
class EngineStats:
    races: int = 0
    probability_checks: int = 0
    probability_failures: int = 0
    hazards: int = 0
    alt_used: int = 0
    fast_path: int = 0
    nodes: int = 0


_race_ids = itertools.count(1)


class Engine:
    """Holds the memo table and options for one family of computations."""

    def __init__(
        self,
        depth_limit: int = DEFAULT_DEPTH_LIMIT,
        fast_path: bool = True,
        record_tree: bool = False,
        cover_order: Optional[int] = None,
        delete_forced: bool = True,
    ):
        self.depth_limit = depth_limit
        self.fast_path = fast_path
        self.memo: dict = {}
        self.stats = EngineStats()
        self.record_tree = record_tree
        self.tree: dict = {}
        # cover_order: index into the ranked cover list used at the top level only
        self.cover_order = cover_order
        # off only for testing the row-deletion identity against plain recursion
        self.delete_forced = delete_forced
        self._lock = threading.Lock()

    # ------------------------------------------------------------------
    # memo

    def _memo_put(self, key, value: RatFunc):
        with self._lock:
            old = self.memo.get(key)
            if old is not None and old != value:
                raise MemoConflict(f"memo conflict for {key}: {old} vs {value}")
            self.memo[key] = value

    # ------------------------------------------------------------------
    # reduction

    def reduce(self, case: CaseMatrix) -> tuple[CaseMatrix, int, int]:
        """Apply superfluous-cell zeroing, forced-line deletion and trimming.

        Returns ``(reduced, dm, dn)`` with F_case(m, n) = F_reduced(m - dm, n - dn).
        """
        k = case.k
        Z = case.pattern
        sp = case.special_map
        dims = case.dims
        dm = dn = 0
        while True:
            if k <= 0 or nu(Z.zeros) >= k:
                break
            # superfluous window cells become zeros
            add = []
            for r in range(Z.rows):
                for c in range(Z.cols):
                    if (r, c) not in Z.zeros and avoid_cost(Z, r, c) >= k:
                        add.append((r, c))
            if add:
                Z = ZeroPattern(Z.rows, Z.cols, Z.zeros | set(add))
                for cell in add:
                    sp.pop(cell, None)
                continue
            if not self.delete_forced:
                break
            frow = next(
                (r for r in range(Z.rows) if any(z[0] == r for z in Z.zeros) and avoid_cost(Z, r, None) >= k),
                None,
            )
            if frow is not None:
                Z, sp = _delete_row(Z, sp, frow)
                k -= 1
                if dims is None:
                    sp = {c: Special(tuple(x.shift(1, 0) for x in s.stages), s.tag) for c, s in sp.items()}
                    sp = {c: Special(_canon_stages(s.stages), s.tag) for c, s in sp.items()}
                else:
                    dims = (dims[0] - 1, dims[1])
                dm += 1
                continue
            fcol = next(
                (c for c in range(Z.cols) if any(z[1] == c for z in Z.zeros) and avoid_cost(Z, None, c) >= k),
                None,
            )
            if fcol is not None:
                Zt, spt = _delete_row(Z.transpose(), {(c, r): s for (r, c), s in sp.items()}, fcol)
                Z = Zt.transpose()
                sp = {(r, c): s for (c, r), s in spt.items()}
                k -= 1
                if dims is None:
                    sp = {c: Special(_canon_stages(tuple(x.shift(0, 1) for x in s.stages)), s.tag) for c, s in sp.items()}
                else:
                    dims = (dims[0], dims[1] - 1)
                dn += 1
                continue
            break
        Z, sp = _trim(Z, sp)
        return case.with_parts(k, Z, sp, dims), dm, dn

    # ------------------------------------------------------------------
    # base case

    def base_case(self, case: CaseMatrix) -> Optional[RatFunc]:
        if case.k <= 0:
            return ZERO
        v = nu(case.pattern.zeros)
        if v >= case.k:
            return ZERO
        if self.fast_path and case.k >= 2 and v == case.k - 1 and not case.specials:
            from .conjecture import main_theorem_F

            F = main_theorem_F(case.pattern, case.k)
            self.stats.fast_path += 1
            if case.dims is not None:
                return RatFunc.const(F.evaluate(*case.dims))
            return F
        return None

    # ------------------------------------------------------------------
    # covers

    def ranked_covers(self, case: CaseMatrix) -> list[CoverSet]:
        sp = case.special_map
        Z = case.pattern
        covers = all_min_covers(Z)

        def rank(item):
            idx, cv = item
            dbl = [(r, c) for r in cv.row_set for c in cv.col_set]
            return (sum(1 for x in dbl if x in sp), len(dbl), idx)

        return [cv for _, cv in sorted(enumerate(covers), key=rank)]

    def choose_cover(self, case: CaseMatrix) -> CoverSet:
        return self.ranked_covers(case)[0]

    # ------------------------------------------------------------------
    # race

    def race(self, case: CaseMatrix, cover: CoverSet) -> list[BranchOutcome]:
        Z = case.pattern
        sp = case.special_map
        R, C = cover.row_set, cover.col_set
        for z in Z.zeros:
            if not cover.covers(z):
                raise ValueError("cover does not cover every zero")
        mS, nS = case.m(), case.n()
        rows, cols = Z.rows, Z.cols
        fresh_r = mS - rows
        fresh_c = nS - cols
        urows = [r for r in range(rows) if r not in R]
        ucols = [c for c in range(cols) if c not in C]

        classes = []  # (count, winner)
        specials_u = []
        for r in urows:
            for c in ucols:
                if (r, c) in sp:
                    specials_u.append(((r, c), sp[(r, c)].stages))
                else:
                    classes.append((ONE, ("cell", r, c)))
        for r in urows:
            classes.append((fresh_c, ("newcol", r)))
        for c in ucols:
            classes.append((fresh_r, ("newrow", c)))
        classes.append((fresh_r * fresh_c, ("newboth",)))
        classes = [(cnt, w) for cnt, w in classes if not cnt.is_zero()]
        if case.dims is not None:
            classes = [(cnt, w) for cnt, w in classes if cnt.const_value() > 0]
        G = ZERO
        for cnt, _ in classes:
            G = G + cnt
        if G.is_zero() and not specials_u:
            raise EngineError("no uncovered entries to race")

        tag = next(_race_ids)
        out: list[BranchOutcome] = []

        def expand(idx: tuple, prob: RatFunc, eps: list):
            lam = G
            for u, (_, stages) in enumerate(specials_u):
                lam = lam + stages[idx[u]]
            inv = lam.inverse()
            eps2 = eps + [lam]
            for cnt, w in classes:
                p = prob * cnt * inv
                out.append(self._branch(case, cover, p, eps2, w, specials_u, idx, tag))
            for u, (cell, stages) in enumerate(specials_u):
                p = prob * stages[idx[u]] * inv
                if idx[u] + 1 == len(stages):
                    out.append(self._branch(case, cover, p, eps2, ("cell",) + cell, specials_u, idx, tag))
                else:
                    expand(idx[:u] + (idx[u] + 1,) + idx[u + 1 :], p, eps2)

        expand(tuple(0 for _ in specials_u), ONE, [])
        self.stats.races += 1
        total = ZERO
        for b in out:
            total = total + b.probability
        self.stats.probability_checks += 1
        if total != ONE:
            self.stats.probability_failures += 1
            raise AssertionError(f"race probabilities sum to {total}, not 1")
        return out

    def _branch(self, case, cover, prob, eps, winner, specials_u, idx, tag) -> BranchOutcome:
        Z = case.pattern
        sp = case.special_map
        R, C = cover.row_set, cover.col_set
        rows, cols = Z.rows, Z.cols
        zeros = set(Z.zeros)
        new_sp: dict = {}
        # losers keep the stages they have not finished yet
        for u, (cell, stages) in enumerate(specials_u):
            if ("cell",) + cell == winner:
                continue
            new_sp[cell] = Special(_canon_stages(stages[idx[u] :]), sp[cell].tag)
        for cell, s in sp.items():
            if cell[0] in R or cell[1] in C:
                new_sp[cell] = s
        eps_t = tuple(eps)
        for r in R:
            for c in C:
                cell = (r, c)
                if cell in zeros:
                    zeros.discard(cell)
                    new_sp[cell] = Special(_canon_stages(eps_t), tag)
                elif cell in sp:
                    new_sp[cell] = Special(_canon_stages(sp[cell].stages + eps_t), tag)
                else:
                    new_sp[cell] = Special(_canon_stages((ONE,) + eps_t), tag)
        kind = winner[0]
        if kind == "cell":
            zeros.add((winner[1], winner[2]))
        elif kind == "newcol":
            zeros.add((winner[1], cols))
            cols += 1
        elif kind == "newrow":
            zeros.add((rows, winner[1]))
            rows += 1
        else:
            zeros.add((rows, cols))
            rows += 1
            cols += 1
        child = CaseMatrix(
            case.k,
            ZeroPattern(rows, cols, frozenset(zeros)),
            tuple(sorted(new_sp.items())),
            case.dims,
            case.depth + 1,
        )
        mean = ZERO
        for lam in eps:
            mean = mean + lam.inverse()
        return BranchOutcome(prob, mean, child, list(eps))

    # ------------------------------------------------------------------
    # recursion

    def value(self, case: CaseMatrix, strategy: str = "recurse") -> RatFunc:
        """F for an arbitrary case, in the case's own m and n."""
        red, dm, dn = self.reduce(case)
        v = self._value_reduced(red, strategy)
        if red.dims is None and (dm or dn):
            v = v.shift(-dm, -dn)
        return v

    def _value_reduced(self, case: CaseMatrix, strategy: str = "recurse") -> RatFunc:
        b = self.base_case(case)
        if b is not None:
            return b
        if case.depth > self.depth_limit:
            raise DepthLimitExceeded(f"depth limit {self.depth_limit} exceeded")
        key = case.key()
        if strategy == "recurse":
            hit = self.memo.get(key)
            if hit is not None:
                return hit
        self.stats.nodes += 1
        if strategy == "alt":
            v = self.recurse_alt(case)
        else:
            v = self._recurse_covers(case)
        self._memo_put(key, v)
        return v

    def _recurse_covers(self, case: CaseMatrix) -> RatFunc:
        covers = self.ranked_covers(case)
        if self.cover_order is not None and case.depth == 0:
            covers = covers[self.cover_order :] + covers[: self.cover_order]
        last: Optional[Exception] = None
        for cover in covers:
            try:
                return self.recurse_with(case, cover)
            except CorrelationHazard as e:
                self.stats.hazards += 1
                last = e
        try:
            v = self.recurse_alt(case)
            self.stats.alt_used += 1
            return v
        except AltInapplicable:
            raise CorrelationHazard(f"every minimum cover hits a correlation hazard ({last})") from last

    def recurse_with(self, case: CaseMatrix, cover: CoverSet) -> RatFunc:
        """One recursion step with a given cover."""
        branches = self.race(case, cover)
        free = case.k - len(cover)
        total = ZERO
        record = [] if self.record_tree else None
        dbl = {(r, c) for r in cover.row_set for c in cover.col_set}
        for br in branches:
            child = br.child
            red, dm, dn = self.reduce(child)
            if len(dbl) >= 2:
                tagged = [cell for cell, s in red.specials if s.tag is not None and s.tag == _tag_of(child, dbl)]
                if len(tagged) >= 2:
                    raise CorrelationHazard(f"{len(tagged)} entries share one epsilon after cover {cover.describe()}")
            cv = self._value_reduced(red)
            if red.dims is None and (dm or dn):
                cv = cv.shift(-dm, -dn)
            total = total + br.probability * (br.conditional_eps_mean * free + cv)
            if record is not None:
                record.append(
                    {
                        "probability": str(br.probability),
                        "eps_mean": str(br.conditional_eps_mean),
                        "child": _key_str(red.key()),
                    }
                )
        if record is not None:
            self.tree[_key_str(case.key())] = {"cover": cover.describe(), "branches": record}
        return total

    def recurse(self, case: CaseMatrix) -> RatFunc:
        return self.value(case)

    def recurse_alt(self, case: CaseMatrix) -> RatFunc:
        """Solve the linear identity built from expected uncovered usage."""
        if case.specials:
            raise AltInapplicable("alternative recursion inapplicable: case has special entries")
        b = self.base_case(case)
        if b is not None:
            return b
        Z = case.pattern
        cover = None
        for cv in self.ranked_covers(case):
            if not any((r, c) in Z.zeros for r in cv.row_set for c in cv.col_set):
                cover = cv
                break
        if cover is None:
            raise AltInapplicable("alternative recursion inapplicable: doubly covered zero")
        mS, nS = case.m(), case.n()
        R, C = cover.row_set, cover.col_set
        urows = [r for r in range(Z.rows) if r not in R]
        ucols = [c for c in range(Z.cols) if c not in C]
        terms = []  # (count, child pattern)
        for r in urows:
            for c in ucols:
                terms.append((ONE, Z.add((r, c))))
        fr, fc = mS - Z.rows, nS - Z.cols
        for r in urows:
            terms.append((fc, Z.add((r, Z.cols))))
        for c in ucols:
            terms.append((fr, Z.add((Z.rows, c))))
        terms.append((fr * fc, Z.add((Z.rows, Z.cols))))
        size_R = ZERO
        rhs = RatFunc.const(case.k - len(cover))
        for cnt, Zc in terms:
            if cnt.is_zero() or (case.dims is not None and cnt.const_value() <= 0):
                continue
            size_R = size_R + cnt
            rhs = rhs + cnt * self.value(CaseMatrix(case.k, Zc, (), case.dims, case.depth + 1))
        dbl = [(r, c) for r in R for c in C]
        for d in dbl:
            rhs = rhs - self.value(CaseMatrix(case.k, Z.add(d), (), case.dims, case.depth + 1))
        self.stats.alt_used += 1
        return rhs / (size_R - len(dbl))

    # ------------------------------------------------------------------

    def F_empty(self, k: int, allow_long: bool = False) -> RatFunc:
        if k < 1:
            raise ValueError("k must be positive")
        if k > 5 and not (allow_long and k == 6):
            raise ValueError("k > 5 needs the long-run flag (k = 6 at most)")
        return self.value(CaseMatrix(k, ZeroPattern.empty()))

    def square_reduce(self, n0: int) -> Fraction:
        """F_{n0}(n0, n0) through row then column minimum subtraction."""
        if not 2 <= n0 <= 4:
            raise ValueError("square_reduce supports 2 <= n0 <= 4")
        total = Fraction(1)  # expected sum of the row minima
        base = Fraction(1, n0)
        for row_choice in itertools.product(range(n0), repeat=n0):
            p_rows = base**n0
            zero_free = [c for c in range(n0) if c not in row_choice]
            total += p_rows * Fraction(len(zero_free), n0)
            row_zeros = {(r, c) for r, c in enumerate(row_choice)}
            for col_choice in itertools.product(range(n0), repeat=len(zero_free)):
                p = p_rows * base ** len(zero_free)
                zeros = row_zeros | {(r, c) for c, r in zip(zero_free, col_choice)}
                case = CaseMatrix(n0, ZeroPattern(n0, n0, frozenset(zeros)), (), (n0, n0))
                total += p * self.value(case).const_value()
        return total

    def export_tree(self) -> dict:
        return dict(self.tree)


def _tag_of(child: CaseMatrix, dbl) -> Optional[int]:
    for cell, s in child.specials:
        if cell in dbl:
            return s.tag
    return None


def _key_str(key) -> str:
    return repr(key)


def _delete_row(Z: ZeroPattern, sp: dict, r0: int):
    zeros = frozenset((r - (r > r0), c) for r, c in Z.zeros if r != r0)
    nsp = {(r - (r > r0), c): s for (r, c), s in sp.items() if r != r0}
    return ZeroPattern(Z.rows - 1, Z.cols, zeros), nsp


def _trim(Z: ZeroPattern, sp: dict):
    used_r = sorted({r for r, _ in Z.zeros} | {r for r, _ in sp})
    used_c = sorted({c for _, c in Z.zeros} | {c for _, c in sp})
    rmap = {r: i for i, r in enumerate(used_r)}
    cmap = {c: i for i, c in enumerate(used_c)}
    zeros = frozenset((rmap[r], cmap[c]) for r, c in Z.zeros)
    nsp = {(rmap[r], cmap[c]): s for (r, c), s in sp.items()}
    return ZeroPattern(len(used_r), len(used_c), zeros), nsp


# ----------------------------------------------------------------------
# convenience wrappers around a shared engine

_default_engine: Optional[Engine] = None


def default_engine() -> Engine:
    global _default_engine
    if _default_engine is None:
        _default_engine = Engine()
    return _default_engine


def compute_F(
    Z: ZeroPattern,
    k: int,
    specials: Mapping[Cell, Iterable] | None = None,
    engine: Engine | None = None,
    strategy: str = "recurse",
) -> RatFunc:
    eng = engine or default_engine()
    case = CaseMatrix.build(k, Z, specials)
    if strategy == "alt":
        red, dm, dn = eng.reduce(case)
        v = eng.recurse_alt(red)
        return v.shift(-dm, -dn) if (dm or dn) else v
    return eng.value(case)


def F_empty(k: int, allow_long: bool = False, engine: Engine | None = None) -> RatFunc:
    return (engine or default_engine()).F_empty(k, allow_long)


def square_reduce(n0: int, engine: Engine | None = None) -> Fraction:
    return (engine or default_engine()).square_reduce(n0)
