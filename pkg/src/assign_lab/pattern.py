"""Combinatorics of zero patterns: matchings, covers and canonical forms.

Positions are 0-based inside the library; text formats and the CLI use
1-based rows and columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from math import comb
from typing import Iterable, Mapping

Cell = tuple[int, int]

MAX_WINDOW = 8
MAX_ACYCLIC_ZEROS = 12


class BoundsError(ValueError):
    """An enumeration bound was exceeded."""


@dataclass(frozen=True)
class ZeroPattern:
    rows: int
    cols: int
    zeros: frozenset

    def __post_init__(self):
        object.__setattr__(self, "zeros", frozenset(self.zeros))
        for r, c in self.zeros:
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ValueError(f"zero {(r + 1, c + 1)} outside the {self.rows}x{self.cols} window")

    @classmethod
    def of(cls, cells: Iterable[Cell], rows: int | None = None, cols: int | None = None) -> "ZeroPattern":
        """Build from 1-based cells; the window defaults to the bounding box."""
        z = frozenset((r - 1, c - 1) for r, c in cells)
        if rows is None:
            rows = max((r + 1 for r, _ in z), default=0)
        if cols is None:
            cols = max((c + 1 for _, c in z), default=0)
        return cls(rows, cols, z)

    @classmethod
    def empty(cls, rows: int = 0, cols: int = 0) -> "ZeroPattern":
        return cls(rows, cols, frozenset())

    def cells_1based(self) -> list[Cell]:
        return sorted((r + 1, c + 1) for r, c in self.zeros)

    def row_cols(self, r: int) -> frozenset:
        return frozenset(c for rr, c in self.zeros if rr == r)

    def col_rows(self, c: int) -> frozenset:
        return frozenset(r for r, cc in self.zeros if cc == c)

    def transpose(self) -> "ZeroPattern":
        return ZeroPattern(self.cols, self.rows, frozenset((c, r) for r, c in self.zeros))

    def add(self, cell: Cell) -> "ZeroPattern":
        r, c = cell
        return ZeroPattern(max(self.rows, r + 1), max(self.cols, c + 1), self.zeros | {cell})

    def __len__(self):
        return len(self.zeros)

    def to_text(self, specials: Mapping[Cell, str] | None = None) -> str:
        specials = specials or {}
        lines = [f"{self.rows} {self.cols}"]
        for r in range(self.rows):
            row = []
            for c in range(self.cols):
                if (r, c) in self.zeros:
                    row.append("0")
                else:
                    row.append(specials.get((r, c), "."))
            lines.append("".join(row))
        return "\n".join(lines) + "\n"


def parse_pattern_text(text: str) -> tuple[ZeroPattern, dict[Cell, str]]:
    """Parse the ``R C`` header plus grid format; returns the pattern and special labels."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty pattern text")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError("pattern header must be 'R C'")
    R, C = int(head[0]), int(head[1])
    if R < 0 or C < 0:
        raise ValueError("negative window size")
    grid = lines[1:]
    if len(grid) != R:
        raise ValueError(f"expected {R} grid lines, got {len(grid)}")
    zeros = set()
    labels: dict[Cell, str] = {}
    for r, row in enumerate(grid):
        if len(row) != C:
            raise ValueError(f"grid line {r + 1} has length {len(row)}, expected {C}")
        for c, ch in enumerate(row):
            if ch == "0":
                zeros.add((r, c))
            elif ch == ".":
                pass
            elif "A" <= ch <= "Z":
                labels[(r, c)] = ch
            else:
                raise ValueError(f"bad pattern character {ch!r}")
    return ZeroPattern(R, C, frozenset(zeros)), labels


@dataclass(frozen=True, order=True)
class CoverSet:
    row_set: frozenset
    col_set: frozenset

    def __post_init__(self):
        object.__setattr__(self, "row_set", frozenset(self.row_set))
        object.__setattr__(self, "col_set", frozenset(self.col_set))

    def __len__(self):
        return len(self.row_set) + len(self.col_set)

    def covers(self, cell: Cell) -> bool:
        return cell[0] in self.row_set or cell[1] in self.col_set

    def doubly(self, cell: Cell) -> bool:
        return cell[0] in self.row_set and cell[1] in self.col_set

    def sort_key(self):
        return (len(self.col_set), sorted(self.row_set), sorted(self.col_set))

    def describe(self) -> str:
        parts = []
        if self.row_set:
            parts.append("rows " + " ".join(str(r + 1) for r in sorted(self.row_set)))
        if self.col_set:
            parts.append("columns " + " ".join(str(c + 1) for c in sorted(self.col_set)))
        return "; ".join(parts) if parts else "(empty)"

    @classmethod
    def of(cls, rows: Iterable[int] = (), cols: Iterable[int] = ()) -> "CoverSet":
        """1-based constructor."""
        return cls(frozenset(r - 1 for r in rows), frozenset(c - 1 for c in cols))


@dataclass
class CoverCounts:
    k: int
    rows: int
    cols: int
    g: dict

    def d(self, s: int, t: int, r: int) -> int:
        return comb(self.rows, s) * comb(self.cols, t) - self.g.get((s, t, r), 0)


# ---------------------------------------------------------------------------
# matching


def _matching(zeros: frozenset) -> dict:
    adj: dict[int, list[int]] = {}
    for r, c in sorted(zeros):
        adj.setdefault(r, []).append(c)
    match_col: dict[int, int] = {}

    def augment(r, seen):
        for c in adj[r]:
            if c in seen:
                continue
            seen.add(c)
            if c not in match_col or augment(match_col[c], seen):
                match_col[c] = r
                return True
        return False

    for r in adj:
        augment(r, set())
    return match_col


@lru_cache(maxsize=1 << 16)
def _nu(zeros: frozenset) -> int:
    return len(_matching(zeros))


def max_zero_matching(Z: ZeroPattern) -> tuple[int, set]:
    mc = _matching(Z.zeros)
    return len(mc), {(r, c) for c, r in mc.items()}


def nu(zeros: Iterable[Cell]) -> int:
    """Size of a maximum matching of the given zero cells."""
    return _nu(frozenset(zeros))


def contains_assignment(Z: ZeroPattern, k: int) -> bool:
    if k < 0:
        raise ValueError("k must be nonnegative")
    return nu(Z.zeros) >= k


def _konig_cover(Z: ZeroPattern) -> CoverSet:
    mc = _matching(Z.zeros)
    matched_row = {r: c for c, r in mc.items()}
    adj: dict[int, list[int]] = {}
    for r, c in Z.zeros:
        adj.setdefault(r, []).append(c)
    # alternating reachability from unmatched rows
    vis_r = {r for r in adj if r not in matched_row}
    vis_c: set[int] = set()
    stack = list(vis_r)
    while stack:
        r = stack.pop()
        for c in adj[r]:
            if c not in vis_c:
                vis_c.add(c)
                r2 = mc.get(c)
                if r2 is not None and r2 not in vis_r:
                    vis_r.add(r2)
                    stack.append(r2)
    rows = {r for r in adj if r not in vis_r}
    return CoverSet(frozenset(rows), frozenset(vis_c))


def _check_window(Z: ZeroPattern):
    if Z.rows > MAX_WINDOW or Z.cols > MAX_WINDOW:
        raise BoundsError(f"window {Z.rows}x{Z.cols} exceeds {MAX_WINDOW}x{MAX_WINDOW}")


def _covers_for_rows(Z: ZeroPattern, rows: frozenset) -> CoverSet:
    return CoverSet(rows, frozenset(c for r, c in Z.zeros if r not in rows))


@lru_cache(maxsize=1 << 14)
def _all_min_covers(Z: ZeroPattern) -> tuple:
    size = nu(Z.zeros)
    zrows = sorted({r for r, _ in Z.zeros})
    out = []
    # a minimum cover is determined by its row set; rows without zeros are never in one
    for s in range(min(size, len(zrows)) + 1):
        for rs in combinations(zrows, s):
            cv = _covers_for_rows(Z, frozenset(rs))
            if len(cv) == size:
                out.append(cv)
    out.sort(key=CoverSet.sort_key)
    return tuple(out)


def all_min_covers(Z: ZeroPattern) -> list[CoverSet]:
    _check_window(Z)
    return list(_all_min_covers(Z))


def min_cover(Z: ZeroPattern) -> CoverSet:
    if Z.rows > MAX_WINDOW or Z.cols > MAX_WINDOW:
        return _konig_cover(Z)
    return _all_min_covers(Z)[0]


def is_partial_cover(Z: ZeroPattern, sigma: CoverSet, budget: int) -> bool:
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    rest = frozenset(z for z in Z.zeros if not sigma.covers(z))
    return _nu(rest) <= budget


def _subsets(n: int):
    for mask in range(1 << n):
        yield mask, bin(mask).count("1")


@lru_cache(maxsize=4096)
def _residual_nu_table(Z: ZeroPattern) -> dict:
    """(row_mask, col_mask) -> nu of the zeros left uncovered."""
    out = {}
    zs = sorted(Z.zeros)
    for rm in range(1 << Z.rows):
        left = [z for z in zs if not (rm >> z[0]) & 1]
        for cm in range(1 << Z.cols):
            rest = frozenset(z for z in left if not (cm >> z[1]) & 1)
            out[(rm, cm)] = _nu(rest)
    return out


@lru_cache(maxsize=4096)
def _counts(Z: ZeroPattern, k: int) -> dict:
    table = _residual_nu_table(Z)
    g: dict = {}
    for (rm, cm), v in table.items():
        s = bin(rm).count("1")
        t = bin(cm).count("1")
        for r in range(max(v, 0), k):
            g[(s, t, r)] = g.get((s, t, r), 0) + 1
    # store explicit zeros for the full index range
    for s in range(Z.rows + 1):
        for t in range(Z.cols + 1):
            for r in range(k):
                g.setdefault((s, t, r), 0)
    return g


def partial_cover_counts(Z: ZeroPattern, k: int) -> CoverCounts:
    _check_window(Z)
    if k > MAX_WINDOW:
        raise BoundsError(f"k={k} exceeds {MAX_WINDOW}")
    return CoverCounts(k, Z.rows, Z.cols, dict(_counts(Z, k)))


def avoid_cost(Z: ZeroPattern, row: int | None, col: int | None) -> int:
    """Fewest lines covering Z while using neither ``row`` nor ``col``.

    Zeros in the banned row must be covered by their columns and vice versa.
    Returns a large number if a zero sits at the banned intersection.
    """
    if row is not None and col is not None and (row, col) in Z.zeros:
        return 1 << 30
    fcols = {c for r, c in Z.zeros if r == row}
    frows = {r for r, c in Z.zeros if c == col}
    rest = frozenset((r, c) for r, c in Z.zeros if r not in frows and c not in fcols)
    return len(fcols) + len(frows) + _nu(rest)


def superfluous(Z: ZeroPattern, k: int, cell: Cell) -> bool:
    if cell in Z.zeros:
        raise ValueError("cell is a zero")
    return avoid_cost(Z, cell[0], cell[1]) >= k


def forced_lines(Z: ZeroPattern, k: int) -> tuple[set, set]:
    rows = {r for r in range(Z.rows) if any(z[0] == r for z in Z.zeros) and avoid_cost(Z, r, None) >= k}
    cols = {c for c in range(Z.cols) if any(z[1] == c for z in Z.zeros) and avoid_cost(Z, None, c) >= k}
    return rows, cols


# ---------------------------------------------------------------------------
# acyclicity


def _single_line_min_cover_avoiding(zeros: frozenset, cell: Cell) -> bool:
    size = _nu(zeros)
    rows = {r for r, _ in zeros}
    cols = {c for _, c in zeros}
    if len(rows) == size and cell[0] not in rows:
        return True
    if len(cols) == size and cell[1] not in cols:
        return True
    return False


@lru_cache(maxsize=1 << 14)
def _acyclic(zeros: frozenset) -> bool:
    if not zeros:
        return True
    for z in zeros:
        rest = zeros - {z}
        if _single_line_min_cover_avoiding(rest, z) and _acyclic(_normal_cells(rest)):
            return True
    return False


def _normal_cells(zeros: frozenset) -> frozenset:
    # compress empty rows/columns so isomorphic subproblems share memo entries
    rs = {r: i for i, r in enumerate(sorted({r for r, _ in zeros}))}
    cs = {c: i for i, c in enumerate(sorted({c for _, c in zeros}))}
    return frozenset((rs[r], cs[c]) for r, c in zeros)


def is_acyclic(Z: ZeroPattern) -> bool:
    if len(Z.zeros) > MAX_ACYCLIC_ZEROS:
        raise BoundsError(f"|Z|={len(Z.zeros)} exceeds {MAX_ACYCLIC_ZEROS}")
    return _acyclic(_normal_cells(Z.zeros))


def lambda_row(Z: ZeroPattern) -> tuple:
    counts: dict[int, int] = {}
    for r, _ in Z.zeros:
        counts[r] = counts.get(r, 0) + 1
    return tuple(sorted(counts.values(), reverse=True))


def lambda_col(Z: ZeroPattern) -> tuple:
    return lambda_row(Z.transpose())


# ---------------------------------------------------------------------------
# canonical forms


def canonical_key(Z: ZeroPattern, extras: Mapping[Cell, str] | Iterable = ()) -> tuple:
    """Key invariant under row and column permutations of the window.

    ``extras`` maps window cells to stage signatures.  Transposition is not
    an allowed symmetry.
    """
    if isinstance(extras, Mapping):
        ex = dict(extras)
    else:
        ex = dict(extras)
    if Z.rows > MAX_WINDOW or Z.cols > MAX_WINDOW:
        raise BoundsError("window too large for canonical_key")
    return (Z.rows, Z.cols, _canon(Z.rows, Z.cols, Z.zeros, tuple(sorted(ex.items()))))


def _code(zeros, ex, r, c) -> str:
    if (r, c) in zeros:
        return "0"
    s = ex.get((r, c))
    return "" if s is None else "S" + s


@lru_cache(maxsize=1 << 16)
def _canon(R: int, C: int, zeros: frozenset, ex_items: tuple) -> tuple:
    ex = dict(ex_items)
    grid = [[_code(zeros, ex, r, c) for c in range(C)] for r in range(R)]
    # refine: sort rows into classes by their multiset of codes, permute only within classes
    row_sig = [tuple(sorted(grid[r])) for r in range(R)]
    col_sig = [tuple(sorted(grid[r][c] for r in range(R))) for c in range(C)]
    order_rows = sorted(range(R), key=lambda r: row_sig[r])
    classes: list[list[int]] = []
    for r in order_rows:
        if classes and row_sig[classes[-1][0]] == row_sig[r]:
            classes[-1].append(r)
        else:
            classes.append([r])
    best = None
    for perm in _class_perms(classes):
        cols = sorted((col_sig[c],) + tuple(grid[r][c] for r in perm) for c in range(C))
        key = tuple(row_sig[r] for r in perm) + tuple(tuple(x) for x in cols)
        if best is None or key < best:
            best = key
    return best if best is not None else ()


def _class_perms(classes):
    if not classes:
        yield ()
        return
    head, rest = classes[0], classes[1:]
    for p in permutations(head):
        for q in _class_perms(rest):
            yield p + q


def isomorphic_bruteforce(Z1: ZeroPattern, Z2: ZeroPattern) -> bool:
    """Reference isomorphism test by trying all row and column permutations."""
    if (Z1.rows, Z1.cols, len(Z1.zeros)) != (Z2.rows, Z2.cols, len(Z2.zeros)):
        return False
    for rp in permutations(range(Z1.rows)):
        for cp in permutations(range(Z1.cols)):
            if frozenset((rp[r], cp[c]) for r, c in Z1.zeros) == Z2.zeros:
                return True
    return False
