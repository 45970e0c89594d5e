"""Built-in infinite graph families, CLI-constructible.

half-plane  lattice above an absorbing x-axis (one end)
ladder      bi-infinite ladder with an absorbing bottom rail (two ends)
tree:<b>    b-ary tree hanging off one absorbing root vertex (transient)
line        the integers with an absorbing origin (recurrent fixture)

All families are quasi-reversible: every edge between interior vertices is
reciprocated and the remaining edges point into absorbing vertices.
"""

from __future__ import annotations

from .ends import LazyGraph
from .errors import InputError


def _hp_id(x: int, y: int) -> str:
    return f"{x},{y}"


def _hp_neighbors(v: str):
    x, y = (int(p) for p in v.split(","))
    if y == 0:
        return [(v, 1.0)]
    return [(_hp_id(x + 1, y), 0.25), (_hp_id(x - 1, y), 0.25),
            (_hp_id(x, y + 1), 0.25), (_hp_id(x, y - 1), 0.25)]


def half_plane() -> LazyGraph:
    """Lattice points (x, y) with y >= 0; the x-axis is absorbing, interior
    points step to their four lattice neighbors with weight 1/4."""
    return LazyGraph(_hp_id(0, 1), _hp_neighbors, name="half-plane")


def _ladder_neighbors(v: str):
    n, rail = (int(p) for p in v.split(","))
    if rail == 0:
        return [(v, 1.0)]
    third = 1.0 / 3.0
    return [(f"{n + 1},1", third), (f"{n - 1},1", third), (f"{n},0", third)]


def ladder() -> LazyGraph:
    """Top rail of interior vertices (n, 1), each wired to both horizontal
    neighbors and to its absorbing bottom-rail vertex (n, 0)."""
    return LazyGraph("0,1", _ladder_neighbors, name="ladder")


_TREE_ROOT = "root"
_TREE_TRUNK = "t"


def _tree_neighbors_factory(b: int):
    w = 1.0 / (b + 1)

    def neighbors(v: str):
        if v == _TREE_ROOT:
            return [(v, 1.0)]
        parent = _TREE_ROOT if v == _TREE_TRUNK else v[:-1]
        row = [(parent, w)]
        row.extend((v + str(i), w) for i in range(b))
        return row

    return neighbors


def tree(b: int) -> LazyGraph:
    """Infinite b-ary tree rooted at the interior trunk vertex, with one
    absorbing vertex attached above it; every interior vertex has its parent
    and b children, each with weight 1/(b+1)."""
    if not 2 <= b <= 9:
        raise InputError(f"tree branching factor must be in 2..9, got {b}")
    return LazyGraph(_TREE_TRUNK, _tree_neighbors_factory(b), name=f"tree:{b}")


def _line_neighbors(v: str):
    n = int(v)
    if n == 0:
        return [(v, 1.0)]
    return [(str(n + 1), 0.5), (str(n - 1), 0.5)]


def line() -> LazyGraph:
    """The integers with the origin absorbing; interior vertices step left
    or right with weight 1/2.  Simple random walk on the line is recurrent,
    which makes this the standard divergence fixture."""
    return LazyGraph("1", _line_neighbors, name="line")


def make_family(spec: str) -> LazyGraph:
    """Parse the CLI family syntax: half-plane | ladder | tree:<b> | line."""
    if spec == "half-plane":
        return half_plane()
    if spec == "ladder":
        return ladder()
    if spec == "line":
        return line()
    if spec.startswith("tree:"):
        try:
            b = int(spec.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad tree branching factor in {spec!r}") from None
        return tree(b)
    raise InputError(f"unknown family {spec!r} "
                     "(choose half-plane | ladder | tree:<b> | line)")
