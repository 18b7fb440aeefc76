"""Finite quotients of a free group and induced distributions on them.

A quotient is specified either by permutation images of the generators
(the group they generate is enumerated breadth-first, giving a stable
element indexing with the identity at 0) or by an explicit multiplication
table.  On top of it live the exact pushforward of the uniform law on a
radius-k sphere (non-backtracking transfer on states (element, last
letter)), the truncated induced measure that discards short elements,
total-variation distances, the averaging walk operator, mixing times, and
the exponential-mixing check for truncated measures.

Text format for quotient files::

    n=2
    points=3
    gen a = (1 2)
    gen b = (1 2 3)

or, with an explicit multiplication table over element indices (0 is the
identity, rows separated by ';')::

    n=2
    table = 0 1 2 ; 1 2 0 ; 2 0 1
    gen a = 1
    gen b = 0
"""
from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .densities import Density
from .errors import BudgetExceededError, PreconditionError
from .words import alphabet, letter_key, letter_to_char, sphere_size

DEFAULT_GROUP_ORDER_CAP = 100_000


def _parse_cycles(text: str, points: int) -> tuple[int, ...]:
    """Parse a product of cycles over 1-based points into a 0-based map."""
    perm = list(range(points))
    body = text.strip()
    if body in ("()", "id", ""):
        return tuple(perm)
    for cyc in re.findall(r"\(([^()]*)\)", body):
        entries = [int(t) for t in cyc.replace(",", " ").split()]
        if not entries:
            continue
        if any(not 1 <= e <= points for e in entries):
            raise ValueError(f"cycle {cyc!r} uses points outside 1..{points}")
        if len(set(entries)) != len(entries):
            raise ValueError(f"cycle {cyc!r} repeats a point")
        for i, e in enumerate(entries):
            perm[e - 1] = entries[(i + 1) % len(entries)] - 1
    return tuple(perm)


def _invert_perm(p: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


def _compose(p: tuple[int, ...], q: tuple[int, ...]) -> tuple[int, ...]:
    # right action: (p*q)(i) = q(p(i)), so word images fold left-to-right
    return tuple(q[i] for i in p)


@dataclass
class FiniteQuotient:
    """A finite factor group with designated generator images.

    ``letter_action[li][e]`` is the index of e multiplied on the right by
    the image of the li-th letter (canonical letter order).  Element 0 is
    the identity.
    """

    n: int
    size: int
    letter_action: tuple[tuple[int, ...], ...]
    name: str = "quotient"
    _sphere_cache: list[list[int]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self._np_action = [np.array(a, dtype=np.int64) for a in self.letter_action]
        reached = self._bfs_reachable()
        if len(reached) != self.size:
            raise ValueError(
                f"generator images reach only {len(reached)} of {self.size} elements"
            )

    def _bfs_reachable(self) -> set[int]:
        seen = {0}
        queue = deque([0])
        while queue:
            e = queue.popleft()
            for act in self.letter_action:
                t = act[e]
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
        return seen

    @classmethod
    def from_permutations(
        cls,
        n: int,
        gen_perms: list[tuple[int, ...]],
        name: str = "quotient",
        order_cap: int = DEFAULT_GROUP_ORDER_CAP,
    ) -> "FiniteQuotient":
        if len(gen_perms) != n:
            raise ValueError(f"need {n} generator permutations, got {len(gen_perms)}")
        points = len(gen_perms[0])
        if any(len(p) != points for p in gen_perms):
            raise ValueError("generator permutations act on different point sets")
        letter_perms = []
        for p in gen_perms:
            letter_perms.append(tuple(p))
            letter_perms.append(_invert_perm(tuple(p)))
        ident = tuple(range(points))
        index = {ident: 0}
        order = [ident]
        queue = deque([ident])
        while queue:
            e = queue.popleft()
            for lp in letter_perms:
                t = _compose(e, lp)
                if t not in index:
                    if len(order) >= order_cap:
                        raise BudgetExceededError(
                            f"group order exceeds cap {order_cap}"
                        )
                    index[t] = len(order)
                    order.append(t)
                    queue.append(t)
        action = tuple(
            tuple(index[_compose(e, lp)] for e in order) for lp in letter_perms
        )
        return cls(n=n, size=len(order), letter_action=action, name=name)

    @classmethod
    def from_table(
        cls,
        n: int,
        table: list[list[int]],
        gen_images: list[int],
        name: str = "quotient",
    ) -> "FiniteQuotient":
        m = len(table)
        if any(len(row) != m for row in table):
            raise ValueError("multiplication table is not square")
        if any(table[0][j] != j or table[j][0] != j for j in range(m)):
            raise ValueError("element 0 of the table is not an identity")
        if len(gen_images) != n:
            raise ValueError(f"need {n} generator images, got {len(gen_images)}")
        inverses = [None] * m
        for g in range(m):
            for h in range(m):
                if table[g][h] == 0:
                    inverses[g] = h
        if any(v is None for v in inverses):
            raise ValueError("multiplication table has a non-invertible element")
        action = []
        for img in gen_images:
            if not 0 <= img < m:
                raise ValueError(f"generator image {img} outside 0..{m - 1}")
            action.append(tuple(table[e][img] for e in range(m)))
            action.append(tuple(table[e][inverses[img]] for e in range(m)))
        return cls(n=n, size=m, letter_action=tuple(action), name=name)

    @classmethod
    def parse(cls, text: str, name: str = "quotient") -> "FiniteQuotient":
        n = None
        points = None
        table_rows = None
        gens: dict[int, str] = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            key = key.strip().lower()
            value = value.strip()
            if key == "n":
                n = int(value)
            elif key == "points":
                points = int(value)
            elif key == "table":
                table_rows = value
            elif key.startswith("gen "):
                gen_name = key[4:].strip()
                idx = ord(gen_name) - ord("a")
                if len(gen_name) != 1 or idx < 0:
                    raise ValueError(f"bad generator name {gen_name!r}")
                gens[idx] = value
            else:
                raise ValueError(f"unknown quotient-spec line {line!r}")
        if n is None:
            raise ValueError("quotient spec is missing 'n='")
        if sorted(gens) != list(range(n)):
            raise ValueError(f"quotient spec must define gen a..{chr(ord('a') + n - 1)}")
        if table_rows is not None:
            table = [
                [int(t) for t in row.split()]
                for row in table_rows.split(";")
                if row.strip()
            ]
            images = [int(gens[i]) for i in range(n)]
            return cls.from_table(n, table, images, name=name)
        if points is None:
            raise ValueError("permutation quotient spec is missing 'points='")
        perms = [_parse_cycles(gens[i], points) for i in range(n)]
        return cls.from_permutations(n, perms, name=name)

    @classmethod
    def load(cls, path) -> "FiniteQuotient":
        from pathlib import Path

        p = Path(path)
        return cls.parse(p.read_text(), name=p.stem)

    # -- group operations ------------------------------------------------

    def letter_index(self, letter: int) -> int:
        li = letter_key(letter)
        if not 0 <= li < 2 * self.n:
            raise ValueError(f"letter {letter} outside rank {self.n}")
        return li

    def image_of(self, word) -> int:
        e = 0
        for l in word:
            e = self.letter_action[self.letter_index(l)][e]
        return e

    def uniform(self) -> np.ndarray:
        return np.full(self.size, 1.0 / self.size)

    def point_mass(self, element: int = 0) -> np.ndarray:
        p = np.zeros(self.size)
        p[element] = 1.0
        return p

    # -- sphere pushforward (non-backtracking transfer) -------------------

    def sphere_counts_series(self, kmax: int) -> list[list[int]]:
        """Exact counts of length-k reduced words per image element, k<=kmax.

        Cached and extended on demand; all arithmetic in exact integers.
        """
        if not self._sphere_cache:
            self._sphere_cache.append([1] + [0] * (self.size - 1))
            self._level = None  # type: ignore[attr-defined]
        have = len(self._sphere_cache) - 1
        if kmax <= have:
            return self._sphere_cache[: kmax + 1]
        two_n = 2 * self.n
        level = getattr(self, "_level", None)
        if level is None and have >= 1:
            # cache was built in a previous call chain; rebuild from scratch
            self._sphere_cache = self._sphere_cache[:1]
            have = 0
        if have == 0:
            level = [[0] * two_n for _ in range(self.size)]
            for li in range(two_n):
                level[self.letter_action[li][0]][li] += 1
            self._sphere_cache.append([sum(row) for row in level])
            have = 1
        for _ in range(have, kmax):
            new = [[0] * two_n for _ in range(self.size)]
            for e in range(self.size):
                row = level[e]
                tot = sum(row)
                if not tot:
                    continue
                for li in range(two_n):
                    c = tot - row[li ^ 1]
                    if c:
                        new[self.letter_action[li][e]][li] += c
            level = new
            self._sphere_cache.append([sum(row) for row in level])
        self._level = level  # type: ignore[attr-defined]
        return self._sphere_cache[: kmax + 1]

    def sphere_pushforward(self, k: int) -> np.ndarray:
        counts = self.sphere_counts_series(k)[k]
        total = sphere_size(self.n, k)
        return np.array([c / total for c in counts])

    # -- averaging walk operator ------------------------------------------

    def simple_step(self, p: np.ndarray) -> np.ndarray:
        """One step of the uniform nearest-neighbour averaging operator.

        Coincident generator images contribute with multiplicity in the
        1/(2n) average.
        """
        q = np.zeros(self.size)
        w = 1.0 / (2 * self.n)
        for act in self._np_action:
            np.add.at(q, act, p * w)
        return q

    def simple_walk_distribution(self, steps: int) -> np.ndarray:
        p = self.point_mass(0)
        for _ in range(steps):
            p = self.simple_step(p)
        return p


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Half the L1 distance between two distributions of equal length."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"distribution length mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


@dataclass(frozen=True)
class MixingReport:
    kind: str
    threshold: float
    mixing_time: int | None
    tv: tuple[float, ...]
    capped: bool

    @property
    def mixed(self) -> bool:
        return self.mixing_time is not None


def mixing_time(
    q: FiniteQuotient,
    kind: str = "simple",
    threshold: float = 1.0 / math.e,
    cap: int = 512,
) -> MixingReport:
    """Least step count at which the walk law is within ``threshold`` of
    uniform in total variation; ``mixing_time=None`` when the cap is hit
    (covers two-colourable images where the simple walk never converges).

    ``kind='simple'`` iterates the averaging operator from the identity;
    ``kind='sphere'`` uses the uniform-sphere pushforward sequence.
    """
    if kind not in ("simple", "sphere"):
        raise ValueError(f"unknown walk operator kind {kind!r}")
    u = q.uniform()
    tvs: list[float] = []
    p = q.point_mass(0)
    for step in range(cap + 1):
        if kind == "simple":
            cur = p
        else:
            cur = q.sphere_pushforward(step)
        tv = tv_distance(cur, u)
        tvs.append(tv)
        if tv < threshold:
            return MixingReport(kind, threshold, step, tuple(tvs), False)
        if kind == "simple":
            p = q.simple_step(p)
    return MixingReport(kind, threshold, None, tuple(tvs), True)


def induced_truncated_measure(
    q: FiniteQuotient,
    density: Density,
    l: int,
    depth: int,
) -> tuple[np.ndarray, float]:
    """Induced law of elements of length >= l, truncated at ``depth``.

    Returns the truncated vector and a certified per-entry error bound
    ``tail_mass(depth+1)/tail_mass(l)``.
    """
    if depth < l:
        raise PreconditionError(f"depth {depth} is below the cutoff {l}")
    tail_l = density.tail_mass(l)
    if tail_l <= 0.0:
        raise PreconditionError(
            f"density {density.spec} has no mass at lengths >= {l}"
        )
    series = q.sphere_counts_series(depth)
    num = np.zeros(q.size)
    for k in range(l, depth + 1):
        dk = density.pmf(k)
        if dk == 0.0:
            continue
        total = sphere_size(q.n, k)
        num += dk * np.array([c / total for c in series[k]])
    err = density.tail_mass(depth + 1) / tail_l
    return num / tail_l, err


@dataclass(frozen=True)
class C1StarReport:
    quotient: str
    density: str
    l0: int
    steps: tuple[int, ...]
    tv: tuple[float, ...]
    fitted: tuple[int, ...]
    slope: float | None
    r_squared: float | None
    passed: bool
    truncation_error: float


def _truncated_with_uniform_tail(
    q: FiniteQuotient,
    density: Density,
    l: int,
    depth: int,
) -> tuple[np.ndarray, float]:
    """Truncated induced measure with the beyond-depth tail completed by
    the uniform law.

    Valid once the sphere pushforward has numerically mixed by ``depth``:
    the per-entry error is bounded by tail(depth+1)/tail(l) times the TV
    of the depth pushforward from uniform, which the caller controls.
    Unlike raw truncation this keeps ``depth`` tractable for power-law
    tails.
    """
    tail_l = density.tail_mass(l)
    if tail_l <= 0.0:
        raise PreconditionError(
            f"density {density.spec} has no mass at lengths >= {l}"
        )
    series = q.sphere_counts_series(depth)
    num = np.zeros(q.size)
    for k in range(l, depth + 1):
        dk = density.pmf(k)
        if dk == 0.0:
            continue
        total = sphere_size(q.n, k)
        num += dk * np.array([c / total for c in series[k]])
    tail_rest = density.tail_mass(depth + 1)
    num += tail_rest * q.uniform()
    tv_depth = tv_distance(q.sphere_pushforward(depth), q.uniform())
    err = (tail_rest / tail_l) * tv_depth
    return num / tail_l, err


def _completion_depth(q: FiniteQuotient, l_max: int, l0: int) -> int:
    """Smallest depth past l_max where the sphere pushforward is at the
    numerical mixing floor (TV < 1e-15), capped at l_max + 4096."""
    u = q.uniform()
    depth = l_max + max(8 * max(l0, 1), 64)
    while tv_distance(q.sphere_pushforward(depth), u) > 1e-15:
        if depth >= l_max + 4096:
            break
        depth = min(2 * depth - l_max, l_max + 4096)
    return depth


def check_c1star(
    q: FiniteQuotient,
    density: Density,
    l0: int | None = None,
    steps: int = 10,
    tv_floor: float = 1e-13,
    min_r_squared: float = 0.98,
    mixing_cap: int = 512,
) -> C1StarReport:
    """Check exponential decay of TV(truncated induced measure, uniform).

    Evaluates the truncated measure at cutoffs l = k*l0 for k = 1..steps,
    fits log TV against k, and passes when the fit is linear (R^2 above
    ``min_r_squared``) with negative slope down to the floating-point /
    truncation floor.  Densities with finite support are rejected: the
    construction needs mass at infinitely many lengths.
    """
    if density.finite_support:
        raise PreconditionError(
            f"density {density.spec} has finite support; "
            "the truncated-measure check needs d(k) > 0 infinitely often"
        )
    if l0 is None:
        rep = mixing_time(q, kind="sphere", cap=mixing_cap)
        if rep.mixing_time is None:
            raise PreconditionError(
                f"no mixing by cap {mixing_cap} for the sphere pushforward"
            )
        l0 = max(rep.mixing_time, 1)
    l_max = steps * l0
    depth = _completion_depth(q, l_max, l0)
    u = q.uniform()
    ks = list(range(1, steps + 1))
    tvs = []
    err = 0.0
    for k in ks:
        vec, e = _truncated_with_uniform_tail(q, density, k * l0, depth)
        tvs.append(tv_distance(vec, u))
        err = max(err, e)
    floor = max(tv_floor, 10.0 * err)
    fit_ks = [k for k, tv in zip(ks, tvs) if tv > floor]
    slope = intercept = r2 = None
    passed = False
    if len(fit_ks) >= 3:
        xs = np.array(fit_ks, dtype=float)
        ys = np.log(np.array([tvs[k - 1] for k in fit_ks]))
        slope, intercept = np.polyfit(xs, ys, 1)
        pred = slope * xs + intercept
        ss_res = float(np.sum((ys - pred) ** 2))
        ss_tot = float(np.sum((ys - ys.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        passed = slope < 0 and r2 >= min_r_squared
        slope = float(slope)
    return C1StarReport(
        quotient=q.name,
        density=density.spec,
        l0=l0,
        steps=tuple(ks),
        tv=tuple(tvs),
        fitted=tuple(fit_ks),
        slope=slope,
        r_squared=r2,
        passed=passed,
        truncation_error=err,
    )


@dataclass(frozen=True)
class OperatorProbeRow:
    l: int
    tv_truncated: float
    tv_simple: float
    tv_sphere: float
    truncated_le_simple: bool
    truncated_le_sphere: bool


@dataclass(frozen=True)
class OperatorProbeReport:
    quotient: str
    density: str
    rows: tuple[OperatorProbeRow, ...]
    monotonic_simple: bool
    max_monotonicity_violation: float


def operator_inequality_probe(
    q: FiniteQuotient,
    density: Density,
    l_values,
    monotone_steps: int = 50,
) -> OperatorProbeReport:
    """Compare TV of the truncated induced measure against the l-step
    averaging walk and the l-sphere pushforward, side by side, and check
    that TV(tau^k(E_g), U) is non-increasing in k from every start g.
    """
    u = q.uniform()
    l_values = sorted(set(int(l) for l in l_values))
    l_max = max(l_values) if l_values else 0
    depth = _completion_depth(q, l_max, 1)
    rows = []
    for l in l_values:
        vec, _ = _truncated_with_uniform_tail(q, density, l, depth)
        tv_mu = tv_distance(vec, u)
        tv_tau = tv_distance(q.simple_walk_distribution(l), u)
        tv_sph = tv_distance(q.sphere_pushforward(l), u)
        eps = 1e-12
        rows.append(
            OperatorProbeRow(
                l=l,
                tv_truncated=tv_mu,
                tv_simple=tv_tau,
                tv_sphere=tv_sph,
                truncated_le_simple=tv_mu <= tv_tau + eps,
                truncated_le_sphere=tv_mu <= tv_sph + eps,
            )
        )
    worst = 0.0
    for g in range(q.size):
        p = q.point_mass(g)
        prev = tv_distance(p, u)
        for _ in range(monotone_steps):
            p = q.simple_step(p)
            cur = tv_distance(p, u)
            worst = max(worst, cur - prev)
            prev = cur
    return OperatorProbeReport(
        quotient=q.name,
        density=density.spec,
        rows=tuple(rows),
        monotonic_simple=worst <= 1e-12,
        max_monotonicity_violation=worst,
    )


def cyclic_quotient(n: int, modulus: int, images: list[int], name: str | None = None) -> FiniteQuotient:
    """The quotient onto Z/modulus sending generator i to images[i]."""
    if modulus < 1:
        raise ValueError(f"modulus must be >= 1, got {modulus}")
    if len(images) != n:
        raise ValueError(f"need {n} images, got {len(images)}")
    table = [[(i + j) % modulus for j in range(modulus)] for i in range(modulus)]
    label = name or f"z{modulus}"
    return FiniteQuotient.from_table(
        n, table, [img % modulus for img in images], name=label
    )
