"""Exact optimization of chi-affine functionals over integer boxes.

The recurring computations downstream are global minima (or maxima) of

    chi(base + l) + (weight, l) + callback(l)

over boxes ``lower <= l <= upper`` in L, each term optional.  The engine
is exhaustive enumeration in lexicographic order over the canonical vertex
order, with an optional branch-and-bound mode that exploits the exact
quadratic structure of chi and must return identical results.

Also here: connected-component decomposition of supports, the closed-form
generic h1 of the structure sheaf, and the generic h1 of a line bundle of
prescribed Chern class.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import BoxTooLarge, GraphMismatch, NotInLprime
from .lattice import Cycle, as_exact

VOLUME_CAP = 10**7
OPTIMIZER_CAP = 4096


class BoxProblem:
    """A box together with the functional to optimize over it.

    ``chi_base`` switches on the term chi(chi_base + l); use the zero
    cycle for a bare chi(l).  ``weight`` adds the linear term (weight, l).
    ``callback`` receives the lattice point as a :class:`Cycle` and must
    return an exact number.
    """

    def __init__(self, graph, lower, upper, *, chi_base=None, weight=None,
                 callback=None):
        graph._same_graph(lower)
        graph._same_graph(upper)
        if not (lower.is_integral and upper.is_integral):
            raise ValueError("box bounds must be integral cycles")
        if not lower.leq(upper):
            raise ValueError("box is empty: lower > upper somewhere")
        for c in (chi_base, weight):
            if c is not None:
                graph._same_graph(c)
        self.graph = graph
        self.lower = lower
        self.upper = upper
        self.chi_base = chi_base
        self.weight = weight
        self.callback = callback

    @property
    def volume(self):
        vol = 1
        for lo, hi in zip(self.lower.coeffs, self.upper.coeffs):
            vol *= hi - lo + 1
        return vol

    def _prepared(self):
        """Split the objective into an exact constant plus a fast part.

        chi(base + l) = chi(base) + chi(l) - (base, l), so on integral l
        the varying part is chi(l) plus a fixed linear form.
        """
        g = self.graph
        const = 0
        alpha = [0] * g.n
        use_chi = self.chi_base is not None
        if use_chi:
            const = g.chi(self.chi_base)
            base_pair = g.base_pairings(self.chi_base)
            for i in range(g.n):
                alpha[i] -= base_pair[i]
        if self.weight is not None:
            wpair = g.base_pairings(self.weight)
            for i in range(g.n):
                alpha[i] += wpair[i]
        chi_tuple = g.chi_tuple
        cb = self.callback

        def fast(point):
            val = chi_tuple(point) if use_chi else 0
            for i, a in enumerate(alpha):
                if a and point[i]:
                    val += a * point[i]
            if cb is not None:
                val += as_exact(cb(Cycle(g, point)))
            return val

        return const, fast, tuple(alpha)


@dataclass(frozen=True)
class OptResult:
    """Outcome of a box optimization.

    ``optimizers`` lists every argmin/argmax in lexicographic order up to
    the optimizer cap; ``count`` is the true number of optimizers.
    """

    value: object
    optimizers: tuple
    count: int
    capped: bool
    volume: int

    def optimizer(self):
        return self.optimizers[0]


def iter_box(lower, upper):
    """Lattice points of the box, lexicographically (first coord slowest)."""
    return itertools.product(
        *[range(lo, hi + 1) for lo, hi in zip(lower, upper)]
    )


def _check_volume(problem, volume_cap):
    vol = problem.volume
    if volume_cap is not None and vol > volume_cap:
        raise BoxTooLarge(
            "box volume %d exceeds cap %d" % (vol, volume_cap)
        )
    return vol


def _scan(problem, optimizer_cap):
    const, fast, _ = problem._prepared()
    best = None
    mins = []
    count = 0
    for point in iter_box(problem.lower.coeffs, problem.upper.coeffs):
        val = fast(point)
        if best is None or val < best:
            best = val
            mins = [point]
            count = 1
        elif val == best:
            count += 1
            if count <= optimizer_cap:
                mins.append(point)
    return best + const, mins, count


def _prune(problem, optimizer_cap):
    """Depth-first branch and bound; exact and argmin-complete.

    Only sound without a callback (no bound is available for one).
    """
    const, fast, alpha = problem._prepared()
    g = problem.graph
    n = g.n
    lower = problem.lower.coeffs
    upper = problem.upper.coeffs
    use_chi = problem.chi_base is not None

    # Per-vertex tables of q_v(t) + alpha_v t where
    # q_v(t) = (-e_v t^2 + (e_v + 2) t)/2 is chi's separable part.
    tables = []
    for i in range(n):
        tab = {}
        for t in range(lower[i], upper[i] + 1):
            term = alpha[i] * t
            if use_chi:
                num = -g.euler[i] * t * t + g.kvec[i] * t
                term = term + (num // 2 if num % 2 == 0 else Fraction(num, 2))
            tab[t] = term
        tables.append(tab)
    table_min = [min(tab.values()) for tab in tables]
    edges = g.edge_pairs if use_chi else ()

    def corner_max_product(i, j):
        cands = [
            a * b
            for a in (lower[i], upper[i])
            for b in (lower[j], upper[j])
        ]
        return max(cands)

    state = {"best": None, "mins": [], "count": 0}
    point = [0] * n

    def bound(depth):
        # Lower bound over the sub-box with coords < depth fixed.
        total = 0
        for i in range(depth):
            total += tables[i][point[i]]
        for i in range(depth, n):
            total += table_min[i]
        for i, j in edges:
            if i < depth and j < depth:
                total -= point[i] * point[j]
            elif i < depth:
                total -= max(point[i] * lower[j], point[i] * upper[j])
            elif j < depth:
                total -= max(point[j] * lower[i], point[j] * upper[i])
            else:
                total -= corner_max_product(i, j)
        return total

    def descend(depth):
        if state["best"] is not None and bound(depth) > state["best"]:
            return
        if depth == n:
            val = fast(tuple(point))
            if state["best"] is None or val < state["best"]:
                state["best"] = val
                state["mins"] = [tuple(point)]
                state["count"] = 1
            elif val == state["best"]:
                state["count"] += 1
                if state["count"] <= optimizer_cap:
                    state["mins"].append(tuple(point))
            return
        for t in range(lower[depth], upper[depth] + 1):
            point[depth] = t
            descend(depth + 1)

    descend(0)
    return state["best"] + const, state["mins"], state["count"]


def minimize_box(problem, *, optimizer_cap=OPTIMIZER_CAP,
                 volume_cap=VOLUME_CAP, method="scan", jobs=1):
    """Exact global minimum with the full argmin set (up to the cap)."""
    vol = _check_volume(problem, volume_cap)
    if method == "prune" and problem.callback is None:
        value, mins, count = _prune(problem, optimizer_cap)
    elif jobs > 1 and problem.graph.n > 0:
        value, mins, count = _scan_partitioned(problem, optimizer_cap, jobs)
    else:
        value, mins, count = _scan(problem, optimizer_cap)
    g = problem.graph
    return OptResult(
        value=value,
        optimizers=tuple(Cycle(g, p) for p in mins),
        count=count,
        capped=count > optimizer_cap,
        volume=vol,
    )


def _scan_partitioned(problem, optimizer_cap, jobs):
    """Partition the outermost radix and merge exact minima.

    The merge is order-preserving, so the result is bit-identical to a
    serial scan regardless of the partitioning.
    """
    from concurrent.futures import ThreadPoolExecutor

    lo0 = problem.lower.coeffs[0]
    hi0 = problem.upper.coeffs[0]
    width = hi0 - lo0 + 1
    jobs = max(1, min(jobs, width))
    bounds = [lo0 + (width * k) // jobs for k in range(jobs + 1)]
    chunks = [
        (bounds[k], bounds[k + 1] - 1)
        for k in range(jobs)
        if bounds[k] <= bounds[k + 1] - 1
    ]
    const, fast, _ = problem._prepared()
    rest_lo = problem.lower.coeffs[1:]
    rest_hi = problem.upper.coeffs[1:]

    def run_chunk(chunk):
        clo, chi_ = chunk
        best = None
        mins = []
        count = 0
        for point in iter_box((clo,) + rest_lo, (chi_,) + rest_hi):
            val = fast(point)
            if best is None or val < best:
                best, mins, count = val, [point], 1
            elif val == best:
                count += 1
                if count <= optimizer_cap:
                    mins.append(point)
        return best, mins, count

    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        results = list(pool.map(run_chunk, chunks))
    best = min(r[0] for r in results)
    mins = []
    count = 0
    for cbest, cmins, ccount in results:
        if cbest == best:
            count += ccount
            for p in cmins:
                if len(mins) < optimizer_cap:
                    mins.append(p)
    return best + const, mins, count


def maximize_box(problem, *, optimizer_cap=OPTIMIZER_CAP,
                 volume_cap=VOLUME_CAP, method="scan", jobs=1):
    """Exact global maximum, by minimizing the negated functional."""
    neg = BoxProblem(
        problem.graph,
        problem.lower,
        problem.upper,
        chi_base=None,
        weight=None,
        callback=_negated_objective(problem),
    )
    res = minimize_box(
        neg,
        optimizer_cap=optimizer_cap,
        volume_cap=volume_cap,
        method="scan",
        jobs=jobs,
    )
    return OptResult(
        value=-res.value,
        optimizers=res.optimizers,
        count=res.count,
        capped=res.capped,
        volume=res.volume,
    )


def _negated_objective(problem):
    const, fast, _ = problem._prepared()

    def cb(cycle):
        return -(fast(cycle.coeffs) + const)

    return cb


def components(graph, support):
    """Connected components of the induced subgraph on ``support``."""
    todo = {graph._vertex(v) for v in support}
    comps = []
    while todo:
        seed = min(todo)
        block = {seed}
        stack = [seed]
        while stack:
            for j in graph.adjacency[stack.pop()]:
                if j in todo and j not in block:
                    block.add(j)
                    stack.append(j)
        todo -= block
        comps.append(frozenset(graph.ids[i] for i in block))
    comps.sort(key=min)
    return tuple(comps)


def split_cycle(cycle):
    """Split a cycle into its connected-support components (which sum to it)."""
    return tuple(
        cycle.restrict(comp) for comp in components(cycle.graph, cycle.support())
    )


def _split_tuple(graph, coeffs):
    """Tuple-level component split used by hot loops."""
    todo = {i for i, c in enumerate(coeffs) if c}
    out = []
    while todo:
        seed = min(todo)
        block = {seed}
        stack = [seed]
        while stack:
            for j in graph.adjacency[stack.pop()]:
                if j in todo and j not in block:
                    block.add(j)
                    stack.append(j)
        todo -= block
        out.append(
            tuple(c if i in block else 0 for i, c in enumerate(coeffs))
        )
    out.sort()
    return out


def min_chi_component(graph, coeffs, *, volume_cap=VOLUME_CAP):
    """min chi over the box E_|C| <= l <= C for a nonzero support tuple."""
    lower = tuple(1 if c else 0 for c in coeffs)
    problem = BoxProblem(
        graph,
        Cycle(graph, lower),
        Cycle(graph, coeffs),
        chi_base=graph.zero_cycle(),
    )
    return minimize_box(problem, volume_cap=volume_cap).value


def h1_O_generic(graph, cycle, *, volume_cap=VOLUME_CAP):
    """Generic-structure h1 of O_Z: per component, 1 - min chi over the
    box between the reduced support cycle and the component."""
    graph._same_graph(cycle)
    if not cycle.is_integral or not cycle.is_effective:
        raise ValueError("h1_O_generic needs an effective integral cycle")
    total = 0
    for part in _split_tuple(graph, cycle.coeffs):
        total += 1 - min_chi_component(graph, part, volume_cap=volume_cap)
    assert isinstance(total, int) and total >= 0
    return total


def h1_pic_generic(graph, cycle, chern, *, volume_cap=VOLUME_CAP):
    """Generic line bundle h1: chi(-c) - min over 0 <= l <= Z of chi(-c + l).

    ``chern`` must lie in L'; the result is a nonnegative integer.
    """
    graph._same_graph(cycle)
    if not cycle.is_integral or not cycle.is_effective:
        raise ValueError("h1_pic_generic needs an effective integral cycle")
    if not graph.in_dual_lattice(chern):
        raise NotInLprime("Chern class must pair integrally with the base")
    if cycle.is_zero:
        return 0
    problem = BoxProblem(
        graph,
        graph.zero_cycle(),
        cycle,
        chi_base=-chern,
    )
    res = minimize_box(problem, volume_cap=volume_cap)
    value = graph.chi(-chern) - res.value
    assert isinstance(value, int) and value >= 0
    return value
