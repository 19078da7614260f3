"""Directed acyclic graphs over labelled variables and their equivalence classes.

Variables are addressed by position in an ordered label tuple; arcs are
``(from_index, to_index)`` pairs. Graph values are immutable: every editing
operation returns a new graph.
"""

import heapq
import itertools
import numbers
from collections import defaultdict

from .errors import (
    AntiparallelArcError,
    CycleError,
    DataError,
    DuplicateArcError,
    ValidationError,
)


def _check_labels(variables):
    variables = tuple(str(v) for v in variables)
    if len(set(variables)) != len(variables):
        raise ValidationError(f"duplicate variable labels in {list(variables)}")
    for label in variables:
        if not label or any(c.isspace() for c in label) or "," in label or "->" in label:
            raise ValidationError(f"invalid variable label {label!r}")
    return variables


class Dag:
    """Directed acyclic graph.

    Parameters
    ----------
    variables : sequence of str
        Ordered, distinct variable labels.
    arcs : iterable of (int, int)
        Arcs as index pairs. The constructor rejects self-loops, antiparallel
        pairs and cycles.
    """

    __slots__ = ("_variables", "_arcs", "_parents", "_children", "_index")

    def __init__(self, variables, arcs=()):
        self._variables = _check_labels(variables)
        self._index = {v: i for i, v in enumerate(self._variables)}
        p = len(self._variables)
        arcs = frozenset((int(a), int(b)) for a, b in arcs)
        parents = defaultdict(set)
        children = defaultdict(set)
        for a, b in arcs:
            if not (0 <= a < p and 0 <= b < p):
                raise ValidationError(f"arc ({a}, {b}) out of range for {p} variables")
            if a == b:
                raise ValidationError(f"self-loop on {self._variables[a]}")
            if (b, a) in arcs:
                raise AntiparallelArcError(
                    f"both {self._variables[a]}->{self._variables[b]} and the reverse arc"
                )
            parents[b].add(a)
            children[a].add(b)
        self._arcs = arcs
        self._parents = tuple(frozenset(parents[i]) for i in range(p))
        self._children = tuple(frozenset(children[i]) for i in range(p))
        if len(self._kahn()) != p:
            raise CycleError("arc set contains a directed cycle")

    @classmethod
    def empty(cls, variables):
        return cls(variables)

    @classmethod
    def from_labels(cls, variables, arcs=()):
        """Build from ``(from_label, to_label)`` pairs."""
        variables = _check_labels(variables)
        index = {v: i for i, v in enumerate(variables)}
        try:
            pairs = [(index[a], index[b]) for a, b in arcs]
        except KeyError as exc:
            raise ValidationError(f"unknown variable {exc.args[0]!r}") from None
        return cls(variables, pairs)

    @property
    def variables(self):
        return self._variables

    @property
    def arcs(self):
        return self._arcs

    @property
    def p(self):
        return len(self._variables)

    def index(self, label):
        try:
            return self._index[label]
        except KeyError:
            raise ValidationError(f"unknown variable {label!r}") from None

    def _check_node(self, i):
        if not isinstance(i, numbers.Integral) or not 0 <= i < self.p:
            raise ValidationError(f"invalid variable index {i!r} for {self.p} variables")

    def parents(self, node):
        self._check_node(node)
        return self._parents[node]

    def children(self, node):
        self._check_node(node)
        return self._children[node]

    def has_arc(self, frm, to):
        return (frm, to) in self._arcs

    def adjacent(self, a, b):
        return (a, b) in self._arcs or (b, a) in self._arcs

    def is_reachable(self, start, target):
        """True if a directed path ``start -> ... -> target`` exists."""
        if start == target:
            return True
        stack = [start]
        seen = {start}
        while stack:
            node = stack.pop()
            for child in self._children[node]:
                if child == target:
                    return True
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        return False

    def causes_cycle(self, frm, to):
        """Would adding ``frm -> to`` close a directed cycle?"""
        self._check_node(frm)
        self._check_node(to)
        if frm == to:
            raise ValidationError("an arc needs two distinct endpoints")
        return self.is_reachable(to, frm)

    def add_arc(self, frm, to):
        self._check_node(frm)
        self._check_node(to)
        if frm == to:
            raise ValidationError(f"self-loop on {self._variables[frm]}")
        name = f"{self._variables[frm]}->{self._variables[to]}"
        if (frm, to) in self._arcs:
            raise DuplicateArcError(f"arc {name} already present")
        if (to, frm) in self._arcs:
            raise AntiparallelArcError(f"reverse of {name} already present")
        if self.is_reachable(to, frm):
            raise CycleError(f"adding {name} would create a cycle")
        return Dag(self._variables, self._arcs | {(frm, to)})

    def remove_arc(self, frm, to):
        if (frm, to) not in self._arcs:
            raise ValidationError(f"no arc {frm}->{to}")
        return Dag(self._variables, self._arcs - {(frm, to)})

    def reverse_arc(self, frm, to):
        if (frm, to) not in self._arcs:
            raise ValidationError(f"no arc {frm}->{to}")
        return Dag(self._variables, (self._arcs - {(frm, to)}) | {(to, frm)})

    def _kahn(self):
        indegree = [len(pa) for pa in self._parents]
        heap = [i for i, d in enumerate(indegree) if d == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            node = heapq.heappop(heap)
            order.append(node)
            for child in self._children[node]:
                indegree[child] -= 1
                if indegree[child] == 0:
                    heapq.heappush(heap, child)
        return order

    def topological_order(self):
        """Topological order with ties broken by ascending index."""
        return tuple(self._kahn())

    def sorted_arcs(self):
        return sorted(self._arcs)

    def labelled_arcs(self):
        return [(self._variables[a], self._variables[b]) for a, b in sorted(self._arcs)]

    def relabel(self, permutation):
        """Move variable ``i`` to position ``permutation[i]``."""
        variables = [None] * self.p
        for old, new in enumerate(permutation):
            variables[new] = self._variables[old]
        return Dag(variables, [(permutation[a], permutation[b]) for a, b in self._arcs])

    def __eq__(self, other):
        if not isinstance(other, Dag):
            return NotImplemented
        return self._variables == other._variables and self._arcs == other._arcs

    def __hash__(self):
        return hash((self._variables, self._arcs))

    def __repr__(self):
        arcs = ", ".join(f"{a}->{b}" for a, b in self.labelled_arcs())
        return f"Dag([{','.join(self._variables)}], {{{arcs}}})"

    # serialization

    def to_text(self):
        lines = ["vars: " + ",".join(self._variables)]
        lines += [f"{a} -> {b}" for a, b in self.labelled_arcs()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        dag, rest = parse_arc_list(text.splitlines())
        if rest:
            raise DataError(f"unexpected line in arc list: {rest[0]!r}")
        return dag

    def to_dot(self, name="G"):
        lines = [f"digraph {name} {{"]
        lines += [f'  "{v}";' for v in self._variables]
        lines += [f'  "{a}" -> "{b}";' for a, b in self.labelled_arcs()]
        lines.append("}")
        return "\n".join(lines) + "\n"


def parse_arc_list(lines):
    """Parse the ``vars:`` header and ``a -> b`` lines.

    Returns the graph and the list of lines that are neither (blank lines
    and ``#`` comments are dropped).
    """
    variables = None
    arcs = []
    rest = []
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("vars:"):
            if variables is not None:
                raise DataError("duplicate 'vars:' header")
            body = line[len("vars:"):].strip()
            variables = [v.strip() for v in body.split(",")] if body else []
        elif "->" in line and len(line.split()) == 3 and line.split()[1] == "->":
            a, _, b = line.split()
            arcs.append((a, b))
        else:
            rest.append(line)
    if variables is None:
        raise DataError("missing 'vars:' header line")
    try:
        return Dag.from_labels(variables, arcs), rest
    except ValidationError as exc:
        raise DataError(str(exc)) from exc


class Pdag:
    """Partially directed graph: directed arcs plus undirected edges."""

    __slots__ = ("_variables", "_directed", "_undirected")

    def __init__(self, variables, directed=(), undirected=()):
        self._variables = tuple(variables)
        self._directed = frozenset((int(a), int(b)) for a, b in directed)
        self._undirected = frozenset(frozenset((int(a), int(b))) for a, b in undirected)
        for a, b in self._directed:
            if a == b:
                raise ValidationError("self-loop in PDAG")
            if frozenset((a, b)) in self._undirected or (b, a) in self._directed:
                raise ValidationError(f"pair ({a}, {b}) has more than one connection")
        if any(len(e) != 2 for e in self._undirected):
            raise ValidationError("self-loop in PDAG")

    @property
    def variables(self):
        return self._variables

    @property
    def directed(self):
        return self._directed

    @property
    def undirected(self):
        return self._undirected

    def pair_state(self, a, b):
        """Connection between ``a`` and ``b`` as seen from ``a``.

        Returns ``None``, ``"-"``, ``"->"`` (a to b) or ``"<-"`` (b to a).
        """
        if (a, b) in self._directed:
            return "->"
        if (b, a) in self._directed:
            return "<-"
        if frozenset((a, b)) in self._undirected:
            return "-"
        return None

    def __eq__(self, other):
        if not isinstance(other, Pdag):
            return NotImplemented
        return (
            self._variables == other._variables
            and self._directed == other._directed
            and self._undirected == other._undirected
        )

    def __hash__(self):
        return hash((self._variables, self._directed, self._undirected))

    def __repr__(self):
        v = self._variables
        parts = [f"{v[a]}->{v[b]}" for a, b in sorted(self._directed)]
        parts += [f"{v[a]}--{v[b]}" for a, b in sorted(tuple(sorted(e)) for e in self._undirected)]
        return f"Pdag({{{', '.join(parts)}}})"


def dag_to_cpdag(dag):
    """Completed PDAG of the Markov equivalence class of ``dag``.

    Chickering's order-edges / label-edges construction: arcs are ranked
    by (topological rank of head ascending, rank of tail descending) and
    each arc is labelled compelled or reversible in that order.
    """
    order = dag.topological_order()
    rank = {node: r for r, node in enumerate(order)}
    ordered = sorted(dag.arcs, key=lambda arc: (rank[arc[1]], -rank[arc[0]]))

    label = {}
    for x, y in ordered:
        if (x, y) in label:
            continue
        pa_y = dag.parents(y)
        done = False
        for w in dag.parents(x):
            if label.get((w, x)) != "compelled":
                continue
            if w not in pa_y:
                for z in pa_y:
                    label[(z, y)] = "compelled"
                done = True
                break
            label[(w, y)] = "compelled"
        if done:
            continue
        pa_x = dag.parents(x)
        kind = "reversible"
        if any(z != x and z not in pa_x for z in pa_y):
            kind = "compelled"
        for z in pa_y:
            if (z, y) not in label:
                label[(z, y)] = kind

    directed = [arc for arc, kind in label.items() if kind == "compelled"]
    undirected = [arc for arc, kind in label.items() if kind == "reversible"]
    return Pdag(dag.variables, directed, undirected)


def markov_equivalent(a, b):
    if a.variables != b.variables:
        raise ValidationError("graphs are over different variable lists")
    return dag_to_cpdag(a) == dag_to_cpdag(b)


def all_dags(variables):
    """Every DAG over ``variables`` (use only for very small graphs)."""
    p = len(variables)
    pairs = list(itertools.combinations(range(p), 2))
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        arcs = []
        for (a, b), s in zip(pairs, states):
            if s == 1:
                arcs.append((a, b))
            elif s == 2:
                arcs.append((b, a))
        try:
            yield Dag(variables, arcs)
        except CycleError:
            continue
