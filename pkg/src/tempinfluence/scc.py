"""Strongly connected components (Tarjan), iterative so deep graphs don't hit the recursion limit."""

from __future__ import annotations

from typing import Callable, Hashable, Iterable


def strongly_connected_components(
    nodes: Iterable[Hashable], successors: Callable[[Hashable], Iterable[Hashable]]
) -> list[list[Hashable]]:
    """Return the SCCs of the graph restricted to ``nodes``.

    ``successors(v)`` may yield nodes outside ``nodes``; those are ignored.
    Components come out in reverse topological order of the condensation.
    """
    node_list = list(dict.fromkeys(nodes))
    members = set(node_list)
    index: dict = {}
    lowlink: dict = {}
    on_stack: set = set()
    stack: list = []
    components: list[list] = []
    counter = 0

    for root in node_list:
        if root in index:
            continue
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter([w for w in successors(root) if w in members]))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = lowlink[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter([x for x in successors(w) if x in members])))
                    advanced = True
                    break
                if w in on_stack and index[w] < lowlink[v]:
                    lowlink[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                if lowlink[v] < lowlink[parent]:
                    lowlink[parent] = lowlink[v]
            if lowlink[v] == index[v]:
                component = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    component.append(w)
                    if w == v:
                        break
                components.append(component)
    return components


def count_components(nodes: Iterable[Hashable], successors) -> int:
    return len(strongly_connected_components(nodes, successors))
