"""Text and Graphviz renderings of fitted trees."""

from __future__ import annotations

from typing import List

from .tree import DecisionTree


def _names(tree: DecisionTree, schema) -> List[str]:
    if schema is None:
        return [f"x[{i}]" for i in range(tree.n_features)]
    names = list(schema.names)
    if len(names) != tree.n_features:
        raise ValueError("schema does not match the tree's feature count")
    return names


def _stats(tree: DecisionTree, i: int, gini: float) -> str:
    n0, n1 = (int(c) for c in tree.counts[i])
    cls = "malicious" if n1 > n0 else "benign"
    return f"samples = {n0 + n1}, value = [{n0}, {n1}], gini = {gini:.3f}, class = {cls}"


def render_text(tree: DecisionTree, schema=None) -> str:
    names = _names(tree, schema)
    g = tree.node_gini
    lines = []

    def walk(i, indent):
        pad = "|   " * indent
        if tree.feature[i] < 0:
            lines.append(f"{pad}leaf: {_stats(tree, i, g[i])}")
            return
        name = names[tree.feature[i]]
        t = tree.threshold[i]
        lines.append(f"{pad}{name} <= {t:g}: {_stats(tree, i, g[i])}")
        walk(tree.left[i], indent + 1)
        lines.append(f"{pad}{name} > {t:g}")
        walk(tree.right[i], indent + 1)

    walk(0, 0)
    return "\n".join(lines) + "\n"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def render_dot(tree: DecisionTree, schema=None) -> str:
    names = _names(tree, schema)
    g = tree.node_gini
    out = ["digraph Tree {", 'node [shape=box, fontname="helvetica"];']
    for i in range(tree.n_nodes):
        stats = _stats(tree, i, g[i]).replace(", ", "\\n")
        if tree.feature[i] >= 0:
            head = f"{_dot_escape(names[tree.feature[i]])} <= {tree.threshold[i]:g}\\n"
        else:
            head = ""
        out.append(f'{i} [label="{head}{stats}"];')
    for i in range(tree.n_nodes):
        if tree.feature[i] >= 0:
            out.append(f'{i} -> {tree.left[i]} [label="True"];')
            out.append(f'{i} -> {tree.right[i]} [label="False"];')
    out.append("}")
    return "\n".join(out) + "\n"


def render_tree(tree: DecisionTree, schema=None, format: str = "text") -> str:
    if format == "text":
        return render_text(tree, schema)
    if format == "dot":
        return render_dot(tree, schema)
    raise ValueError(f"unknown render format {format!r}")
