"""Reference AST graphs built with CPython's own parser.

Reads a JSON list of code snippets on stdin and writes, for each snippet,
{"source", "ok", "nodes", "edges"} in the node-label convention of the C++
parser: interior nodes are lowercased node class names, identifiers become
subtoken leaves, literals become the leaves num/str/true/false/none/ellipsis,
expression contexts are dropped, pre-order numbering, 500-node cap.
"""
import ast
import json
import re
import sys

MAX_NODES = 500
WORD = re.compile(rb"[A-Za-z0-9\x80-\xff]+")


def subtokens(text):
    out = []
    for m in WORD.finditer(text.encode("utf-8")):
        part = m.group(0)
        cur = b""
        prev = 0
        for c in part:
            if 65 <= c <= 90 and 97 <= prev <= 122:
                out.append(cur)
                cur = b""
            cur += bytes([c])
            prev = c
        if cur:
            out.append(cur)
    return [t.decode("utf-8", "surrogateescape").lower() for t in out]


def literal_label(value):
    if value is True:
        return "true"
    if value is False:
        return "false"
    if value is None:
        return "none"
    if value is Ellipsis:
        return "ellipsis"
    if isinstance(value, (str, bytes)):
        return "str"
    return "num"


def build(node, nodes, edges, parent):
    def add(label, par):
        idx = len(nodes)
        nodes.append(label)
        if par is not None:
            edges.append((par, idx))
        return idx

    if isinstance(node, ast.expr_context):
        return
    if isinstance(node, ast.Constant):
        add(literal_label(node.value), parent)
        return
    me = add(type(node).__name__.lower(), parent)
    for field in node._fields:
        if field == "type_comment":
            continue
        value = getattr(node, field, None)
        items = value if isinstance(value, list) else [value]
        for item in items:
            if isinstance(item, ast.AST):
                build(item, nodes, edges, me)
            elif isinstance(item, str):
                for t in subtokens(item):
                    add(t, me)


def strip_magic(src):
    lines = src.split("\n")
    return "\n".join("" if l.lstrip(" \t").startswith(("%", "!")) else l for l in lines)


def graph(src):
    try:
        tree = ast.parse(strip_magic(src))
    except SyntaxError:
        return False, [], []
    nodes, edges = [], []
    build(tree, nodes, edges, None)
    if len(nodes) == 1:  # bare module: no statements
        return True, [], []
    if len(nodes) > MAX_NODES:
        nodes = nodes[:MAX_NODES]
        edges = [(p, c) for p, c in edges if c < MAX_NODES]
    return True, nodes, [list(e) for e in edges]


def main():
    snippets = json.load(sys.stdin)
    out = []
    for src in snippets:
        ok, nodes, edges = graph(src)
        out.append({"source": src, "ok": ok, "nodes": nodes, "edges": edges})
    json.dump(out, sys.stdout, indent=1, ensure_ascii=False)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
