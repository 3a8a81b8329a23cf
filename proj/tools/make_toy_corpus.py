#!/usr/bin/env python3
"""Writes the bundled toy corpus: small synthetic Java patches with labels.

Usage: make_toy_corpus.py OUTPUT_DIR
"""
import json
import random
import shutil
import sys
from pathlib import Path

CLASSES = {
    "Lang": ("StrUtil", [
        ("int", "count(String s, char c)", [
            "int n = 0;",
            "for (int i = 0; i < s.length(); i++) {",
            "  if (s.charAt(i) == c) {",
            "    n = n + 1;",
            "  }",
            "}",
            "return n;",
        ]),
        ("String", "pad(String s, int width)", [
            "StringBuilder sb = new StringBuilder(s);",
            "while (sb.length() < width) {",
            "  sb.append(' ');",
            "}",
            "return sb.toString();",
        ]),
    ]),
    "Math": ("Stats", [
        ("double", "mean(double[] xs)", [
            "double total = 0;",
            "for (int i = 0; i < xs.length; i++) {",
            "  total = total + xs[i];",
            "}",
            "return total / xs.length;",
        ]),
        ("int", "clamp(int v, int lo, int hi)", [
            "int r = v;",
            "if (r < lo) {",
            "  r = lo;",
            "}",
            "if (r > hi) {",
            "  r = hi;",
            "}",
            "return r;",
        ]),
    ]),
    "Chart": ("Range", [
        ("double", "length(double lower, double upper)", [
            "double d = upper - lower;",
            "if (d < 0) {",
            "  d = -d;",
            "}",
            "return d;",
        ]),
        ("int", "index(int[] data, int key)", [
            "int lo = 0;",
            "int hi = data.length - 1;",
            "while (lo <= hi) {",
            "  int mid = (lo + hi) / 2;",
            "  if (data[mid] < key) {",
            "    lo = mid + 1;",
            "  } else {",
            "    hi = mid - 1;",
            "  }",
            "}",
            "return lo;",
        ]),
    ]),
}

TOOLS = ["jGenProg", "Kali", "Nopol", "TBar"]


def render(cls, methods):
    out = ["package toy;", "", "public class %s {" % cls]
    for ret, sig, body in methods:
        out.append("  public %s %s {" % (ret, sig))
        out.extend("    " + line for line in body)
        out.append("  }")
        out.append("")
    out.append("}")
    return "\n".join(out) + "\n"


def statement_lines(body):
    return [i for i, line in enumerate(body) if line.strip().endswith(";") and not line.strip().startswith("return")]


def overfitting_edit(body, rng):
    kind = rng.choice(["delete", "guard", "early_return", "cond_true"])
    body = list(body)
    stmts = statement_lines(body)
    i = rng.choice(stmts)
    indent = body[i][: len(body[i]) - len(body[i].lstrip())]
    if kind == "delete":
        del body[i]
    elif kind == "guard":
        body[i:i + 1] = [indent + "if (%d > 0) {" % rng.randint(1, 9), "  " + body[i], indent + "}"]
    elif kind == "early_return":
        ret = next(line for line in body if line.strip().startswith("return")).strip()
        body[i:i + 1] = [body[i], indent + "if (%d < 0) {" % rng.randint(1, 9), indent + "  " + ret, indent + "}"]
    else:
        conds = [j for j, line in enumerate(body) if line.strip().startswith(("if (", "while ("))]
        if not conds:
            del body[i]
        else:
            j = rng.choice(conds)
            head = body[j].split("(", 1)[0]
            body[j] = head + "(true) {"
    return body, kind


def correct_edit(body, rng):
    kind = rng.choice(["operator", "literal", "null_check", "bound"])
    body = list(body)
    swaps = [("<=", "<"), (" < ", " <= "), (" + ", " - "), (" > ", " >= ")]
    if kind in ("operator", "bound"):
        rng.shuffle(swaps)
        for old, new in swaps:
            hits = [j for j, line in enumerate(body) if old in line]
            if hits:
                j = rng.choice(hits)
                body[j] = body[j].replace(old, new, 1)
                return body, kind
        kind = "literal"
    if kind == "literal":
        hits = [j for j, line in enumerate(body) if any(ch.isdigit() for ch in line)]
        if hits:
            j = rng.choice(hits)
            line = body[j]
            k = next(p for p, ch in enumerate(line) if ch.isdigit())
            body[j] = line[:k] + str((int(line[k]) + 1) % 10) + line[k + 1:]
            return body, kind
    body.insert(0, "  throw new IllegalArgumentException();")
    body.insert(0, "if (%s == null) {" % ("s" if "s" in "".join(body) else "this"))
    body.insert(2, "}")
    return body, "null_check"


def main():
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    root = Path(sys.argv[1])
    if root.exists():
        shutil.rmtree(root)
    rng = random.Random(42)
    n = 0
    for project, (cls, methods) in CLASSES.items():
        for m_index in range(len(methods)):
            for variant in range(6):
                n += 1
                overfitting = (variant + m_index) % 3 != 0
                ret, sig, body = methods[m_index]
                new_body, kind = (overfitting_edit if overfitting else correct_edit)(body, rng)
                patched = list(methods)
                patched[m_index] = (ret, sig, new_body)
                patch_id = "%s-%02d" % (project.lower(), n)
                tool = TOOLS[n % len(TOOLS)]
                rel = "src/toy/%s.java" % cls
                pdir = root / patch_id
                (pdir / "buggy" / "src" / "toy").mkdir(parents=True)
                (pdir / "patched" / "src" / "toy").mkdir(parents=True)
                (pdir / "buggy" / rel).write_text(render(cls, methods))
                (pdir / "patched" / rel).write_text(render(cls, patched))
                meta = {
                    "project": project,
                    "tool": tool,
                    "label": "overfitting" if overfitting else "correct",
                    "edit": kind,
                    "files": [rel],
                }
                (pdir / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n")
    print("wrote %d patches to %s" % (n, root))


if __name__ == "__main__":
    main()
