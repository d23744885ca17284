#!/usr/bin/env python3
"""Generate the eight precision mixes of the threading program.

The two hand-written corpus programs share module structure; each mix picks
every module (Operations, Scheduler, Main) from either the imprecise (I) or
the precise (P) file.  combo_ISP.greff takes Operations from the imprecise
file, Scheduler from the precise one, and Main from the precise one, and so
on through all eight choices.  Every mix is parsed before it is written.
"""

from __future__ import annotations

import itertools
import pathlib
import re
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from greff.surface import parse_program  # noqa: E402

MODULES = ("Operations", "Scheduler", "Main")


def split_modules(text: str) -> dict[str, str]:
    """Module name to its full text (header line through next module)."""
    starts = [
        (m.start(), m.group(1))
        for m in re.finditer(r"^module (\w+) where$", text, re.MULTILINE)
    ]
    out = {}
    for (pos, name), nxt in itertools.zip_longest(starts, starts[1:]):
        end = nxt[0] if nxt else len(text)
        out[name] = text[pos:end].rstrip() + "\n"
    return out


def build(corpus_dir: pathlib.Path) -> list[pathlib.Path]:
    sources = {
        "I": split_modules((corpus_dir / "threads_imprecise.greff").read_text()),
        "P": split_modules((corpus_dir / "threads_precise.greff").read_text()),
    }
    written = []
    for combo in itertools.product("IP", repeat=len(MODULES)):
        tag = "".join(combo)
        legend = ", ".join(
            f"{mod} {'imprecise' if c == 'I' else 'precise'}"
            for mod, c in zip(MODULES, combo)
        )
        body = "\n".join(sources[c][mod] for mod, c in zip(MODULES, combo))
        text = f"-- Generated by scripts/build_corpus.py: {legend}.\n{body}"
        parse_program(text)
        path = corpus_dir / f"combo_{tag}.greff"
        path.write_text(text)
        written.append(path)
    return written


if __name__ == "__main__":
    for path in build(ROOT / "corpus"):
        print(path.relative_to(ROOT))
