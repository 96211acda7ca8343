#!/usr/bin/env python3
"""Regenerate crates/dode/src/ml/sobol_tables.rs.

Emits primitive polynomials and initial direction numbers for the first
MAX_DIM Sobol dimensions, taken from the Joe & Kuo table
(new-joe-kuo-6.21201, https://web.maths.unsw.edu.au/~fkuo/sobol/) as
shipped with SciPy.
"""

import os

import numpy as np
import scipy.stats

MAX_DIM = 1024
OUT = os.path.join(
    os.path.dirname(__file__), "..", "crates", "dode", "src", "ml", "sobol_tables.rs"
)


def main() -> None:
    data = np.load(
        os.path.join(os.path.dirname(scipy.stats.__file__), "_sobol_direction_numbers.npz")
    )
    poly = data["poly"][:MAX_DIM]
    vinit = data["vinit"][:MAX_DIM]

    lines = [
        "// Generated by tools/gen_sobol_tables.py -- do not edit by hand.",
        "//",
        "// Primitive polynomials and initial direction numbers for the first",
        f"// {MAX_DIM} Sobol dimensions, from the Joe & Kuo table (new-joe-kuo-6.21201,",
        "// https://web.maths.unsw.edu.au/~fkuo/sobol/). Dimension 0 is the plain",
        "// van der Corput sequence and carries no table entry.",
        "",
        f"pub(crate) const MAX_DIM: usize = {MAX_DIM};",
        "",
        "/// Primitive polynomial for dimensions 1.., encoded with leading and",
        "/// trailing coefficients included (degree = bit length - 1).",
        "pub(crate) const POLY: &[u32] = &[",
    ]
    body = []
    for p in poly[1:]:
        body.append(f"{int(p)},")
    lines.append(_wrap(body))
    lines.append("];")
    lines.append("")
    lines.append("/// Initial direction numbers m_1..m_s (s = polynomial degree) for")
    lines.append("/// dimensions 1.., stored consecutively; offsets in M_INIT_OFFSET.")
    lines.append("pub(crate) const M_INIT: &[u32] = &[")
    body = []
    offsets = [0]
    for d in range(1, MAX_DIM):
        degree = int(poly[d]).bit_length() - 1
        for m in vinit[d][:degree]:
            body.append(f"{int(m)},")
        offsets.append(offsets[-1] + degree)
    lines.append(_wrap(body))
    lines.append("];")
    lines.append("")
    lines.append("pub(crate) const M_INIT_OFFSET: &[u32] = &[")
    lines.append(_wrap([f"{o}," for o in offsets]))
    lines.append("];")
    lines.append("")

    with open(OUT, "w") as fh:
        fh.write("\n".join(lines))
    print(f"wrote {OUT}: {MAX_DIM} dims, {offsets[-1]} init numbers")


def _wrap(tokens, width=96):
    out, cur = [], "    "
    for t in tokens:
        if len(cur) + len(t) + 1 > width:
            out.append(cur.rstrip())
            cur = "    "
        cur += t + " "
    if cur.strip():
        out.append(cur.rstrip())
    return "\n".join(out)


if __name__ == "__main__":
    main()
