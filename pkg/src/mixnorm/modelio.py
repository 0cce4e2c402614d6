"""Text formats: the model file and comma-separated data tables.

Model file grammar, one ``key = value`` pair per line; blank lines and
lines starting with ``#`` are ignored::

    kind = mmn
    mu = 0, 0
    sigma = 1, 0.5, 0.5, 2
    delta = 1.5, 0
    mixing = tn(mean=0,var=1)

``sigma`` is row-major. ``delta`` is required for ``mmn``/``mvmn`` and
forbidden for ``vmn``. The keys ``iterations``, ``loglik``, ``converged``
and ``nu`` are fit metadata and are ignored on input. Numbers are written
with 17 significant digits, so ``serialize_model(parse_model(s)) == s``
for any ``s`` produced by :func:`serialize_model`.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import ParseError
from .families import KINDS, VMN, NormalMixture, make_family
from .mixing import parse_mixing

METADATA_KEYS = ("iterations", "loglik", "converged", "nu")
_KEYS = ("kind", "mu", "sigma", "delta", "mixing")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _numbers(text, line, key):
    out = []
    for part in text.split(","):
        part = part.strip()
        try:
            x = float(part)
        except ValueError:
            raise ParseError(f"cannot parse number {part!r}", line=line, field=key) from None
        if not math.isfinite(x):
            raise ParseError(f"non-finite number {part!r}", line=line, field=key)
        out.append(x)
    return np.array(out)


def parse_model(text: str) -> NormalMixture:
    """Build a family from a model block; raises :class:`ParseError` on malformed input.

    Semantic violations (for example a ``delta`` line on a ``vmn`` model)
    surface as the validation errors of :func:`make_family`.
    """
    fields = {}
    lines = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        if "=" not in s:
            raise ParseError("expected 'key = value'", line=no)
        key, value = (t.strip() for t in s.split("=", 1))
        key = key.lower()
        if key in METADATA_KEYS:
            continue
        if key not in _KEYS:
            raise ParseError(f"unknown key {key!r}", line=no, field=key)
        if key in fields:
            raise ParseError(f"duplicate key {key!r}", line=no, field=key)
        fields[key] = value
        lines[key] = no
    for key in ("kind", "mu", "sigma", "mixing"):
        if key not in fields:
            raise ParseError(f"missing key {key!r}", field=key)
    kind = fields["kind"].lower()
    if kind not in KINDS:
        raise ParseError(f"unknown kind {kind!r}", line=lines["kind"], field="kind")
    mu = _numbers(fields["mu"], lines["mu"], "mu")
    flat = _numbers(fields["sigma"], lines["sigma"], "sigma")
    p = mu.size
    if flat.size != p * p:
        raise ParseError(f"sigma needs {p * p} entries, got {flat.size}",
                         line=lines["sigma"], field="sigma")
    delta = _numbers(fields["delta"], lines["delta"], "delta") if "delta" in fields else None
    try:
        mixing = parse_mixing(fields["mixing"])
    except ParseError as exc:
        raise ParseError(str(exc), line=lines["mixing"], field="mixing") from None
    return make_family(kind, mu, flat.reshape(p, p), delta, mixing)


def serialize_model(fam: NormalMixture) -> str:
    out = [f"kind = {fam.kind}",
           "mu = " + ", ".join(fmt(x) for x in fam.mu),
           "sigma = " + ", ".join(fmt(x) for x in fam.sigma.entries.ravel())]
    if fam.kind != VMN:
        out.append("delta = " + ", ".join(fmt(x) for x in fam.delta))
    out.append(f"mixing = {fam.mixing.canonical()}")
    return "\n".join(out) + "\n"


def read_table(text: str) -> np.ndarray:
    """Parse comma-separated numeric rows; a first row that is not numeric is a header."""
    rows = []
    first = True
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s:
            continue
        cells = [c.strip() for c in s.split(",")]
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            if first:
                first = False
                continue
            raise ParseError("non-numeric cell", line=no) from None
        first = False
        if not all(math.isfinite(v) for v in vals):
            raise ParseError("non-finite cell", line=no)
        if rows and len(vals) != len(rows[0]):
            raise ParseError(f"expected {len(rows[0])} columns, got {len(vals)}", line=no)
        rows.append(vals)
    if not rows:
        raise ParseError("no data rows")
    return np.array(rows, dtype=float)


def write_table(data) -> str:
    data = np.atleast_2d(np.asarray(data, dtype=float))
    return "".join(",".join(fmt(x) for x in row) + "\n" for row in data)
