"""FASTA and PWM text file reading and writing.

PWM files are row-per-symbol, one column per position::

    #alphabet ACGT
    A 0.01 0.98 ...
    C ...

Blank lines and other ``#`` lines are ignored.  Entries may be decimals or
fractions ``p/q``; they are read exactly.
"""
from __future__ import annotations

import os
import re
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .errors import ParseError
from .fixed_point import DEFAULT_FORMAT, FixedPointFormat
from .pwm_core import DNA, Alphabet, Pwm, PwmSet, Sequence, pad_to_uniform_length
from .thresholds import BackgroundModel

PathLike = str | os.PathLike


def parse_fasta_text(text: str, alphabet: Alphabet = DNA, casefold: bool = True) -> Sequence:
    allowed = {s: n for n, s in enumerate(alphabet.symbols)}
    labels: list[int] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.rstrip("\r\n")
        if line.startswith(">") or line.startswith(";"):
            continue
        for col, ch in enumerate(line, 1):
            if ch.isspace():
                continue
            c = ch.upper() if casefold else ch
            if c not in allowed:
                raise ParseError(f"symbol {ch!r} not in alphabet {alphabet}", lineno, col)
            labels.append(allowed[c])
    if not labels:
        raise ParseError("FASTA input has an empty sequence body")
    if len(labels) < 2:
        raise ParseError("sequence needs length >= 2")
    return Sequence(alphabet, labels)


def parse_fasta(path: PathLike, alphabet: Alphabet = DNA, casefold: bool = True) -> Sequence:
    """Concatenate all record bodies of a FASTA file; headers are ignored."""
    return parse_fasta_text(Path(path).read_text(), alphabet, casefold)


def write_fasta(seq: Sequence, path: PathLike, header: str = "seq", width: int = 70):
    body = str(seq)
    lines = [f">{header}"] + [body[i:i + width] for i in range(0, len(body), width)]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_pwm_text(text: str, fmt: FixedPointFormat = DEFAULT_FORMAT, name: str = "") -> Pwm:
    alphabet = None
    rows: dict[str, list[Fraction]] = {}
    row_line: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, rest = line[1:].partition(" ")
            if key == "alphabet":
                symbols = rest.strip()
                if not symbols:
                    raise ParseError("empty #alphabet line", lineno)
                alphabet = Alphabet.from_string(symbols.replace(" ", ""))
            elif key == "name":
                name = name or rest.strip()
            continue
        if alphabet is None:
            raise ParseError("the file must start with a '#alphabet <symbols>' line", lineno)
        tokens = [(mt.group(), mt.start() + 1) for mt in re.finditer(r"\S+", raw)]
        sym = tokens[0][0]
        if sym not in alphabet.symbols:
            raise ParseError(f"row symbol {sym!r} not in alphabet {alphabet}", lineno, tokens[0][1])
        if sym in rows:
            raise ParseError(f"duplicate row for symbol {sym!r}", lineno, tokens[0][1])
        vals = []
        for tok, col in tokens[1:]:
            try:
                vals.append(Fraction(tok))
            except (ValueError, ZeroDivisionError):
                raise ParseError(f"bad number {tok!r}", lineno, col) from None
        rows[sym] = vals
        row_line[sym] = lineno
    if alphabet is None:
        raise ParseError("missing '#alphabet <symbols>' line")
    missing = [s for s in alphabet.symbols if s not in rows]
    if missing:
        raise ParseError(f"missing rows for symbols {''.join(missing)}")
    widths = {len(v) for v in rows.values()}
    if len(widths) != 1:
        first = alphabet.symbols[0]
        bad = next(s for s in alphabet.symbols if len(rows[s]) != len(rows[first]))
        raise ParseError(f"ragged rows: {first!r} has {len(rows[first])} entries, "
                         f"{bad!r} has {len(rows[bad])}", row_line[bad])
    m = widths.pop()
    values = [[rows[s][j] for s in alphabet.symbols] for j in range(m)]
    return Pwm.from_rows(alphabet, values, fmt=fmt, name=name)


def parse_pwm_file(path: PathLike, fmt: FixedPointFormat = DEFAULT_FORMAT) -> Pwm:
    path = Path(path)
    return parse_pwm_text(path.read_text(), fmt, name=path.stem)


def parse_pwm_files(paths: Iterable[PathLike], fmt: FixedPointFormat = DEFAULT_FORMAT) -> PwmSet:
    """Read several PWMs and pad them to a common length."""
    return pad_to_uniform_length(parse_pwm_file(p, fmt) for p in paths)


def format_number(v: Fraction) -> str:
    """Shortest exact text for v: a terminating decimal when one exists, else p/q."""
    v = Fraction(v)
    d = v.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{v.numerator}/{v.denominator}"
    places = max(twos, fives)
    scaled = v * 10**places
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
    if places == 0:
        return sign + digits
    return f"{sign}{digits[:-places]}.{digits[-places:]}".rstrip("0").rstrip(".")


def format_pwm(pwm: Pwm) -> str:
    lines = [f"#alphabet {pwm.alphabet}"]
    if pwm.name:
        lines.append(f"#name {pwm.name}")
    for a, sym in enumerate(pwm.alphabet.symbols):
        lines.append(" ".join([sym] + [format_number(pwm.values[j][a]) for j in range(pwm.m)]))
    return "\n".join(lines) + "\n"


def write_pwm_file(pwm: Pwm, path: PathLike):
    Path(path).write_text(format_pwm(pwm))


def parse_background(text: str, size: int | None = None) -> BackgroundModel:
    """Comma- or space-separated probabilities, or 'uniform' (needs ``size``)."""
    text = text.strip()
    if text == "uniform":
        if size is None:
            raise ParseError("'uniform' background needs the alphabet size")
        return BackgroundModel.uniform(size)
    try:
        probs = [Fraction(t) for t in text.replace(",", " ").split()]
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad background probabilities {text!r}") from None
    if size is not None and len(probs) != size:
        raise ParseError(f"background has {len(probs)} probabilities, alphabet has {size}")
    return BackgroundModel(tuple(probs))
