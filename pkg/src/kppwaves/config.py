"""Reading problem definitions from INI-style configuration files.

Grammar (``#`` and ``;`` start comments, keys are case-insensitive)::

    [diffusion]
    kind = power            # d = coefficient * r**exponent0 * (1-r)**exponent1
    coefficient = 1         # optional, default d0 (or 1)
    exponent0 = 1           # optional, default delta0
    exponent1 = 0           # optional, default delta1

    [reaction]
    kind = expr             # free-form expression in r
    expr = r*(1 - r)

    [exponents]             # required unless both functions are 'power'
    gamma0 = 1
    delta0 = 1
    gamma1 = 1
    delta1 = 0

    [coefficients]          # optional, all default to 1
    g0 = 1
    g1 = 1
    d0 = 1
    d1 = 1

For a ``power`` function the exponents and end coefficients follow from
its parameters unless given explicitly. Expressions use ``+ - * / **``,
parentheses, ``sqrt``, ``exp``, ``log``, numbers and ``r``.
"""

from __future__ import annotations

import configparser
import re
from pathlib import Path

from .errors import ConfigError, ExpressionError
from .expressions import compile_expression
from .problem import PowerLaw, ProblemSpec

_SECTIONS = {
    "diffusion": {"kind", "expr", "coefficient", "exponent0", "exponent1"},
    "reaction": {"kind", "expr", "coefficient", "exponent0", "exponent1"},
    "exponents": {"gamma0", "delta0", "gamma1", "delta1"},
    "coefficients": {"g0", "g1", "d0", "d1"},
}
_ROLE = {"diffusion": ("delta0", "delta1", "d0", "d1"),
         "reaction": ("gamma0", "gamma1", "g0", "g1")}


class _Locator:
    """Maps (section, key) to the line and value column in the source text."""

    _header = re.compile(r"^\s*\[([^\]]+)\]")
    _entry = re.compile(r"^(\s*)([^=:#;\s][^=:]*?)\s*[=:]\s*")

    def __init__(self, text):
        self.where = {}
        section = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            m = self._header.match(line)
            if m:
                section = m.group(1).strip().lower()
                self.where.setdefault((section, None), (lineno, 1))
                continue
            m = self._entry.match(line)
            if m and section is not None:
                self.where[(section, m.group(2).strip().lower())] = (lineno, m.end() + 1)

    def __call__(self, section, key=None):
        return self.where.get((section, key), self.where.get((section, None), (0, 0)))


def _error(message, loc, source):
    line, column = loc
    if not line:
        return ConfigError(message, None, None, source)
    return ConfigError(message, line, column, source)


def parse_config(text: str, source: str = "<string>") -> ProblemSpec:
    """Build a :class:`ProblemSpec` from configuration text.

    Raises
    ------
    ConfigError
        With 1-based line and column for syntax errors, unknown sections or
        keys, malformed numbers and invalid expressions.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                       interpolation=None, strict=True)
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("expected a [section] header", exc.lineno, 1, source) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else 0
        raise ConfigError("cannot parse line (expected 'key = value')", lineno, 1, source) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        kind = "option" if isinstance(exc, configparser.DuplicateOptionError) else "section"
        raise ConfigError(f"duplicate {kind}", exc.lineno or 0, 1, source) from None
    loc = _Locator(text)

    for section in parser.sections():
        name = section.lower()
        if name not in _SECTIONS:
            raise _error(f"unknown section [{section}]", loc(name), source)
        for key in parser[section]:
            if key not in _SECTIONS[name]:
                raise _error(f"unknown key {key!r} in [{section}]", loc(name, key), source)
    sections = {s.lower(): parser[s] for s in parser.sections()}

    def number(section, key, default=None):
        sec = sections.get(section)
        if sec is None or key not in sec:
            return default
        try:
            return float(sec[key])
        except ValueError:
            raise _error(f"{section}.{key}: expected a number, got {sec[key]!r}",
                         loc(section, key), source) from None

    # report malformed numbers before anything that depends on them
    for name, sec in sections.items():
        for key in sec:
            if key not in ("kind", "expr"):
                number(name, key)

    for role in ("diffusion", "reaction"):
        if role not in sections:
            raise _error(f"missing section [{role}]", (0, 0), source)

    exponents = {k: number("exponents", k) for k in _SECTIONS["exponents"]}
    coefs = {k: number("coefficients", k) for k in _SECTIONS["coefficients"]}
    functions = {}
    for role in ("diffusion", "reaction"):
        sec = sections[role]
        kind = sec.get("kind", "").strip().lower()
        e0_name, e1_name, c0_name, c1_name = _ROLE[role]
        if kind == "power":
            coef = number(role, "coefficient", coefs[c0_name] if coefs[c0_name] is not None else 1.0)
            e0 = number(role, "exponent0", exponents[e0_name])
            e1 = number(role, "exponent1", exponents[e1_name])
            if e0 is None or e1 is None:
                raise _error(f"[{role}] power kind needs exponent0/exponent1 or [exponents] values",
                             loc(role), source)
            functions[role] = PowerLaw(coef, e0, e1)
            exponents[e0_name] = e0 if exponents[e0_name] is None else exponents[e0_name]
            exponents[e1_name] = e1 if exponents[e1_name] is None else exponents[e1_name]
            for name in (c0_name, c1_name):
                if coefs[name] is None:
                    coefs[name] = coef
        elif kind == "expr":
            if "expr" not in sec:
                raise _error(f"[{role}] kind = expr needs an 'expr' key", loc(role, "kind"), source)
            try:
                functions[role] = compile_expression(sec["expr"])
            except ExpressionError as exc:
                line, col = loc(role, "expr")
                msg = str(exc).split(": ", 1)[-1]
                raise ConfigError(f"{role}.expr: {msg}", line, col + (exc.column or 1) - 1,
                                  source) from None
        else:
            raise _error(f"[{role}] kind must be 'power' or 'expr', got {kind!r}",
                         loc(role, "kind"), source)

    missing = [k for k in ("gamma0", "delta0", "gamma1", "delta1") if exponents[k] is None]
    if missing:
        raise _error("missing exponents: " + ", ".join(missing), loc("exponents"), source)
    return ProblemSpec(functions["diffusion"], functions["reaction"],
                       exponents["gamma0"], exponents["delta0"],
                       exponents["gamma1"], exponents["delta1"],
                       **{k: (v if v is not None else 1.0) for k, v in coefs.items()})


def load_config(path) -> ProblemSpec:
    """Read and parse a configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read file: {exc.strerror}", source=str(path)) from None
    return parse_config(text, source=str(path))


def power_config(gamma0, delta0, gamma1, delta1) -> str:
    """Configuration text for the pure power family (used by sweeps and tests)."""
    return (f"[diffusion]\nkind = power\nexponent0 = {delta0!r}\nexponent1 = {delta1!r}\n\n"
            f"[reaction]\nkind = power\nexponent0 = {gamma0!r}\nexponent1 = {gamma1!r}\n")
