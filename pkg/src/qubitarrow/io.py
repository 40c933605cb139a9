"""Text formats: movies, Kraus sequences, run configs, manifests and ensemble tables.

Every number is written with 17 significant digits so that a file read back
reproduces the in-memory values bit for bit.
"""

import datetime
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .algebra import QubitState
from .errors import InvalidParametersError, ParseError
from .measurement import KrausOperator
from .trajectory import DIRECTIONS, MeasurementRecord, Movie, SimConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MOVIE_COLUMNS = ("t", "r", "x", "y", "z")


def fmt(x):
    return "%.17g" % x


def _alpha_to_reals(alpha):
    out = []
    for c in alpha:
        out += [complex(c).real, complex(c).imag]
    return out


def _alpha_from_reals(vals):
    if len(vals) != 6:
        raise InvalidParametersError("alpha needs 6 reals (re, im for x, y, z)")
    return tuple(complex(float(vals[2 * i]), float(vals[2 * i + 1])) for i in range(3))


# ---------------------------------------------------------------------------
# movies


def format_movie(movie):
    lines = [
        "# qubitarrow movie",
        f"# direction = {movie.direction}",
        f"# omega = {fmt(movie.omega)}",
        f"# tau = {fmt(movie.tau)}",
        f"# dt = {fmt(movie.dt)}",
        "# alpha = " + " ".join(fmt(v) for v in _alpha_to_reals(movie.alpha)),
        ",".join(MOVIE_COLUMNS),
    ]
    t = movie.times
    r = movie.record.samples
    for k, v in enumerate(movie.bloch):
        rk = fmt(r[k]) if k < len(r) else ""
        lines.append(",".join([fmt(t[k]), rk, fmt(v[0]), fmt(v[1]), fmt(v[2])]))
    return "\n".join(lines) + "\n"


def _float(text, line, what):
    try:
        val = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {what} {text!r}", line) from None
    if not math.isfinite(val):
        raise ParseError(f"{what} is not finite", line)
    return val


def parse_movie(text):
    """Inverse of :func:`format_movie`; errors carry 1-based line numbers."""
    meta = {}
    rows = []
    header_seen = False
    lines = text.splitlines()
    for no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, val = body.partition("=")
                meta[key.strip()] = (val.strip(), no)
            continue
        if not header_seen:
            cols = tuple(c.strip() for c in line.split(","))
            if cols != MOVIE_COLUMNS:
                raise ParseError(f"expected header {','.join(MOVIE_COLUMNS)!r}, got {line!r}", no)
            header_seen = True
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 5:
            raise ParseError(f"expected 5 columns, got {len(cells)}", no)
        rows.append((no, cells))
    if not header_seen:
        raise ParseError("missing column header", len(lines) or None)
    if not rows:
        raise ParseError("movie has no rows", len(lines))

    def need(key):
        if key not in meta:
            raise ParseError(f"missing header field {key!r}")
        return meta[key]

    direction, dno = need("direction")
    if direction not in DIRECTIONS:
        raise ParseError(f"unknown direction {direction!r}", dno)
    omega = _float(*need("omega"), "omega")
    tau = _float(*need("tau"), "tau")
    dt = _float(*need("dt"), "dt")
    a_text, a_no = need("alpha")
    try:
        alpha = _alpha_from_reals([_float(v, a_no, "alpha") for v in a_text.split()])
    except InvalidParametersError as exc:
        raise ParseError(str(exc), a_no) from None

    bloch = np.empty((len(rows), 3))
    record = np.empty(len(rows) - 1)
    for k, (no, cells) in enumerate(rows):
        last = k == len(rows) - 1
        if last and cells[1]:
            raise ParseError("final row must have an empty record value", no)
        if not last:
            if not cells[1]:
                raise ParseError("record value missing", no)
            record[k] = _float(cells[1], no, "r")
        t = _float(cells[0], no, "t")
        if abs(t - k * dt) > 1e-9 * max(1.0, abs(t)):
            raise ParseError(f"time {t!r} is off the grid k*dt", no)
        bloch[k] = [_float(c, no, n) for c, n in zip(cells[2:], "xyz")]
        if np.dot(bloch[k], bloch[k]) > (1.0 + 1e-9) ** 2:
            raise ParseError("Bloch vector outside the unit ball", no)
    try:
        return Movie(bloch, MeasurementRecord(record, dt, tau), omega, tau, dt, alpha, direction)
    except (InvalidParametersError, ValueError) as exc:
        raise ParseError(str(exc)) from None


def write_movie(path, movie):
    _write_text(path, format_movie(movie))


def read_movie(path):
    with open(path, encoding="utf-8") as fh:
        return parse_movie(fh.read())


# ---------------------------------------------------------------------------
# Kraus sequences: one operator per line, "label re00 im00 re01 im01 re10 im10 re11 im11"


def format_sequence(seq):
    lines = ["# label re00 im00 re01 im01 re10 im10 re11 im11 (applied top to bottom)"]
    for op in seq:
        m = op.matrix.ravel()
        vals = " ".join(f"{fmt(c.real)} {fmt(c.imag)}" for c in m)
        lines.append(f"{op.label} {vals}")
    return "\n".join(lines) + "\n"


def parse_sequence(text):
    seq = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 9:
            raise ParseError(f"expected a label and 8 reals, got {len(parts)} fields", no)
        vals = [_float(p, no, "matrix entry") for p in parts[1:]]
        m = np.array([complex(vals[2 * i], vals[2 * i + 1]) for i in range(4)]).reshape(2, 2)
        seq.append(KrausOperator(parts[0], m))
    return seq


def read_sequence(path):
    with open(path, encoding="utf-8") as fh:
        return parse_sequence(fh.read())


# ---------------------------------------------------------------------------
# run configuration (TOML)

CONFIG_KEYS = {"omega", "rabi_period_over_tau", "tau", "dt", "duration", "initial_state", "alpha", "seed"}
ENSEMBLE_KEYS = {"n", "bins", "range", "workers"}


class ConfigError(InvalidParametersError):
    """A run configuration is missing a key or has an invalid value."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key {key!r}: {message}")


def _num(table, key, kind=float):
    if key not in table:
        raise ConfigError(key, "missing")
    val = table[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(key, f"expected a number, got {val!r}")
    if kind is int and not isinstance(val, int):
        raise ConfigError(key, "expected an integer")
    return kind(val)


def config_from_mapping(data):
    """Build ``(SimConfig, ensemble_options)`` from a parsed TOML mapping.

    Simulation keys live at the top level or in a ``[simulation]`` table;
    ensemble options in an optional ``[ensemble]`` table.  ``omega`` and
    ``rabi_period_over_tau`` are mutually exclusive and one is required.
    """
    sim = dict(data.get("simulation", {}))
    for k, v in data.items():
        if k not in ("simulation", "ensemble"):
            if k in sim:
                raise ConfigError(k, "given both at top level and in [simulation]")
            sim[k] = v
    unknown = set(sim) - CONFIG_KEYS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    tau = _num(sim, "tau")
    if not tau > 0:
        raise ConfigError("tau", "must be positive")
    if "omega" in sim and "rabi_period_over_tau" in sim:
        raise ConfigError("omega", "omega and rabi_period_over_tau are mutually exclusive")
    if "rabi_period_over_tau" in sim:
        period = _num(sim, "rabi_period_over_tau")
        if not period > 0:
            raise ConfigError("rabi_period_over_tau", "must be positive")
        omega = 2.0 * math.pi / (period * tau)
    elif "omega" in sim:
        omega = _num(sim, "omega")
    else:
        raise ConfigError("omega", "missing (give omega or rabi_period_over_tau)")
    dt = _num(sim, "dt")
    duration = _num(sim, "duration")
    seed = _num(sim, "seed", int)

    if "initial_state" not in sim:
        raise ConfigError("initial_state", "missing")
    v0 = sim["initial_state"]
    if not isinstance(v0, list) or len(v0) != 3:
        raise ConfigError("initial_state", "expected a Bloch triple [x, y, z]")
    try:
        state = QubitState.from_bloch(*(_num({"c": c}, "c") for c in v0))
    except (ConfigError, ValueError) as exc:
        raise ConfigError("initial_state", str(exc)) from None

    alpha = (0j, 0j, 1 + 0j)
    if "alpha" in sim:
        a = sim["alpha"]
        if not isinstance(a, list) or len(a) != 6:
            raise ConfigError("alpha", "expected 6 reals [re_x, im_x, re_y, im_y, re_z, im_z]")
        alpha = _alpha_from_reals([_num({"c": c}, "c") for c in a])

    try:
        cfg = SimConfig(omega, tau, dt, duration, state, alpha, seed)
    except InvalidParametersError as exc:
        raise ConfigError("simulation", str(exc)) from None

    ens = dict(data.get("ensemble", {}))
    unknown = set(ens) - ENSEMBLE_KEYS
    if unknown:
        raise ConfigError("ensemble." + sorted(unknown)[0], "unknown key")
    opts = {}
    if "n" in ens:
        opts["n"] = _num(ens, "n", int)
    if "bins" in ens:
        opts["bins"] = _num(ens, "bins", int)
    if "workers" in ens:
        opts["workers"] = _num(ens, "workers", int)
    if "range" in ens:
        rg = ens["range"]
        if not isinstance(rg, list) or len(rg) != 2:
            raise ConfigError("ensemble.range", "expected [lo, hi]")
        opts["range"] = (float(rg[0]), float(rg[1]))
    return cfg, opts


def parse_config(text):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(f"invalid TOML: {exc}", line) from None
    return config_from_mapping(data)


def read_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _toml_float(x):
    return repr(float(x))


def dump_config(cfg, opts=None):
    """TOML text that parses back to an identical :class:`SimConfig`."""
    v = cfg.initial_state.bloch
    lines = [
        "[simulation]",
        f"omega = {_toml_float(cfg.omega)}",
        f"tau = {_toml_float(cfg.tau)}",
        f"dt = {_toml_float(cfg.dt)}",
        f"duration = {_toml_float(cfg.duration)}",
        "initial_state = [" + ", ".join(_toml_float(c) for c in v) + "]",
        "alpha = [" + ", ".join(_toml_float(c) for c in _alpha_to_reals(cfg.alpha)) + "]",
        f"seed = {cfg.seed}",
    ]
    if opts:
        lines.append("")
        lines.append("[ensemble]")
        for key in ("n", "bins", "workers"):
            if key in opts:
                lines.append(f"{key} = {int(opts[key])}")
        if "range" in opts:
            lo, hi = opts["range"]
            lines.append(f"range = [{_toml_float(lo)}, {_toml_float(hi)}]")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# ensemble outputs


def format_summary(items):
    out = []
    for key, val in items:
        if val is None:
            val = "undefined"
        elif isinstance(val, float):
            val = fmt(val)
        out.append(f"{key} = {val}")
    return "\n".join(out) + "\n"


def parse_summary(text):
    out = {}
    for line in text.splitlines():
        if "=" in line and not line.lstrip().startswith("#"):
            k, _, v = line.partition("=")
            out[k.strip()] = v.strip()
    return out


def format_histogram(hist):
    head = [
        "# qubitarrow histogram",
        f"# mode = {hist.mode}",
        f"# bins = {len(hist.counts)}",
        f"# range = {fmt(hist.edges[0])} {fmt(hist.edges[-1])}",
        f"# total = {hist.total}",
        f"# underflow = {hist.underflow}",
        f"# overflow = {hist.overflow}",
        "center,density" if hist.mode == "density" else "center,count",
    ]
    vals = hist.values()
    body = [
        f"{fmt(c)},{fmt(v) if hist.mode == 'density' else int(v)}"
        for c, v in zip(hist.centers, vals)
    ]
    return "\n".join(head + body) + "\n"


def format_samples(values):
    return "".join(fmt(v) + "\n" for v in values)


def parse_samples(text):
    out = []
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(_float(line, no, "sample"))
    return np.array(out)


# ---------------------------------------------------------------------------
# manifests and file helpers


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def build_manifest(command, cfg, outputs, opts=None, extra=None):
    now = datetime.datetime.now(datetime.timezone.utc).isoformat()
    m = {
        "artifact": "qubitarrow",
        "version": __version__,
        "command": command,
        "created": now,
        "seed": cfg.seed if cfg is not None else None,
        "config": dump_config(cfg, opts) if cfg is not None else None,
        "outputs": {os.path.basename(p): sha256_file(p) for p in outputs},
    }
    if extra:
        m.update(extra)
    return m


def write_manifest(path, manifest):
    _write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
