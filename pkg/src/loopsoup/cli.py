"""
Command-line front end.

``loopsoup <subcommand> [--key value ...] [--config FILE]``. The config file is
flat ``key = value`` text (or a JSON object); flags override it. Outputs are
written atomically and, when an output path is given, a JSON manifest is
written next to it as ``<output>.manifest.json``.

Exit codes: 0 success, 1 usage error, 2 sampling failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Dict, List, Optional, Sequence


from . import __version__
from .blocks import (BlockGrid, build_omega_global, build_omega_independent,
                     sample_hull_soup, spanning_open_path)
from .experiments import (bernoulli_minorant, bernoulli_simulation, bernoulli_threshold,
                          crossing_outcomes, estimate_alpha_c, interpolate_loop,
                          sweep_crossing_probability, truncation_experiment)
from .geometry import RealRect, Region, rect_region
from .kernel import build_kernel, pointed_rates, total_loop_mass
from .rng import map_replicas
from .sampler import SamplerConfig, SamplingError, filter_by_diameter, sample_soup, write_soup

EXIT_OK, EXIT_USAGE, EXIT_SAMPLING, EXIT_IO = 0, 1, 2, 3

SUBCOMMANDS = ("mass", "sample", "crossing", "blocks", "sweep", "alphac", "truncate",
               "bernoulli", "phi")


class UsageError(ValueError):
    pass


# --- parameter table --------------------------------------------------------------

def _floats(s) -> List[float]:
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    return [float(x) for x in str(s).split(",") if x.strip()]


def _ints(s) -> List[int]:
    if isinstance(s, (list, tuple)):
        return [int(x) for x in s]
    return [int(x) for x in str(s).split(",") if x.strip()]


def _grid(s):
    if isinstance(s, (list, tuple)):
        mx, my = s
    else:
        mx, my = str(s).lower().split("x")
    return int(mx), int(my)


def _region(s) -> str:
    kind, _, rest = str(s).partition(":")
    if kind not in ("rect", "box") or len(_floats(rest)) != 4:
        raise ValueError("expected rect:x0,x1,y0,y1 or box:x0,x1,y0,y1")
    return str(s)


def _nonneg(x):
    return all(v >= 0 for v in (x if isinstance(x, list) else [x]))


def _pos(x):
    return all(v >= 1 for v in (x if isinstance(x, list) else [x]))


# name -> (parser, check, description of the valid range)
PARAMS: Dict[str, tuple] = {
    "alpha": (float, lambda v: v >= 0 and math.isfinite(v), ">= 0"),
    "alphas": (_floats, lambda v: len(v) > 0 and _nonneg(v), "comma list of values >= 0"),
    "N": (int, lambda v: v >= 1, ">= 1"),
    "Ns": (_ints, lambda v: len(v) > 0 and _pos(v), "comma list of integers >= 1"),
    "grid": (_grid, lambda v: v[0] >= 1 and v[1] >= 1, "MXxMY with positive sides"),
    "box": (_ints, lambda v: len(v) > 0 and all(m >= 2 for m in v), "integers >= 2"),
    "cutoffs": (_ints, lambda v: _nonneg(v) and v == sorted(v), "ascending integers >= 0"),
    "samples": (int, lambda v: v >= 1, ">= 1"),
    "seed": (int, lambda v: v >= 0, ">= 0"),
    "mode": (str, lambda v: v in ("global", "independent"), "global or independent"),
    "diameter_min": (float, lambda v: v >= 0, ">= 0"),
    "diameter_max": (float, lambda v: v >= 0, ">= 0"),
    "max_rejections": (int, lambda v: v >= 1, ">= 1"),
    "max_steps": (int, lambda v: v >= 1, ">= 1"),
    "region": (_region, lambda v: True, "rect:x0,x1,y0,y1 or box:x0,x1,y0,y1"),
    "output": (str, lambda v: len(v) > 0, "a path"),
    "format": (str, lambda v: v in ("csv", "json", "text"), "csv, json or text"),
    "workers": (int, lambda v: v >= 1, ">= 1"),
}

_COMMON = {"seed", "output", "format", "workers", "max_rejections", "max_steps"}
# allowed keys, required keys and per-subcommand defaults
SPECS: Dict[str, tuple] = {
    "mass": ({"region", "N", "output", "format"}, {"region"}, {"N": 1}),
    "sample": (_COMMON | {"region", "N", "alpha", "diameter_min", "diameter_max"},
               {"region", "alpha"}, {"N": 1}),
    "crossing": (_COMMON | {"N", "alpha", "samples"},
                 {"N", "alpha", "samples"}, {}),
    "blocks": (_COMMON | {"N", "alpha", "grid", "mode", "samples", "diameter_max"},
               {"N", "alpha", "grid"}, {"mode": "independent", "samples": 1}),
    "sweep": (_COMMON | {"alphas", "N", "Ns", "samples"}, {"alphas", "samples"}, {}),
    "alphac": (_COMMON | {"box", "alphas", "samples"}, {"box", "alphas", "samples"}, {}),
    "truncate": (_COMMON | {"alpha", "cutoffs", "box", "samples"},
                 {"alpha", "cutoffs", "box", "samples"}, {}),
    "bernoulli": (_COMMON | {"alpha", "alphas", "box", "samples"}, set(), {}),
    "phi": (_COMMON | {"region", "N", "alpha", "diameter_min", "diameter_max"},
            {"region", "alpha", "N"}, {}),
}
# smallest scale at which the event geometry is non-degenerate
_MIN_N = {"crossing": 2, "blocks": 2, "sweep": 2}


@dataclass
class RunConfig:
    subcommand: str
    params: Dict[str, object] = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return int(self.params.get("seed", 0))

    def get(self, key, default=None):
        return self.params.get(key, default)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _argparser() -> argparse.ArgumentParser:
    p = _Parser(prog="loopsoup", description="Random walk loop soup experiments.",
                allow_abbrev=False)
    p.add_argument("--version", action="version", version=f"loopsoup {__version__}")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", default=None, help="flat key = value file, or JSON")
    for name, (_, _, rng) in PARAMS.items():
        flag = "--" + name.replace("_", "-")
        names = [flag] if flag == "--" + name else [flag, "--" + name]
        p.add_argument(*names, dest=name, default=None, help=rng)
    return p


def read_config_file(path: str) -> Dict[str, str]:
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise UsageError("JSON config must be an object")
        return doc
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_config(argv: Sequence[str], config_file: Optional[str] = None) -> RunConfig:
    """Build a validated :class:`RunConfig`; raises :class:`UsageError`."""
    ns = _argparser().parse_args(list(argv))
    raw: Dict[str, object] = {}
    path = config_file or ns.config
    if path is not None:
        try:
            raw.update(read_config_file(path))
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
    for name in PARAMS:
        v = getattr(ns, name)
        if v is not None:
            raw[name] = v
    allowed, required, defaults = SPECS[ns.subcommand]
    params = dict(defaults)
    for key, value in raw.items():
        if key not in PARAMS:
            raise UsageError(f"unknown key {key!r}")
        if key not in allowed:
            raise UsageError(f"key {key!r} does not apply to {ns.subcommand}")
        parse, check, rng = PARAMS[key]
        try:
            v = parse(value)
        except (TypeError, ValueError):
            raise UsageError(f"bad value for {key!r}: {value!r} (expected {rng})") from None
        if not check(v):
            raise UsageError(f"{key!r} out of range: {value!r} (expected {rng})")
        params[key] = v
    missing = sorted(required - set(params))
    if missing:
        raise UsageError(f"missing required key {missing[0]!r}")
    min_n = _MIN_N.get(ns.subcommand, 1)
    for key in ("N", "Ns"):
        vals = params.get(key)
        if vals is not None and min(vals if isinstance(vals, list) else [vals]) < min_n:
            raise UsageError(f"{key!r} out of range for {ns.subcommand}: must be >= {min_n}")
    if ns.subcommand == "sweep" and "N" not in params and "Ns" not in params:
        raise UsageError("missing required key 'N'")
    if ns.subcommand == "bernoulli" and "alpha" not in params and "alphas" not in params:
        raise UsageError("missing required key 'alpha'")
    dmin, dmax = params.get("diameter_min"), params.get("diameter_max")
    if dmin is not None and dmax is not None and dmin > dmax:
        raise UsageError("'diameter_min' exceeds 'diameter_max'")
    return RunConfig(ns.subcommand, params)


# --- outputs ----------------------------------------------------------------------

def atomic_write(path: str, data: bytes) -> None:
    """Write ``data`` to a temporary file beside ``path`` and rename it into place."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest(config: RunConfig, started: float, duration: float, outputs: Dict[str, bytes]) -> dict:
    return {
        "version": __version__,
        "subcommand": config.subcommand,
        "params": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in sorted(config.params.items()) if k != "workers"},
        "seed": config.seed,
        "started_at": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "duration_s": duration,
        "outputs": [{"path": p, "sha256": hashlib.sha256(b).hexdigest()}
                    for p, b in outputs.items()],
    }


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _region_of(cfg: RunConfig) -> Region:
    kind, _, rest = cfg.get("region").partition(":")
    vals = _floats(rest)
    if kind == "rect":
        return rect_region(RealRect(*vals), int(cfg.get("N", 1)))
    x0, x1, y0, y1 = (int(v) for v in vals)
    return Region.box(x0, x1, y0, y1)


def _sampler_config(cfg: RunConfig) -> SamplerConfig:
    kw = {}
    if "max_rejections" in cfg.params:
        kw["max_rejections"] = cfg.get("max_rejections")
    if "max_steps" in cfg.params:
        kw["max_steps"] = cfg.get("max_steps")
    return SamplerConfig(**kw)


def _workers(cfg: RunConfig) -> int:
    return int(cfg.get("workers", os.cpu_count() or 1))


# --- subcommands ------------------------------------------------------------------
# each returns (text written to the output or stdout, lines for stderr)

def _cmd_mass(cfg):
    region = _region_of(cfg)
    k = build_kernel(region)
    mass = total_loop_mass(k)
    rates = pointed_rates(k)
    diff = abs(rates.total - mass)
    if cfg.get("format") == "json":
        text = json.dumps({"vertices": len(region), "mass": mass, "pointed_sum": rates.total,
                           "difference": diff}, indent=2) + "\n"
    else:
        text = (f"vertices {len(region)}\nmass {mass!r}\npointed_sum {rates.total!r}\n"
                f"difference {diff!r}\n")
    return text


def _cmd_sample(cfg):
    region = _region_of(cfg)
    soup = sample_soup(pointed_rates(build_kernel(region)), cfg.get("alpha"), cfg.seed,
                       _sampler_config(cfg))
    soup = filter_by_diameter(soup, cfg.get("diameter_min"), cfg.get("diameter_max"))
    buf = io.StringIO()
    write_soup(soup, buf)
    return buf.getvalue()


def _cmd_crossing(cfg):
    N, alpha = cfg.get("N"), cfg.get("alpha")
    arr, _ = crossing_outcomes(N, [alpha], cfg.get("samples"), cfg.seed,
                               _sampler_config(cfg), _workers(cfg))
    rows = [(alpha, N, j, *map(int, arr[j, 0])) for j in range(len(arr))]
    return _csv(("alpha", "N", "replica", "C1", "C2", "C3", "special"), rows)


def _blocks_replica(args):
    N, alpha, grid, mode, seed, j, config, dmax = args
    if mode == "global":
        soup = sample_hull_soup(N, alpha, grid, (seed, j), config)
        if dmax is not None:
            soup = filter_by_diameter(soup, max_d=dmax)
        return build_omega_global(soup, N, grid)
    return build_omega_independent(N, alpha, grid, (seed, j), config)


def _cmd_blocks(cfg):
    N, alpha, (mx, my) = cfg.get("N"), cfg.get("alpha"), cfg.get("grid")
    mode = cfg.get("mode")
    grid = BlockGrid(mx, my)
    if mode == "independent" and cfg.get("diameter_max") is not None:
        raise UsageError("'diameter_max' applies to global mode only")
    fields = map_replicas(_blocks_replica,
                          [(N, alpha, grid, mode, cfg.seed, j, _sampler_config(cfg),
                            cfg.get("diameter_max")) for j in range(cfg.get("samples"))],
                          _workers(cfg))
    if cfg.get("format") == "text":
        return "".join(f"# replica={j}\n" + f.to_text() for j, f in enumerate(fields))
    rows = [(alpha, N, f"{mx}x{my}", mode, j, f.open_fraction, int(spanning_open_path(f)[0]))
            for j, f in enumerate(fields)]
    return _csv(("alpha", "N", "grid", "mode", "replica", "open_fraction", "spans"), rows)


def _cmd_sweep(cfg):
    Ns = cfg.get("Ns") or [cfg.get("N")]
    res = sweep_crossing_probability(cfg.get("alphas"), Ns, cfg.get("samples"), cfg.seed,
                                     _sampler_config(cfg), _workers(cfg))
    buf = io.StringIO()
    res.to_csv(buf)
    return buf.getvalue()


def _cmd_alphac(cfg):
    est = estimate_alpha_c(cfg.get("box"), cfg.get("alphas"), cfg.get("samples"), cfg.seed,
                           _sampler_config(cfg), _workers(cfg))
    for row in est.summary():
        print(f"M={row['M']} alpha_hat={row['alpha_hat']:.4f} ({row['status']}) "
              f"target={row['target']}", file=sys.stderr)
    buf = io.StringIO()
    est.to_csv(buf)
    return buf.getvalue()


def _cmd_truncate(cfg):
    rows = truncation_experiment(cfg.get("alpha"), cfg.get("cutoffs"), cfg.get("box")[0],
                                 cfg.get("samples"), cfg.seed, _sampler_config(cfg),
                                 _workers(cfg))
    cols = ("cutoff", "alpha", "box", "samples", "mean_loops", "mean_largest_vertices",
            "mean_max_cluster_diameter", "p_cross", "ci_low", "ci_high")
    return _csv(cols, [[r[c] for c in cols] for r in rows])


def _cmd_bernoulli(cfg):
    alphas = cfg.get("alphas") or [cfg.get("alpha")]
    box = cfg.get("box", [16])[0]
    samples = cfg.get("samples", 100)
    print(f"threshold alpha for p = 1/2: {bernoulli_threshold()!r}", file=sys.stderr)
    rows = []
    for a in alphas:
        b = bernoulli_simulation(a, box, samples, cfg.seed, _sampler_config(cfg))
        rows.append((a, bernoulli_minorant(a), b.open_frequency, b.standard_error, b.z,
                     b.crossing_soup, b.crossing_iid))
    return _csv(("alpha", "p_closed_form", "open_frequency", "standard_error", "z",
                 "crossing_backforth", "crossing_iid"), rows)


def _cmd_phi(cfg):
    region = _region_of(cfg)
    soup = sample_soup(pointed_rates(build_kernel(region)), cfg.get("alpha"), cfg.seed,
                       _sampler_config(cfg))
    soup = filter_by_diameter(soup, cfg.get("diameter_min"), cfg.get("diameter_max"))
    N = cfg.get("N")
    doc = {"N": N, "loops": [interpolate_loop(l, N).to_json() for l in soup]}
    return json.dumps(doc) + "\n"


COMMANDS: Dict[str, Callable] = {
    "mass": _cmd_mass, "sample": _cmd_sample, "crossing": _cmd_crossing,
    "blocks": _cmd_blocks, "sweep": _cmd_sweep, "alphac": _cmd_alphac,
    "truncate": _cmd_truncate, "bernoulli": _cmd_bernoulli, "phi": _cmd_phi,
}


def run(config: RunConfig) -> int:
    """Execute a validated configuration and return the exit code."""
    started = time.time()
    try:
        text = COMMANDS[config.subcommand](config)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SamplingError as exc:
        print(f"sampling failure: {exc}", file=sys.stderr)
        return EXIT_SAMPLING
    out = config.get("output")
    if out is None:
        sys.stdout.write(text)
        return EXIT_OK
    data = text.encode()
    try:
        atomic_write(out, data)
        man = manifest(config, started, time.time() - started, {out: data})
        atomic_write(out + ".manifest.json", (json.dumps(man, indent=2) + "\n").encode())
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
