"""Command line front end.

    specialcone verify NAME [--n 2] [--stages check,construct,verify] ...
    specialcone verify --config cert.txt
    specialcone list [FILTER] [--machine]

Reports are TSV on stdout (or --out).  Exit codes: 0 pass, 1 verification
failure, 2 usage or config error.

Certificate config format (line oriented, ``#`` starts a comment)::

    name = flat
    n = 2
    lo = -1
    hi = 1
    D[1][1][1] = "0"          # Christoffel symbols, 1-based, default 0
    density = "1"
    [patch 1]
    B[3][1][1] = "1"          # (B_{d_i} d_j)^k written B[k][i][j]
    c[1][1] = "0"
    gamma2[1] = "0"
    [overlap 1 2]
    f = "x1"

J is the standard complex structure on (x1, y1, ..., xn, yn).  In
``mode = dim=2`` the fundamental tensor is given as ``a[i][j]``.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cmap import cmap_report
from .cproj import CProjData
from .dsl import DSLError, parse as parse_expr
from .fields import Chart, Connection, Field, constant_field, fmap
from .numerics import jstack, seed_jets
from .gallery import GALLERY, OneFormFamily, build, scalar_field, tensor_field
from .psk import PSKCertificate, check_parallel_omega, check_psk_certificate, scalar_bound
from .pscb import CertificateError, Overlap, Patch, PSCBCertificate, check_certificate, construct_total_space, \
    verify_construction
from .report import VerificationReport
from .tensor import standard_J

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_certificate", "run", "list_gallery", "main",
           "STAGES", "DEFAULT_SEED"]

STAGES = ("check", "construct", "verify", "psk", "cmap")
REQUIRES = {"construct": "check", "verify": "construct", "psk": "check", "cmap": "construct"}
DEFAULT_SEED = 0xC0FFEE
PERTURB_KEYS = ("gamma2", "B", "c", "f")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


# ---------------------------------------------------------------- config files

_KEYS = {"top": {"name", "n", "lo", "hi", "mode", "coords", "J", "D", "density", "a"},
         "patch": {"B", "c", "gamma2"}, "overlap": {"f"}}
_EXPR_KEYS = {"D", "density", "a", "B", "c", "gamma2", "f"}
_SECTION = re.compile(r"^\[\s*(patch|overlap)\s+([^\]]*?)\s*\]$")
_ASSIGN = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)((?:\s*\[\s*\d+\s*\])*)\s*=\s*(.*)$")


def _strip_comment(line: str) -> str:
    quoted = False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def _value(raw: str, lineno: int):
    raw = raw.strip()
    if raw.startswith('"'):
        if len(raw) < 2 or not raw.endswith('"'):
            raise ConfigError("unterminated string", lineno)
        return raw[1:-1]
    if not raw:
        raise ConfigError("missing value", lineno)
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_config(text: str) -> dict:
    """Parse the config text into {"top": {...}, "patches": [...], "overlaps": [...]}.

    Indexed keys become {key: {index tuple (0-based): value}}.
    """
    out = {"top": {}, "patches": [], "overlaps": []}
    labels = {}
    cur = out["top"]
    kind = "top"
    for lineno, line in enumerate(text.splitlines(), 1):
        line = _strip_comment(line).strip()
        if not line:
            continue
        sec = _SECTION.match(line)
        if sec:
            kind, args = sec.group(1), sec.group(2).split()
            if kind == "patch":
                if len(args) != 1:
                    raise ConfigError("[patch] takes one label", lineno)
                if args[0] in labels:
                    raise ConfigError(f"duplicate patch {args[0]!r}", lineno)
                labels[args[0]] = len(out["patches"])
                cur = {"_label": args[0], "_line": lineno}
                out["patches"].append(cur)
            else:
                if len(args) != 2:
                    raise ConfigError("[overlap] takes two patch labels", lineno)
                cur = {"_pair": tuple(args), "_line": lineno}
                out["overlaps"].append(cur)
            continue
        m = _ASSIGN.match(line)
        if not m:
            raise ConfigError(f"cannot parse {line!r}", lineno)
        key, idx, raw = m.group(1), m.group(2), m.group(3)
        if key not in _KEYS[kind]:
            where = "at top level" if kind == "top" else f"in [{kind}]"
            raise ConfigError(f"unknown key {key!r} {where}", lineno)
        val = _value(raw, lineno)
        if key in _EXPR_KEYS:
            try:
                parse_expr(str(val))
            except DSLError as exc:
                raise ConfigError(f"{key}: {exc}", lineno) from exc
        if idx:
            ix = tuple(int(v) - 1 for v in re.findall(r"\d+", idx))
            if any(v < 0 for v in ix):
                raise ConfigError("indices are 1-based", lineno)
            slot = cur.setdefault(key, {})
            if not isinstance(slot, dict):
                raise ConfigError(f"{key} given both with and without indices", lineno)
            slot[ix] = val
        else:
            if key in cur:
                raise ConfigError(f"duplicate key {key!r}", lineno)
            cur[key] = val
    for ov in out["overlaps"]:
        for lab in ov["_pair"]:
            if lab not in labels:
                raise ConfigError(f"overlap refers to unknown patch {lab!r}", ov["_line"])
        ov["_pair"] = tuple(labels[lab] for lab in ov["_pair"])
    return out


def _bounds(v, m: int, default: float) -> np.ndarray:
    if v is None:
        return np.full(m, default)
    if isinstance(v, (int, float)):
        return np.full(m, float(v))
    vals = [float(s) for s in str(v).split()]
    if len(vals) != m:
        raise ConfigError(f"expected {m} bounds, got {len(vals)}")
    return np.asarray(vals)


def _components(sec: dict, key: str, rank: int, m: int) -> dict:
    comp = sec.get(key, {})
    if not isinstance(comp, dict):
        if rank == 0:
            return {(): comp}
        raise ConfigError(f"{key} needs {rank} indices", sec.get("_line", 0))
    for ix in comp:
        if len(ix) != rank or any(i >= m for i in ix):
            raise ConfigError(f"{key}{[i + 1 for i in ix]} out of range", sec.get("_line", 0))
    return comp


def load_certificate(text: str) -> PSCBCertificate:
    cfg = parse_config(text)
    top = cfg["top"]
    if "n" not in top or not isinstance(top["n"], int) or top["n"] < 1:
        raise ConfigError("n (complex dimension >= 1) is required")
    n = top["n"]
    m = 2 * n
    mode = str(top.get("mode", "dim>=4" if n >= 2 else "dim=2"))
    coords = str(top["coords"]).split() if "coords" in top else [f"{c}{i + 1}" for i in range(n) for c in "xy"]
    if len(coords) != m:
        raise ConfigError(f"coords must list {m} names")
    if str(top.get("J", "standard")) != "standard":
        raise ConfigError("only J = standard is supported")
    if not cfg["patches"]:
        raise ConfigError("at least one [patch] section is required")
    try:
        chart = Chart(coords, _bounds(top.get("lo"), m, -1.0), _bounds(top.get("hi"), m, 1.0),
                      name=str(top.get("name", "config")))
        J = constant_field(standard_J(m), m, 1, "J")
        D = Connection(tensor_field(_components(top, "D", 3, m), m, (m, m, m), coords, 1, "D"), m, "D")
        density = scalar_field(top["density"], m, coords, "rho") if "density" in top else None
        a = tensor_field(_components(top, "a", 2, m), m, (m, m), coords, 0, "a") if "a" in top else None
        patches = []
        for sec in cfg["patches"]:
            lab = sec["_label"]
            patches.append(Patch(tensor_field(_components(sec, "B", 3, m), m, (m, m, m), coords, 1, f"B[{lab}]"),
                                 tensor_field(_components(sec, "c", 2, m), m, (m, m), coords, 0, f"c[{lab}]"),
                                 tensor_field(_components(sec, "gamma2", 1, m), m, (m,), coords, 0,
                                              f"gamma2[{lab}]"), lab))
        overlaps = []
        for sec in cfg["overlaps"]:
            if "f" not in sec:
                raise ConfigError("overlap needs a transition phase f", sec["_line"])
            overlaps.append(Overlap(*sec["_pair"], scalar_field(sec["f"], m, coords, "f")))
        base = CProjData(chart, J, D, n)
        return PSCBCertificate(base, patches, overlaps, mode, a, density, str(top.get("name", "config")))
    except (DSLError, CertificateError, ValueError, IndexError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- perturbations

def _liouville(m: int) -> Field:
    """1/2 sum (x_i dy_i - y_i dx_i); its differential is the flat Kahler form."""
    def ev(p, k):
        x = seed_jets(p, k)
        comps = []
        for i in range(0, m, 2):
            comps += [x[i + 1] * -0.5, x[i] * 0.5]
        return jstack(comps)

    return Field(ev, m, (m,), 0, "lambda")


def perturb(cert: PSCBCertificate, key: str, eps: float) -> PSCBCertificate:
    """Fault injection.

    gamma2: gamma2 + eps * lambda in every patch (lambda the Liouville form);
    B, c: the last patch's tensor scaled by 1 + eps;
    f: every transition phase shifted by eps.
    """
    m = cert.m
    patches = list(cert.patches)
    overlaps = list(cert.overlaps)
    if key == "gamma2":
        lam = _liouville(m)
        patches = [Patch(p.B, p.c, fmap(lambda g, lv: g + lv * eps, [p.gamma2, lam], (m,), 0, "gamma2~"), p.name)
                   for p in patches]
    elif key in ("B", "c"):
        last = patches[-1]
        if key == "B":
            patches[-1] = Patch(last.B.scale(1 + eps), last.c, last.gamma2, last.name)
        else:
            patches[-1] = Patch(last.B, last.c.scale(1 + eps), last.gamma2, last.name)
    elif key == "f":
        if not overlaps:
            raise ConfigError("perturb f needs a certificate with overlaps")
        overlaps = [Overlap(o.alpha, o.beta, fmap(lambda v: v + eps, [o.f], (), 0, "f~")) for o in overlaps]
    else:
        raise ConfigError(f"unknown perturbation {key!r}; choose from {', '.join(PERTURB_KEYS)}")
    return PSCBCertificate(cert.base, patches, overlaps, cert.mode, cert.a, cert.density, cert.name + "~",
                           dict(cert.params), dict(cert.meta))


# ---------------------------------------------------------------- running

@dataclass
class RunConfig:
    gallery: str | None = None
    params: dict = field(default_factory=dict)
    config_path: str | None = None
    stages: tuple = ("check", "construct", "verify")
    tol: float = 1e-8
    samples: int = 64
    seed: int = DEFAULT_SEED
    t_grid: int = 8
    perturb: tuple = ()
    strict: bool = False
    out: str | None = None

    def __post_init__(self):
        self.stages = tuple(self.stages)
        bad = [s for s in self.stages if s not in STAGES]
        if bad:
            raise ConfigError(f"unknown stage(s) {', '.join(bad)}")
        for s in self.stages:
            req = REQUIRES.get(s)
            if s == "cmap" and self.gallery == "oneform":
                req = None  # no certificate, nothing to construct
            if req and req not in self.stages:
                raise ConfigError(f"stage {s} requires stage {req}")
        self.stages = tuple(s for s in STAGES if s in self.stages)
        if (self.gallery is None) == (self.config_path is None):
            raise ConfigError("give exactly one of a gallery name or --config")
        if self.samples < 1 or self.t_grid < 1 or self.tol <= 0:
            raise ConfigError("samples, t-grid and tol must be positive")

    def echo(self) -> dict:
        src = self.gallery if self.gallery is not None else f"config:{self.config_path}"
        out = {"source": src}
        out.update({k: self.params[k] for k in sorted(self.params)})
        out.update({"stages": ",".join(self.stages), "tol": self.tol, "samples": self.samples,
                    "t_grid": self.t_grid})
        if self.perturb:
            out["perturb"] = ",".join(f"{k}={v}" for k, v in self.perturb)
        return out


def _load(cfg: RunConfig):
    if cfg.config_path is not None:
        try:
            with open(cfg.config_path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        return load_certificate(text)
    if cfg.gallery not in GALLERY:
        raise ConfigError(f"unknown gallery example {cfg.gallery!r}")
    try:
        return build(cfg.gallery, **cfg.params)
    except (CertificateError, DSLError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _stage_points(chart, cfg: RunConfig, stage: str) -> np.ndarray:
    return chart.sample(cfg.samples, cfg.seed + STAGES.index(stage))


def run(cfg: RunConfig) -> VerificationReport:
    obj = _load(cfg)
    rep = VerificationReport(config=cfg.echo(), seed=cfg.seed)
    if isinstance(obj, OneFormFamily):
        if cfg.stages != ("cmap",):
            raise ConfigError("the one-form family carries no certificate; only --stages cmap applies")
        if cfg.perturb:
            raise ConfigError("perturbations apply to certificates only")
        pts = _stage_points(obj.chart, cfg, "cmap")
        return rep.extend(cmap_report(obj, pts, t_grid=cfg.t_grid, tol=cfg.tol))
    cert = obj
    for key, val in cfg.perturb:
        cert = perturb(cert, key, val)
    cone = None
    cone_others = []
    for stage in cfg.stages:
        before = len(rep.failures())
        if stage == "check":
            rep.extend(check_certificate(cert, _stage_points(cert.chart, cfg, stage), cfg.tol))
        elif stage == "construct":
            cone = construct_total_space(cert)
            cone_others = [construct_total_space(cert, i) for i in range(1, len(cert.patches))]
            pts = _stage_points(cone.chart, cfg, stage)
            rep.add_bool("construct", "total space built", "J, D, B, A and nabla on the total chart",
                         bool(np.all(np.isfinite(cone.nabla.at(pts)))))
        elif stage == "verify":
            pts = _stage_points(cone.chart, cfg, stage)
            rep.extend(verify_construction(cone, pts, cfg.tol, overlap_cones=cone_others))
        elif stage == "psk":
            psk = PSKCertificate(cert)
            pts = _stage_points(cert.chart, cfg, stage)
            rep.extend(check_psk_certificate(psk, pts, cfg.tol))
            smallest = float(np.abs(np.linalg.eigvalsh(psk.g.at(pts))).min())
            if smallest <= cfg.tol:
                rep.add("psk", "metric rows skipped", "g degenerate: smallest |eigenvalue|", smallest, cfg.tol,
                        expect="info")
            else:
                sb = scalar_bound(psk, pts)
                rep.add("psk", "scalar bound identity", "4n(n+1) + scal = 1/4 Tr_g Bgram", sb.residual, cfg.tol)
                rep.add("psk", "scalar bound value", "1/4 Tr_g Bgram >= 0 (minimum over samples)", sb.value,
                        cfg.tol, expect="info")
                mcone = cone if cone is not None else construct_total_space(cert)
                rep.extend(check_parallel_omega(mcone, psk.g, _stage_points(mcone.chart, cfg, stage), cfg.tol))
        elif stage == "cmap":
            pts = _stage_points(cone.chart, cfg, stage)
            rep.extend(cmap_report(cone, pts, t_grid=cfg.t_grid, tol=cfg.tol))
        if cfg.strict and len(rep.failures()) > before:
            break
    return rep


# ---------------------------------------------------------------- listing

def list_gallery(filter_text: str | None = None, machine: bool = False) -> str:
    lines = []
    for name, entry in GALLERY.items():
        if filter_text and filter_text.lower() not in (name + " " + entry.anchor).lower():
            continue
        if machine:
            lines.append(json.dumps({"name": name, "params": entry.params, "anchor": entry.anchor},
                                    sort_keys=True))
        else:
            params = ", ".join(f"{k}: {v}" for k, v in entry.params.items())
            lines.append(f"{name:<9} {entry.anchor}\n          params: {params}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------- argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _kv(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected KEY=VAL")
    k, v = text.split("=", 1)
    try:
        return k.strip(), float(v)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad value {v!r}") from exc


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="specialcone", description="Verify conical special complex constructions.")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)
    v = sub.add_parser("verify", help="run verification stages on a gallery example or config file")
    v.add_argument("name", nargs="?", help="gallery example")
    v.add_argument("--gallery", dest="gallery_opt", metavar="NAME")
    v.add_argument("--config", metavar="PATH")
    for opt in ("n", "l", "k", "delta", "s", "t", "a", "b", "phase"):
        v.add_argument(f"--{opt}", dest=f"p_{opt}", metavar=opt.upper())
    v.add_argument("--stages", default=None, help="comma separated subset of " + ",".join(STAGES))
    v.add_argument("--tol", type=float, default=1e-8)
    v.add_argument("--samples", type=int, default=64)
    v.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
    v.add_argument("--t-grid", type=int, default=8)
    v.add_argument("--perturb", type=_kv, action="append", default=[], metavar="KEY=VAL")
    v.add_argument("--strict", action="store_true")
    v.add_argument("--out", metavar="PATH")
    ls = sub.add_parser("list", help="list the gallery")
    ls.add_argument("filter", nargs="?")
    ls.add_argument("--machine", action="store_true")
    return p


def _run_config(ns) -> RunConfig:
    gallery = ns.name or ns.gallery_opt
    if ns.name and ns.gallery_opt and ns.name != ns.gallery_opt:
        raise ConfigError("conflicting gallery names")
    params = {}
    for opt in ("n", "l", "k", "delta", "s", "t", "a", "b", "phase"):
        val = getattr(ns, f"p_{opt}")
        if val is not None:
            params[opt] = val
    if gallery is not None and params:
        allowed = set(GALLERY[gallery].params) if gallery in GALLERY else set(params)
        extra = sorted(set(params) - allowed)
        if extra:
            raise ConfigError(f"{gallery} does not take {', '.join('--' + e for e in extra)}")
    if ns.stages is None:
        stages = ("cmap",) if gallery == "oneform" else ("check", "construct", "verify")
    else:
        stages = tuple(s.strip() for s in ns.stages.split(",") if s.strip())
    return RunConfig(gallery, params, ns.config, stages, ns.tol, ns.samples, ns.seed, ns.t_grid,
                     tuple(ns.perturb), ns.strict, ns.out)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        ns = _parser().parse_args(argv)
        if ns.cmd == "list":
            sys.stdout.write(list_gallery(ns.filter, ns.machine))
            return 0
        if ns.cmd != "verify":
            raise ConfigError("expected a subcommand: verify or list")
        cfg = _run_config(ns)
        rep = run(cfg)
    except ConfigError as exc:
        sys.stderr.write(f"specialcone: error: {exc}\n")
        return 2
    text = rep.to_tsv()
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
