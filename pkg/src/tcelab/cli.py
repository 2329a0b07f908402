"""Command-line interface: ``tcelab <command> [options]``.

Every command gathers its outputs in memory and writes them at the end
through a temporary file and an atomic rename, so a failing run leaves no
partial files.  Exit codes: 0 success, 1 verification failure,
2 configuration error, 3 runtime guard.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import caps, flat, plotting, returns
from .errors import RuntimeGuard, TCEError
from .expr import cos_of, evaluate
from .iet import first_return, keane_check
from .svg import PALETTE, Canvas, padded_box
from .tce import TCEParams, build_tce, run_batch, step_many

log = logging.getLogger("tcelab")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_GUARD = 0, 1, 2, 3
SCHEMA = 1
COMMANDS = ("orbit", "caps", "verify", "classify", "flat", "return-map", "refine")
FORMATS = ("csv", "json", "svg", "all")


class ConfigError(ValueError):
    pass


# -- configuration ------------------------------------------------------------


@dataclass
class RunConfig:
    """All parameters of one run; expressions are kept as their source strings."""

    command: str = "orbit"
    d: int | None = None
    alpha: list[str] | None = None
    sigma: str | None = None
    phi: str | None = None
    lam: str | None = None
    n: int | None = None
    seeds: int = 1000
    transient: int = 1000
    iters: int = 1000
    box: list[str] | None = None
    rng_seed: int = 0
    qmax: int = 10**6
    tol: float = 1e-11
    out: str = "out"
    format: str = "all"
    grid: int = 500
    max_steps: int = 10**5
    depth: int = 1
    samples: int = 1000
    lost_threshold: float = 0.01
    orbit_csv: str | None = None

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        raw = json.loads(text)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - names - {"lambda"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "lambda" in raw:
            raw["lam"] = raw.pop("lambda")
        for key in ("alpha", "box"):
            if isinstance(raw.get(key), str):
                raw[key] = _split_list(raw[key])
            elif raw.get(key) is not None:
                raw[key] = [str(v) for v in raw[key]]
        for key in ("phi", "lam"):
            if raw.get(key) is not None:
                raw[key] = str(raw[key])
        return cls(**raw)

    # parsed views

    def lam_value(self):
        if self.lam is None:
            raise ConfigError("--lambda is required")
        return evaluate(self.lam, self.phi)

    def phi_value(self) -> float:
        if self.phi is None:
            raise ConfigError("--phi is required")
        return float(evaluate(self.phi))

    def alpha_values(self) -> list[float]:
        if not self.alpha:
            raise ConfigError("--alpha is required")
        return [float(evaluate(a)) for a in self.alpha]

    def box_values(self) -> tuple[float, float, float, float]:
        if not self.box or len(self.box) != 4:
            raise ConfigError("--box needs four values x0,x1,y0,y1")
        return tuple(float(evaluate(b, self.phi)) for b in self.box)

    def cap_params(self) -> caps.CapParams:
        return caps.cap_params(self.phi_value(), self.lam_value(), cos_of(self.phi))

    def tce(self) -> TCEParams:
        lam = float(self.lam_value())
        if self.alpha:
            alpha = self.alpha_values()
            d = self.d if self.d is not None else len(alpha) - 2
            sigma = self.sigma if self.sigma is not None else list(range(d + 2))
            return build_tce(d, alpha, sigma, lam)
        if self.phi is not None:
            return caps.cap_tce(self.phi_value(), lam)
        raise ConfigError("give either --alpha (with optional --d/--sigma) or --phi")

    def params_record(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if k not in ("out", "format", "command")}


def _split_list(text: str) -> list[str]:
    """Split on commas outside parentheses, so ``thresh(1),2`` stays whole."""
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            parts.append(cur.strip())
            cur = ""
            continue
        depth += (ch == "(") - (ch == ")")
        cur += ch
    parts.append(cur.strip())
    return [p for p in parts if p]


# -- output helpers -----------------------------------------------------------


class Outputs:
    """Files collected in memory and committed atomically at the end."""

    def __init__(self, out_dir: str, fmt: str):
        self.out_dir = out_dir
        self.fmt = fmt
        self.files: dict[str, bytes] = {}

    def wants(self, kind: str) -> bool:
        return self.fmt == "all" or self.fmt == kind

    def add(self, name: str, data: str | bytes) -> None:
        self.files[name] = data.encode() if isinstance(data, str) else data

    def add_json(self, name: str, payload: dict) -> None:
        self.add(name, json.dumps({"schema": SCHEMA, **payload}, indent=2, default=_json_default) + "\n")

    def add_png(self, name: str, draw: Callable[[io.BytesIO], None]) -> None:
        buf = io.BytesIO()
        draw(buf)
        self.add(name, buf.getvalue())

    def commit(self) -> list[str]:
        os.makedirs(self.out_dir, exist_ok=True)
        mask = os.umask(0)
        os.umask(mask)
        written = []
        for name, data in self.files.items():
            path = os.path.join(self.out_dir, name)
            fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=f".{name}.", suffix=".tmp")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                os.chmod(tmp, 0o666 & ~mask)
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
            written.append(path)
        return written


def _json_default(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _num(v):
    return str(v) if isinstance(v, Fraction) else float(v)


def orbit_csv(batch) -> str:
    buf = io.StringIO()
    buf.write("seed,step,x,y,atom\n")
    for s, k, x, y, a in zip(batch.seed.tolist(), batch.step.tolist(), batch.x.tolist(),
                             batch.y.tolist(), batch.atom.tolist()):
        buf.write(f"{s},{k},{x:.17g},{y:.17g},{a}\n")
    return buf.getvalue()


def read_orbit_csv(path: str) -> dict[str, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {"seed": data[:, 0].astype(np.int64), "step": data[:, 1].astype(np.int64),
            "x": data[:, 2], "y": data[:, 3], "atom": data[:, 4].astype(np.int64)}


# -- commands -----------------------------------------------------------------


def cmd_orbit(cfg: RunConfig, out: Outputs) -> int:
    t = cfg.tce()
    box = cfg.box_values() if cfg.box else (-1.0, float(t.lam), 0.0, 1.5)
    batch = run_batch(t, box, cfg.seeds, cfg.transient, cfg.iters, cfg.rng_seed)
    if out.wants("csv"):
        out.add("orbit.csv", orbit_csv(batch))
    if out.wants("json"):
        out.add_json("orbit.json", {
            "command": "orbit", "params": cfg.params_record(),
            "map": {"d": t.d, "alpha": list(t.alpha), "sigma": list(t.sigma), "lambda": t.lam,
                    "tau": list(t.tau)},
            "records": len(batch), "box": list(box),
            "x_range": [float(batch.x.min()), float(batch.x.max())],
            "y_range": [float(batch.y.min()), float(batch.y.max())],
            "atom_counts": np.bincount(batch.atom, minlength=t.n_atoms).tolist(),
        })
    if out.wants("svg"):
        canvas = Canvas(padded_box(batch.x, batch.y))
        for j in range(t.n_atoms):
            sel = batch.atom == j
            canvas.points(batch.x[sel], batch.y[sel], PALETTE[j % len(PALETTE)])
        out.add("orbit.svg", canvas.render())
        out.add_png("orbit.png", lambda buf: plotting.orbit_figure(buf, batch.x, batch.y, batch.atom))
    return EXIT_OK


def _cap_payload(p: caps.CapParams, n: int, qmax: int, tol: float) -> dict:
    cap = caps.cap_vertices(p, n)
    f = caps.induced_iet(p, n)
    cls = caps.classify_cap_dynamics(p, n, qmax, tol)
    return {
        "n": n,
        "length": _num(cap.length),
        "degenerate": cap.degenerate,
        "vertices": [[v.x, v.y] for v in cap.vertices],
        "breakpoints": [_num(b) for b in cap.breakpoints],
        "domain_length": _num(cap.domain_length),
        "iet": f.as_dict(),
        "classification": cls.as_dict(),
    }


def _cap_header(p: caps.CapParams) -> dict:
    return {"phi": p.phi, "lambda": _num(p.lam), "cos_phi": _num(p.cos_phi), "eta": _num(p.eta),
            "exact": p.exact, "capacity": caps.capacity(p)}


def _cap_range(cfg: RunConfig, p: caps.CapParams, lowest: int = 0) -> list[int]:
    N = caps.capacity(p)
    if cfg.n is None:
        return list(range(lowest, N + 1))
    if not lowest <= cfg.n <= N:
        raise caps.NOutOfRange(f"n={cfg.n} outside [{lowest}, {N}]")
    return [cfg.n]


def cmd_caps(cfg: RunConfig, out: Outputs) -> int:
    p = cfg.cap_params()
    ns = _cap_range(cfg, p)
    payload = {"command": "caps", "params": cfg.params_record(), **_cap_header(p),
               "caps": [_cap_payload(p, n, cfg.qmax, cfg.tol) for n in ns]}
    if out.wants("json"):
        out.add_json("caps.json", payload)
    if out.wants("svg"):
        curves = [np.array(caps.cap_vertices(p, n).complex_vertices()) for n in ns if n > 0]
        curves = [np.column_stack([c.real, c.imag]) for c in curves]
        images = [_cap_image(p, n) for n in ns if n > 0]
        lam = float(p.lam)
        allpts = np.vstack(curves + [np.array([[-1.0, 0.0], [lam, 0.0]])])
        canvas = Canvas(padded_box(allpts[:, 0], allpts[:, 1]))
        canvas.polyline([(-1.0, 0.0), (lam, 0.0)])
        for k, c in enumerate(curves):
            canvas.polyline(c, PALETTE[k % len(PALETTE)], 1.2)
        for k, im in enumerate(images):
            canvas.points(im[:, 0], im[:, 1], PALETTE[k % len(PALETTE)], r=0.6)
        out.add("caps.svg", canvas.render())
        out.add_png("caps.png", lambda buf: plotting.caps_figure(buf, curves, images, (-1.0, lam)))
    return EXIT_OK


def _cap_image(p: caps.CapParams, n: int, samples: int = 2000) -> np.ndarray:
    """``F`` applied to points spread along the n-th cap."""
    cap = caps.cap_vertices(p, n)
    ts = (np.arange(samples) + 0.5) / samples * float(cap.domain_length)
    z = caps.gamma_many(cap, ts)
    x, y, _ = step_many(p.tce, z.real, z.imag)
    return np.column_stack([x, y])


def _verify_caps(cfg: RunConfig) -> dict:
    p = cfg.cap_params()
    ns = _cap_range(cfg, p, lowest=1 if cfg.n is not None else 0)
    reports, failed = [], False
    for n in ns:
        rep = caps.verify_cap_invariance(p, n, cfg.tol, 10 * cfg.tol, cfg.samples, cfg.rng_seed)
        if n >= 2:
            inner, outer = caps.pyramid(p, n - 1).polygon, caps.pyramid(p, n).polygon
            from .geometry import Location, polygon_contains
            worst = sum(polygon_contains(outer, v, 1e-10) is Location.OUTSIDE for v in inner.vertices)
            rep.checks.append(caps.Check("nesting", float(worst), 0.0))
        f = caps.induced_iet(p, n)
        if n >= 1 and p.exact:
            k = keane_check(f, 4 * n)
            start = p.length(n) + p.eta
            ok = k.violated and k.steps == 2 * n and k.orbit[0] == start \
                and k.orbit[-1] == p.length(n) + (2 * n + 1) * p.eta
            rep.checks.append(caps.Check("keane_connection", 0.0 if ok else 1.0, 0.0))
        failed |= not rep.passed
        reports.append(rep.as_dict())
    result = {"mode": "caps", **_cap_header(p), "reports": reports}
    if cfg.orbit_csv:
        rec = read_orbit_csv(cfg.orbit_csv)
        crossings = caps.count_crossings(p, rec["x"], rec["y"], rec["seed"], 1e-8)
        result["orbit_crossings"] = crossings
        failed |= crossings != 0
    result["passed"] = not failed
    return result


def _verify_flat(cfg: RunConfig) -> dict:
    alpha = cfg.alpha_values()
    if len(alpha) != 3:
        raise ConfigError("the flat suite needs three cone angles")
    fp = flat.FlatParams(tuple(alpha), float(cfg.lam_value()))
    ys = flat.y_star(fp)
    checks = []
    balance = abs(ys * fp.cot0 - (fp.lam - ys * fp.cot2))
    checks.append(caps.Check("ystar_balance", balance, 1e-12))
    checks.append(caps.Check("transition_height", abs(flat.locate_transition(fp) - ys), 1e-10))
    base = flat.slice_iet(fp, 0.0).iet
    ind = first_return(base, -1.0, 0.0)
    top = flat.slice_iet(fp, ys).iet
    worst = max(abs(a - b) for a, b in zip(ind.lengths, top.lengths)) if ind.d == top.d else math.inf
    if ind.perm != top.perm:
        worst = math.inf
    checks.append(caps.Check("top_slice_is_induced_baseline", worst, 1e-12))
    passed = all(c.passed for c in checks)
    return {"mode": "flat", "y_star": ys, "checks": [c.as_dict() for c in checks], "passed": passed}


def cmd_verify(cfg: RunConfig, out: Outputs) -> int:
    if cfg.phi is not None:
        result = _verify_caps(cfg)
    else:
        result = _verify_flat(cfg)
    out.add_json("verify.json", {"command": "verify", "params": cfg.params_record(), **result})
    return EXIT_OK if result["passed"] else EXIT_FAILED


def cmd_classify(cfg: RunConfig, out: Outputs) -> int:
    p = cfg.cap_params()
    rows = [caps.classify_cap_dynamics(p, n, cfg.qmax, cfg.tol).as_dict() for n in _cap_range(cfg, p)]
    out.add_json("classify.json", {"command": "classify", "params": cfg.params_record(),
                                   **_cap_header(p), "classifications": rows})
    return EXIT_OK


def cmd_flat(cfg: RunConfig, out: Outputs) -> int:
    alpha = cfg.alpha_values()
    if len(alpha) != 3:
        raise ConfigError("flat needs three cone angles")
    fp = flat.FlatParams(tuple(alpha), float(cfg.lam_value()))
    ys = flat.y_star(fp)
    y_max = 2.0 * ys
    bound = flat.m_boundary(fp, y_max, 200)
    table = []
    for k in range(21):
        y = y_max * k / 20
        s = flat.slice_iet(fp, y)
        table.append({"y": y, "kind": s.kind.value, "iet": s.iet.as_dict()})
    T, strip = flat.trapezium_regions(fp)
    box = cfg.box_values() if cfg.box else (-10.0, 10.0, 0.0, 2.0)
    from .tce import sample_box
    seeds = sample_box(box, cfg.seeds, cfg.rng_seed)
    t = fp.tce
    times = [flat.absorb(fp, (x, y), cfg.max_steps, t)[0] for x, y in seeds]
    hist = np.bincount(times).tolist()
    payload = {
        "command": "flat", "params": cfg.params_record(), "alpha": alpha, "lambda": fp.lam,
        "y_star": ys, "m_boundary": bound, "slices": table,
        "trapezium": {"vertices": T.as_array().tolist(), "area": T.area},
        "upper_strip": dataclasses.asdict(strip),
        "absorption": {"seeds": cfg.seeds, "box": list(box), "max": int(max(times)),
                       "mean": float(np.mean(times)), "histogram": hist},
    }
    if out.wants("json"):
        out.add_json("flat.json", payload)
    if out.wants("svg"):
        pts = np.array(bound["left"] + bound["right"])
        canvas = Canvas(padded_box(pts[:, 0], pts[:, 1]))
        canvas.polyline(bound["left"], PALETTE[0])
        canvas.polyline(bound["right"], PALETTE[0])
        canvas.polygon(T.as_array(), PALETTE[1])
        out.add("flat.svg", canvas.render())
        out.add_png("absorption.png", lambda buf: plotting.histogram_figure(buf, times, "steps to absorption"))
    return EXIT_OK


def _region(cfg: RunConfig):
    """Return-map region: ``Q_3^(n)`` for the cap map, the trapezium for three cones."""
    if cfg.phi is not None:
        p = cfg.cap_params()
        n = 1 if cfg.n is None else cfg.n
        if n < 1:
            raise caps.NOutOfRange("return maps need n >= 1")
        return p.tce, caps.pyramid(p, n).atoms[3], p
    fp = flat.FlatParams(tuple(cfg.alpha_values()), float(cfg.lam_value()))
    return fp.tce, flat.trapezium_regions(fp)[0], None


def cmd_return_map(cfg: RunConfig, out: Outputs) -> int:
    t, region, _ = _region(cfg)
    rm = returns.first_return_map(t, region, cfg.grid, cfg.max_steps)
    bottom, top = returns.boundary_edge_iets(t, region, max_steps=cfg.max_steps)
    out.add_json("return_map.json", {
        "command": "return-map", "params": cfg.params_record(),
        "region": region.as_array().tolist(), **rm.as_dict(),
        "edges": {"bottom": bottom.as_dict(), "top": top.as_dict()},
    })
    if out.wants("svg"):
        v = region.as_array()
        canvas = Canvas(padded_box(v[:, 0], v[:, 1]))
        for k, c in enumerate(rm.cells):
            canvas.points(c.sample_points[:, 0], c.sample_points[:, 1], PALETTE[k % len(PALETTE)])
        canvas.polyline(v, closed=True)
        out.add("return_map.svg", canvas.render())
        out.add_png("return_map.png", lambda buf: plotting.cells_figure(
            buf, [v], [c.sample_points for c in rm.cells]))
    if rm.lost_fraction > cfg.lost_threshold:
        out.commit()
        raise RuntimeGuard(f"lost fraction {rm.lost_fraction:.3g} exceeds {cfg.lost_threshold}")
    return EXIT_OK


def cmd_refine(cfg: RunConfig, out: Outputs) -> int:
    p = cfg.cap_params()
    n = 1 if cfg.n is None else cfg.n
    if n < 1:
        raise caps.NOutOfRange("refinement needs n >= 1")
    base = list(caps.pyramid(p, n).atoms)
    rep = returns.refine(p.tce, base, cfg.depth)
    out.add_json("refine.json", {"command": "refine", "params": cfg.params_record(), **rep.as_dict()})
    if out.wants("svg"):
        allpts = np.vstack([c.polygon.as_array() for c in rep.cells])
        canvas = Canvas(padded_box(allpts[:, 0], allpts[:, 1]))
        for k, c in enumerate(rep.cells):
            canvas.polygon(c.polygon.as_array(), PALETTE[k % len(PALETTE)])
        out.add("refine.svg", canvas.render())
        out.add_png("refine.png", lambda buf: plotting.cells_figure(
            buf, [c.polygon.as_array() for c in rep.cells]))
    return EXIT_OK


HANDLERS = {
    "orbit": cmd_orbit, "caps": cmd_caps, "verify": cmd_verify, "classify": cmd_classify,
    "flat": cmd_flat, "return-map": cmd_return_map, "refine": cmd_refine,
}


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; inline flags override it")
    common.add_argument("--d", type=int)
    common.add_argument("--alpha", help="cone angles a0,a1,... (expressions in pi)")
    common.add_argument("--sigma", help="permutation in cycle notation, e.g. '(1 2)'")
    common.add_argument("--phi")
    common.add_argument("--lambda", dest="lam")
    common.add_argument("--n", type=int)
    common.add_argument("--seeds", type=int)
    common.add_argument("--transient", type=int)
    common.add_argument("--iters", type=int)
    common.add_argument("--box", help="x0,x1,y0,y1")
    common.add_argument("--rng-seed", type=int)
    common.add_argument("--qmax", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--out")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--grid", type=int)
    common.add_argument("--max-steps", type=int)
    common.add_argument("--depth", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--lost-threshold", type=float)
    common.add_argument("--orbit-csv", help="orbit CSV to check for layer crossings (verify)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="tcelab", description="Translated cone exchange experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = RunConfig.from_json(fh.read())
    else:
        cfg = RunConfig()
    cfg.command = args.command
    for f in dataclasses.fields(RunConfig):
        if f.name == "command":
            continue
        value = getattr(args, f.name, None)
        if value is None:
            continue
        if f.name in ("alpha", "box"):
            value = _split_list(value)
        setattr(cfg, f.name, value)
    return cfg


def run(cfg: RunConfig) -> int:
    out = Outputs(cfg.out, cfg.format)
    code = HANDLERS[cfg.command](cfg, out)
    for path in out.commit():
        print(path)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        try:
            cfg = config_from_args(args)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return run(cfg)
    except RuntimeGuard as exc:
        print(f"runtime guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (TCEError, ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
