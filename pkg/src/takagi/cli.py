"""Command-line entry point: validate, eval, plot and experiment."""
from __future__ import annotations

import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import click

from . import core
from .analysis import EXPERIMENTS, run_experiment
from .dyadic import parse_point
from .errors import PrecisionExhausted, TakagiError, ValidationError
from .params import CurvePoint, ParamCurve, validate

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_PRECISION = 0, 1, 2, 3


def fmt(v) -> str:
    """17 significant digits, '.' decimal point whatever the locale."""
    return format(float(v), ".17g")


@dataclass
class RunConfig:
    command: str
    experiment: str
    curve: dict
    params: dict = field(default_factory=dict)
    output: str | None = None
    seed: int = 0
    tol: float | None = None

    KEYS = ("command", "experiment", "curve", "params", "output", "seed", "tol")

    @classmethod
    def from_dict(cls, d, force=False):
        if not isinstance(d, dict):
            raise click.UsageError("config must be a JSON object")
        extra = sorted(set(d) - set(cls.KEYS))
        if extra:
            raise click.UsageError(f"unknown config keys {extra}")
        try:
            cfg = cls(command=d.get("command", "experiment"), experiment=d["experiment"],
                      curve=d["curve"], params=d.get("params") or {}, output=d.get("output"),
                      seed=d.get("seed", 0), tol=d.get("tol"))
        except KeyError as exc:
            raise click.UsageError(f"config is missing {exc}") from exc
        if cfg.command != "experiment":
            raise click.UsageError(f"config command must be 'experiment', got {cfg.command!r}")
        if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) or cfg.seed < 0:
            raise click.UsageError("seed must be a non-negative integer")
        # normalize the curve through ParamCurve so equal curves serialize equally
        cfg.curve = _curve_from_obj(cfg.curve, force).to_dict()
        return cfg

    def to_dict(self):
        return {k: v for k, v in asdict(self).items()}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def parse(cls, text, force=False):
        """Parse and insist on parse -> serialize -> parse being the identity."""
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise click.UsageError(f"config is not valid JSON: {exc}") from exc
        cfg = cls.from_dict(raw, force)
        again = cls.from_dict(json.loads(cfg.to_json()), force)
        if again != cfg:
            raise click.UsageError("config does not round-trip")
        return cfg


def _curve_from_obj(obj, force=False) -> ParamCurve:
    if isinstance(obj, (list, tuple)) and len(obj) == 3:
        return ParamCurve.constant(*obj, order=0, force=force)
    if not isinstance(obj, dict):
        raise click.UsageError("curve must be an object {b1, c0, c1, order} or a triple")
    return ParamCurve.from_dict(obj, force=force)


def parse_number(text) -> float:
    s = text.strip()
    try:
        if s.endswith("...") and "." in s[:-3] and s[-4].isdigit():
            # "0.3333..." repeats its last digit: 0.3333 + 3/9 * 10^-4
            body = s[:-3]
            sign = -1 if body.startswith("-") else 1
            places = len(body.split(".")[1])
            rep = Fraction(int(body[-1]), 9 * 10 ** places)
            return float(Fraction(body) + sign * rep)
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise click.BadParameter(f"not a number: {text!r}") from exc


def parse_triple(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise click.BadParameter("expected b1,c0,c1")
    return tuple(parse_number(p) for p in parts)


def load_curve(path, force=False) -> ParamCurve:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read curve {path}: {exc}") from exc
    return _curve_from_obj(obj, force)


def _merge(ctx, **local):
    opts = dict(ctx.obj or {})
    for k, v in local.items():
        if v is not None and v is not False:
            opts[k] = v
    return opts


def common(fn):
    for opt in reversed([
        click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None),
        click.option("--tol", type=float, default=None),
        click.option("--jobs", type=click.IntRange(1), default=None),
        click.option("--force", is_flag=True, default=False),
        click.option("--output", type=click.Path(dir_okay=False), default=None),
    ]):
        fn = opt(fn)
    return fn


def _write(text, output):
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


@click.group()
@common
@click.pass_context
def main(ctx, seed, tol, jobs, force, output):
    """Evaluate de Rham/Takagi-type functions, their parameter derivatives and experiments."""
    ctx.obj = {"seed": seed, "tol": tol, "jobs": jobs, "force": force, "output": output}


@main.command("validate")
@click.option("--point", "point", default=None, help="b1,c0,c1")
@click.option("--curve", "curve", default=None, type=click.Path(), help="curve JSON file")
@common
@click.pass_context
def validate_cmd(ctx, point, curve, **local):
    """Check (Cond) and (Ass) for a point or along a curve."""
    opts = _merge(ctx, **local)
    if (point is None) == (curve is None):
        raise click.UsageError("give exactly one of --point or --curve")
    if point is not None:
        triples = [("t=0", parse_triple(point))]
    else:
        c = load_curve(curve, force=True)
        h = c.half_width
        triples = [(f"t={t:g}", c.triple_at(t)) for t in (0.0, -h, -h / 2, h / 2, h)]
    valid = True
    for label, tr in triples:
        try:
            rep = validate(*tr)
        except TakagiError as exc:
            raise click.UsageError(str(exc)) from exc
        click.echo(f"{label} (b1, c0, c1) = ({', '.join(fmt(v) for v in tr)})")
        for name, ok in rep.as_dict().items():
            click.echo(f"  {name}: {'yes' if ok else 'no'}")
        valid = valid and rep.valid
        forced_ok = opts.get("force") and rep.cond
        if not rep.valid and forced_ok:
            click.echo(f"warning: {label} fails (Ass); continuing under --force, "
                       "downstream guarantees do not apply", err=True)
    if valid:
        ctx.exit(EXIT_OK)
    conds = all(validate(*tr).cond for _, tr in triples)
    ctx.exit(EXIT_OK if opts.get("force") and conds else EXIT_FAIL)


@main.command("eval")
@click.option("--point", "point", default=None, help="b1,c0,c1")
@click.option("--curve", "curve", default=None, type=click.Path(), help="curve JSON file")
@click.option("--x", "x", required=True, help='"0.5", "1/3", "k/2^n" or binary "0.01(01)"')
@click.option("--k", "k", type=click.IntRange(0, 8), default=0)
@common
@click.pass_context
def eval_cmd(ctx, point, curve, x, k, **local):
    """Print F(0, x) and f_1(x) .. f_k(x)."""
    opts = _merge(ctx, **local)
    force = bool(opts.get("force"))
    if (point is None) == (curve is None):
        raise click.UsageError("give exactly one of --point or --curve")
    try:
        if point is not None:
            c = ParamCurve.constant(*parse_triple(point), order=k, force=force)
        else:
            c = load_curve(curve, force)
        xp = parse_point(x)
        tol = opts.get("tol") or 1e-13
        ev = core.eval_F_jet(c, xp, K=k, tol=tol)
    except PrecisionExhausted as exc:
        click.echo(f"precision exhausted: {exc} (achieved bound {fmt(exc.achieved)})", err=True)
        ctx.exit(EXIT_PRECISION)
    except ValidationError as exc:
        click.echo(f"invalid parameters: {exc}", err=True)
        ctx.exit(EXIT_FAIL)
    except TakagiError as exc:
        raise click.UsageError(str(exc)) from exc
    lines = [f"F={fmt(ev.value)}"]
    lines += [f"f{j}={fmt(ev.f(j))}" for j in range(1, k + 1)]
    lines.append(f"terms={ev.terms_used}")
    lines.append(f"tail_bound={fmt(ev.tail_bound)}")
    _write("\n".join(lines) + "\n", opts.get("output"))


@main.command("plot")
@click.option("--curve", "curve", required=True, type=click.Path())
@click.option("--k", "k", type=click.IntRange(0, 8), default=1)
@click.option("--level", "level", type=click.IntRange(0, 16), default=12)
@common
@click.pass_context
def plot_cmd(ctx, curve, k, level, **local):
    """CSV of f_k on the level-`level` dyadic grid (header "x,f_k")."""
    opts = _merge(ctx, **local)
    try:
        c = load_curve(curve, bool(opts.get("force")))
        js, F = core.dyadic_grid_tree(c, level, k)
    except ValidationError as exc:
        click.echo(f"invalid curve: {exc} (use --force to proceed)", err=True)
        ctx.exit(EXIT_FAIL)
    except TakagiError as exc:
        raise click.UsageError(str(exc)) from exc
    fk = math.factorial(k) * F[:, k]
    scale = 2.0 ** -level
    rows = ["x,f_k"] + [f"{fmt(j * scale)},{fmt(v)}" for j, v in zip(js, fk)]
    _write("\n".join(rows) + "\n", opts.get("output"))


@main.command("experiment")
@click.argument("name")
@click.option("--config", "config", required=True, type=click.Path())
@common
@click.pass_context
def experiment_cmd(ctx, name, config, **local):
    """Run an experiment from a JSON config and write its report."""
    opts = _merge(ctx, **local)
    if name not in EXPERIMENTS:
        click.echo(f"unknown experiment {name!r}; choose from {', '.join(sorted(EXPERIMENTS))}",
                   err=True)
        ctx.exit(EXIT_USAGE)
    try:
        text = Path(config).read_text()
    except OSError as exc:
        raise click.UsageError(f"cannot read config: {exc}") from exc
    force = bool(opts.get("force"))
    try:
        cfg = RunConfig.parse(text, force)
    except ValidationError as exc:
        click.echo(f"invalid curve in config: {exc}", err=True)
        ctx.exit(EXIT_FAIL)
    if cfg.experiment != name:
        raise click.UsageError(f"config is for {cfg.experiment!r}, not {name!r}")
    seed = opts["seed"] if opts.get("seed") is not None else cfg.seed
    tol = opts["tol"] if opts.get("tol") is not None else cfg.tol
    jobs = opts.get("jobs") or os.cpu_count() or 1
    try:
        curve = ParamCurve.from_dict(cfg.curve, force=force)
        report = run_experiment(name, curve, cfg.params, seed=seed, jobs=jobs, tol=tol)
    except TakagiError as exc:
        raise click.UsageError(str(exc)) from exc
    _write(report.to_json() + "\n", opts.get("output") or cfg.output)
    for w in report.warnings:
        click.echo(f"warning: {w}", err=True)
    ctx.exit(EXIT_OK if report.passed else EXIT_FAIL)


if __name__ == "__main__":
    main()
