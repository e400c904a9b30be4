"""Command-line front end.

Every subcommand writes JSON or CSV to ``--out`` (stdout by default).
Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or
validation error.  All randomness is derived from ``--seed`` through
``numpy.random.SeedSequence`` feeding Philox generators.
"""
import argparse
import contextlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bingham2d, fitting, symrep, toyfield
from .bingham2d import Bingham2D, QuadratureConfig, SampleSet
from .errors import ConfigurationError, InvalidArgumentError
from .mat3 import matrix_to_quat

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

# options whose values commonly start with '-' (negative eigenvalues)
_NEGATIVE_VALUE_FLAGS = ("--lambda",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------------


def _read_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {what} file {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} file {path!r} is not valid JSON: {exc.msg} (line {exc.lineno})") from None


def _parse_lambda(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError("--lambda needs three comma-separated numbers l1,l2,l3")
    try:
        lam = np.array([float(p) for p in parts])
    except ValueError:
        raise UsageError(f"--lambda has a non-numeric entry: {text!r}") from None
    if not np.all(np.isfinite(lam)):
        raise UsageError("--lambda entries must be finite")
    return lam


def _vector_field(obj, key, size):
    val = obj.get(key) if isinstance(obj, dict) else None
    if not isinstance(val, list) or len(val) != size:
        raise UsageError(f"field '{key}' must be a list of {size} numbers")
    if not all(isinstance(u, (int, float)) and not isinstance(u, bool) for u in val):
        raise UsageError(f"field '{key}' must contain only numbers")
    arr = np.array(val, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"field '{key}' must be finite")
    return arr


def _quad(args):
    return QuadratureConfig(
        r=args.quad_r,
        omega_d=args.quad_omega,
        N=args.quad_N,
        N_min=args.quad_nmin,
        d_frac=args.quad_dfrac,
    )


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        try:
            fh = open(path, "w", newline="")
        except OSError as exc:
            raise UsageError(f"cannot write output file {path!r}: {exc.strerror}") from None
        with fh:
            yield fh


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _emit_json(args, obj):
    text = json.dumps(obj, indent=2, default=_json_default)
    with _output(args.out) as fh:
        fh.write(text + "\n")


def _null_nan(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_sample(args, cfg):
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    dist = Bingham2D.from_json(_read_json(args.dist, "distribution"), cfg)
    samples = bingham2d.sample(dist, args.n, np.random.SeedSequence(args.seed))
    with _output(args.out) as fh:
        samples.to_csv(fh)


def cmd_normconst(args, cfg):
    lam = _parse_lambda(args.lam)
    top = float(np.max(lam))
    ser = bingham2d.norm_const_series((lam - top)[None], cfg)
    scale = math.exp(top)
    out = {"lambda": lam.tolist(), "C": float(ser.C[0] * scale)}
    if args.grad:
        out["dC"] = (ser.dC[0] * scale).tolist()
    _emit_json(args, out)


def cmd_percentile(args, cfg):
    lam = np.sort(_parse_lambda(args.lam))
    lam = lam - lam[2]
    if not 0.0 < args.p <= 1.0:
        raise UsageError(f"--p must lie in (0, 1], got {args.p}")
    if args.empirical and (args.n < 100 or args.repeats < 1):
        raise UsageError("--n must be >= 100 and --repeats >= 1")
    result = {"lambda": lam.tolist(), "p": args.p}
    estimates = {1: [], 2: []}
    if args.empirical:
        dist = bingham2d.analyze(np.diag(lam), cfg)
        for child in np.random.SeedSequence(args.seed).spawn(args.repeats):
            s = bingham2d.sample(dist, args.n, child)
            for i in (1, 2):
                estimates[i].append(bingham2d.percentile_theta_empirical(s, i, args.p))
    for i in (1, 2):
        entry = {"gap": float(lam[2] - lam[i - 1])}
        if args.p < 1.0 and lam[2] - lam[i - 1] > 0.0:
            entry["approx"] = bingham2d.percentile_theta_approx(lam, i, args.p)
        else:
            entry["approx"] = None
        if args.empirical:
            e = np.array(estimates[i])
            std = float(e.std(ddof=1)) if e.size > 1 else 0.0
            entry["empirical"] = {
                "mean": float(e.mean()),
                "std": std,
                "sem": std / math.sqrt(e.size),
                "repeats": int(e.size),
                "n": args.n,
            }
        result[f"axis{i}"] = entry
    _emit_json(args, result)


def cmd_fit(args, cfg):
    try:
        with open(args.samples, newline="") as fh:
            samples = SampleSet.from_csv(fh)
    except OSError as exc:
        raise UsageError(f"cannot read samples file {args.samples!r}: {exc.strerror}") from None
    if len(samples) < 10:
        raise UsageError(f"fit needs at least 10 samples, got {len(samples)}")
    report = fitting.fit_mle(samples, fitting.FitOptions(max_iters=args.max_iters), cfg)
    _emit_json(args, report.to_json())


def _loss_once(kind, rep_obj, R, cfg, want_grad):
    if kind == "ours":
        rep = symrep.PlanarSymRep.from_json(rep_obj)
        res = symrep.rep_loss_and_grad(rep, R, cfg)
        out = {"value": res.value, "cos_term": res.cos_term, "bnll_term": res.bnll_term}
        grad = res.grad
    elif kind == "rotmat":
        ex, ez = _vector_field(rep_obj, "ex", 3), _vector_field(rep_obj, "ez", 3)
        res = symrep.flipmin_loss_rotmat_and_grad(ex, ez, R)
        out = {"value": res.value, "flipped": res.flipped}
        grad = res.grad
    else:
        q = _vector_field(rep_obj, "q", 4)
        val, g, flipped = symrep.flipmin_quat_batch(q[None], matrix_to_quat(R)[None])
        out = {"value": float(val[0]), "flipped": bool(flipped[0])}
        grad = g[0]
    if want_grad:
        out["grad"] = grad.tolist()
    return out


def cmd_loss(args, cfg):
    rep_obj = _read_json(args.rep, "representation")
    R = symrep.rotation_from_json(_read_json(args.gt, "rotation"))
    out = {"kind": args.kind}
    out.update(_loss_once(args.kind, rep_obj, R, cfg, args.grad))
    if args.check_flip:
        other = _loss_once(args.kind, rep_obj, symrep.flip_rotation(R), cfg, False)
        diff = abs(other["value"] - out["value"])
        out["flip_check"] = {
            "value_flipped_gt": other["value"],
            "abs_diff": diff,
            "equal": bool(diff <= 1e-12 * max(1.0, abs(out["value"]))),
        }
    _emit_json(args, out)


def _csv_path(base, kind, several):
    if not several:
        return base
    p = Path(base)
    return str(p.with_name(f"{p.stem}.{kind}{p.suffix or '.csv'}"))


def cmd_demo_field(args, cfg):
    if args.epochs < 1:
        raise UsageError("--epochs must be >= 1")
    config = toyfield.BOX_SCENE
    if args.scene is not None:
        config = toyfield.SceneConfig.from_json(_read_json(args.scene, "scene"))
    scene = toyfield.gen_scene(config)
    kinds = list(toyfield.KINDS) if args.kind == "all" else [args.kind]
    if args.kind == "all":
        seeds = np.random.SeedSequence(args.seed).spawn(len(kinds))
    else:
        seeds = [args.seed]
    reports = {}
    for kind, seed in zip(kinds, seeds):
        tr = toyfield.train_toy(scene, kind, epochs=args.epochs, seed=seed, cfg=cfg)
        rep = toyfield.evaluate_field(tr.model, scene, cfg).to_json()
        rep = {k: _null_nan(v) for k, v in rep.items()}
        rep["final_loss"] = tr.losses[-1]
        reports[kind] = rep
        if args.field_csv:
            path = _csv_path(args.field_csv, kind, len(kinds) > 1)
            with _output(path) as fh:
                toyfield.write_field_csv(fh, tr.model, scene, cfg)
    body = reports[kinds[0]] if len(kinds) == 1 else reports
    _emit_json(args, {"scene": config.to_json(), "epochs": args.epochs, "report": body})


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="root seed for all randomness (default 0)")
    g.add_argument("--quad-N", dest="quad_N", type=int, default=200, help="series half-length N")
    g.add_argument("--quad-r", dest="quad_r", type=float, default=2.5, help="contour parameter r")
    g.add_argument("--quad-omega", dest="quad_omega", type=float, default=0.5, help="omega_d")
    g.add_argument("--quad-nmin", dest="quad_nmin", type=int, default=15, help="N_min")
    g.add_argument("--quad-dfrac", dest="quad_dfrac", type=float, default=0.5, help="strip width d / shift")
    g.add_argument("--out", default=None, help="output path (default stdout)")

    parser = _Parser(prog="planarbingham", description="2-D Bingham toolkit for planar-symmetric grasp rotations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", parents=[common], help="draw samples from a distribution JSON")
    p.add_argument("--dist", required=True, help='JSON with field "A" (packed upper triangle, 6 numbers)')
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("normconst", parents=[common], help="normalizing constant C(lambda)")
    p.add_argument("--lambda", dest="lam", required=True, help="l1,l2,l3")
    p.add_argument("--grad", action="store_true", help="also report dC/dlambda")
    p.set_defaults(func=cmd_normconst)

    p = sub.add_parser("percentile", parents=[common], help="percentile angles per concentrated axis")
    p.add_argument("--lambda", dest="lam", required=True, help="l1,l2,l3")
    p.add_argument("--p", type=float, required=True, help="probability in (0, 1]")
    p.add_argument("--empirical", action="store_true", help="add Monte-Carlo estimates")
    p.add_argument("--n", type=int, default=10000, help="samples per empirical estimate")
    p.add_argument("--repeats", type=int, default=100, help="number of empirical estimates")
    p.set_defaults(func=cmd_percentile)

    p = sub.add_parser("fit", parents=[common], help="maximum-likelihood fit to a sample CSV")
    p.add_argument("--samples", required=True, help="CSV with header x,y,z")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=500)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("loss", parents=[common], help="representation loss against a ground-truth rotation")
    p.add_argument("--rep", required=True, help='ours: {"a","x"}; rotmat: {"ex","ez"}; quat: {"q"}')
    p.add_argument("--gt", required=True, help='rotation JSON {"matrix": [9 numbers, row-major]}')
    p.add_argument("--kind", choices=sorted(toyfield.KINDS), default="ours")
    p.add_argument("--grad", action="store_true")
    p.add_argument("--check-flip", dest="check_flip", action="store_true", help="also evaluate against the flipped rotation")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("demo-field", parents=[common], help="train and score the synthetic rotation field")
    p.add_argument("--scene", default=None, help="scene config JSON (default: box scene)")
    p.add_argument("--kind", choices=sorted(toyfield.KINDS) + ["all"], default="ours")
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--field-csv", dest="field_csv", default=None, help="per-cell field dump")
    p.set_defaults(func=cmd_demo_field)
    return parser


def _join_negative_values(argv):
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _NEGATIVE_VALUE_FLAGS:
            nxt = next(it, None)
            if nxt is not None:
                tok = f"{tok}={nxt}"
        out.append(tok)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        cfg = _quad(args)
        args.func(args, cfg)
    except (UsageError, InvalidArgumentError, ConfigurationError, ValueError) as exc:
        print(f"planarbingham {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"planarbingham {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
