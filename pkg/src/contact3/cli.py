"""contact3 command-line interface.

Exit codes: 0 when every check passes, 1 when a mathematical check fails,
2 for usage or input errors (bad flags, unreadable or malformed spec files).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import report
from .charts import ChartParams, IntegrationError, build_chart
from .expr import DomainError, ParseError
from .specfile import SpecError, load
from .structure import SamplingError, SingularFrameError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0 or v == float("inf"):
        raise argparse.ArgumentTypeError("must be a positive finite number")
    return v


def _seed_default():
    raw = os.environ.get("CONTACT3_SEED")
    if raw is None:
        return 42
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"CONTACT3_SEED must be an integer, got {raw!r}") from None


def build_parser(seed_default: int = 42) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--points", type=_positive_int, default=64, help="sample points per check (default 64)")
    common.add_argument("--seed", type=int, default=seed_default,
                        help="sampling seed (default 42, or $CONTACT3_SEED)")
    common.add_argument("--tol", type=_positive_float, default=1e-8, help="residual tolerance (default 1e-8)")
    common.add_argument("--fd-step", type=_positive_float, default=1e-6, help="finite-difference step (default 1e-6)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--verbose", action="store_true", help="per-point tables and check descriptions")
    common.add_argument("--emit", metavar="PATH", help="write the (generated or deformed) spec to PATH")

    p = _Parser(prog="contact3", description="Verify 3-dimensional contact metric structures.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    v = sub.add_parser("verify", parents=[common], help="contact metric axioms and curvature identities")
    v.add_argument("spec", help=".cmm file or catalog:<name>")
    n = sub.add_parser("nullity", parents=[common], help="(kappa, mu, nu) extraction and classification")
    n.add_argument("spec")
    d = sub.add_parser("dhomothety", parents=[common], help="D-homothetic deformation laws")
    d.add_argument("spec")
    d.add_argument("--alpha", type=float, required=True)
    c = sub.add_parser("chart", parents=[common], help="generate and check a classification chart")
    c.add_argument("--case", type=int, required=True)
    c.add_argument("--k3", default="1")
    c.add_argument("--r", default="0")
    c.add_argument("--beta", default="0")
    c.add_argument("--H", default="0")
    c.add_argument("--lambda-const", type=float, default=0.0)
    sub.add_parser("examples", parents=[common], help="regression run over the bundled catalog")
    return p


def _emit(path, text):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e.strerror}") from None


EXPR_FLAGS = ("--k3", "--r", "--beta", "--H")


def _join_expr_flags(argv):
    """Attach expression values such as ``--H -y`` so argparse does not read them as options."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in EXPR_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = _join_expr_flags(list(sys.argv[1:] if argv is None else argv))
    try:
        args = build_parser(_seed_default()).parse_args(argv)
        cfg = report.RunConfig(args.points, args.seed, args.tol, args.fd_step,
                               getattr(args, "alpha", None), args.format, args.verbose)
        out = _dispatch(args, cfg)
    except UsageError as e:
        print(str(e), file=stderr)
        return EXIT_USAGE
    except SpecError as e:
        print(f"contact3: parse error: {e}", file=stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"contact3: {e.filename or e}: no such file" if e.filename else f"contact3: {e}", file=stderr)
        return EXIT_USAGE
    except (ParseError, IntegrationError, SingularFrameError, SamplingError, DomainError,
            OSError, ValueError) as e:
        print(f"contact3: {e}", file=stderr)
        return EXIT_USAGE
    text = report.to_json(out) if cfg.fmt == "json" else report.to_text(out, cfg.verbose)
    stdout.write(text)
    return EXIT_OK if out["passed"] else EXIT_FAIL


def _dispatch(args, cfg):
    cmd = args.command
    if cmd == "examples":
        return report.examples(cfg)
    if cmd == "chart":
        if args.case not in (1, 2):
            raise UsageError("contact3 chart: --case must be 1 or 2")
        params = ChartParams(args.case, args.k3, args.r, args.beta, args.H, args.lambda_const)
        gen = build_chart(params)
        if args.emit:
            _emit(args.emit, gen.spec.dumps())
        return report.chart_report(gen, cfg)
    spec = load(args.spec)
    s = spec.build()
    if cmd == "verify":
        return report.verify(s, cfg)
    if cmd == "nullity":
        return report.nullity(s, cfg)
    if not args.alpha > 0:
        raise UsageError("contact3 dhomothety: --alpha must be positive")
    if args.emit:
        from .dhomothety import apply
        d = apply(s, args.alpha)
        _emit(args.emit, _deformed_spec(spec, d).dumps())
    return report.dhomothety_report(s, args.alpha, cfg)


def _deformed_spec(spec, d):
    from .specfile import ManifoldSpec
    if d.frame is not None:
        fields = {"xi": list(d.frame[0].components), "e": list(d.frame[1].components),
                  "phie": list(d.frame[2].components)}
        mode = "frame"
    else:
        g = d.g
        fields = {"g": [g[0, 0], g[0, 1], g[0, 2], g[1, 1], g[1, 2], g[2, 2]],
                  "phi": list(d.phi.components.reshape(-1)), "xi": list(d.xi.components)}
        mode = "tensor"
    return ManifoldSpec(d.name, spec.coords, mode, fields, dict(spec.box), list(spec.constraints))


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
