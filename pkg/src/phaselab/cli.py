"""Batch front-end: `phaselab <command> --config file.json [...]`.

Artifacts are written atomically (temp file + rename) so an interrupted
run never leaves a partial file at the target path.  Exit codes: 0 on
success, 2 when the computed verdict is inconclusive (so scripts can
branch on it), 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import irrational, phasetrack, special, stationary
from .config import SCHEMA_VERSION, RunConfig
from .critpoints import find_critical_points
from .errors import PhaselabError
from .quadrature import oscillatory_integral

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2

_INCONCLUSIVE_VERDICTS = {
    stationary.VERDICT_INCONCLUSIVE,
    phasetrack.VERDICT_INCONCLUSIVE,
    irrational.VERDICT_INCONCLUSIVE,
}


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".phaselab-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(path, text):
    if path:
        _atomic_write(path, text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows, footer=None):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    if footer is not None:
        buf.write("# " + json.dumps(footer, sort_keys=True) + "\n")
    return buf.getvalue()


def _summary(line):
    print(line)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_digamma(args):
    value = special.digamma(float(args.x))
    print(repr(value))
    return EXIT_OK


def _cmd_critpoints(args):
    cfg = RunConfig.from_file(args.config)
    lagr = cfg.build_lagrangian()
    points = find_critical_points(lagr, settings=cfg.finder_settings())
    payload = {"schema_version": SCHEMA_VERSION,
               "points": [cp.to_dict() for cp in points]}
    _emit(args.out, _json_text(payload))
    zero = sum(1 for cp in points if cp.zero_level)
    _summary(f"critpoints: {len(points)} point(s), {zero} zero-level")
    return EXIT_OK


def _cmd_predict(args):
    cfg = RunConfig.from_file(args.config)
    lagr = cfg.build_lagrangian()
    points = find_critical_points(lagr, settings=cfg.finder_settings())
    pred = stationary.predict_phase(points, cfg.a_interval(), lagr.arity)
    payload = {"schema_version": SCHEMA_VERSION, **pred.to_dict()}
    _emit(args.out, _json_text(payload))
    _summary(f"predict: {pred.verdict}"
             + (f" phase={pred.phase:.6f}" if pred.phase is not None else ""))
    return EXIT_INCONCLUSIVE if pred.verdict in _INCONCLUSIVE_VERDICTS else EXIT_OK


def _cmd_oracle(args):
    cfg = RunConfig.from_file(args.config)
    lagr = cfg.build_lagrangian()
    h = cfg.h_value(args.h)
    res = oscillatory_integral(lagr, cfg.a_interval(), h,
                               settings=cfg.quadrature_settings())
    payload = {"schema_version": SCHEMA_VERSION, **res.to_dict()}
    _emit(args.out, _json_text(payload))
    _summary(f"oracle: h={h:g} |I|={abs(res.value):.6e} "
             f"phase={np.angle(res.value):.6f} err={res.error_estimate:.2e}")
    return EXIT_OK


def _cmd_phase_scan(args):
    cfg = RunConfig.from_file(args.config)
    lagr = cfg.build_lagrangian()
    a = cfg.a_interval()
    qs = cfg.quadrature_settings()
    eps = cfg.tolerance("phase_eps", 0.05)

    def evaluator(h):
        return oscillatory_integral(lagr, a, h, settings=qs)

    seq = phasetrack.track_phase(evaluator, cfg.h_schedule(), eps=eps)
    text = _csv_text(
        ("h", "re", "im", "abs", "phase_raw", "phase_unwrapped"),
        seq.to_rows(), footer=seq.verdict_dict())
    _emit(args.out, text)
    _summary(f"phase-scan: {seq.verdict} spread={seq.spread:.4f}"
             + (f" limit={seq.limit:.6f}" if seq.limit is not None else ""))
    return EXIT_INCONCLUSIVE if seq.verdict in _INCONCLUSIVE_VERDICTS else EXIT_OK


def _cmd_irrat(args):
    cfg = RunConfig.from_file(args.config)
    problem = cfg.build_problem()
    report = irrational.irrationality_report(
        problem,
        window_count=int(cfg.data.get("windows", 4)),
        finder=cfg.finder_settings(),
        include_qmc=bool(cfg.data.get("include_qmc", False)),
        qmc_settings=cfg.quadrature_settings()
        if cfg.data.get("include_qmc") else None)
    payload = {"schema_version": SCHEMA_VERSION, **report.to_dict()}
    _emit(args.out, _json_text(payload))
    _summary(f"irrat: {report.verdict}"
             + (f" phase={report.phase:.6f}" if report.phase is not None else ""))
    return (EXIT_INCONCLUSIVE if report.verdict in _INCONCLUSIVE_VERDICTS
            else EXIT_OK)


def _cmd_theta(args):
    cfg = RunConfig.from_file(args.config)
    problem = cfg.build_problem()
    tol = float(args.tol) if args.tol else cfg.tolerance("theta_tol", 1e-12)
    limit = irrational.theta_limit(problem, tol=tol)
    rows = []
    for i in range(1, limit.terms_used + 1):
        exact, leading, ratio = irrational.family_det(problem, i)
        sigma = irrational.family_signature(problem, i)
        term = (2.0 * np.pi) ** 2 / np.sqrt(abs(exact)) \
            * np.exp(1j * np.pi * sigma / 4.0)
        rows.append((i, exact, leading, ratio, sigma,
                     float(term.real), float(term.imag)))
    footer = {"theta_re": limit.value.real, "theta_im": limit.value.imag,
              "phase": limit.phase, "tail_bound": limit.tail_bound,
              "terms_used": limit.terms_used}
    text = _csv_text(
        ("i", "det_exact", "det_leading", "ratio", "sigma", "term_re", "term_im"),
        rows, footer=footer)
    _emit(args.out, text)
    _summary(f"theta: {limit.terms_used} terms, phase={limit.phase:.6f}, "
             f"tail<={limit.tail_bound:.2e}")
    return EXIT_OK


def _cmd_beta_flow(args):
    from . import betaflow

    cfg = RunConfig.from_file(args.config)
    lagr = cfg.build_lagrangian()
    h = cfg.h_value(args.h)
    beta = float(args.beta) if args.beta is not None \
        else float(cfg.data.get("beta", 0.0))
    j_top = int(args.J) if args.J is not None else int(cfg.data.get("J", 6))
    cmp_ = betaflow.series_vs_direct(lagr, j_top, h, beta,
                                     a_interval=cfg.a_interval())
    footer = {"direct_re": cmp_.direct.real, "direct_im": cmp_.direct.imag,
              "direct_err": cmp_.direct_error,
              "regime_product": cmp_.regime_product}
    text = _csv_text(
        ("j", "term_re", "term_im", "weight_re", "weight_im",
         "partial_re", "partial_im", "residual"),
        cmp_.rows(), footer=footer)
    _emit(args.out, text)
    _summary(f"beta-flow: J={j_top} residual={cmp_.residuals[-1]:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="phaselab",
        description="Geometric phase-integral laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True,
                           help="path to the JSON run configuration")
        p.add_argument("--out", default=None,
                       help="artifact path (stdout when omitted)")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("digamma", help="print psi(x)")
    p.add_argument("x", type=float)
    p.set_defaults(func=_cmd_digamma)

    p = sub.add_parser("critpoints", help="classified critical points as JSON")
    common(p)
    p.set_defaults(func=_cmd_critpoints)

    p = sub.add_parser("predict", help="stationary-phase verdict as JSON")
    common(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("oracle", help="brute-force I(h) as JSON")
    common(p)
    p.add_argument("--h", type=float, default=None)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("phase-scan", help="phase track along the h-schedule (CSV)")
    common(p)
    p.set_defaults(func=_cmd_phase_scan)

    p = sub.add_parser("irrat", help="combined irrationality report as JSON")
    common(p)
    p.set_defaults(func=_cmd_irrat)

    p = sub.add_parser("theta", help="family determinant / theta term table (CSV)")
    common(p)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=_cmd_theta)

    p = sub.add_parser("beta-flow", help="coupling-expansion table (CSV)")
    common(p)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--J", type=int, default=None)
    p.set_defaults(func=_cmd_beta_flow)

    return parser


def _apply_overrides(args):
    """--seed/--threads get folded into the config before model building."""
    if getattr(args, "config", None) and (args.seed is not None
                                          or args.threads is not None):
        cfg = RunConfig.from_file(args.config)
        if args.seed is not None:
            cfg.data["seed"] = args.seed
        if args.threads is not None:
            cfg.data["threads"] = args.threads
        fd, tmp = tempfile.mkstemp(suffix=".json", prefix=".phaselab-cfg-")
        with os.fdopen(fd, "w") as fh:
            json.dump(cfg.data, fh)
        args.config = tmp
        return tmp
    return None


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    tmp_cfg = None
    try:
        tmp_cfg = _apply_overrides(args)
        return args.func(args)
    except PhaselabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        if tmp_cfg and os.path.exists(tmp_cfg):
            os.unlink(tmp_cfg)


if __name__ == "__main__":
    sys.exit(main())
