"""Command-line front end.

    resurgo COMMAND --spec PATH [--out DIR] [--precision BITS] [--terms N]
                    [--pade L:M] [--z RE,IM ...] [--eps LIST] [--domain RE0,IM0,RE1,IM1]
                    [--tol T]

Exit codes: 0 success, 2 parse error, 3 numerical failure, 4 validation mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

from mpmath import mp

from . import SCHEMA, __version__
from .borel import detect_singularities, hankel_quadrature, pade
from .exact import RatFunc, format_ratfunc
from .perturbative import ODESpec, borel_germ, expand_perturbative, singular_set
from .precision import ENV_VAR, to_mpc
from .singulant import ComplexPath, build_branch, singulant_equation, trace_stokes_line
from .specfile import RunConfig, SpecFile, SpecParseError, load_spec, parse_complex_arg, parse_number
from .transseries import build_component, first_order_closed_form, stokes_jump
from .validation import NoiseFloorError, measure_jump

log = logging.getLogger("resurgo")

EXIT_OK, EXIT_PARSE, EXIT_NUMERIC, EXIT_MISMATCH = 0, 2, 3, 4
COMMANDS = ("expand", "germ", "pade", "singulant", "stokes", "transseries", "jump", "validate")


class ValidationMismatch(Exception):
    pass


def _pair(x, digits: int = 30) -> list:
    x = to_mpc(x)
    return [mp.nstr(x.real, digits), mp.nstr(x.imag, digits)]


def _write_json(out: Path, name: str, doc: dict) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    body = {"schema": SCHEMA}
    body.update(doc)
    path.write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")
    return path


def _write_csv(out: Path, name: str, config: RunConfig, header: list, rows: list) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(config.comment() + "\n")
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def _mp_number(x):
    if isinstance(x, Fraction):
        return mp.mpc(mp.mpf(x.numerator) / x.denominator)
    return to_mpc(x)


class Context:
    def __init__(self, config: RunConfig, specfile: SpecFile):
        self.config = config
        self.specfile = specfile
        self.spec: ODESpec = specfile.to_spec()
        self.out = Path(config.out)
        self.terms = config.terms or specfile.series_order
        self._series = {}

    def series(self, n: int | None = None):
        n = n or self.terms
        if n not in self._series:
            self._series[n] = expand_perturbative(self.spec, n)
        return self._series[n]

    def probes(self, default=None) -> list:
        zs = [to_mpc(z) for z in self.config.z]
        if not zs:
            if default is None:
                raise SpecParseError("this command needs at least one --z probe")
            zs = [to_mpc(default)]
        return zs

    def epsilons(self, default=None) -> list:
        es = [_mp_number(e) for e in self.config.eps]
        if not es:
            if default is None:
                raise SpecParseError("this command needs --eps")
            es = [to_mpc(default)]
        return es

    def pade_orders(self) -> tuple:
        return self.config.pade or (20, 21)


def _common_doc(ctx: Context, command: str) -> dict:
    return {"command": command, "version": __version__, "config": ctx.config.to_json(),
            "spec": ctx.specfile.to_json()}


def cmd_expand(ctx: Context) -> dict:
    series = ctx.series()
    terms = [format_ratfunc(t) for t in series.terms]
    if all(t.is_zero() for t in series.terms):
        terms = []
    samples = []
    for z in ctx.config.z:
        z = to_mpc(z)
        vals = []
        for t in series.terms:
            try:
                vals.append(_pair(t.eval_mpc(z), 20))
            except ZeroDivisionError:
                vals.append(None)
        samples.append({"z": _pair(z, 20), "values": vals})
    doc = _common_doc(ctx, "expand")
    doc.update({"terms": terms, "samples": samples})
    _write_json(ctx.out, "series.json", doc)
    return doc


def _germs(ctx: Context) -> list:
    series = ctx.series()
    label = 0 if ctx.spec.independent == "epsilon" else None
    zs = [to_mpc(label)] if label is not None and not ctx.config.z else ctx.probes()
    if label is None:
        gamma = singular_set(ctx.series(min(ctx.terms, 12)), ctx.spec)
        for z in zs:
            p = gamma.near(z, mp.mpf(10) ** -12)
            if p is not None:
                raise ArithmeticError(f"z = {mp.nstr(z, 10)} is on the singular set ({p.source}); "
                                      "the series has a boundary layer there and no Borel germ exists")
    return [(z, borel_germ(series, z, ctx.config.precision)) for z in zs]


def cmd_germ(ctx: Context) -> dict:
    doc = _common_doc(ctx, "germ")
    doc["germs"] = [{"z": _pair(z, 20), "constant": _pair(g.constant),
                     "coefficients": [_pair(c) for c in g.coeffs]} for z, g in _germs(ctx)]
    _write_json(ctx.out, "germ.json", doc)
    return doc


def cmd_pade(ctx: Context) -> dict:
    L, M = ctx.pade_orders()
    doc = _common_doc(ctx, "pade")
    reports = []
    for k, (z, g) in enumerate(_germs(ctx)):
        p = pade(g, L, M, ctx.config.precision)
        sings = detect_singularities(p, precision=ctx.config.precision)
        labels = {}
        for s in sings:
            for pt in s.support:
                labels[complex(pt)] = s.kind
        rows = []
        for loc, res, mult in p.poles:
            kind = labels.get(complex(loc), "spurious")
            rows.append([mp.nstr(loc.real, 20), mp.nstr(loc.imag, 20),
                         mp.nstr(abs(res), 10) if res is not None else "", kind])
        _write_csv(ctx.out, f"pade_{k}.csv", ctx.config, ["re_w", "im_w", "abs_residue", "classification"], rows)
        reports.append({"z": _pair(z, 20), "orders": [L, M], "degree": list(p.degree),
                        "singularities": [s.to_json() for s in sings], "csv": f"pade_{k}.csv"})
    doc["pade"] = reports
    _write_json(ctx.out, "pade.json", doc)
    return doc


def _gamma_points(ctx: Context) -> list:
    if ctx.spec.independent == "epsilon":
        return []
    return [p for p in singular_set(ctx.series(min(ctx.terms, 12)), ctx.spec) if p.z is not None]


def _branches(ctx: Context, z_star, target, samples: int = 8) -> list:
    eq = singulant_equation(ctx.spec)
    path = ComplexPath.segment(z_star, target, samples)
    out = []
    for b in range(eq.degree):
        try:
            out.append(build_branch(eq, path, b, z_star))
        except ArithmeticError as exc:
            log.warning("branch %d from %s: %s", b, mp.nstr(z_star, 8), exc)
    return out


def cmd_singulant(ctx: Context) -> dict:
    eq = singulant_equation(ctx.spec)
    doc = _common_doc(ctx, "singulant")
    doc["equation"] = [format_ratfunc(c) for c in eq.coeffs]
    gamma = _gamma_points(ctx)
    doc["singular_set"] = [p.to_json() for p in gamma]
    probes = []
    for z in ctx.config.z:
        z = to_mpc(z)
        entry = {"z": _pair(z, 20), "chiprime": [_pair(v) for v in eq.roots_at(z)], "branches": []}
        for p in gamma:
            for br in _branches(ctx, p.z, z):
                entry["branches"].append({"z_star": _pair(p.z, 20), "branch": br.branch_id,
                                          "gamma": br.gamma, "chi": _pair(br.chi[-1])})
        probes.append(entry)
    doc["probes"] = probes
    _write_json(ctx.out, "singulant.json", doc)
    return doc


def _domain(ctx: Context) -> tuple:
    return ctx.config.domain or (-2.0, -2.0, 2.0, 2.0)


def cmd_stokes(ctx: Context) -> dict:
    domain = _domain(ctx)
    diag = ((domain[2] - domain[0]) ** 2 + (domain[3] - domain[1]) ** 2) ** 0.5
    gamma = _gamma_points(ctx)
    lines = []
    rows = []
    for p in gamma:
        h = diag / 50
        for br in _branches(ctx, p.z, p.z + h, 4):
            try:
                traced = trace_stokes_line(br, domain, singular_set=[q.z for q in gamma])
            except ArithmeticError as exc:
                log.warning("tracing branch %d: %s", br.branch_id, exc)
                continue
            for line in traced:
                idx = len(lines)
                lines.append({"z_star": _pair(p.z, 20), **line.to_json()})
                rows.extend([idx, br.branch_id, mp.nstr(z.real, 15), mp.nstr(z.imag, 15)] for z in line.points)
    _write_csv(ctx.out, "stokes.csv", ctx.config, ["line", "branch", "re_z", "im_z"], rows)
    doc = _common_doc(ctx, "stokes")
    doc["lines"] = lines
    _write_json(ctx.out, "stokes.json", doc)
    return doc


def _components(ctx: Context, z) -> list:
    series = ctx.series()
    comps = []
    for p in _gamma_points(ctx):
        for br in _branches(ctx, p.z, z):
            if br.gamma < 1:
                continue
            try:
                comps.append(build_component(ctx.spec, series, br, order=1))
            except (ArithmeticError, ValueError) as exc:
                log.info("no component for branch %d from %s: %s", br.branch_id, mp.nstr(p.z, 8), exc)
    return comps


def _closed_form(ctx: Context) -> dict | None:
    """First-order bypass: eps y' + G y = eps H with y_B = H(zeta)/G(zeta)."""
    spec = ctx.spec
    if spec.order != 1 or spec.independent != "z":
        return None
    G = spec.coeffs[0] / spec.coeffs[1]
    H = spec.F(1) / spec.coeffs[1]
    samples = []
    for z in ctx.config.z:
        z = to_mpc(z)
        vals = []
        for k in range(1, 5):
            w = to_mpc(z) * k / 10
            try:
                vals.append({"w": _pair(w, 15), "y_B": _pair(first_order_closed_form(G, H, w, z))})
            except ArithmeticError as exc:
                vals.append({"w": _pair(w, 15), "error": str(exc)})
        samples.append({"z": _pair(z, 20), "values": vals})
    return {"G": format_ratfunc(G), "H": format_ratfunc(H), "samples": samples}


def cmd_transseries(ctx: Context) -> dict:
    doc = _common_doc(ctx, "transseries")
    comps = []
    for z in ctx.config.z:
        for c in _components(ctx, to_mpc(z)):
            comps.append({"probe": _pair(z, 20), **c.to_json()})
    doc["components"] = comps
    cf = _closed_form(ctx)
    if cf is not None:
        doc["closed_form"] = cf
    _write_json(ctx.out, "transseries.json", doc)
    return doc


def _rays(eps, chi=None) -> tuple:
    a = mp.arg(to_mpc(eps))
    return (a - mp.pi / 4, a + mp.pi / 4)


def cmd_jump(ctx: Context) -> dict:
    doc = _common_doc(ctx, "jump")
    out = []
    for z, g in _germs(ctx):
        for eps in ctx.epsilons():
            m = measure_jump(g, eps, geometry=_rays(eps), pade_orders=ctx.config.pade,
                             precision=ctx.config.precision)
            out.append({"z": _pair(z, 20), **m.to_json()})
    doc["jumps"] = out
    _write_json(ctx.out, "jump.json", doc)
    return doc


def _predict(ctx: Context, z, g, eps):
    """Predicted jump: trans-series component when one sits on a Stokes line at z, else
    the Hankel loop about the Pade singularity crossed by the rays."""
    if ctx.spec.independent == "z":
        for comp in _components(ctx, z):
            chi = comp.branch.chi[-1]
            if abs(chi.imag) <= 1e-12 * max(1, abs(chi)) and chi.real > 0:
                order = max(1, len(comp.tracks) - 1)
                return stokes_jump(comp, z, eps, order), "trans-series", chi
    L, M = ctx.pade_orders()
    p = pade(g, L, M, ctx.config.precision)
    sings = detect_singularities(p, precision=ctx.config.precision)
    lo, hi = _rays(eps)
    for s in sings:
        if lo < mp.arg(s.chi) < hi:
            val = hankel_quadrature(p, s.chi, eps, direction=mp.arg(s.chi), precision=ctx.config.precision)
            return val, "pade-hankel", s.chi
    raise ArithmeticError("no Borel singularity between the resummation rays")


def cmd_validate(ctx: Context) -> dict:
    doc = _common_doc(ctx, "validate")
    reports = []
    failed = False
    for z, g in _germs(ctx):
        for eps in ctx.epsilons():
            predicted, method, chi = _predict(ctx, z, g, eps)
            measured = measure_jump(g, eps, geometry=_rays(eps), pade_orders=ctx.config.pade,
                                    precision=ctx.config.precision)
            rel = abs(abs(measured.value) / abs(predicted) - 1)
            ok = rel <= ctx.config.tol
            failed |= not ok
            reports.append({"z": _pair(z, 20), "epsilon": _pair(eps, 20), "chi": _pair(chi, 20),
                            "method": method, "predicted": _pair(predicted), "measured": _pair(measured.value),
                            "noise": mp.nstr(measured.noise, 5), "relative_error": mp.nstr(rel, 5),
                            "tolerance": ctx.config.tol, "passed": bool(ok)})
    doc["reports"] = reports
    doc["passed"] = not failed
    _write_json(ctx.out, "validate.json", doc)
    if failed:
        raise ValidationMismatch("predicted and measured jumps disagree beyond tolerance")
    return doc


HANDLERS = {"expand": cmd_expand, "germ": cmd_germ, "pade": cmd_pade, "singulant": cmd_singulant,
            "stokes": cmd_stokes, "transseries": cmd_transseries, "jump": cmd_jump,
            "validate": cmd_validate}


def _pade_arg(text: str) -> tuple:
    try:
        L, M = (int(x) for x in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected L:M, got {text!r}") from exc
    return L, M


def _eps_arg(text: str) -> list:
    try:
        return [parse_number(x) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}") from exc


def _complex_arg(text: str) -> complex:
    try:
        return parse_complex_arg(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _domain_arg(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad domain {text!r}") from exc
    if len(vals) != 4 or vals[0] >= vals[2] or vals[1] >= vals[3]:
        raise argparse.ArgumentTypeError("domain must be RE0,IM0,RE1,IM1 with RE0<RE1 and IM0<IM1")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="resurgo", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"resurgo {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--spec", required=True, help="JSON spec file")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--precision", type=int, help="working precision in bits")
    ap.add_argument("--terms", type=int, help="number of perturbative terms")
    ap.add_argument("--pade", type=_pade_arg, help="Pade orders L:M")
    ap.add_argument("--z", type=_complex_arg, action="append", default=[], help="probe point RE,IM (repeatable)")
    ap.add_argument("--eps", type=_eps_arg, default=[], help="comma-separated epsilon values")
    ap.add_argument("--domain", type=_domain_arg, help="RE0,IM0,RE1,IM1")
    ap.add_argument("--tol", type=float, default=1e-6, help="validation tolerance")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _precision(flag: int | None, specfile: SpecFile) -> int:
    # flag, then the spec file, then the environment default
    if flag is not None:
        return flag
    if specfile.precision_bits is not None:
        return specfile.precision_bits
    from .precision import default_precision
    return default_precision()


def _join_values(argv: list) -> list:
    # argparse reads "--z -0.5,1" as two options; glue numeric values to their flag
    out = []
    k = 0
    while k < len(argv):
        a = argv[k]
        if a in _VALUE_FLAGS and k + 1 < len(argv) and argv[k + 1][:1] == "-" and argv[k + 1][1:2].isdigit():
            out.append(f"{a}={argv[k + 1]}")
            k += 2
            continue
        out.append(a)
        k += 1
    return out


_VALUE_FLAGS = ("--z", "--eps", "--domain")


def main(argv=None) -> int:
    ap = build_parser()
    argv = _join_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_PARSE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        specfile = load_spec(args.spec)
        precision = _precision(args.precision, specfile)
        eps = list(args.eps)
        config = RunConfig(args.command, args.spec, args.out, precision, args.terms, args.pade,
                           list(args.z), eps, args.domain, args.tol)
    except SpecParseError as exc:
        print(f"resurgo: parse error: {args.spec}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, ValueError) as exc:
        print(f"resurgo: {exc}", file=sys.stderr)
        return EXIT_PARSE
    ctx = Context(config, specfile)
    old_env = os.environ.get(ENV_VAR)
    os.environ[ENV_VAR] = str(precision)
    try:
        with mp.workprec(precision):
            HANDLERS[args.command](ctx)
    except SpecParseError as exc:
        print(f"resurgo: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationMismatch as exc:
        print(f"resurgo: validation mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except NoiseFloorError as exc:
        print(f"resurgo: warning: {exc}; increase epsilon or --precision", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, ValueError) as exc:
        print(f"resurgo: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        if old_env is None:
            os.environ.pop(ENV_VAR, None)
        else:
            os.environ[ENV_VAR] = old_env
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
