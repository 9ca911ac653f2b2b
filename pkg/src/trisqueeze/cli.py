"""Command line entry point: ``trisqueeze <command> ...``.

Exit codes: 0 success, 1 a verification failed, 2 bad input or refusal.
The sample budget of sampled checks can be overridden with the
``TRISQUEEZE_SAMPLES`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys

from .complex_core import is_triangular, simplex
from .documents import (
    ComplexDocument,
    DocumentError,
    document_from_complex,
    load_document,
    parse_document,
    serialize_document,
)
from .geometry import comesh, mesh, mesh_table
from .render import render_svg
from .retraction import Report, build_retraction, verify_retraction
from .squeeze import (
    conjecture_probe,
    sample_budget,
    squeeze,
    squeeze_constants,
    verify_sandwich,
)
from .subdivision import as_record, dual_cell, iterate_subdivide

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
CERTIFICATE_KIND = "trisqueeze-certificate"


class InputError(Exception):
    pass


# ------------------------------------------------------------------ helpers


def _parse_simplex(text: str) -> tuple:
    try:
        return simplex(int(v) for v in text.replace(" ", "").split(",") if v != "")
    except ValueError as exc:
        raise InputError(f"cannot read simplex {text!r}: {exc}") from exc


def _pick_map(doc: ComplexDocument, name: str | None):
    if name is None:
        names = doc.map_names()
        if len(names) != 1:
            raise InputError(f"document holds maps {names}; choose one with --map")
        name = names[0]
    return doc.map(name)


def _emit(args, text: str, payload: dict):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _emit_report(args, report: Report) -> int:
    _emit(args, report.text(), report.as_dict())
    return EXIT_OK if report.ok else EXIT_FAIL


def _f(v: float) -> str:
    return f"{v:.12g}"


# ----------------------------------------------------------------- commands


def cmd_subdivide(args) -> int:
    doc = load_document(args.input)
    rec = iterate_subdivide(doc.complex(), args.i)
    layout = None
    base_xy = doc.layout_array()
    if base_xy is not None:
        xy = rec.positions @ base_xy
        layout = {int(v): xy[n].round(12).tolist() for n, v in enumerate(rec.complex.vertices)}
    out = document_from_complex(rec.complex, layout)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(serialize_document(out))
    _emit(args, f"Sd^{args.i}: f-vector {list(rec.complex.f_vector)} -> {args.output}",
          {"level": args.i, "f_vector": list(rec.complex.f_vector), "output": args.output})
    return EXIT_OK


def cmd_measure(args) -> int:
    doc = load_document(args.input)
    if args.control:
        p = doc.map(args.control)
        X, kw = as_record(p.domain), {"p": p}
    else:
        X, kw = as_record(doc.complex()), {}
    table = mesh_table(X, **kw)
    lines = [f"level {X.level}, dim {X.complex.dim}" + (f", control {args.control}" if args.control else "")]
    lines.append("dim  max_diam          min_rad")
    for d, dm, rd in table:
        lines.append(f"{d:<4} {_f(dm):<17} {_f(rd)}")
    payload = {"rows": [{"dim": d, "diam": dm, "rad": rd} for d, dm, rd in table]}
    if X.complex.dim > 0:
        m, c = mesh(X, **kw), comesh(X, **kw)
        lines += [f"mesh   = {_f(m)}", f"comesh = {_f(c)}"]
        payload.update(mesh=m, comesh=c)
    _emit(args, "\n".join(lines), payload)
    return EXIT_OK


def cmd_dualcell(args) -> int:
    doc = load_document(args.input)
    sigma = _parse_simplex(args.simplex)
    cell = dual_cell(sigma, doc.complex())
    tops = cell.cell.maximal_simplices()
    labels = {v: cell.record.flag_label(v) for v in cell.cell.vertices.tolist()}
    lines = [f"D({','.join(map(str, sigma))}): {len(tops)} top simplices, f-vector {list(cell.cell.f_vector)}"]
    for s in tops:
        lines.append("  " + " < ".join(str(labels[v]) for v in sorted(s, key=lambda v: len(labels[v]))))
    _emit(args, "\n".join(lines), {"sigma": list(sigma), "maximal_simplices": [list(s) for s in tops],
                                   "labels": {str(k): list(v) for k, v in labels.items()}})
    return EXIT_OK


def cmd_retraction(args) -> int:
    doc = load_document(args.input)
    bundle = build_retraction(doc.complex(), args.epsilon, args.i)
    head = Report("retraction")
    head.info.update(epsilon=args.epsilon, depth=bundle.depth,
                     top_simplices=len(bundle.top.complex.maximal_simplices()))
    if not args.verify:
        _emit(args, head.text(), head.as_dict())
        return EXIT_OK
    report = verify_retraction(bundle, args.epsilon, samples=sample_budget(args.samples), seed=args.seed)
    report.info = {**head.info, **report.info}
    return _emit_report(args, report)


def cmd_constants(args) -> int:
    X = load_document(args.X).complex()
    Y = load_document(args.Y).complex()
    base = squeeze_constants(X, Y)
    eps = args.epsilon if args.epsilon is not None else base.eps_XY / 2
    c = squeeze_constants(X, Y, eps)
    text = "\n".join([f"k       = {_f(c.k)}", f"K       = {_f(c.K)}", f"eps_XY  = {_f(c.eps_XY)}",
                      f"epsilon = {_f(eps)}", f"i       = {c.i} (i_X = {c.i_X}, i_Y = {c.i_Y})"])
    _emit(args, text, {"k": c.k, "K": c.K, "eps_XY": c.eps_XY, "epsilon": eps,
                       "i": c.i, "i_X": c.i_X, "i_Y": c.i_Y})
    return EXIT_OK


def cmd_lemma_check(args) -> int:
    doc = load_document(args.input)
    f = _pick_map(doc, args.map)
    report = verify_sandwich(f, _parse_simplex(args.rho), args.epsilon,
                             samples=sample_budget(args.samples), seed=args.seed)
    return _emit_report(args, report)


def _certificate(doc: ComplexDocument, T) -> dict:
    return {
        "kind": CERTIFICATE_KIND,
        "input": doc.to_dict(),
        "settings": {"epsilon": T.constants.epsilon, "seed": T.settings["seed"],
                     "samples": T.settings["samples"]},
        "constants": {"k": T.constants.k, "K": T.constants.K, "eps_XY": T.constants.eps_XY,
                      "i": T.constants.i, "i_X": T.constants.i_X, "i_Y": T.constants.i_Y},
        "controls": T.controls,
        "f_tri": {str(k): v for k, v in sorted(T.f_tri.as_dict().items())},
        "g_tri": {str(k): v for k, v in sorted(T.g_tri.as_dict().items())},
        "report": T.certificate.as_dict(),
    }


def cmd_squeeze(args) -> int:
    doc = load_document(args.input)
    data = doc.equivalence_data()
    T = squeeze(data, eps=args.epsilon, samples=sample_budget(args.samples), seed=args.seed)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(_certificate(doc, T), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return _emit_report(args, T.certificate)


def cmd_check_triangular(args) -> int:
    F = _pick_map(load_document(args.input), args.map)
    P = _pick_map(load_document(args.control), args.control_map)
    ok, witness = is_triangular(F, P)
    report = Report("check-triangular")
    report.tally("triangular").add(passed=ok, failed=not ok, witnesses=[] if ok else [witness])
    return _emit_report(args, report)


def cmd_render(args) -> int:
    doc = load_document(args.input)
    K = doc.complex()
    r = stages = None
    if args.retraction or args.stages:
        bundle = build_retraction(K, i=args.i)
        rec, r = bundle.top, bundle.r
        stages = bundle.stages if args.stages else None
    else:
        rec = iterate_subdivide(K, args.i)
    svg = render_svg(rec, r, stages, doc.layout_array())
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(svg)
    n = len(rec.complex.maximal_simplices())
    _emit(args, f"wrote {args.output}: {n} polygons", {"output": args.output, "polygons": n})
    return EXIT_OK


def cmd_conjecture_probe(args) -> int:
    with open(args.certificate, encoding="utf-8") as fh:
        try:
            cert = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DocumentError(exc.msg, f"{exc.lineno}:{exc.colno}") from exc
    if not isinstance(cert, dict) or cert.get("kind") != CERTIFICATE_KIND:
        raise InputError("not a squeeze certificate")
    doc = parse_document(json.dumps(cert["input"]))
    s = cert["settings"]
    T = squeeze(doc.equivalence_data(), eps=s["epsilon"], samples=s["samples"], seed=s["seed"])
    stored = {int(k): v for k, v in cert["f_tri"].items()}
    if stored != T.f_tri.as_dict():
        raise InputError("certificate does not match its rebuilt f_tri")
    return _emit_report(args, conjecture_probe(T))


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trisqueeze", description=__doc__.splitlines()[0])
    ap.add_argument("--json", action="store_true", help="print reports as JSON")
    sub = ap.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                       help="print reports as JSON")
        return p

    p = command("subdivide", cmd_subdivide, "write Sd^i of a complex as a document")
    p.add_argument("input")
    p.add_argument("-i", type=int, required=True)
    p.add_argument("-o", "--output", required=True)

    p = command("measure", cmd_measure, "mesh, comesh and per-dimension diam/rad")
    p.add_argument("input")
    p.add_argument("--control", help="name of a control map in the document")

    p = command("dualcell", cmd_dualcell, "dual cell of a simplex in Sd X")
    p.add_argument("input")
    p.add_argument("--simplex", required=True, help="comma separated vertex ids")

    p = command("retraction", cmd_retraction, "build (and optionally verify) r : Sd^i X -> X")
    p.add_argument("input")
    p.add_argument("--epsilon", type=float)
    p.add_argument("-i", type=int)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)

    p = command("constants", cmd_constants, "k, K, eps(X, Y) and the depth i")
    p.add_argument("X")
    p.add_argument("Y")
    p.add_argument("--epsilon", type=float, help="default: half of eps(X, Y)")

    p = command("lemma-check", cmd_lemma_check, "sampled neighbourhood sandwich for a simplex map")
    p.add_argument("input")
    p.add_argument("--map")
    p.add_argument("--rho", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)

    p = command("squeeze", cmd_squeeze, "squeeze a controlled equivalence and certify it")
    p.add_argument("input")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")

    p = command("check-triangular", cmd_check_triangular, "exact triangularity of F over P")
    p.add_argument("input")
    p.add_argument("--map")
    p.add_argument("--control", required=True)
    p.add_argument("--control-map")

    p = command("render", cmd_render, "SVG picture of Sd^i X")
    p.add_argument("input")
    p.add_argument("-i", type=int, default=2)
    p.add_argument("--retraction", action="store_true", help="colour top simplices by r")
    p.add_argument("--stages", action="store_true", help="draw where each stage sends vertices")
    p.add_argument("-o", "--output", required=True)

    p = command("conjecture-probe", cmd_conjecture_probe,
                "experimental: is the subdivided squeeze output still triangular?")
    p.add_argument("certificate")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, DocumentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError, RuntimeError) as exc:
        # refusals from the library: bad epsilon, uncontrolled maps, budgets
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
