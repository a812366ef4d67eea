"""Command-line front end: sweep execution, baseline scoring, report merging.

Exit codes: 0 success, 2 configuration error, 3 classifier failure.
"""
from __future__ import annotations

import argparse
import shlex
import sys
from pathlib import Path

from .data_io import load_idx, load_manifest, save_perturbed
from .engine import (
    SweepOptions,
    ValidationSet,
    accuracy,
    fit_centroid,
    g_knee,
    g_star_argmax,
    run_sweep,
)
from .errors import (
    ClassifierError,
    ConfigError,
    FormatError,
    GestaltError,
    ProtocolError,
)
from .perturb import GestaltParam, LEFT_HALF, Principle, RIGHT_HALF
from .protocol import spawn_classifier

REPORT_HEADER = "# gestalt-report v1"

_PRINCIPLES = {
    "closure": Principle.CLOSURE,
    "proximity": Principle.PROXIMITY,
    "continuation": Principle.CONTINUATION,
    "similarity": Principle.SIMILARITY,
    "figure-ground": Principle.FIGURE_GROUND,
    "figure_ground": Principle.FIGURE_GROUND,
    "symmetry": Principle.SYMMETRY,
}


def parse_grid(spec: str, principle: Principle) -> list[GestaltParam]:
    """Grid syntax: ``start:stop:step`` (inclusive of stop), an explicit
    comma list, or semicolon-separated 6-vectors for continuation."""
    spec = spec.strip()
    try:
        if principle is Principle.CONTINUATION:
            vectors = []
            for chunk in spec.split(";"):
                parts = [float(x) for x in chunk.split(",")]
                vectors.append(GestaltParam(principle, tuple(parts)))
            return vectors
        if ":" in spec:
            start_s, stop_s, step_s = spec.split(":")
            start, stop, step = float(start_s), float(stop_s), float(step_s)
            if step <= 0 or stop < start:
                raise ConfigError(f"bad grid range {spec!r}")
            values = []
            v = start
            while v <= stop + 1e-9:
                values.append(round(v, 10))
                v += step
            return [GestaltParam(principle, x) for x in values]
        return [GestaltParam(principle, float(x)) for x in spec.split(",")]
    except (ValueError, GestaltError) as exc:
        raise ConfigError(f"invalid grid {spec!r}: {exc}") from exc


def _format_g(param: GestaltParam) -> str:
    if param.principle is Principle.CONTINUATION:
        return "|".join(repr(x) for x in param.value)
    v = param.value
    return repr(int(v)) if float(v).is_integer() else repr(v)


def _load_dataset(args) -> ValidationSet:
    if args.idx:
        return load_idx(args.idx[0], args.idx[1])
    if args.manifest:
        return load_manifest(args.manifest)
    raise ConfigError("provide --idx IMAGES LABELS or --manifest PATH")


def _build_classifier(args, vset: ValidationSet):
    if args.classifier == "builtin":
        return fit_centroid(vset, temperature=args.temperature)
    return spawn_classifier(shlex.split(args.classifier))


def _write_report(path: Path, result, args, tau: float):
    star = g_star_argmax(result)
    knee = g_knee(result, tau)
    lines = [
        REPORT_HEADER,
        f"# principle: {result.principle.value}",
        f"# grid: {args.grid}",
        f"# seed: {result.seed}",
        f"# tau: {tau!r}",
        f"# classifier: {args.classifier}",
        f"# mm_per_px: {args.mm_per_px!r}",
        f"# h_base: {result.h_base!r}",
        f"# p_base: {result.p_base!r}",
        f"# excluded: {result.excluded}",
        f"# g_star: {_format_g(star)}",
        f"# g_knee: {_format_g(knee) if knee is not None else 'none'}",
        "g,x,p_true,accuracy,phi,failed",
    ]
    for pt in result.points:
        if pt.failed:
            lines.append(f"{_format_g(pt.param)},{pt.param.scalar()!r},,,,1")
        else:
            lines.append(
                f"{_format_g(pt.param)},{pt.param.scalar()!r},{pt.p_true!r},"
                f"{pt.h!r},{pt.phi!r},0"
            )
    path.write_text("\n".join(lines) + "\n")


def cmd_sweep(args) -> int:
    principle = _PRINCIPLES[args.principle]
    grid = parse_grid(args.grid, principle)
    vset = _load_dataset(args)
    if args.limit and args.limit < len(vset):
        vset = ValidationSet(vset.items[: args.limit], vset.class_count)
    opts = SweepOptions(
        threshold=args.threshold,
        half=args.half,
        dot_diameter=args.dot_diameter,
    )
    classifier = _build_classifier(args, vset)
    try:
        result = run_sweep(classifier, vset, principle, grid, args.seed, opts)
    finally:
        if hasattr(classifier, "close"):
            classifier.close()
    out = Path(args.out)
    _write_report(out, result, args, args.tau)
    if args.save_perturbed:
        _save_last_sets(result, vset, args, opts)
    print(f"wrote {out} ({len(result.points)} points, h_base={result.h_base:.4f})")
    return 0


def _save_last_sets(result, vset, args, opts):
    # persist the perturbed set at g* as an audit trail
    from .engine import Item, _mix_seed, _perturb_item

    star = g_star_argmax(result)
    pi = list(result.grid).index(star)
    items = []
    meta = {}
    for ii, it in enumerate(vset.items):
        try:
            img = _perturb_item(it, star, _mix_seed(result.seed, pi, ii), opts)
        except GestaltError:
            continue
        meta[len(items)] = (f"item_{ii}", result.principle.value, _format_g(star))
        items.append(Item(img, it.label, it.seg))
    save_perturbed(items, args.save_perturbed, meta)


def cmd_baseline(args) -> int:
    vset = _load_dataset(args)
    if args.limit and args.limit < len(vset):
        vset = ValidationSet(vset.items[: args.limit], vset.class_count)
    classifier = _build_classifier(args, vset)
    try:
        h = accuracy(classifier, vset)
    finally:
        if hasattr(classifier, "close"):
            classifier.close()
    print(f"h_base {h!r} ({len(vset)} items, {vset.class_count} classes)")
    return 0


def _parse_report(path: Path):
    meta = {}
    rows = []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            if ":" in line:
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
            continue
        if not line or line.startswith("g,"):
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise FormatError(f"{path}: malformed report row {line!r}")
        rows.append(parts)
    if "gestalt-report v1" not in " ".join(meta.keys()) and not rows:
        raise FormatError(f"{path}: not a gestalt report")
    return meta, rows


def cmd_report(args) -> int:
    out_lines = ["series,principle,x,p_true,accuracy,phi"]
    summary = []
    for p in args.reports:
        path = Path(p)
        meta, rows = _parse_report(path)
        principle = meta.get("principle", "?")
        mm_per_px = float(meta.get("mm_per_px", "1.0") or 1.0)
        scale = mm_per_px if principle == "proximity" else 1.0
        for g, x, p_true, acc, phi_v, failed in rows:
            if failed == "1":
                continue
            out_lines.append(
                f"{path.stem},{principle},{float(x) * scale!r},{p_true},{acc},{phi_v}"
            )
        summary.append(
            (principle, meta.get("g_star", "?"), meta.get("g_knee", "?"),
             meta.get("h_base", "?"))
        )
    merged = "\n".join(out_lines) + "\n"
    if args.out:
        Path(args.out).write_text(merged)
    else:
        sys.stdout.write(merged)
    print("principle      g_star      g_knee      h_base", file=sys.stderr)
    for principle, star, knee, h in summary:
        print(f"{principle:<14} {star:<11} {knee:<11} {h}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gestalt-probe",
        description="Perturbation sweeps along the six Gestalt principles",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--idx", nargs=2, metavar=("IMAGES", "LABELS"))
        p.add_argument("--manifest")
        p.add_argument("--classifier", default="builtin",
                       help="'builtin' or a command line to spawn")
        p.add_argument("--limit", type=int, default=0)
        p.add_argument("--temperature", type=float, default=1.0)

    sw = sub.add_parser("sweep", help="run a sensitivity sweep")
    add_common(sw)
    sw.add_argument("--principle", required=True, choices=sorted(_PRINCIPLES))
    sw.add_argument("--grid", required=True)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--tau", type=float, default=0.2)
    sw.add_argument("--out", required=True)
    sw.add_argument("--mm-per-px", type=float, default=0.714)
    sw.add_argument("--threshold", type=int, default=128)
    sw.add_argument("--half", choices=[LEFT_HALF, RIGHT_HALF], default=RIGHT_HALF)
    sw.add_argument("--dot-diameter", type=float, default=2.0)
    sw.add_argument("--save-perturbed", metavar="DIR")
    sw.set_defaults(func=cmd_sweep)

    bl = sub.add_parser("baseline", help="print baseline accuracy only")
    add_common(bl)
    bl.set_defaults(func=cmd_baseline)

    rp = sub.add_parser("report", help="merge sweep reports into plot data")
    rp.add_argument("reports", nargs="+")
    rp.add_argument("--out")
    rp.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ClassifierError, ProtocolError) as exc:
        print(f"classifier error: {exc}", file=sys.stderr)
        return 3
    except GestaltError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
