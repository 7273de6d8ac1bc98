"""Command-line dataset generator: `hamgen --molecule H2 --out datasets/h2 --grid 0.05:5.0:0.05`."""
from __future__ import annotations

import argparse
import logging
import sys

from .generate import GenSpec, generate, validate
from .molecules import MOLECULES


def _parse_grid(text: str) -> tuple[float, float, float]:
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:step, got {text!r}") from exc
    return lo, hi, step


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hamgen", description="Generate molecular qubit-Hamiltonian datasets")
    ap.add_argument("--molecule", required=False, choices=sorted(MOLECULES), help="molecule to generate")
    ap.add_argument("--basis", default=None, help="basis set (default: per-molecule)")
    ap.add_argument("--mapping", default=None, choices=["jordan_wigner", "bravyi_kitaev"])
    ap.add_argument("--grid", type=_parse_grid, default=(0.05, 5.0, 0.05), help="lo:hi:step in Bohr")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--validate", metavar="DIR", help="validate an existing dataset directory and exit")
    ap.add_argument("-q", "--quiet", action="store_true")
    return ap


def entry(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s"
    )
    if args.validate:
        problems = validate(args.validate)
        for p in problems:
            print(p, file=sys.stderr)
        print(f"{'FAIL' if problems else 'OK'}: {args.validate}")
        return 1 if problems else 0
    if not args.molecule:
        print("error: --molecule is required unless --validate is given", file=sys.stderr)
        return 2
    lo, hi, step = args.grid
    spec = GenSpec(
        molecule=args.molecule, basis=args.basis, mapping=args.mapping,
        grid_lo=lo, grid_hi=hi, grid_step=step, out_dir=args.out,
    )
    written = generate(spec)
    print(f"wrote {len(written)} files to {args.out}")
    return 0 if written else 1


if __name__ == "__main__":
    sys.exit(entry())
