"""``render_figures <kind> <in.csv> <out.png>``.

Exit codes mirror the simulator CLI: 0 success, 2 usage error, 1 for
runtime/schema failures (schema errors name the offending column).
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figures",
        description="Render a diagnostic figure from a loopfield CSV.")
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("input", help="CSV produced by the loopfield CLI")
    parser.add_argument("output", help="output image path (PNG)")
    args = parser.parse_args(argv)
    try:
        meta = render(FigureSpec(kind=args.kind, input_path=args.input,
                                 output_path=args.output))
    except SchemaError as exc:
        print(f"render_figures: schema error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"render_figures: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"render_figures: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    summary = ", ".join(f"{k}={v}" for k, v in meta.items()
                        if k not in ("kind",))
    print(f"{args.kind} -> {args.output} ({summary})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
