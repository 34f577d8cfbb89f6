"""``depthboot`` command line: sequence generation and replay."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigurationError, DataError, ScenarioError
from .replay import configs
from .replay.pipeline import dump_grid, format_summary, generate_sequence, run_depth_eval, run_replay
from .replay.scenario import load_scenario, preset_names

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


def _band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"band must look like LO:HI, got {text!r}") from None
    if not 0 <= lo < hi:
        raise argparse.ArgumentTypeError("band needs 0 <= LO < HI")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    config_help = "configuration names (comma separated):\n" + configs.help_table()
    p = argparse.ArgumentParser(
        prog="depthboot",
        description="Synthetic corridor sequences and costmap replay.",
        epilog=config_help,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log per-frame warnings")
    top = p.add_subparsers(dest="group", required=True)

    synth = top.add_parser("synth", help="sequence generation")
    ssub = synth.add_subparsers(dest="cmd", required=True)
    gen = ssub.add_parser("gen", help="render a scenario into a bundle directory")
    gen.add_argument("--scenario", required=True, help=f"scenario JSON file or preset name ({', '.join(preset_names())})")
    gen.add_argument("--out", required=True, help="bundle directory to write")
    gen.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    replay = top.add_parser("replay", help="costmap replay and evaluation")
    rsub = replay.add_subparsers(dest="cmd", required=True)
    fmt = argparse.RawDescriptionHelpFormatter
    run = rsub.add_parser("run", help="build costmaps and write frames/summary CSVs", epilog=config_help, formatter_class=fmt)
    run.add_argument("--bundle", required=True)
    run.add_argument("--configs", default=None, help="comma-separated names; default: the bundle's list")
    run.add_argument("--out", required=True)

    ev = rsub.add_parser("eval-depth", help="depth accuracy of learned, fused and ToF depth")
    ev.add_argument("--bundle", required=True)
    ev.add_argument("--band", type=_band, default=(0.3, 1.0), help="ground-truth depth band LO:HI in meters")
    ev.add_argument("--out", required=True)

    dump = rsub.add_parser("dump-grid", help="print one frame's costmap as text", epilog=config_help, formatter_class=fmt)
    dump.add_argument("--bundle", required=True)
    dump.add_argument("--config", required=True)
    dump.add_argument("--frame", type=int, required=True)
    dump.add_argument("--provenance", action="store_true", help="print provenance bits instead of cell states")
    return p


def _dispatch(args) -> None:
    if args.group == "synth":
        b = generate_sequence(load_scenario(args.scenario), args.out, args.seed)
        print(f"wrote {len(b)} frames to {args.out}")
    elif args.cmd == "run":
        from .replay.bundle import Bundle

        bundle = Bundle(args.bundle)
        names = configs.parse_list(args.configs) if args.configs else bundle.manifest.get("configurations", ["L"])
        result = run_replay(bundle, names, args.out)
        print(format_summary(result.summary))
    elif args.cmd == "eval-depth":
        res = run_depth_eval(args.bundle, args.band, args.out)
        for method, s in res["summary"].items():
            print(
                f"{method:<8} frames={s['frames']:<4} skipped={s['skipped']:<4} rmse={s['rmse']:.4f} "
                f"mae={s['mae']:.4f} absrel={s['absrel']:.4f} d1.25={s['delta_125']:.4f}"
            )
    else:
        sys.stdout.write(dump_grid(args.bundle, args.config, args.frame, args.provenance))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        _dispatch(args)
    except (ScenarioError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
