"""Command-line driver.

    nsaug <verb> --config run.cfg [--output DIR] [--stage-only] [--refine]

Verbs ``snapshots``, ``augment``, ``basis`` and ``evaluate`` run the pipeline
up to that stage (reusing finished stages); ``pipeline`` runs everything and
``export`` writes VTK files. Exit status: 0 success, 1 configuration or
input error, 2 numerical failure.
"""

import argparse
import logging
import sys

from .errors import (
    ConfigError,
    IoError,
    NsaugError,
    ParseError,
    StageError,
    UnknownProblem,
    UnknownTag,
)
from .pipeline import RunConfig, export_run, run_pipeline

log = logging.getLogger("nsaug")

VERBS = ("snapshots", "augment", "basis", "evaluate", "pipeline", "export")
_INPUT_ERRORS = (ConfigError, ParseError, UnknownProblem, UnknownTag, IoError)


def build_parser():
    ap = argparse.ArgumentParser(prog="nsaug", description="Snapshot augmentation for POD reduced models of steady flow.")
    ap.add_argument("verb", choices=VERBS)
    ap.add_argument("--config", required=True, help="key = value run configuration")
    ap.add_argument("--output", help="output directory (overrides output_dir in the config)")
    ap.add_argument("--stage-only", action="store_true", help="run only this stage; earlier artifacts must exist")
    ap.add_argument("--refine", action="store_true", help="export: split triangles to show all P2 nodes")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _print_report(rep):
    for k, v in rep.summary().items():
        print(f"{k} = {v}")
    for r in rep.records:
        mu = " ".join(f"{v:g}" for v in r.mu)
        print(f"mu=({mu}) velocity={r.velocity:.3e} pressure={r.pressure:.3e} drag={r.drag:.3e} lift={r.lift:.3e}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.from_file(args.config)
        if args.output:
            cfg.output_dir = args.output
        if args.verb == "export":
            for p in export_run(cfg, refine=args.refine):
                print(p)
        else:
            upto = "evaluate" if args.verb == "pipeline" else args.verb
            _print_report(run_pipeline(cfg, upto=upto, stage_only=args.stage_only))
    except _INPUT_ERRORS as exc:
        log.error("%s", exc)
        return 1
    except StageError as exc:
        log.error("%s", exc)
        return 1 if isinstance(exc.cause, _INPUT_ERRORS) else 2
    except NsaugError as exc:
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
