"""Command line interface: cogatr <verb> --config FILE --out DIR [--set k=v ...]"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import config as config_mod
from . import harness
from .errors import CogatrError, ConfigError, EmptyCell, UsageError

VERBS = ("gen-dataset", "train", "evaluate", "sweep-dtheta", "sweep-snr", "baseline-2p")

DATASET_NAME = "dataset.jsonl"
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class CliCommand:
    verb: str
    config_path: str
    out_dir: str
    overrides: tuple[str, ...]


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); raise instead
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cogatr", description=__doc__)
    sub = parser.add_subparsers(dest="verb", parser_class=_Parser)
    sub.required = True
    for verb in VERBS:
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override a config value (repeatable)",
        )
    return parser


def parse_args(argv: list[str]) -> CliCommand:
    """Parse a full argv (argv[0] is the program name)."""
    ns = _build_parser().parse_args(argv[1:])
    for item in ns.overrides:
        try:
            config_mod.parse_override(item)
        except ConfigError as e:
            raise UsageError(str(e))
    return CliCommand(
        verb=ns.verb,
        config_path=ns.config,
        out_dir=ns.out,
        overrides=tuple(ns.overrides),
    )


def _print_row(row: harness.SweepRow) -> None:
    print(
        f"{row.variant} dtheta={row.delta_theta_deg:g} snr={row.snr_db:g} "
        f"pcc={row.pcc_percent:.2f}% unclassified={row.unclassified_percent:.2f}% "
        f"median_perspectives={row.median_perspectives:g} trials={row.trials}"
    )


def _elev_tag(elevation_deg: float) -> str:
    return repr(float(elevation_deg)).replace(".", "p").replace("-", "m")


def _do_gen_dataset(cfg, out_dir: Path) -> int:
    path = out_dir / DATASET_NAME
    count = harness.generate_dataset(cfg, path)
    manifest = {
        "format": "cogatr-ds-v1",
        "records": count,
        "classes": list(cfg.classes),
        "elevations_deg": list(cfg.elevations_deg),
        "train_azimuth_step_deg": cfg.train_azimuth_step_deg,
        "beta_deg": cfg.beta_deg,
        "master_seed": cfg.master_seed,
        "dataset_file": DATASET_NAME,
    }
    harness.atomic_write_text(
        out_dir / MANIFEST_NAME, json.dumps(manifest, indent=2) + "\n"
    )
    print(f"wrote {count} records to {path}")
    return 0


def _do_train(cfg, out_dir: Path) -> int:
    from .classifier import save_bank

    dataset_path = out_dir / DATASET_NAME
    if not dataset_path.exists():
        raise ConfigError(
            f"dataset file {dataset_path} not found; run gen-dataset first"
        )
    band, banks = harness.train_banks_from_file(dataset_path)
    for elev, per_domain in banks.items():
        for domain, bank in per_domain.items():
            path = out_dir / f"bank_{domain.value.lower()}_elev_{_elev_tag(elev)}.json"
            save_bank(bank, path)
            print(f"wrote {path}")
    return 0


def _do_evaluate(cfg, out_dir: Path, workers=None) -> int:
    row = harness.evaluate_point(cfg, workers=workers)
    harness.write_sweep_csv([row], out_dir / "evaluate.csv")
    _print_row(row)
    return 0


def _do_sweep_dtheta(cfg, out_dir: Path, workers=None) -> int:
    from .report import write_sweep_reports

    rows = harness.run_sweep_dtheta(cfg, workers=workers)
    write_sweep_reports(
        rows,
        out_dir,
        "sweep_dtheta",
        "delta_theta_deg",
        "Classification vs azimuth step",
    )
    for row in rows:
        _print_row(row)
    return 0


def _do_sweep_snr(cfg, out_dir: Path, workers=None) -> int:
    from .report import write_sweep_reports

    rows = harness.run_sweep_snr(cfg, workers=workers)
    write_sweep_reports(
        rows, out_dir, "sweep_snr", "snr_db", "Classification vs SNR"
    )
    for row in rows:
        _print_row(row)
    return 0


def _do_baseline_2p(cfg, out_dir: Path, workers=None) -> int:
    row = harness.fixed_two_perspective_baseline(
        cfg, cfg.baseline_delta_theta_deg, workers=workers
    )
    harness.write_sweep_csv([row], out_dir / "baseline_2p.csv")
    _print_row(row)
    return 0


_HANDLERS = {
    "gen-dataset": _do_gen_dataset,
    "train": _do_train,
    "evaluate": _do_evaluate,
    "sweep-dtheta": _do_sweep_dtheta,
    "sweep-snr": _do_sweep_snr,
    "baseline-2p": _do_baseline_2p,
}


def execute(cmd: CliCommand) -> int:
    """Run a parsed command; returns the process exit status."""
    try:
        cfg = config_mod.load_config(cmd.config_path, cmd.overrides)
        out_dir = Path(cmd.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return _HANDLERS[cmd.verb](cfg, out_dir)
    except EmptyCell as e:
        print(
            f"error: {e}\nhint: decrease experiment.train_azimuth_step_deg "
            "so every azimuth sector is covered",
            file=sys.stderr,
        )
        return 1
    except CogatrError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv) if argv is None else list(argv)
    try:
        cmd = parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    return execute(cmd)


if __name__ == "__main__":
    sys.exit(main())
