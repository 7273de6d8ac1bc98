"""Command-line front end: reproducible training runs, energy-curve sweeps,
reference-energy extraction, and the classical-vs-quantum comparison table.

Every command writes a manifest (config snapshot, dataset checksums, seed,
code version) into the output directory before any compute starts.  Training
commands checkpoint periodically and resume from an existing checkpoint in
the output directory.

Exit codes: 0 ok, 2 usage/config error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import optim
from .model import DegenerateScaleError, DegenerateStateError, SingularityError
from .optim import (
    AdamState,
    PEC_GRID,
    RunRecord,
    IterRow,
    TrainConfig,
    config_from_dict,
    mean_abs_delta,
    snap_bond,
    sweep_pec,
)
from .params import init_store
from .runio import (
    COMPARE_COLUMNS,
    CheckpointError,
    HamiltonianLibrary,
    ORACLE_COLUMNS,
    PEC_COLUMNS,
    RECORD_COLUMNS,
    load_checkpoint,
    load_config,
    read_csv,
    save_checkpoint,
    write_csv,
    write_manifest,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

CHECKPOINT_EVERY = 100
CHECKPOINT_NAME = "model.ckpt"
RECORD_NAME = "record.csv"

# short spellings accepted on the command line
_GRAD_ALIASES = {"fd": "fd-central", "fd-central": "fd-central", "spsa": "spsa"}


class UsageError(Exception):
    """Bad invocation or configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_common(sp, *, dataset=True, out=True):
    sp.add_argument("--config", type=Path, help="JSON or TOML run configuration")
    if dataset:
        sp.add_argument(
            "--dataset",
            action="append",
            type=Path,
            required=True,
            metavar="DIR",
            help="Hamiltonian dataset directory (repeatable)",
        )
    if out:
        sp.add_argument("--out", type=Path, required=True, help="output directory")
    sp.add_argument("--seed", type=int, help="override config seed")
    sp.add_argument(
        "--grad-mode",
        choices=sorted(_GRAD_ALIASES),
        help="override gradient mode (fd = central finite differences)",
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qamol",
        description="Variational ground-state energy curves from qubit Hamiltonians.",
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sp = sub.add_parser("oracle", help="exact ground energies per dataset file")
    _add_common(sp)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("train", help="train on one molecule with random bonds")
    _add_common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("pretrain", help="round-robin training over several molecules")
    _add_common(sp)
    sp.set_defaults(func=cmd_pretrain)

    sp = sub.add_parser("finetune", help="few-shot tuning from a pretrained checkpoint")
    _add_common(sp)
    sp.add_argument("--checkpoint", type=Path, required=True, help="pretrained parameters")
    sp.add_argument("--bond-shift", type=float, default=0.0, help="Hamiltonian bond offset")
    sp.set_defaults(func=cmd_finetune)

    sp = sub.add_parser("sweep", help="potential-energy curve over the standard grid")
    _add_common(sp)
    sp.add_argument("--checkpoint", type=Path, help="trained parameters (default: fresh init)")
    sp.add_argument("--bond-shift", type=float, default=0.0, help="Hamiltonian bond offset")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("compare", help="classical vs quantum mixer error table")
    _add_common(sp)
    sp.add_argument("--trials", type=int, default=3, help="independent seeds per model")
    sp.set_defaults(func=cmd_compare)

    return p


def entry(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed its message
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularityError, DegenerateScaleError, DegenerateStateError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CheckpointError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def _load_train_config(args) -> TrainConfig:
    doc = {}
    if args.config is not None:
        try:
            doc = load_config(args.config)
        except (FileNotFoundError, ValueError) as exc:
            raise UsageError(f"config: {exc}") from exc
    try:
        cfg = config_from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config: {exc}") from exc
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "grad_mode", None):
        overrides["grad_mode"] = _GRAD_ALIASES[args.grad_mode]
    try:
        return cfg.with_overrides(**overrides) if overrides else cfg
    except ValueError as exc:
        raise UsageError(f"config: {exc}") from exc


def _scan_library(args) -> HamiltonianLibrary:
    try:
        return HamiltonianLibrary.scan(*args.dataset)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from exc


def _dataset_labels(dirs) -> dict[str, Path]:
    labels = {}
    for i, d in enumerate(dirs):
        name = Path(d).name or f"dataset{i}"
        if name in labels:
            name = f"{name}.{i}"
        labels[name] = Path(d)
    return labels


def _jsonable_config(cfg: TrainConfig) -> dict:
    return json.loads(json.dumps(asdict(cfg)))


# ---------------------------------------------------------------------------
# record/checkpoint persistence
# ---------------------------------------------------------------------------

def _read_record(path: Path) -> RunRecord:
    cols, rows = read_csv(path)
    if cols != list(RECORD_COLUMNS):
        raise CheckpointError(f"{path}: unexpected columns {cols}")
    record = RunRecord()
    for row in rows:
        record.append(
            IterRow(
                iteration=int(row[0]),
                molecule=row[1],
                r_sampled=float(row[2]),
                r_hamiltonian=float(row[3]),
                energy=float(row[4]),
                grad_norm_upstream=float(row[5]),
                grad_norm_downstream=float(row[6]),
                wall_time_s=float(row[7]),
            )
        )
    return record


def _flush_run(out: Path, command: str, cfg: TrainConfig, store, adam, record, done: int):
    save_checkpoint(
        out / CHECKPOINT_NAME,
        store,
        extra_tensors=adam.to_tensors(),
        meta={"command": command, "config": _jsonable_config(cfg), "iteration": done},
    )
    write_csv(out / RECORD_NAME, RECORD_COLUMNS, record.csv_rows())


def _resume_state(out: Path, command: str, cfg: TrainConfig):
    """(store, adam, record, start_iteration) from a previous run, if any."""
    ck = out / CHECKPOINT_NAME
    if not ck.exists():
        return None, AdamState(), RunRecord(), 0
    store, extra, meta = load_checkpoint(ck)
    if meta.get("command") != command:
        raise UsageError(
            f"{ck} was written by {meta.get('command')!r}, not {command!r}; "
            "use a fresh output directory"
        )
    if meta.get("config") != _jsonable_config(cfg):
        raise UsageError(f"{ck} was trained with a different configuration")
    start = int(meta.get("iteration", 0))
    record_path = out / RECORD_NAME
    record = _read_record(record_path) if record_path.exists() else RunRecord()
    del record.rows[start:]  # drop rows past the checkpointed iteration
    print(f"resuming from {ck} at iteration {start}")
    return store, AdamState.from_tensors(extra), record, start


def _run_training(args, command: str, runner) -> int:
    cfg = _load_train_config(args)
    lib = _scan_library(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(
        out,
        command,
        _jsonable_config(cfg),
        _dataset_labels(args.dataset),
        cfg.seed,
        [RECORD_NAME, CHECKPOINT_NAME],
    )
    store, adam, record, start = _resume_state(out, command, cfg)
    if start >= cfg.iterations and store is not None:
        print(f"nothing to do: checkpoint already at iteration {start}/{cfg.iterations}")
        return EXIT_OK

    def on_iteration(it, live_store, live_adam, live_record):
        if (it + 1) % CHECKPOINT_EVERY == 0 and (it + 1) < cfg.iterations:
            _flush_run(out, command, cfg, live_store, live_adam, live_record, it + 1)
            last = live_record.rows[-1]
            print(f"[{command}] iteration {it + 1}/{cfg.iterations} E={last.energy:+.6f}")

    store, record = runner(cfg, lib, store, adam, record, start, on_iteration)
    _flush_run(out, command, cfg, store, adam, record, cfg.iterations)
    print(f"{command} finished: {len(record.rows)} recorded iterations")
    print(f"params checksum {record.final_checksum}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_oracle(args) -> int:
    lib = _scan_library(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = [f"reference_{m}.csv" for m in lib.molecules]
    write_manifest(out, "oracle", {}, _dataset_labels(args.dataset), 0, outputs)
    for molecule in lib.molecules:
        rows = [(r, lib.exact_energy(molecule, r)) for r in lib.grid(molecule)]
        path = out / f"reference_{molecule}.csv"
        write_csv(path, ORACLE_COLUMNS, rows)
        print(f"{molecule}: {len(rows)} reference energies -> {path}")
    return EXIT_OK


def cmd_train(args) -> int:
    def runner(cfg, lib, store, adam, record, start, hook):
        return optim.train_plain(
            cfg.molecules[0], cfg, lib, store, adam, record, start, hook
        )

    return _run_training(args, "train", runner)


def cmd_pretrain(args) -> int:
    def runner(cfg, lib, store, adam, record, start, hook):
        return optim.pretrain(cfg, lib, store, adam, record, start, hook)

    return _run_training(args, "pretrain", runner)


def cmd_finetune(args) -> int:
    if not _load_train_config(args).fewshot_bonds:
        raise UsageError("config: finetune needs a non-empty fewshot_bonds list")
    base_store, _, _ = load_checkpoint(args.checkpoint)

    def runner(cfg, lib, store, adam, record, start, hook):
        initial = store if store is not None else base_store
        return optim.finetune(
            initial, cfg.molecules[0], cfg, lib, args.bond_shift, adam, record, start, hook
        )

    return _run_training(args, "finetune", runner)


def cmd_sweep(args) -> int:
    cfg = _load_train_config(args)
    lib = _scan_library(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(
        out,
        "sweep",
        _jsonable_config(cfg),
        _dataset_labels(args.dataset),
        cfg.seed,
        ["pec.csv"],
    )
    molecule = cfg.molecules[0]
    if args.checkpoint is not None:
        store, _, _ = load_checkpoint(args.checkpoint)
    else:
        store = init_store(
            [lib.molecule_spec(molecule)],
            cfg.d_emb,
            cfg.n_layers,
            cfg.kind,
            cfg.seed,
            cfg.init_scale,
        )
    rows = sweep_pec(store, molecule, PEC_GRID, lib, cfg.max_branches, args.bond_shift)
    write_csv(out / "pec.csv", PEC_COLUMNS, rows)
    print(f"{molecule}: mean |dE| = {mean_abs_delta(rows):.6f} Ha over {len(rows)} bonds")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load_train_config(args)
    if args.trials < 1:
        raise UsageError(f"--trials must be >= 1, got {args.trials}")
    lib = _scan_library(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(
        out,
        "compare",
        _jsonable_config(cfg),
        _dataset_labels(args.dataset),
        cfg.seed,
        ["compare.csv", "compare_trials.csv"],
    )
    trial_cols = ("model", "molecule", "seed", "mean_abs_delta_e_hartree")
    trial_rows = []
    table_rows = []
    for molecule in cfg.molecules:
        for kind in ("classical", "quantum"):
            deltas = []
            for t in range(args.trials):
                run_cfg = cfg.with_overrides(kind=kind, seed=cfg.seed + t)
                store, _ = optim.train_plain(molecule, run_cfg, lib)
                rows = sweep_pec(store, molecule, PEC_GRID, lib, run_cfg.max_branches)
                delta = mean_abs_delta(rows)
                deltas.append(delta)
                trial_rows.append((kind, molecule, run_cfg.seed, delta))
                print(f"[compare] {kind} {molecule} seed={run_cfg.seed} mean|dE|={delta:.6f}")
            table_rows.append((kind, molecule, args.trials, float(np.mean(deltas))))
    write_csv(out / "compare_trials.csv", trial_cols, trial_rows)
    write_csv(out / "compare.csv", COMPARE_COLUMNS, table_rows)
    print(f"{'model':<10} {'molecule':<8} {'mean |dE| (Ha)':>16}")
    for kind, molecule, _, delta in table_rows:
        print(f"{kind:<10} {molecule:<8} {delta:>16.6f}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(entry())
