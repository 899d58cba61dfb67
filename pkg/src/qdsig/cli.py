"""Command-line entry point: ``qdsig {simulate, attack, bounds, optimize}``.

Exit codes: 0 success, 2 configuration error, 3 a run aborted on a failed
authentication check, 4 a verdict was Reject, 5 the optimizer found no
feasible point.

Parameters come from flags, from a JSON file passed with ``--config`` whose
keys are the flag names with dashes turned into underscores, or both (flags
win).  ``QDS_SEED`` replaces the seed given in a config file; an explicit
``--seed`` flag still wins over it.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import adversary, optimizer, secbounds
from .bits import BitString
from .protocols import p1_run, p2_run, p3_run, synth_document
from .protocols.common import Outcome

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_REJECT, EXIT_INFEASIBLE = 0, 2, 3, 4, 5

PROTOCOL_DEFAULTS = {
    "p1": {"bh": 32, "bhp": 40},
    "p2": {"bh": 16, "bhp": 40, "n": 8, "e_max": 1},
    "p3": {"bh": 2, "bhp": 40, "N": 2, "k": 16, "omega": 1, "l_max": 1},
}
CONFIG_ALIASES = {"b_M": "bm", "b_H": "bh", "b_Hp": "bhp"}
ATTACKS = ("lemma3", "forge-p1", "repudiate-p2", "forge-p3", "dispute-p3", "transfer-p3")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str | None = None
    protocol: str | None = None
    attack: str | None = None
    bm: int | None = None
    bh: int | None = None
    bhp: int | None = None
    n: int | None = None
    e_max: int | None = None
    N: int | None = None
    k: int | None = None
    omega: int | None = None
    l_max: int | None = None
    p_e: float | None = None
    level: int | None = None
    strategy: str | None = None
    trials: int | None = None
    eps: float | None = None
    sweep: bool | None = None
    corrupt: list[int] | None = None
    seed: int | None = None
    doc_file: str | None = None
    out: str | None = None

    @classmethod
    def from_mapping(cls, data: dict) -> RunConfig:
        """Build from a JSON object; the long key names of the run schema are accepted too."""
        data = dict(data)
        for long, short in CONFIG_ALIASES.items():
            if long in data:
                if short in data:
                    raise ConfigError(f"both {long!r} and {short!r} given")
                data[short] = data.pop(long)
        adv = data.pop("adversary", None)
        if adv is not None:
            if not isinstance(adv, dict) or set(adv) - {"corrupt"}:
                raise ConfigError("adversary supports only {'corrupt': [indices]}")
            data["corrupt"] = adv.get("corrupt")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        if cfg.bm is not None:
            cfg.bm = parse_count(cfg.bm)
        return cfg

    def merged(self, other: RunConfig) -> RunConfig:
        """Fields set in ``other`` override this config."""
        updates = {f.name: getattr(other, f.name) for f in dataclasses.fields(other) if getattr(other, f.name) is not None}
        return dataclasses.replace(self, **updates)

    def get(self, name: str, default=None):
        value = getattr(self, name)
        return default if value is None else value


def parse_count(text) -> int:
    """Accept integers written as ``65536`` or ``1e6``."""
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"not a number: {text!r}") from None
    if value != int(value) or value < 0:
        raise ConfigError(f"not a nonnegative integer: {text!r}")
    return int(value)


def parse_indices(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with parameter defaults")
    common.add_argument("--protocol", choices=sorted(PROTOCOL_DEFAULTS))
    common.add_argument("--bm", type=parse_count, help="document length in bits (1e6 accepted)")
    common.add_argument("--bh", type=int, help="signature hash length b_H")
    common.add_argument("--bhp", type=int, help="authentication tag length b'_H")
    common.add_argument("--n", type=int, help="Protocol 2 blocks")
    common.add_argument("--e-max", dest="e_max", type=int, help="Protocol 2 error tolerance")
    common.add_argument("--N", dest="N", type=int, help="Protocol 3 receivers")
    common.add_argument("--k", type=int, help="Protocol 3 functions per receiver pair")
    common.add_argument("--omega", type=int, help="Protocol 3 dishonest participants")
    common.add_argument("--l-max", dest="l_max", type=int, help="Protocol 3 top verification level")
    common.add_argument("--corrupt", type=parse_indices, help="comma-separated signature pieces to spoil (p2, p3)")
    common.add_argument("--seed", type=int)
    common.add_argument("--doc-file", dest="doc_file", help="sign this file instead of a synthetic document")
    common.add_argument("--out", help="output path (transcript JSON-lines, report JSON or sweep CSV)")

    parser = argparse.ArgumentParser(prog="qdsig", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one honest protocol execution")
    att = sub.add_parser("attack", parents=[common], help="Monte-Carlo or constructive attack")
    att.add_argument("--attack", choices=ATTACKS)
    att.add_argument("--trials", type=parse_count)
    att.add_argument("--p-e", dest="p_e", type=float, help="transfer-p3 mismatch probability")
    att.add_argument("--level", type=int, help="transfer-p3 level l")
    att.add_argument("--strategy", choices=["divisor", "random"], help="forge-p1 strategy")
    sub.add_parser("bounds", parents=[common], help="closed-form security and cost")
    opt = sub.add_parser("optimize", parents=[common], help="minimize preshared bits")
    opt.add_argument("--sweep", action="store_true", default=None, help="all protocols over b_M = 1e2..1e10, CSV")
    opt.add_argument("--eps", type=float, help="target for eps_for + eps_rep (default 1e-10)")
    return parser


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    raw = {k: v for k, v in vars(args).items() if k != "config"}
    cli = RunConfig(**{k: v for k, v in raw.items() if k in {f.name for f in dataclasses.fields(RunConfig)}})
    base = RunConfig()
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        base = RunConfig.from_mapping(data)
    if "QDS_SEED" in environ:
        try:
            base.seed = int(environ["QDS_SEED"])
        except ValueError:
            raise ConfigError("QDS_SEED must be an integer") from None
    cfg = base.merged(cli)
    if cfg.protocol in PROTOCOL_DEFAULTS:
        for key, value in PROTOCOL_DEFAULTS[cfg.protocol].items():
            if getattr(cfg, key) is None:
                setattr(cfg, key, value)
    return cfg


def load_document(cfg: RunConfig) -> BitString:
    if cfg.doc_file:
        try:
            doc = BitString.from_bytes(Path(cfg.doc_file).read_bytes())
        except OSError as exc:
            raise ConfigError(f"cannot read document: {exc}") from None
        if cfg.bm is not None and cfg.bm != doc.length:
            raise ConfigError(f"--bm {cfg.bm} disagrees with the document's {doc.length} bits")
        return doc
    return synth_document(cfg.get("bm", 4096), cfg.get("seed", 0))


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=False, default=str))


# subcommands ------------------------------------------------------------------


def transcript_lines(tr) -> str:
    """Header, events, ledger entries and verdicts as JSON lines."""
    lines = [json.dumps({"type": "run", "run_id": tr.run_id, **tr.info}, default=str)]
    lines += [ev.to_json() for ev in tr.events]
    for e in tr.ledger.entries:
        lines.append(
            json.dumps(
                {
                    "type": "ledger",
                    "pair": list(e.pair),
                    "purpose": e.purpose.value,
                    "bits": e.bits,
                    "attributed_to": sorted(e.attributed_to),
                    "note": e.note,
                }
            )
        )
    lines.append(
        json.dumps(
            {
                "type": "verdicts",
                "verdicts": {p: v.label() for p, v in tr.verdicts.items()},
                "aborted": tr.aborted,
                "abort_reason": tr.abort_reason,
            }
        )
    )
    return "\n".join(lines) + "\n"


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.protocol is None:
        raise ConfigError("simulate needs --protocol")
    doc = load_document(cfg)
    seed = cfg.get("seed", 0)
    corrupt = cfg.get("corrupt", [])
    if cfg.protocol == "p1":
        if corrupt:
            raise ConfigError("--corrupt applies to p2 and p3")
        tr = p1_run(doc, cfg.bh, cfg.bhp, seed)
        receivers = ["B", "C"]
    elif cfg.protocol == "p2":
        tr = p2_run(doc, cfg.n, cfg.bh, cfg.bhp, cfg.e_max, seed, corrupt=corrupt)
        receivers = ["B", "C"]
    else:
        tr = p3_run(doc, cfg.N, cfg.k, cfg.bh, cfg.bhp, cfg.omega, cfg.l_max, seed, corrupt=corrupt)
        receivers = [f"P{i}" for i in range(1, cfg.N + 1)]
    _write(cfg.out, transcript_lines(tr))
    _emit(
        {
            "protocol": cfg.protocol,
            "run_id": tr.run_id,
            "verdicts": {p: v.label() for p, v in tr.verdicts.items()},
            "aborted": tr.aborted,
            "ell_P": {r: tr.ledger.per_party(r) for r in receivers},
            "ell_S": tr.info.get("ell_S"),
        }
    )
    outcomes = {v.outcome for v in tr.verdicts.values()}
    if tr.aborted or Outcome.ABORT in outcomes:
        return EXIT_ABORT
    if Outcome.REJECT in outcomes:
        return EXIT_REJECT
    return EXIT_OK


def run_attack(cfg: RunConfig) -> adversary.AttackOutcome:
    name = cfg.attack
    seed = cfg.get("seed", 0)
    if name is None:
        raise ConfigError(f"attack needs --attack (one of {', '.join(ATTACKS)})")
    if name == "lemma3":
        trials = cfg.get("trials", 100)
        return adversary.run_lemma3(
            range(seed, seed + trials), cfg.get("bm", 256), cfg.get("bh", 16), cfg.get("bhp", 32)
        )
    trials = cfg.get("trials", 100_000)
    if name == "forge-p1":
        return adversary.mc_forgery_p1(cfg.get("bh", 10), cfg.get("bm", 8), trials, seed, cfg.get("strategy", "divisor"))
    if name == "repudiate-p2":
        return adversary.mc_repudiation_p2(cfg.get("n", 8), cfg.get("e_max", 1), trials, seed)
    N, k, omega, l_max = cfg.get("N", 2), cfg.get("k", 16), cfg.get("omega", 1), cfg.get("l_max", 1)
    if name == "forge-p3":
        return adversary.mc_forgery_p3(N, k, cfg.get("bh", 2), omega, trials, seed, l_max)
    if name == "dispute-p3":
        return adversary.attack_dispute_p3(N, k, cfg.get("bh", 2), omega, trials, seed, l_max)
    return adversary.attack_transferability_p3(
        N, cfg.get("k", 64), omega, cfg.p_e, trials, seed, cfg.get("level", 1), l_max
    )


def cmd_attack(cfg: RunConfig) -> int:
    report = run_attack(cfg).to_json()
    _write(cfg.out, json.dumps(report, indent=2) + "\n")
    _emit(report)
    return EXIT_OK


def cmd_bounds(cfg: RunConfig) -> int:
    if cfg.protocol is None:
        raise ConfigError("bounds needs --protocol")
    b_M = cfg.get("bm", 10**6)
    if cfg.protocol == "p1":
        budget, cost = secbounds.eps_p1(b_M, cfg.bh, cfg.bhp), secbounds.cost_p1(cfg.bh, cfg.bhp)
    elif cfg.protocol == "p2":
        budget = secbounds.eps_p2(b_M, cfg.n, cfg.bh, cfg.bhp, cfg.e_max)
        cost = secbounds.cost_p2(cfg.n, cfg.bh, cfg.bhp)
    else:
        budget = secbounds.eps_p3(b_M, cfg.N, cfg.k, cfg.bh, cfg.bhp, cfg.omega, cfg.l_max)
        cost = secbounds.cost_p3(cfg.N, cfg.k, cfg.bh, cfg.bhp, b_M)
    report = {"protocol": cfg.protocol, "b_M": b_M, **budget.to_json(), **cost.to_json()}
    _write(cfg.out, json.dumps(report, indent=2) + "\n")
    _emit(report)
    return EXIT_OK


def cmd_optimize(cfg: RunConfig) -> int:
    eps = cfg.get("eps", optimizer.DEFAULT_TARGET)
    if cfg.sweep:
        protocols = [cfg.protocol] if cfg.protocol else ["p1", "p2", "p3"]
        rows, errors = optimizer.sweep(protocols, optimizer.SWEEP_GRID, eps)
        text = optimizer.rows_to_csv(rows)
        _write(cfg.out, text)
        sys.stdout.write(text)
        for err in errors:
            print(err, file=sys.stderr)
        return EXIT_INFEASIBLE if errors else EXIT_OK
    if cfg.protocol is None:
        raise ConfigError("optimize needs --protocol or --sweep")
    result = optimizer.OPTIMIZERS[cfg.protocol](cfg.get("bm", 10**6), eps)
    report = result.to_json()
    _write(cfg.out, json.dumps(report, indent=2) + "\n")
    _emit(report)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "attack": cmd_attack, "bounds": cmd_bounds, "optimize": cmd_optimize}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except optimizer.Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
