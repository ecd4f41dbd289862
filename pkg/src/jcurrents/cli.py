"""Command line runner: ``jcurrents <subcommand> --config <file> [--out DIR] ...``.

Exit codes: 0 success, 1 config or usage error, 2 numerical non-convergence,
3 a check experiment detected a violated invariant.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

from .errors import ConfigError, JCurrentsError, NonConvergence
from .experiments import RUNNERS, Outcome

CONFIG_PACKAGE = "jcurrents.configs"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def bundled_configs() -> list:
    root = resources.files(CONFIG_PACKAGE)
    return sorted((p for p in root.iterdir() if p.name.endswith(".json")), key=lambda p: p.name)


def resolve_config(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    stem = name[:-5] if name.endswith(".json") else name
    for p in bundled_configs():
        if p.name == f"{stem}.json":
            return Path(str(p))
    raise ConfigError(f"config {name!r} not found (neither a file nor a bundled config)")


def git_blob_hash(data: bytes) -> str:
    """Content hash computed the way git hashes a blob."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def load_config(path: Path) -> tuple:
    data = path.read_bytes()
    try:
        cfg = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError(f"{path}: config must be an object with a 'kind' field")
    if cfg["kind"] not in RUNNERS:
        raise ConfigError(f"{path}: unknown kind {cfg['kind']!r}; expected one of {sorted(RUNNERS)}")
    return cfg, git_blob_hash(data)


def format_value(v) -> str:
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def render_csv(rows: list, provenance: dict) -> str:
    columns = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    buf = io.StringIO()
    for k, v in provenance.items():
        buf.write(f"# {k}: {format_value(v)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(row.get(c, "")) for c in columns])
    return buf.getvalue()


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.chmod(tmp, 0o644)
    os.replace(tmp, path)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if hasattr(obj, "item"):
        return _jsonable(obj.item())
    return obj


def run_experiment(kind: str, config: str, out_dir: str = ".", seed: int | None = None,
                   threads: int = 1, engine: str = "exact") -> tuple:
    """Run one config; returns (exit code, csv path, outcome)."""
    path = resolve_config(config)
    cfg, digest = load_config(path)
    if cfg["kind"] != kind:
        raise ConfigError(f"{path.name} is a {cfg['kind']!r} config, not {kind!r}")
    seed = int(cfg.get("seed", 0) if seed is None else seed)
    if seed < 0 or seed >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    try:
        outcome = RUNNERS[kind](cfg, seed, engine, threads)
    except NonConvergence as exc:
        outcome = Outcome()
        outcome.fail(2, str(exc))
    from . import __version__
    provenance = {"config": path.name, "config_hash": digest, "kind": kind, "seed": seed,
                  "engine": engine, "version": __version__,
                  "quadrature": json.dumps(cfg.get("quadrature", {}), sort_keys=True)}
    stem = path.stem
    csv_path = Path(out_dir) / f"{stem}.csv"
    write_atomic(csv_path, render_csv(outcome.rows, provenance))
    report = {"provenance": {**provenance, "threads": threads}, "status": outcome.status,
              "messages": outcome.messages, "summary": outcome.summary}
    write_atomic(Path(out_dir) / f"{stem}.json",
                 json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    return outcome.status, csv_path, outcome


def list_experiments(kind: str | None = None) -> list:
    """(name, kind, description) for bundled configs, sorted by name."""
    out = []
    for p in bundled_configs():
        cfg = json.loads(p.read_text())
        if kind is None or cfg.get("kind") == kind:
            out.append((p.name[:-5], cfg.get("kind", "?"), cfg.get("description", "")))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jcurrents", description="Exterior calculus experiments on "
                                                   "almost complex manifolds.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for kind in RUNNERS:
        p = sub.add_parser(kind, help=f"run a {kind} config")
        p.add_argument("--config", required=True, help="config file or bundled config name")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="quadrature worker threads")
        p.add_argument("--engine", choices=("exact", "fd"), default="exact",
                       help="differentiation engine")
    p = sub.add_parser("list", help="list bundled configs")
    p.add_argument("--kind", default=None, help="only configs of this kind")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        rows = list_experiments(args.kind)
        width = max((len(r[0]) for r in rows), default=4)
        for name, kind, desc in rows:
            print(f"{name:<{width}}  {kind:<16}  {desc}")
        return 0
    try:
        status, csv_path, outcome = run_experiment(args.command, args.config, args.out,
                                                   args.seed, args.threads, args.engine)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except JCurrentsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    for msg in outcome.messages:
        print(msg, file=sys.stderr)
    print(f"wrote {csv_path} (status {status})")
    return status


if __name__ == "__main__":
    sys.exit(main())
