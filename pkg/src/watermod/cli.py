"""Command-line surface: batch generate/embed/detect/recover plus bench and
calibrate harnesses over JSONL token corpora.

Records are exchanged as integer token ids, one JSON object per line:
``{"tokens": [...], "prompt_len": int, "meta": {str: str}}``.  Embedded
corpora echo their configuration into ``meta`` so detection can be re-run
from the file alone (the secret key is never written, only its fingerprint).
Errors leave exit status 2 and a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import MASK64, WatermarkKey
from .entropy import EntropyKind, GateConfig
from .errors import ConfigError, InvalidInputError, WatermodError
from .model import ToyModel, ToyModelConfig, unwatermarked_generate
from .multibit import MultiBitConfig, Payload, multibit_generate, multibit_recover
from .stats import (
    auroc,
    make_reference_corpus,
    null_calibration,
    random_key,
    trapezoid_area,
)
from .zerobit import ZeroBitConfig, zerobit_detect, zerobit_generate

KEY_ENV_VAR = "WATERMOD_KEY"

MODE_ZERO_BIT = "zero-bit"
MODE_MULTI_BIT = "multi-bit"
MODE_NONE = "none"

_DEFAULT_DELTA = {MODE_ZERO_BIT: 1.0, MODE_MULTI_BIT: 2.5}


@dataclass(frozen=True)
class SequenceRecord:
    """One token sequence with its prompt boundary and free-form metadata."""

    tokens: np.ndarray
    prompt_len: int
    meta: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "tokens": [int(t) for t in self.tokens],
                "prompt_len": int(self.prompt_len),
                "meta": dict(self.meta),
            }
        )


@dataclass
class RunConfig:
    """Resolved settings for one command (flags over config file over defaults)."""

    mode: str = MODE_ZERO_BIT
    key: int | None = None
    delta: float | None = None
    h_scale: float = 1.2
    entropy: str = "shannon"
    eta: float = 1.0
    k: int = 4
    payload: str | None = None
    bits: int = 16
    max_tokens: int = 200
    tau: float = 4.0
    model_beta: float = 17.0
    model_order: int = 4
    model_vocab: int = 64
    model_seed: int = 1

    def resolved_delta(self) -> float:
        if self.delta is not None:
            return self.delta
        return _DEFAULT_DELTA[self.mode]

    def toy_model(self) -> ToyModel:
        return ToyModel(
            ToyModelConfig(
                vocab_size=self.model_vocab,
                order=self.model_order,
                beta=self.model_beta,
                model_seed=self.model_seed,
            )
        )

    def gate(self) -> GateConfig:
        return GateConfig(h_scale=self.h_scale, entropy=EntropyKind(self.entropy, self.eta))

    def zerobit(self) -> ZeroBitConfig:
        return ZeroBitConfig(delta=self.resolved_delta(), gate=self.gate(), tau=self.tau)

    def multibit(self) -> MultiBitConfig:
        if self.payload is None:
            raise ConfigError("multi-bit embedding requires --payload")
        return MultiBitConfig(
            delta=self.resolved_delta(),
            k=self.k,
            payload=Payload.from_hex(self.payload, self.bits, self.k),
        )

    def require_key(self) -> int:
        if self.key is None:
            raise ConfigError(
                f"a watermark key is required (--key, config file, or ${KEY_ENV_VAR})"
            )
        return self.key


_INT_FIELDS = {"k", "bits", "max_tokens", "model_order", "model_vocab"}
_FLOAT_FIELDS = {"delta", "h_scale", "eta", "tau", "model_beta"}
_STR_FIELDS = {"mode", "entropy", "payload"}


def parse_key(text: str) -> int:
    """Accept 0x-prefixed or bare hex, or decimal; masked to 64 bits."""
    text = text.strip()
    try:
        value = int(text, 0)
    except ValueError:
        try:
            value = int(text, 16)
        except ValueError as exc:
            raise ConfigError(f"cannot parse key {text!r}") from exc
    return value & MASK64


def load_config_file(path: str) -> dict[str, str]:
    """Parse a simple ``key = value`` config file; # starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'name = value', got {raw!r}")
        name, _, value = line.partition("=")
        values[name.strip().replace("-", "_")] = value.strip()
    return values


def resolve_config(args: argparse.Namespace) -> tuple[RunConfig, set[str]]:
    """Build the run configuration and record which fields were set explicitly.

    Precedence: flag > config file > built-in default.  The explicit set
    lets per-record metadata fill in only what the caller left unspecified.
    """
    cfg = RunConfig()
    explicit: set[str] = set()
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    for name, raw in file_values.items():
        if name == "key":
            cfg.key = parse_key(raw)
        elif name == "model_seed":
            cfg.model_seed = parse_key(raw)
        elif name in _INT_FIELDS:
            setattr(cfg, name, int(raw))
        elif name in _FLOAT_FIELDS:
            setattr(cfg, name, float(raw))
        elif name in _STR_FIELDS:
            setattr(cfg, name, raw)
        else:
            raise ConfigError(f"unknown config key {name!r}")
        explicit.add(name)
    env_key = os.environ.get(KEY_ENV_VAR)
    if env_key and cfg.key is None:
        cfg.key = parse_key(env_key)
    for name in (
        *sorted(_INT_FIELDS),
        *sorted(_FLOAT_FIELDS),
        *sorted(_STR_FIELDS),
        "model_seed",
    ):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
            explicit.add(name)
    if getattr(args, "key", None) is not None:
        cfg.key = args.key
    if cfg.mode not in (MODE_ZERO_BIT, MODE_MULTI_BIT):
        raise ConfigError(f"mode must be '{MODE_ZERO_BIT}' or '{MODE_MULTI_BIT}', got {cfg.mode!r}")
    return cfg, explicit


def read_records(path: str) -> list[SequenceRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"{path}: malformed JSONL at line {lineno}: {exc}") from exc
            try:
                tokens = np.asarray(obj["tokens"], dtype=np.int64)
                prompt_len = int(obj["prompt_len"])
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidInputError(f"{path}: bad record at line {lineno}: {exc}") from exc
            meta = {str(k): str(v) for k, v in obj.get("meta", {}).items()}
            records.append(SequenceRecord(tokens=tokens, prompt_len=prompt_len, meta=meta))
    return records


def write_records(path: str, records: list[SequenceRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def write_jsonl(path: str, objects: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objects:
            fh.write(json.dumps(obj) + "\n")


def _meta_config(cfg: RunConfig, mode: str) -> dict[str, str]:
    meta = {
        "mode": mode,
        "h_scale": repr(cfg.h_scale),
        "entropy": cfg.entropy,
        "eta": repr(cfg.eta),
        "model_beta": repr(cfg.model_beta),
        "model_order": str(cfg.model_order),
        "model_vocab": str(cfg.model_vocab),
        "model_seed": str(cfg.model_seed),
    }
    if mode == MODE_ZERO_BIT:
        meta["delta"] = repr(cfg.resolved_delta())
    elif mode == MODE_MULTI_BIT:
        meta["delta"] = repr(cfg.resolved_delta())
        meta["k"] = str(cfg.k)
        meta["bits"] = str(cfg.bits)
    if cfg.key is not None and mode != MODE_NONE:
        meta["key_fingerprint"] = WatermarkKey(cfg.key).fingerprint()
    return meta


def _config_from_meta(cfg: RunConfig, meta: dict[str, str], explicit: set[str]) -> RunConfig:
    """Per-record config: echoed metadata fills in what the caller left unset."""
    merged = RunConfig(**{**cfg.__dict__})
    for name in ("h_scale", "eta", "model_beta"):
        if name in meta and name not in explicit:
            setattr(merged, name, float(meta[name]))
    for name in ("model_order", "model_vocab", "k", "bits"):
        if name in meta and name not in explicit:
            setattr(merged, name, int(meta[name]))
    if "model_seed" in meta and "model_seed" not in explicit:
        merged.model_seed = int(meta["model_seed"])
    if "entropy" in meta and "entropy" not in explicit:
        merged.entropy = meta["entropy"]
    return merged


def _random_prompts(cfg: RunConfig, count: int, prompt_len: int, seed: int):
    rng = np.random.default_rng(seed)
    # token 0 is eos; prompts draw from the rest
    return rng, [rng.integers(1, cfg.model_vocab, size=prompt_len) for _ in range(count)]


def cmd_generate(args) -> dict:
    cfg = resolve_config(args)
    _, prompts = _random_prompts(cfg, args.count, args.prompt_len, args.seed)
    model = cfg.toy_model()
    meta = _meta_config(cfg, MODE_NONE)
    records = [
        SequenceRecord(
            tokens=unwatermarked_generate(model, prompt, cfg.max_tokens),
            prompt_len=args.prompt_len,
            meta=meta,
        )
        for prompt in prompts
    ]
    write_records(args.out, records)
    return {"command": "generate", "records": len(records), "out": args.out}


def cmd_embed(args) -> dict:
    cfg = resolve_config(args)
    key = cfg.require_key()
    _, prompts = _random_prompts(cfg, args.count, args.prompt_len, args.seed)
    model = cfg.toy_model()
    meta = _meta_config(cfg, cfg.mode)
    records = []
    for prompt in prompts:
        if cfg.mode == MODE_ZERO_BIT:
            tokens = zerobit_generate(model, prompt, key, cfg.zerobit(), cfg.max_tokens)
        else:
            tokens = multibit_generate(model, prompt, key, cfg.multibit(), cfg.max_tokens)
        records.append(SequenceRecord(tokens=tokens, prompt_len=args.prompt_len, meta=meta))
    write_records(args.out, records)
    return {
        "command": "embed",
        "mode": cfg.mode,
        "records": len(records),
        "key_fingerprint": WatermarkKey(key).fingerprint(),
        "out": args.out,
    }


def _check_record(rec: SequenceRecord, index: int) -> None:
    if not 0 <= rec.prompt_len < rec.tokens.size:
        raise InvalidInputError(
            f"record {index}: prompt_len {rec.prompt_len} invalid for {rec.tokens.size} tokens"
        )


def cmd_detect(args) -> dict:
    cfg = resolve_config(args)
    key = cfg.require_key()
    records = read_records(args.infile)
    reports = []
    zs = []
    for i, rec in enumerate(records):
        _check_record(rec, i)
        if rec.meta.get("mode") == MODE_MULTI_BIT:
            raise ConfigError(f"record {i}: zero-bit detect on multi-bit data; use recover")
        rcfg = _config_from_meta(cfg, rec.meta)
        report = zerobit_detect(rcfg.toy_model(), rec.tokens, rec.prompt_len, key, rcfg.zerobit())
        out = report.to_dict()
        out["meta"] = dict(rec.meta)
        reports.append(out)
        zs.append(report.z)
    if args.out:
        write_jsonl(args.out, reports)
    zs = np.asarray(zs)
    return {
        "command": "detect",
        "records": len(records),
        "mean_z": float(zs.mean()),
        "std_z": float(zs.std(ddof=1)) if zs.size > 1 else 0.0,
        "watermarked_fraction": float((zs > cfg.tau).mean()),
        "tau": cfg.tau,
        "out": args.out,
    }


def cmd_recover(args) -> dict:
    cfg = resolve_config(args)
    key = cfg.require_key()
    records = read_records(args.infile)
    expected = (
        Payload.from_hex(cfg.payload, cfg.bits, cfg.k) if cfg.payload is not None else None
    )
    reports = []
    zs = []
    exact = 0
    for i, rec in enumerate(records):
        _check_record(rec, i)
        if rec.meta.get("mode") == MODE_ZERO_BIT:
            raise ConfigError(f"record {i}: multi-bit recover on zero-bit data; use detect")
        rcfg = _config_from_meta(cfg, rec.meta)
        rec_expected = expected
        if rec_expected is not None and (
            rec_expected.base != rcfg.k or rec_expected.bit_length != rcfg.bits
        ):
            rec_expected = Payload.from_hex(cfg.payload, rcfg.bits, rcfg.k)
        report = multibit_recover(
            rcfg.toy_model(), rec.tokens, rec.prompt_len, key, rcfg.k, rcfg.bits, rec_expected
        )
        out = report.to_dict()
        out["tau"] = cfg.tau
        out["watermarked"] = report.z > cfg.tau
        out["meta"] = dict(rec.meta)
        reports.append(out)
        zs.append(report.z)
        if rec_expected is not None and report.bits == rec_expected.bits:
            exact += 1
    if args.out:
        write_jsonl(args.out, reports)
    zs = np.asarray(zs)
    summary = {
        "command": "recover",
        "records": len(records),
        "mean_z": float(zs.mean()),
        "self_referential": expected is None,
        "out": args.out,
    }
    if expected is not None:
        summary["exact_matches"] = exact
    return summary


def cmd_bench(args) -> dict:
    cfg = resolve_config(args)
    key = cfg.require_key()
    model = cfg.toy_model()
    rng = np.random.default_rng(args.seed)
    zb = cfg.zerobit()
    meta = _meta_config(cfg, cfg.mode)
    pos_records, pos_z = [], []
    for _ in range(args.count):
        prompt = rng.integers(1, cfg.model_vocab, size=args.prompt_len)
        tokens = zerobit_generate(model, prompt, key, zb, cfg.max_tokens)
        pos_records.append(SequenceRecord(tokens, args.prompt_len, meta))
        pos_z.append(zerobit_detect(model, tokens, args.prompt_len, key, zb).z)
    neg_records, neg_z = [], []
    null_meta = _meta_config(cfg, MODE_NONE)
    for tokens, plen in make_reference_corpus(model, args.count, cfg.max_tokens, rng, args.prompt_len):
        neg_records.append(SequenceRecord(tokens, plen, null_meta))
        neg_z.append(zerobit_detect(model, tokens, plen, random_key(rng), zb).z)
    write_records(f"{args.out}.watermarked.jsonl", pos_records)
    write_records(f"{args.out}.null.jsonl", neg_records)
    roc = auroc(pos_z, neg_z)
    if args.roc_csv:
        with open(args.roc_csv, "w", encoding="utf-8") as fh:
            fh.write("fpr,tpr\n")
            for fpr, tpr in roc.curve:
                fh.write(f"{fpr},{tpr}\n")
    return {
        "command": "bench",
        "auroc": roc.auroc,
        "trapezoid_area": trapezoid_area(roc.curve),
        "n_watermarked": len(pos_z),
        "n_null": len(neg_z),
        "mean_z_watermarked": float(np.mean(pos_z)),
        "mean_z_null": float(np.mean(neg_z)),
        "out": args.out,
    }


def cmd_calibrate(args) -> dict:
    cfg = resolve_config(args)
    summary = null_calibration(
        cfg.toy_model(),
        args.count,
        cfg.max_tokens,
        np.random.default_rng(args.seed),
        cfg.zerobit(),
        args.prompt_len,
    )
    return {
        "command": "calibrate",
        "records": summary.count,
        "mean_z": summary.mean_z,
        "std_z": summary.std_z,
        "max_abs_z": summary.max_abs_z,
    }


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file; flags override it")
    parser.add_argument("--mode", choices=[MODE_ZERO_BIT, MODE_MULTI_BIT], default=None)
    parser.add_argument("--key", type=parse_key, default=None, help="64-bit key, hex or decimal")
    parser.add_argument("--delta", type=float, default=None, help="logit bonus for the target class")
    parser.add_argument("--h-scale", dest="h_scale", type=float, default=None)
    parser.add_argument("--entropy", choices=["shannon", "spike"], default=None)
    parser.add_argument("--eta", type=float, default=None, help="spike entropy scale")
    parser.add_argument("--k", type=int, default=None, help="residue base for multi-bit mode")
    parser.add_argument("--payload", default=None, help="payload as hex, e.g. BEEF")
    parser.add_argument("--bits", type=int, default=None, help="payload width in bits")
    parser.add_argument("--max-tokens", dest="max_tokens", type=int, default=None)
    parser.add_argument("--tau", type=float, default=None, help="detection threshold on z")
    parser.add_argument("--model-beta", dest="model_beta", type=float, default=None)
    parser.add_argument("--model-order", dest="model_order", type=int, default=None)
    parser.add_argument("--model-vocab", dest="model_vocab", type=int, default=None)
    parser.add_argument("--model-seed", dest="model_seed", type=parse_key, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="watermod",
        description="Embed and detect rank-modular watermarks in token streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="unwatermarked toy-model corpus")
    _add_common(p)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--prompt-len", dest="prompt_len", type=int, default=8)
    p.add_argument("--seed", type=int, default=0, help="corpus RNG seed (prompts)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("embed", help="watermarked corpus (zero-bit or multi-bit)")
    _add_common(p)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--prompt-len", dest="prompt_len", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("detect", help="zero-bit detection over a JSONL corpus")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default=None, help="per-record report JSONL")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("recover", help="multi-bit payload recovery over a JSONL corpus")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", default=None, help="per-record report JSONL")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("bench", help="paired watermarked/null corpora plus AUROC")
    _add_common(p)
    p.add_argument("--count", type=int, default=100, help="sequences per corpus")
    p.add_argument("--prompt-len", dest="prompt_len", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--roc-csv", dest="roc_csv", default=None, help="write ROC points as CSV")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("calibrate", help="null z-score moments on reference text")
    _add_common(p)
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--prompt-len", dest="prompt_len", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_calibrate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        summary = args.func(args)
    except WatermodError as exc:
        json.dump({"error": {"kind": type(exc).__name__, "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    json.dump(summary, sys.stdout)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
