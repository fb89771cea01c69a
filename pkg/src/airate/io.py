"""File formats: binary symbol batches, CSV captures, model text files, run
configurations and result tables.

Batch file layout (little-endian, version 1)::

    magic    4s   b"AIRB"
    version  u16
    M        u16  points of the 2D constellation
    N        u64  record count
    d        u8   always 4
    has_seed u8
    seed     i64
    name_len u16, text_len u32
    name     constellation name, UTF-8
    text     JSON object with "scenario" and "batch_id"
    N records of (tx u16, y f64 x 4), 34 bytes each, unpadded
"""
from __future__ import annotations

import configparser
import csv
import io as _io
import json
import math
import os
import struct
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .batch import SymbolBatch
from .constellation import Constellation, build_qam, make_view
from .models import ALL_KINDS, KINDS, AuxChannelModel, ModelKind, get_kind
from .sim import ChannelScenario

MAGIC = b"AIRB"
VERSION = 1
_HEADER = struct.Struct("<4sHHQBBqHI")
RECORD = np.dtype([("tx", "<u2"), ("y", "<f8", (4,))])

MODEL_MAGIC = "airate-model"
MODEL_VERSION = 1
RESULT_COLUMNS = ("scenario", "model", "estimator", "mean_mode", "n_train",
                  "n_eval", "rate", "stderr", "seed")


class FormatError(ValueError):
    """A file does not follow its declared format."""


def _atomic_write(path, data: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- batches ----------------------------------------------------------------

def batch_to_bytes(batch: SymbolBatch, constellation: str | Constellation = "16QAM",
                   M: int | None = None) -> bytes:
    if isinstance(constellation, Constellation):
        name, M = constellation.name, constellation.order
    else:
        name = constellation
        M = M or int(name.rstrip("QAM") or 16)
    if M * M > 65536:
        raise ValueError("4D symbol indices must fit in 16 bits")
    batch.check_indices(M * M)
    name_b = name.encode()
    text_b = json.dumps({"scenario": batch.scenario, "batch_id": batch.batch_id},
                        sort_keys=True).encode()
    head = _HEADER.pack(MAGIC, VERSION, M, batch.N, 4, batch.seed is not None,
                        batch.seed or 0, len(name_b), len(text_b))
    rec = np.empty(batch.N, dtype=RECORD)
    rec["tx"] = batch.tx
    rec["y"] = batch.rx
    return head + name_b + text_b + rec.tobytes()


def write_batch(batch: SymbolBatch, path, constellation: str | Constellation = "16QAM"):
    """Write a batch atomically; the target path is replaced in one step."""
    _atomic_write(path, batch_to_bytes(batch, constellation))


def batch_from_bytes(data: bytes, source: str = "<bytes>") -> SymbolBatch:
    if len(data) < _HEADER.size:
        raise FormatError(f"{source}: truncated header ({len(data)} bytes)")
    magic, version, M, N, d, has_seed, seed, name_len, text_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{source}: unsupported version {version}, expected {VERSION}")
    if d != 4:
        raise FormatError(f"{source}: record dimension {d}, expected 4")
    offset = _HEADER.size + name_len + text_len
    if len(data) < offset:
        raise FormatError(f"{source}: truncated header text")
    name = data[_HEADER.size:_HEADER.size + name_len].decode()
    try:
        text = json.loads(data[_HEADER.size + name_len:offset].decode())
    except ValueError as exc:
        raise FormatError(f"{source}: malformed header text: {exc}") from None
    body = len(data) - offset
    full, partial = divmod(body, RECORD.itemsize)
    if partial and full < N:
        raise FormatError(
            f"{source}: truncated record {full} at byte offset "
            f"{offset + full * RECORD.itemsize} ({partial} of {RECORD.itemsize} bytes)"
        )
    if full < N:
        raise FormatError(f"{source}: header declares {N} records but the file holds {full}")
    if body != N * RECORD.itemsize:
        raise FormatError(
            f"{source}: {body - N * RECORD.itemsize} bytes of trailing data after "
            f"record {N} at byte offset {offset + N * RECORD.itemsize}"
        )
    rec = np.frombuffer(data, dtype=RECORD, count=N, offset=offset)
    tx = rec["tx"].astype(np.int64)
    bad = np.flatnonzero(tx >= M * M)
    if bad.size:
        raise FormatError(f"{source}: record {bad[0]} has tx index {tx[bad[0]]} >= {M * M}")
    return SymbolBatch(
        tx=tx, rx=rec["y"].copy(), scenario=text.get("scenario", ""),
        seed=seed if has_seed else None, batch_id=text.get("batch_id"),
        meta={"constellation": name, "M": M},
    )


def read_batch(path) -> SymbolBatch:
    path = Path(path)
    return batch_from_bytes(path.read_bytes(), str(path))


def read_batch_csv(path, constellation: Constellation | None = None) -> SymbolBatch:
    """Read lab captures exported as CSV with columns ``tx_index,y1,y2,y3,y4``."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != ["tx_index", "y1", "y2", "y3", "y4"]:
        raise FormatError(f"{path}: expected header tx_index,y1,y2,y3,y4")
    tx, rx = [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 5:
            raise FormatError(f"{path}:{line}: expected 5 fields, got {len(row)}")
        try:
            tx.append(int(row[0]))
            rx.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise FormatError(f"{path}:{line}: {exc}") from None
    batch = SymbolBatch(tx=np.array(tx), rx=np.array(rx), batch_id=path.name)
    if constellation is not None:
        batch.check_indices(constellation.order ** 2)
    return batch


def write_batch_csv(batch: SymbolBatch, path):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tx_index", "y1", "y2", "y3", "y4"])
    for t, y in zip(batch.tx.tolist(), batch.rx.tolist()):
        w.writerow([t] + [repr(float(v)) for v in y])
    _atomic_write(path, buf.getvalue().encode())


# -- models -----------------------------------------------------------------

def model_to_text(model: AuxChannelModel) -> str:
    k, v = model.kind, model.view
    lines = [
        f"{MODEL_MAGIC} {MODEL_VERSION}",
        f"kind {k.name}",
        f"d {k.d}",
        f"mean_mode {k.mean_mode}",
        f"cov_mode {k.cov_mode}",
        f"constellation {v.constellation.order}",
        f"points {v.point_count}",
        f"slots {v.slots}",
        f"eps {model.eps!r}",
        f"train_id {json.dumps(model.train_id)}",
    ]
    rows, cols = np.triu_indices(k.d)
    for s in range(v.slots):
        if model.counts is not None:
            lines.append(f"counts {s} " + " ".join(str(int(n)) for n in model.counts[s]))
        if not k.correlated:
            lines.append(f"variance {s} {float(model.variance[s])!r}")
        for j in range(v.point_count):
            lines.append(f"mean {s} {j} " + " ".join(repr(float(x)) for x in model.means[s, j]))
        if k.correlated:
            for j in range(v.point_count):
                vals = model.covs[s, j][rows, cols]
                lines.append(f"cov {s} {j} " + " ".join(repr(float(x)) for x in vals))
    return "\n".join(lines) + "\n"


def model_from_text(text: str, source: str = "<text>") -> AuxChannelModel:
    lines = text.splitlines()
    if not lines or lines[0].split() != [MODEL_MAGIC, str(MODEL_VERSION)]:
        raise FormatError(f"{source}: not an {MODEL_MAGIC} v{MODEL_VERSION} file")
    head, body = {}, []
    for line in lines[1:]:
        if not line.strip():
            continue
        key, _, rest = line.partition(" ")
        if key in ("counts", "variance", "mean", "cov"):
            body.append((key, rest.split()))
        else:
            head[key] = rest
    try:
        kind = ModelKind(head["kind"], int(head["d"]), head["mean_mode"], head["cov_mode"])
        c = build_qam(int(head["constellation"]))
        view = make_view(c, kind.d)
        eps = float(head["eps"])
        train_id = json.loads(head["train_id"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{source}: bad header: {exc}") from None
    S, M, d = view.slots, view.point_count, kind.d
    if int(head.get("points", M)) != M or int(head.get("slots", S)) != S:
        raise FormatError(f"{source}: point/slot counts do not match kind {kind.name}")
    means = np.full((S, M, d), np.nan)
    covs = np.zeros((S, M, d, d))
    variance = np.full(S, np.nan) if not kind.correlated else None
    counts = None
    rows, cols = np.triu_indices(d)
    for key, f in body:
        if key == "counts":
            counts = np.zeros((S, M), dtype=np.int64) if counts is None else counts
            counts[int(f[0])] = [int(x) for x in f[1:]]
        elif key == "variance":
            variance[int(f[0])] = float(f[1])
        elif key == "mean":
            means[int(f[0]), int(f[1])] = [float(x) for x in f[2:]]
        else:
            s, j = int(f[0]), int(f[1])
            vals = [float(x) for x in f[2:]]
            covs[s, j][rows, cols] = vals
            covs[s, j][cols, rows] = vals
    if np.isnan(means).any():
        raise FormatError(f"{source}: missing mean entries")
    if variance is not None:
        if np.isnan(variance).any():
            raise FormatError(f"{source}: missing variance entries")
        covs = np.broadcast_to(variance[:, None, None, None] * np.eye(d), (S, M, d, d))
    return AuxChannelModel.from_parameters(kind, view, means, covs, eps, variance=variance,
                                           counts=counts, train_id=train_id)


def write_model(model: AuxChannelModel, path):
    _atomic_write(path, model_to_text(model).encode())


def read_model(path) -> AuxChannelModel:
    path = Path(path)
    return model_from_text(path.read_text(), str(path))


# -- run configuration --------------------------------------------------------

_RUN_KEYS = {"constellation", "models", "estimators", "split_ratio", "seed",
             "batches", "n", "output", "inputs", "mean_mode"}
_SCENARIO_KEYS = {"kind", "snr_db", "n", "seed", "rho", "spread", "phase_std", "gamma"}


@dataclass
class RunConfig:
    """Effective settings of one run.

    Defaults: 16QAM, all five Table-1 model kinds, MI and GMI, 4 batches of
    200000 samples, 50/50 split, seed 0.
    """

    constellation: int = 16
    scenarios: list = field(default_factory=list)
    inputs: list = field(default_factory=list)
    models: list = field(default_factory=lambda: list(KINDS))
    estimators: list = field(default_factory=lambda: ["MI", "GMI"])
    split_ratio: float = 0.5
    seed: int = 0
    batches: int = 4
    n: int = 200_000
    mean_mode: str | None = None
    output: str | None = None

    def validate(self):
        build_qam(self.constellation)
        for name in self.models:
            if name not in ALL_KINDS:
                raise ValueError(f"unknown model kind {name!r}; expected one of {sorted(ALL_KINDS)}")
        for est in self.estimators:
            if est not in ("MI", "GMI"):
                raise ValueError(f"unknown estimator {est!r}; expected MI or GMI")
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError(f"split_ratio must be in (0, 1), got {self.split_ratio}")
        if self.batches < 1 or self.n < 2:
            raise ValueError("batches must be >= 1 and n >= 2")
        if self.mean_mode not in (None, "static", "adaptive"):
            raise ValueError(f"mean_mode must be static or adaptive, got {self.mean_mode!r}")
        for p in self.inputs:
            if not Path(p).is_file():
                raise FileNotFoundError(f"input batch file {p} does not exist")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenarios"] = [asdict(s) for s in self.scenarios]
        return d


def parse_models(text: str) -> list:
    names = [t.strip() for t in text.split(",") if t.strip()]
    out = []
    for name in names:
        if name.lower() == "all":
            out += list(KINDS)
        else:
            get_kind(name)
            out.append(name)
    return list(dict.fromkeys(out))


def parse_estimators(text: str) -> list:
    return list(dict.fromkeys(t.strip().upper() for t in text.split(",") if t.strip()))


def load_config(path) -> RunConfig:
    """Load an INI-style run configuration.

    A ``[run]`` section holds run settings; each ``[scenario NAME]`` section
    defines one synthetic channel. Unknown sections or keys are errors, and
    referenced input files must exist.
    """
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise FormatError(f"{path}: {exc}") from None
    cfg = RunConfig()
    sections = sorted(parser.sections(), key=lambda sec: sec != "run")
    for section in sections:
        items = dict(parser.items(section))
        if section == "run":
            unknown = set(items) - _RUN_KEYS
            if unknown:
                raise ValueError(f"{path}: unknown key(s) in [run]: {sorted(unknown)}")
            conv = {"constellation": int, "split_ratio": float, "seed": int,
                    "batches": int, "n": int}
            for key, val in items.items():
                if key in conv:
                    setattr(cfg, key, conv[key](val))
                elif key == "models":
                    cfg.models = parse_models(val)
                elif key == "estimators":
                    cfg.estimators = parse_estimators(val)
                elif key == "inputs":
                    base = path.parent
                    cfg.inputs = [str(base / p.strip()) for p in val.split(",") if p.strip()]
                else:
                    setattr(cfg, key, val)
        elif section.startswith("scenario"):
            unknown = set(items) - _SCENARIO_KEYS
            if unknown:
                raise ValueError(f"{path}: unknown key(s) in [{section}]: {sorted(unknown)}")
            kw = {k: (v if k == "kind" else int(v) if k in ("n", "seed") else float(v))
                  for k, v in items.items()}
            kw.setdefault("n", cfg.n)
            kw.setdefault("seed", cfg.seed)
            name = section[len("scenario"):].strip()
            cfg.scenarios.append(ChannelScenario(name=name, **kw))
        else:
            raise ValueError(f"{path}: unknown section [{section}]")
    return cfg.validate()


# -- result tables ----------------------------------------------------------

def results_to_csv(rows, config: dict | None = None) -> str:
    """Result table as CSV text; the effective config is embedded as a comment."""
    buf = _io.StringIO()
    if config is not None:
        buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.DictWriter(buf, fieldnames=RESULT_COLUMNS, lineterminator="\n",
                       extrasaction="ignore")
    w.writeheader()
    for row in rows:
        out = dict(row)
        for key in ("rate", "stderr"):
            val = out.get(key)
            out[key] = "nan" if val is None or (isinstance(val, float) and math.isnan(val)) else repr(float(val))
        w.writerow(out)
    return buf.getvalue()


def write_results_csv(rows, path, config: dict | None = None):
    _atomic_write(path, results_to_csv(rows, config).encode())


def read_results_csv(path):
    """Return ``(rows, config)``; numeric columns are converted."""
    text = Path(path).read_text()
    config = None
    lines = []
    for line in text.splitlines():
        if line.startswith("# config: "):
            config = json.loads(line[len("# config: "):])
        elif not line.startswith("#"):
            lines.append(line)
    rows = []
    for row in csv.DictReader(lines):
        for key in ("n_train", "n_eval"):
            row[key] = int(row[key])
        for key in ("rate", "stderr"):
            row[key] = float(row[key])
        row["seed"] = int(row["seed"]) if row["seed"] not in ("", "None") else None
        rows.append(row)
    return rows, config
