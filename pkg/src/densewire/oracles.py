"""Score oracles: synthetic landscapes, predictor adapter, external trainer.

Every oracle exposes score(meta) -> float in [0, 1] and a `concurrency`
string ("concurrent" or "serial"). Synthetic oracles are pure functions of
the canonical form, so isomorphic graphs always score identically.
"""

from __future__ import annotations

import hashlib
import json
import math
import select
import shlex
import subprocess

from . import graphs, isomorphism, predictor
from .errors import ExternalProtocolError, OracleFailure
from .graphs import CellGraph, MetaGraph

DEFAULT_TIMEOUT = 600.0


def _keyed_unit(key: bytes, salt: int, tag: bytes) -> float:
    """Map (key, salt, tag) to a uniform-looking value in [0, 1)."""
    digest = hashlib.blake2b(key + tag + str(salt).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2.0**64


class SyntheticLandscapeA:
    """Pseudo-random landscape keyed purely by the canonical form.

    Carries no structural signal at all: two non-isomorphic graphs get
    independent scores, two isomorphic graphs get the same score.
    """

    concurrency = "concurrent"

    def __init__(self, salt: int = 0):
        self.salt = salt

    def score(self, meta: MetaGraph) -> float:
        return _keyed_unit(isomorphism.canonical_key(meta), self.salt, b"|A|")


def _longest_path_hops(cell: CellGraph, active: tuple[int, ...]) -> int:
    """Longest edge count from the input vertex through active vertices."""
    keep = set(active) | {0}
    depth = {0: 0}
    for u, w in sorted(cell.edges):
        if u in depth and w in keep:
            depth[w] = max(depth.get(w, 0), depth[u] + 1)
    return max(depth.values())


def structural_score(meta: MetaGraph) -> float:
    """Isomorphism-invariant structural term in [0, 1].

    Per cell: mean of active-vertex fraction, longest input-to-leaf path
    fraction, and operator-mix entropy over the active vertices.
    """
    total = 0.0
    for cell in meta.cells:
        active = graphs.active_vertices(cell)
        n_slots = cell.num_vertices - 2
        active_frac = len(active) / n_slots
        path_frac = _longest_path_hops(cell, active) / n_slots
        counts: dict[str, int] = {}
        for v in active:
            op = cell.ops[v - 1].value
            counts[op] = counts.get(op, 0) + 1
        n = len(active)
        entropy = -sum((c / n) * math.log(c / n) for c in counts.values())
        entropy_frac = entropy / math.log(4.0)
        total += (active_frac + path_frac + entropy_frac) / 3.0
    return total / len(meta.cells)


class SyntheticLandscapeB:
    """Rugged landscape: half structural signal, half canonical-keyed noise."""

    concurrency = "concurrent"

    def __init__(self, salt: int = 0, noise_weight: float = 0.5):
        if not 0.0 <= noise_weight <= 1.0:
            raise ValueError("noise_weight must lie in [0, 1]")
        self.salt = salt
        self.noise_weight = noise_weight

    def score(self, meta: MetaGraph) -> float:
        noise = _keyed_unit(isomorphism.canonical_key(meta), self.salt, b"|B|")
        mixed = (1.0 - self.noise_weight) * structural_score(meta) + self.noise_weight * noise
        return min(1.0, max(0.0, mixed))


class PredictorOracle:
    """Scores graphs with a trained surrogate checkpoint."""

    concurrency = "concurrent"

    def __init__(self, model: predictor.PredictorModel):
        self.model = model

    @classmethod
    def from_checkpoint(cls, path) -> "PredictorOracle":
        return cls(predictor.PredictorModel.load(path))

    def score(self, meta: MetaGraph) -> float:
        return predictor.predict(self.model, meta)


class ExternalOracle:
    """Wire-protocol client for a trainer subprocess.

    Requests are newline-delimited JSON on the child's stdin; one reply per
    request arrives in order on its stdout. The child is started lazily and
    must exit cleanly when stdin closes.
    """

    concurrency = "serial"

    def __init__(self, command: str, epochs: int = 1, data_fraction: float = 0.02,
                 timeout: float = DEFAULT_TIMEOUT):
        if epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 < data_fraction <= 1.0:
            raise ValueError("data_fraction must lie in (0, 1]")
        self.command = command
        self.epochs = epochs
        self.data_fraction = data_fraction
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._buffer = bytearray()
        self._next_id = 0

    def _ensure_started(self):
        if self._proc is None:
            self._proc = subprocess.Popen(
                shlex.split(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        return self._proc

    def _read_line(self, deadline_budget: float) -> bytes:
        proc = self._proc
        assert proc is not None and proc.stdout is not None
        remaining = deadline_budget
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line = bytes(self._buffer[:newline])
                del self._buffer[: newline + 1]
                return line
            if remaining <= 0:
                self._kill()
                raise OracleFailure(f"external oracle timed out after {deadline_budget:.0f}s")
            step = min(remaining, 1.0)
            ready, _, _ = select.select([proc.stdout], [], [], step)
            remaining -= step
            if not ready:
                continue
            chunk = proc.stdout.read1(65536)
            if not chunk:
                code = proc.poll()
                self._proc = None
                raise ExternalProtocolError(
                    f"external oracle closed its output (exit code {code})"
                )
            self._buffer.extend(chunk)

    def score(self, meta: MetaGraph) -> float:
        proc = self._ensure_started()
        request_id = self._next_id
        self._next_id += 1
        request = {
            "id": request_id,
            "meta": graphs.to_document(meta),
            "budget": {"epochs": self.epochs, "data_fraction": self.data_fraction},
        }
        payload = json.dumps(request, separators=(",", ":")).encode() + b"\n"
        try:
            assert proc.stdin is not None
            proc.stdin.write(payload)
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self._proc = None
            raise ExternalProtocolError(f"external oracle pipe closed: {exc}") from exc
        line = self._read_line(self.timeout)
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ExternalProtocolError(f"reply is not JSON: {line[:200]!r}") from exc
        if not isinstance(reply, dict):
            raise ExternalProtocolError("reply is not a JSON object")
        if reply.get("id") != request_id:
            raise ExternalProtocolError(
                f"reply id {reply.get('id')!r} does not match request id {request_id}"
            )
        if "error" in reply:
            raise OracleFailure(f"external oracle error: {reply['error']}")
        if "score" not in reply:
            raise ExternalProtocolError("reply has neither score nor error")
        score = reply["score"]
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise ExternalProtocolError(f"score is not numeric: {score!r}")
        score = float(score)
        if not 0.0 <= score <= 1.0 or math.isnan(score):
            raise ExternalProtocolError(f"score {score} outside [0, 1]")
        return score

    def _kill(self):
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None
            self._buffer.clear()

    def close(self):
        proc = self._proc
        if proc is None:
            return
        try:
            if proc.stdin is not None:
                proc.stdin.close()
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
        finally:
            self._proc = None
            self._buffer.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def evaluate(oracle, meta: MetaGraph) -> float:
    """Score one graph and enforce the [0, 1] contract."""
    value = float(oracle.score(meta))
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise OracleFailure(f"oracle returned {value}, outside [0, 1]")
    return value


def parse_oracle(text: str, *, epochs: int = 1, data_fraction: float = 0.02,
                 timeout: float = DEFAULT_TIMEOUT):
    """Build an oracle from a CLI spec string.

    Accepted forms: synthetic-a[:salt], synthetic-b[:salt],
    predictor:<checkpoint.npz>, external:<command line>.
    """
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind in ("synthetic-a", "synthetic-b"):
        salt = int(rest) if rest else 0
        cls = SyntheticLandscapeA if kind == "synthetic-a" else SyntheticLandscapeB
        return cls(salt=salt)
    if kind == "predictor":
        if not rest:
            raise ValueError("predictor oracle needs a checkpoint path")
        return PredictorOracle.from_checkpoint(rest)
    if kind == "external":
        if not rest.strip():
            raise ValueError("external oracle needs a command line")
        return ExternalOracle(rest.strip(), epochs=epochs,
                              data_fraction=data_fraction, timeout=timeout)
    raise ValueError(f"unknown oracle spec {text!r}")
