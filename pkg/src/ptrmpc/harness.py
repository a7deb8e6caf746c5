"""Simulated computational parties: transport, round scheduling, dealer, stats.

All n parties advance in lockstep.  Every interactive step is an exchange of
framed messages between ordered party pairs, carried either in-process or over
loopback TCP; both carriers use the same framing and byte accounting.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import socket
import struct
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence, Union

from .fieldcore import DEFAULT_KAPPA, Field, FieldParams
from .shamir import SharedValue, check_threshold, eval_poly, lagrange_at_zero

log = logging.getLogger(__name__)

Value = Union[SharedValue, int]

# round, op id, sender, receiver, element count
_HEADER = struct.Struct(">IIHHI")
_LEN = struct.Struct(">I")
_FRAME_OVERHEAD = _LEN.size + _HEADER.size


class TransportError(RuntimeError):
    pass


class HarnessError(RuntimeError):
    pass


@dataclass
class PartyConfig:
    n: int = 3
    t: int = 1
    seed: int = 0
    transport: str = "inproc"
    kappa: int = DEFAULT_KAPPA
    port_base: int = 0

    def __post_init__(self) -> None:
        check_threshold(self.n, self.t)
        if self.transport not in ("inproc", "tcp"):
            raise ValueError(f"unknown transport {self.transport!r}")


@dataclass
class RoundStats:
    interactive_ops: int = 0
    rounds: int = 0
    bytes_per_party: list[int] = field(default_factory=list)
    wall_ms: float = 0.0
    dealer_values: int = 0
    diagnostics: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def snapshot(self) -> dict:
        return {"interactive_ops": self.interactive_ops, "rounds": self.rounds,
                "bytes": sum(self.bytes_per_party)}


def frame_size(count: int, width: int) -> int:
    return _LEN.size + _HEADER.size + count * width


def encode_frame(rnd: int, op_id: int, sender: int, receiver: int,
                 payload: Sequence[int], width: int) -> bytes:
    body = _HEADER.pack(rnd, op_id, sender, receiver, len(payload)) + b"".join(
        v.to_bytes(width, "big") for v in payload)
    return _LEN.pack(len(body)) + body


def decode_frame(data: bytes, width: int) -> tuple[tuple[int, int, int, int], list[int]]:
    (length,) = _LEN.unpack_from(data, 0)
    if length != len(data) - _LEN.size:
        raise TransportError("frame length mismatch")
    rnd, op_id, s, r, count = _HEADER.unpack_from(data, _LEN.size)
    off = _LEN.size + _HEADER.size
    vals = [int.from_bytes(data[off + k * width: off + (k + 1) * width], "big")
            for k in range(count)]
    return (rnd, op_id, s, r), vals


class InProcTransport:
    name = "inproc"

    def __init__(self, n: int):
        self.n = n

    def deliver(self, frames: dict[tuple[int, int], bytes], width: int) -> dict[tuple[int, int], list[int]]:
        return {k: decode_frame(v, width)[1] for k, v in frames.items()}

    def close(self) -> None:
        pass


class TcpTransport:
    """Full mesh of loopback TCP connections, one per unordered party pair."""

    name = "tcp"
    _CHUNK = 1 << 15

    def __init__(self, n: int, port_base: int = 0):
        self.n = n
        self.listeners = []
        for i in range(n):
            s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            s.bind(("127.0.0.1", port_base + i if port_base else 0))
            s.listen(n)
            self.listeners.append(s)
        self.conn: dict[tuple[int, int], socket.socket] = {}
        for i in range(n):
            for j in range(i + 1, n):
                c = socket.create_connection(self.listeners[j].getsockname())
                a, _ = self.listeners[j].accept()
                for s in (a, c):
                    s.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                self.conn[(i, j)] = c
                self.conn[(j, i)] = a

    def _recv_exact(self, s: socket.socket, size: int) -> bytes:
        buf = bytearray()
        while len(buf) < size:
            part = s.recv(size - len(buf))
            if not part:
                raise TransportError("connection closed")
            buf.extend(part)
        return bytes(buf)

    def deliver(self, frames: dict[tuple[int, int], bytes], width: int) -> dict[tuple[int, int], list[int]]:
        out = {}
        for (i, j), data in frames.items():
            src, dst = self.conn[(i, j)], self.conn[(j, i)]
            got = bytearray()
            for off in range(0, len(data), self._CHUNK):
                chunk = data[off: off + self._CHUNK]
                src.sendall(chunk)
                got.extend(self._recv_exact(dst, len(chunk)))
            (_, _, s, r), vals = decode_frame(bytes(got), width)
            if (s, r) != (i, j):
                raise TransportError(f"misrouted frame {s}->{r}")
            out[(i, j)] = vals
        return out

    def close(self) -> None:
        for s in list(self.conn.values()) + self.listeners:
            try:
                s.close()
            except OSError:
                pass
        self.conn.clear()
        self.listeners.clear()


class Runtime:
    """Joint state of the n simulated parties for one program run."""

    def __init__(self, params: FieldParams | int, config: PartyConfig | None = None,
                 record_transcript: bool = False):
        self.config = config or PartyConfig()
        prime = params.prime if isinstance(params, FieldParams) else params
        self.params = params if isinstance(params, FieldParams) else None
        self.field = Field(prime)
        self.p = prime
        self.n, self.t = self.config.n, self.config.t
        self.width = self.field.bytes_per_element
        seed = self.config.seed
        self.party_rng = [random.Random(f"{seed}:party:{i}") for i in range(self.n)]
        self.dealer_rng = random.Random(f"{seed}:dealer")
        self.stats = RoundStats(bytes_per_party=[0] * self.n)
        # 64 extra bits make the mod-p reduction statistically uniform
        self._rbits = prime.bit_length() + 64
        self._lag_full = lagrange_at_zero(tuple(range(1, self.n + 1)), prime)
        self.debug = False
        self._batch_level = 0
        self._barrier = 0
        self._op_id = 0
        self._t0 = time.perf_counter()
        self._digest = hashlib.sha256() if record_transcript else None
        if self.config.transport == "tcp":
            self.transport = TcpTransport(self.n, self.config.port_base)
        else:
            self.transport = InProcTransport(self.n)

    # -- lifecycle -------------------------------------------------------
    def close(self) -> None:
        self.stats.wall_ms = (time.perf_counter() - self._t0) * 1000.0
        self.transport.close()

    def __enter__(self) -> "Runtime":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    @property
    def transcript_digest(self) -> str | None:
        return self._digest.hexdigest() if self._digest else None

    def diagnostic(self, msg: str) -> None:
        log.warning(msg)
        self.stats.diagnostics.append(msg)

    # -- scheduling ------------------------------------------------------
    @contextmanager
    def batch(self) -> Iterator[None]:
        """Interactive ops issued inside share rounds, subject only to data deps."""
        if self._batch_level == 0:
            self._barrier = self.stats.rounds
        self._batch_level += 1
        try:
            yield
        finally:
            self._batch_level -= 1

    @property
    def in_batch(self) -> bool:
        return self._batch_level > 0

    def _schedule(self, input_depth: int) -> int:
        barrier = self._barrier if self._batch_level else self.stats.rounds
        rnd = max(barrier, input_depth) + 1
        if rnd > self.stats.rounds:
            self.stats.rounds = rnd
        return rnd

    def _exchange(self, rnd: int, sub: list[list[list[int]]]) -> list[list[list[int]]]:
        """Send ``sub[i][j]`` from party i to party j (i != j); return what arrived.

        The diagonal stays local.  In-process delivery hands the payload
        lists over unchanged; TCP delivery serialises and re-parses them.
        """
        self._op_id += 1
        n, w = self.n, self.width
        sent = self.stats.bytes_per_party
        k = len(sub[0][0])
        per_party = (n - 1) * (_FRAME_OVERHEAD + k * w)
        for i in range(n):
            sent[i] += per_party
        encode = self._digest is not None or self.config.transport == "tcp"
        if not encode:
            return sub
        frames = {}
        for i in range(n):
            for j in range(n):
                if i != j:
                    data = encode_frame(rnd, self._op_id, i, j, sub[i][j], w)
                    if self._digest is not None:
                        self._digest.update(data)
                    frames[(i, j)] = data
        got = self.transport.deliver(frames, w)
        return [[sub[i][j] if i == j else got[(i, j)] for j in range(n)] for i in range(n)]

    # -- sharing helpers --------------------------------------------------
    def const(self, value: int) -> SharedValue:
        return SharedValue.constant(value, self.n, self.p)

    def dealer_share(self, value: int) -> SharedValue:
        """Trusted-dealer sharing (input ingestion and preprocessing)."""
        p, rng = self.p, self.dealer_rng
        coeffs = [value % p] + [rng.randrange(p) for _ in range(self.t)]
        return SharedValue([eval_poly(coeffs, i, p) for i in range(1, self.n + 1)], p)

    def dealer_rand_bits(self, count: int) -> list[SharedValue]:
        if count < 1:
            raise ValueError("count must be >= 1")
        self.stats.dealer_values += count
        rng = self.dealer_rng
        return [self.dealer_share(rng.getrandbits(1)) for _ in range(count)]

    def dealer_rand_int(self, bits: int) -> SharedValue:
        self.stats.dealer_values += 1
        return self.dealer_share(self.dealer_rng.getrandbits(bits) if bits else 0)

    # -- interactive protocols -------------------------------------------
    def _degree_reduce(self, local: list[list[int]], depth: int) -> list[SharedValue]:
        """Each party reshares its degree-2t values; receivers recombine.

        ``local[i][m]`` is party i's local product for item m.  One message
        per ordered party pair carries all items of the batch.
        """
        n, t, p = self.n, self.t, self.p
        k = len(local[0])
        rnd = self._schedule(depth)
        rb = self._rbits
        xs = range(1, n + 1)
        sub: list[list[list[int]]] = []
        for i in range(n):
            rng = self.party_rng[i]
            vals = local[i]
            if t == 1:
                cs = [rng.getrandbits(rb) % p for _ in range(k)]
                sub.append([[(v + c * x) % p for v, c in zip(vals, cs)] for x in xs])
            else:
                polys = [[v] + [rng.getrandbits(rb) % p for _ in range(t)] for v in vals]
                sub.append([[eval_poly(c, x, p) for c in polys] for x in xs])
        recv = self._exchange(rnd, sub)
        lag = self._lag_full
        if k == 1:
            shares = [sum(l * recv[i][j][0] for i, l in enumerate(lag)) % p for j in range(n)]
            return [SharedValue(shares, p, rnd)]
        cols = []
        for j in range(n):
            rows = [recv[i][j] for i in range(n)]
            cols.append([sum(l * c for l, c in zip(lag, col)) % p for col in zip(*rows)])
        return [SharedValue([cols[j][m] for j in range(n)], p, rnd) for m in range(k)]

    def _mul1(self, x: SharedValue, y: SharedValue) -> SharedValue:
        p, rb = self.p, self._rbits
        rnd = self._schedule(max(x.depth, y.depth))
        xs = range(1, self.n + 1)
        sub = []
        for a, b, rng in zip(x.shares, y.shares, self.party_rng):
            v = a * b
            c = rng.getrandbits(rb)
            sub.append([[(v + c * k) % p] for k in xs])
        recv = self._exchange(rnd, sub)
        lag = self._lag_full
        self.stats.interactive_ops += 1
        shares = [sum(l * row[j][0] for l, row in zip(lag, recv)) % p for j in range(self.n)]
        return SharedValue(shares, p, rnd)

    def mul_many(self, pairs: Sequence[tuple[Value, Value]]) -> list[Value]:
        """Products of pairs; shared-by-shared products share one round."""
        out: list[Value] = [0] * len(pairs)
        todo = []
        p = self.p
        for idx, (x, y) in enumerate(pairs):
            if isinstance(x, int):
                out[idx] = (x * y) if isinstance(y, int) else y.scale(x)
            elif isinstance(y, int):
                out[idx] = x.scale(y)
            else:
                todo.append(idx)
        if len(todo) == 1 and self.t == 1:
            x, y = pairs[todo[0]]
            out[todo[0]] = self._mul1(x, y)
        elif todo:
            depth = 0
            local = [[] for _ in range(self.n)]
            for idx in todo:
                x, y = pairs[idx]
                depth = max(depth, x.depth, y.depth)
                for i, (a, b) in enumerate(zip(x.shares, y.shares)):
                    local[i].append(a * b % p)
            res = self._degree_reduce(local, depth)
            self.stats.interactive_ops += len(todo)
            for idx, r in zip(todo, res):
                out[idx] = r
        return out

    def mul(self, x: Value, y: Value) -> Value:
        if isinstance(x, SharedValue) and isinstance(y, SharedValue):
            if self.t == 1:
                return self._mul1(x, y)
            return self.mul_many([(x, y)])[0]
        if isinstance(x, int):
            return x * y if isinstance(y, int) else y.scale(x)
        return x.scale(y)

    def dot_many(self, vectors: Sequence[tuple[Sequence[Value], Sequence[Value]]]) -> list[Value]:
        """Inner products; each costs one interactive op, all in one round."""
        n, p = self.n, self.p
        out: list[Value] = []
        todo = []
        for xs, ys in vectors:
            if len(xs) != len(ys) or not xs:
                raise ValueError("inner product needs equal non-empty lengths")
            pub = 0
            lin = [0] * n
            lin_depth = 0
            quad = []
            any_shared = False
            for x, y in zip(xs, ys):
                if isinstance(x, int) and isinstance(y, int):
                    pub += x * y
                elif isinstance(x, int) or isinstance(y, int):
                    any_shared = True
                    s, k = (y, x) if isinstance(x, int) else (x, y)
                    lin_depth = max(lin_depth, s.depth)
                    lin = [a + k * b for a, b in zip(lin, s.shares)]
                else:
                    any_shared = True
                    quad.append((x, y))
            if any_shared:
                out.append(SharedValue([(a + pub) % p for a in lin], p, lin_depth))
            else:
                out.append(pub % p)
            if quad:
                todo.append((len(out) - 1, quad))
        if todo:
            depth = 0
            local = [[] for _ in range(n)]
            for _, quad in todo:
                for x, y in quad:
                    d = x.depth if x.depth > y.depth else y.depth
                    if d > depth:
                        depth = d
                pairs = [(x.shares, y.shares) for x, y in quad]
                for i in range(n):
                    local[i].append(sum(u[i] * v[i] for u, v in pairs) % p)
            res = self._degree_reduce(local, depth)
            self.stats.interactive_ops += len(todo)
            for (pos, _), r in zip(todo, res):
                out[pos] = r + out[pos]
        return out

    def inner_product(self, xs: Sequence[Value], ys: Sequence[Value]) -> Value:
        return self.dot_many([(xs, ys)])[0]

    def open_many(self, values: Sequence[SharedValue]) -> tuple[list[int], int]:
        """Reconstruct values at every party; returns (values, round)."""
        n, t, p = self.n, self.t, self.p
        if not values:
            return [], 0
        depth = max(v.depth for v in values)
        rnd = self._schedule(depth)
        mine = [[v.shares[i] for v in values] for i in range(n)]
        recv_m = self._exchange(rnd, [[mine[i]] * n for i in range(n)])
        self.stats.interactive_ops += len(values)
        # every party receives the same n shares per value; reconstruct once
        recv = [recv_m[i][0] for i in range(n)]
        lag = lagrange_at_zero(tuple(range(1, t + 2)), p)
        out = []
        for k in range(len(values)):
            col = [recv[i][k] for i in range(n)]
            secret = sum(l * c for l, c in zip(lag, col[: t + 1])) % p
            if not _on_degree_t(col, t, p):
                raise HarnessError("inconsistent shares on open")
            out.append(secret)
        return out, rnd

    def open(self, v: Value) -> int:
        if isinstance(v, int):
            return v % self.p
        return self.open_many([v])[0][0]

    def reveal(self, v: Value) -> int:
        """Debug/oracle access: reconstruct without communication or accounting."""
        if isinstance(v, int):
            return v % self.p
        lag = self._lag_full
        return sum(l * s for l, s in zip(lag, v.shares)) % self.p

    def signed(self, v: int) -> int:
        return self.field.signed(v)


def _on_degree_t(col: Sequence[int], t: int, p: int) -> bool:
    n = len(col)
    if n <= t + 1:
        return True
    if t == 1:
        d = col[1] - col[0]
        return all((col[0] + d * k - col[k]) % p == 0 for k in range(2, n))
    from .shamir import interpolate_at
    base = list(enumerate(col[: t + 1], start=1))
    return all(interpolate_at(base, x, p) == col[x - 1] for x in range(t + 2, n + 1))
