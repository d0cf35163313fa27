"""Client/server scheduler protocol over stream sockets.

Frame format (bit-exact): a 4-byte big-endian payload length, then the
payload.  The payload starts with a version byte (currently 1) and a tag
byte, followed by the tag-specific body.  Strings are a 2-byte big-endian
length plus UTF-8 bytes.

    tag 1  Request      app_id:str  function_id:str
    tag 2  Response     flag:u8 (0 x86, 1 ARM, 2 FPGA)
    tag 3  Completion   app_id:str  target:u8  exec_ms:f64  load:u32
    tag 4  KernelQuery  (empty)
    tag 5  KernelList   count:u16  kernel_id:str ...
    tag 6  Shutdown     (empty)
    tag 7  Ack          (empty)

The server funnels every state mutation through a single owner thread, so
any interleaving of client completions is applied in some serial order.
Clients are synchronous; a request that cannot reach the server (or times
out) falls back to flag 0, the x86 default under which applications are
launched anyway.
"""

from __future__ import annotations

import logging
import os
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass

from .model import PlatformSpec, TargetKind
from .scheduler import FLAG_X86, FpgaState, SchedulerError, decide
from .thresholds import ExecutionRecord, ThresholdEntry, update_on_completion

log = logging.getLogger("xartrek.protocol")

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 1 << 20
DEFAULT_TIMEOUT_MS = 1000.0

_TAG_REQUEST = 1
_TAG_RESPONSE = 2
_TAG_COMPLETION = 3
_TAG_KERNEL_QUERY = 4
_TAG_KERNEL_LIST = 5
_TAG_SHUTDOWN = 6
_TAG_ACK = 7


class ProtocolError(Exception):
    """Base class for framing and codec failures."""


class ShortFrameError(ProtocolError):
    """Frame or payload shorter than its declared length."""


class BadVersionError(ProtocolError):
    """Payload carries an unsupported version byte."""


class UnknownTagError(ProtocolError):
    """Payload carries an unknown message tag."""


class FrameFormatError(ProtocolError):
    """Payload body is malformed for its tag."""


class EndpointError(Exception):
    """Endpoint unusable (bind failure, bad address)."""


@dataclass(frozen=True)
class Request:
    app_id: str
    function_id: str


@dataclass(frozen=True)
class Response:
    flag: int

    def __post_init__(self):
        if self.flag not in (0, 1, 2):
            raise ValueError(f"flag must be 0, 1, or 2, got {self.flag}")


@dataclass(frozen=True)
class Completion:
    record: ExecutionRecord


@dataclass(frozen=True)
class KernelQuery:
    pass


@dataclass(frozen=True)
class KernelList:
    kernel_ids: tuple[str, ...]


@dataclass(frozen=True)
class Shutdown:
    pass


@dataclass(frozen=True)
class Ack:
    pass


WireMessage = Request | Response | Completion | KernelQuery | KernelList | Shutdown | Ack


# --- codec ------------------------------------------------------------------


def _pack_str(text: str) -> bytes:
    data = text.encode("utf-8")
    if len(data) > 0xFFFF:
        raise ValueError("string too long for wire format")
    return struct.pack(">H", len(data)) + data


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FrameFormatError("payload truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def f64(self) -> float:
        return struct.unpack(">d", self.take(8))[0]

    def string(self) -> str:
        length = self.u16()
        try:
            return self.take(length).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FrameFormatError(f"bad utf-8 in string: {exc}") from None

    def done(self) -> None:
        if self.pos != len(self.data):
            raise FrameFormatError(f"{len(self.data) - self.pos} trailing byte(s) in payload")


def encode(msg: WireMessage) -> bytes:
    """Serialize a message to a complete frame (length prefix included)."""
    body = bytes([PROTOCOL_VERSION])
    if isinstance(msg, Request):
        body += bytes([_TAG_REQUEST]) + _pack_str(msg.app_id) + _pack_str(msg.function_id)
    elif isinstance(msg, Response):
        body += bytes([_TAG_RESPONSE, msg.flag])
    elif isinstance(msg, Completion):
        rec = msg.record
        body += (
            bytes([_TAG_COMPLETION])
            + _pack_str(rec.app_id)
            + struct.pack(">BdI", int(rec.target), rec.exec_time_ms, rec.load_at_start)
        )
    elif isinstance(msg, KernelQuery):
        body += bytes([_TAG_KERNEL_QUERY])
    elif isinstance(msg, KernelList):
        body += bytes([_TAG_KERNEL_LIST]) + struct.pack(">H", len(msg.kernel_ids))
        for kernel_id in msg.kernel_ids:
            body += _pack_str(kernel_id)
    elif isinstance(msg, Shutdown):
        body += bytes([_TAG_SHUTDOWN])
    elif isinstance(msg, Ack):
        body += bytes([_TAG_ACK])
    else:
        raise TypeError(f"not a wire message: {msg!r}")
    return struct.pack(">I", len(body)) + body


def decode(frame: bytes) -> WireMessage:
    """Parse a complete frame back into a message.

    Total over arbitrary byte strings: every failure raises a
    :class:`ProtocolError` subclass, never anything else.
    """
    if len(frame) < 4:
        raise ShortFrameError(f"frame header needs 4 bytes, got {len(frame)}")
    (length,) = struct.unpack(">I", frame[:4])
    if length > MAX_FRAME_BYTES:
        raise FrameFormatError(f"declared payload of {length} bytes exceeds limit")
    payload = frame[4:]
    if len(payload) != length:
        raise ShortFrameError(f"declared {length} payload bytes, got {len(payload)}")
    return decode_payload(payload)


def decode_payload(payload: bytes) -> WireMessage:
    if len(payload) < 2:
        raise ShortFrameError("payload needs at least version and tag bytes")
    if payload[0] != PROTOCOL_VERSION:
        raise BadVersionError(f"unsupported version {payload[0]}")
    tag = payload[1]
    cur = _Cursor(payload[2:])
    try:
        if tag == _TAG_REQUEST:
            msg: WireMessage = Request(app_id=cur.string(), function_id=cur.string())
        elif tag == _TAG_RESPONSE:
            msg = Response(flag=cur.u8())
        elif tag == _TAG_COMPLETION:
            app_id = cur.string()
            target, exec_ms, load = cur.u8(), cur.f64(), cur.u32()
            msg = Completion(
                record=ExecutionRecord(
                    app_id=app_id,
                    target=TargetKind(target),
                    exec_time_ms=exec_ms,
                    load_at_start=load,
                )
            )
        elif tag == _TAG_KERNEL_QUERY:
            msg = KernelQuery()
        elif tag == _TAG_KERNEL_LIST:
            count = cur.u16()
            msg = KernelList(kernel_ids=tuple(cur.string() for _ in range(count)))
        elif tag == _TAG_SHUTDOWN:
            msg = Shutdown()
        elif tag == _TAG_ACK:
            msg = Ack()
        else:
            raise UnknownTagError(f"unknown message tag {tag}")
    except ProtocolError:
        raise
    except (ValueError, struct.error) as exc:
        raise FrameFormatError(str(exc)) from None
    cur.done()
    return msg


def read_frame(sock: socket.socket) -> WireMessage | None:
    """Read one message from a socket; None on clean EOF at a frame boundary."""
    header = _read_exact(sock, 4)
    if header is None:
        return None
    (length,) = struct.unpack(">I", header)
    if length > MAX_FRAME_BYTES:
        raise FrameFormatError(f"declared payload of {length} bytes exceeds limit")
    if length:
        payload = _read_exact(sock, length)
        if payload is None:
            raise ShortFrameError("connection closed mid-frame")
    else:
        payload = b""
    return decode_payload(payload)


def _read_exact(sock: socket.socket, n: int) -> bytes | None:
    """Read exactly n bytes; None on EOF before the first byte, error after."""
    chunks: list[bytes] = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            if chunks:
                raise ShortFrameError("connection closed mid-frame")
            return None
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def write_frame(sock: socket.socket, msg: WireMessage) -> None:
    sock.sendall(encode(msg))


# --- endpoints ---------------------------------------------------------------

ENDPOINT_ENV = "XARTREK_ENDPOINT"
TABLE_ENV = "XARTREK_TABLE"
DEFAULT_ENDPOINT = "/tmp/xartrek.sock"


def resolve_endpoint(endpoint: str | None) -> str:
    return endpoint or os.environ.get(ENDPOINT_ENV) or DEFAULT_ENDPOINT


def _parse_endpoint(endpoint: str) -> tuple[int, object]:
    """``host:port`` selects TCP; anything else is a unix socket path."""
    if ":" in endpoint and not endpoint.startswith(("/", ".")):
        host, _, port_text = endpoint.rpartition(":")
        try:
            port = int(port_text)
        except ValueError:
            raise EndpointError(f"bad port in endpoint {endpoint!r}") from None
        return socket.AF_INET, (host or "127.0.0.1", port)
    return socket.AF_UNIX, endpoint


def _connect(endpoint: str, timeout_ms: float) -> socket.socket:
    family, address = _parse_endpoint(endpoint)
    sock = socket.socket(family, socket.SOCK_STREAM)
    sock.settimeout(timeout_ms / 1000.0)
    try:
        sock.connect(address)
    except OSError:
        sock.close()
        raise
    return sock


# --- server ------------------------------------------------------------------


class SchedulerServer:
    """Accepts scheduler requests, answers them against the threshold table
    and the FPGA state, and applies completion reports.

    One acceptor thread, one reader thread per session, and a single owner
    thread that performs every state mutation (threshold updates, FPGA
    reconfigurations, load cache refresh on the sampler period).
    """

    def __init__(
        self,
        endpoint: str,
        table: dict[str, ThresholdEntry],
        fpga: FpgaState,
        load_source,
        platform: PlatformSpec | None = None,
    ):
        self.endpoint = endpoint
        self.platform = platform or PlatformSpec()
        self._table = dict(table)
        self._fpga = fpga
        self._load_source = load_source
        self._inbox: queue.Queue = queue.Queue()
        self._stopping = threading.Event()
        self._stopped = threading.Event()
        self._sessions: list[tuple[threading.Thread, socket.socket]] = []
        self._sessions_lock = threading.Lock()
        self._listener: socket.socket | None = None
        self._unix_path: str | None = None

    # -- lifecycle

    def start(self) -> None:
        family, address = _parse_endpoint(self.endpoint)
        listener = socket.socket(family, socket.SOCK_STREAM)
        try:
            if family == socket.AF_UNIX:
                self._unix_path = address  # type: ignore[assignment]
                if os.path.exists(self._unix_path):
                    os.unlink(self._unix_path)
            else:
                listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            listener.bind(address)
        except OSError as exc:
            listener.close()
            raise EndpointError(f"cannot bind {self.endpoint!r}: {exc}") from None
        listener.listen(128)
        listener.settimeout(0.1)
        self._listener = listener
        threading.Thread(target=self._owner_loop, name="xartrek-owner", daemon=True).start()
        threading.Thread(target=self._accept_loop, name="xartrek-accept", daemon=True).start()

    def wait(self, timeout: float | None = None) -> bool:
        return self._stopped.wait(timeout)

    def shutdown(self) -> None:
        reply: queue.Queue = queue.Queue()
        self._inbox.put(("shutdown", None, reply))
        reply.get()
        self._stopped.wait(5.0)

    def serve_forever(self) -> None:
        """Block until a Shutdown message arrives, then drain and return."""
        self.start()
        self._stopped.wait()

    def table_snapshot(self) -> dict[str, ThresholdEntry]:
        """Consistent copy of the threshold table (safe during and after a run)."""
        if self._stopping.is_set():
            self._stopped.wait(5.0)
            return dict(self._table)
        reply: queue.Queue = queue.Queue()
        self._inbox.put(("snapshot", None, reply))
        return reply.get()

    # -- threads

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self._stopping.is_set():
            try:
                conn, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            thread = threading.Thread(
                target=self._session_loop, args=(conn,), name="xartrek-session", daemon=True
            )
            with self._sessions_lock:
                self._sessions.append((thread, conn))
            thread.start()
        self._listener.close()
        if self._unix_path and os.path.exists(self._unix_path):
            os.unlink(self._unix_path)
        # unblock session readers, then wait for them to finish
        with self._sessions_lock:
            sessions = list(self._sessions)
        for _, conn in sessions:
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
        for thread, _ in sessions:
            thread.join(timeout=2.0)
        self._stopped.set()

    def _session_loop(self, conn: socket.socket) -> None:
        reply: queue.Queue = queue.Queue()
        with conn:
            while True:
                try:
                    msg = read_frame(conn)
                except ProtocolError as exc:
                    log.warning("closing session on malformed frame: %s", exc)
                    return
                except OSError:
                    return
                if msg is None:
                    return
                try:
                    if isinstance(msg, Request):
                        self._inbox.put(("request", msg, reply))
                        write_frame(conn, reply.get())
                    elif isinstance(msg, Completion):
                        self._inbox.put(("completion", msg.record, reply))
                        write_frame(conn, reply.get())
                    elif isinstance(msg, KernelQuery):
                        self._inbox.put(("kernels", None, reply))
                        write_frame(conn, reply.get())
                    elif isinstance(msg, Shutdown):
                        self._inbox.put(("shutdown", None, reply))
                        write_frame(conn, reply.get())
                        return
                    else:
                        log.warning("closing session on unexpected %s", type(msg).__name__)
                        return
                except OSError:
                    return

    def _owner_loop(self) -> None:
        period_s = max(self.platform.load_sampler_period_ms, 1.0) / 1000.0
        load = self._sample_load()
        next_sample = time.monotonic() + period_s
        while not self._stopping.is_set():
            timeout = max(0.0, next_sample - time.monotonic())
            try:
                item = self._inbox.get(timeout=timeout)
            except queue.Empty:
                load = self._sample_load()
                next_sample = time.monotonic() + period_s
                continue
            self._handle(item, load)
        # fail-safe replies for anything still queued after shutdown
        while True:
            try:
                kind, _, reply = self._inbox.get_nowait()
            except queue.Empty:
                break
            if kind == "request":
                reply.put(Response(flag=FLAG_X86))
            elif kind == "kernels":
                reply.put(KernelList(kernel_ids=()))
            elif kind == "snapshot":
                reply.put(dict(self._table))
            else:
                reply.put(Ack())

    def _handle(self, item, load: int) -> None:
        kind, arg, reply = item
        if kind == "request":
            reply.put(Response(flag=self._decide_flag(arg, load)))
        elif kind == "completion":
            entry = self._table.get(arg.app_id)
            if entry is not None:
                self._table[arg.app_id] = update_on_completion(entry, arg)
            else:
                log.warning("completion for unknown app %r ignored", arg.app_id)
            reply.put(Ack())
        elif kind == "kernels":
            reply.put(KernelList(kernel_ids=tuple(sorted(self._fpga.query_kernels()))))
        elif kind == "snapshot":
            reply.put(dict(self._table))
        elif kind == "shutdown":
            reply.put(Ack())
            self._stopping.set()

    def _sample_load(self) -> int:
        try:
            return max(0, int(self._load_source()))
        except Exception as exc:
            log.warning("load source failed (%s); using 0", exc)
            return 0

    def _decide_flag(self, request: Request, load: int) -> int:
        now_ms = time.monotonic() * 1000.0
        if self._fpga.reconfiguring is not None and now_ms >= self._fpga.reconfiguring[1]:
            self._fpga.complete_reconfiguration(now_ms)
        entry = self._table.get(request.app_id)
        if entry is None:
            log.warning("request for unknown app %r; defaulting to x86", request.app_id)
            return FLAG_X86
        try:
            decision = decide(load, entry, self._fpga)
        except SchedulerError as exc:
            log.warning("decision failed for %r (%s); defaulting to x86", request.app_id, exc)
            return FLAG_X86
        if decision.reconfigure is not None:
            if self._fpga.begin_reconfiguration(decision.reconfigure, now_ms, self.platform):
                log.info("reconfiguring FPGA to %s", decision.reconfigure)
        return decision.flag


def serve(
    endpoint: str,
    table: dict[str, ThresholdEntry],
    fpga: FpgaState,
    load_source,
    platform: PlatformSpec | None = None,
) -> SchedulerServer:
    """Run a scheduler server until a Shutdown message; returns the server
    so callers can inspect the final table."""
    server = SchedulerServer(endpoint, table, fpga, load_source, platform)
    server.serve_forever()
    return server


# --- clients -----------------------------------------------------------------


def request_once(
    endpoint: str,
    app_id: str,
    function_id: str,
    timeout_ms: float = DEFAULT_TIMEOUT_MS,
) -> int:
    """One request/response round trip; raises on any failure."""
    with _connect(endpoint, timeout_ms) as sock:
        write_frame(sock, Request(app_id=app_id, function_id=function_id))
        msg = read_frame(sock)
    if isinstance(msg, Response):
        return msg.flag
    raise ProtocolError(f"expected Response, got {type(msg).__name__}")


def report_once(
    endpoint: str,
    record: ExecutionRecord,
    timeout_ms: float = DEFAULT_TIMEOUT_MS,
) -> None:
    with _connect(endpoint, timeout_ms) as sock:
        write_frame(sock, Completion(record=record))
        msg = read_frame(sock)
    if not isinstance(msg, Ack):
        raise ProtocolError(f"expected Ack, got {type(msg).__name__}")


def client_request(
    endpoint: str,
    app_id: str,
    function_id: str,
    timeout_ms: float = DEFAULT_TIMEOUT_MS,
) -> int:
    """Ask where to run a function.  Any failure (dead endpoint, timeout,
    protocol error) falls back to flag 0: stay on x86."""
    try:
        return request_once(endpoint, app_id, function_id, timeout_ms)
    except (OSError, ProtocolError) as exc:
        log.warning("scheduler request failed (%s); falling back to x86", exc)
        return FLAG_X86


def client_report(
    endpoint: str,
    record: ExecutionRecord,
    timeout_ms: float = DEFAULT_TIMEOUT_MS,
) -> bool:
    """Report a completed execution; True when the server acknowledged it."""
    try:
        report_once(endpoint, record, timeout_ms)
        return True
    except (OSError, ProtocolError) as exc:
        log.warning("completion report failed (%s)", exc)
        return False


def client_query_kernels(
    endpoint: str,
    timeout_ms: float = DEFAULT_TIMEOUT_MS,
) -> tuple[str, ...]:
    with _connect(endpoint, timeout_ms) as sock:
        write_frame(sock, KernelQuery())
        msg = read_frame(sock)
    if isinstance(msg, KernelList):
        return msg.kernel_ids
    raise ProtocolError(f"expected KernelList, got {type(msg).__name__}")


def client_shutdown(endpoint: str, timeout_ms: float = DEFAULT_TIMEOUT_MS) -> bool:
    try:
        with _connect(endpoint, timeout_ms) as sock:
            write_frame(sock, Shutdown())
            msg = read_frame(sock)
        return isinstance(msg, Ack)
    except (OSError, ProtocolError) as exc:
        log.warning("shutdown request failed (%s)", exc)
        return False
