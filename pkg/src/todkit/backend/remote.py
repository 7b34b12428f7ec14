"""Wire protocol for serving and consuming a generation backend remotely.

Frames are 4-byte big-endian length prefixes followed by UTF-8 JSON.
Request: ``{"version": 1, "input": str, "max_tokens": int}``.
Response: ``{"version": 1, "output": str, "token_count": int}`` on success or
``{"version": 1, "error": str}`` when the peer failed.  A version mismatch is
a protocol error; timeouts and connection failures surface as transport
errors, never as empty generations.  Each request uses its own connection,
so any number may be in flight concurrently.
"""

from __future__ import annotations

import json
import socket
import socketserver
import struct
import threading
import time

from ..errors import ProtocolError, TransportError, TransportTimeout
from . import GenerationBackend, GenerationRequest, GenerationResult

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 16 * 1024 * 1024
_LENGTH = struct.Struct(">I")


def _send_frame(sock: socket.socket, payload: dict) -> None:
    data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
    if len(data) > MAX_FRAME_BYTES:
        raise ProtocolError(f"frame of {len(data)} bytes exceeds the {MAX_FRAME_BYTES} limit")
    sock.sendall(_LENGTH.pack(len(data)) + data)


def _recv_exactly(sock: socket.socket, count: int) -> bytes:
    chunks = []
    while count:
        chunk = sock.recv(count)
        if not chunk:
            raise TransportError("connection closed mid-frame")
        chunks.append(chunk)
        count -= len(chunk)
    return b"".join(chunks)


def _recv_frame(sock: socket.socket) -> dict:
    (length,) = _LENGTH.unpack(_recv_exactly(sock, _LENGTH.size))
    if length > MAX_FRAME_BYTES:
        raise ProtocolError(f"peer announced a {length}-byte frame; refusing")
    try:
        payload = json.loads(_recv_exactly(sock, length).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed frame: {exc}") from exc
    if not isinstance(payload, dict):
        raise ProtocolError("frame payload is not an object")
    if payload.get("version") != PROTOCOL_VERSION:
        raise ProtocolError(
            f"peer speaks protocol version {payload.get('version')!r}, "
            f"expected {PROTOCOL_VERSION}"
        )
    return payload


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    host, _, port = endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise ProtocolError(f"endpoint must look like host:port, got {endpoint!r}")
    return host, int(port)


class RemoteBackend:
    """Client side of the wire protocol; one connection per request."""

    def __init__(self, endpoint: str | tuple[str, int], timeout: float = 30.0):
        self.address = parse_endpoint(endpoint) if isinstance(endpoint, str) else endpoint
        self.timeout = timeout

    def generate(self, request: GenerationRequest) -> GenerationResult:
        started = time.perf_counter()
        try:
            with socket.create_connection(self.address, timeout=self.timeout) as sock:
                _send_frame(
                    sock,
                    {
                        "version": PROTOCOL_VERSION,
                        "input": request.input_text,
                        "max_tokens": request.max_tokens,
                    },
                )
                response = _recv_frame(sock)
        except socket.timeout as exc:
            raise TransportTimeout(
                f"no response from {self.address} within {self.timeout}s"
            ) from exc
        except (ConnectionError, OSError) as exc:
            raise TransportError(f"cannot reach {self.address}: {exc}") from exc
        if "error" in response:
            raise ProtocolError(f"peer reported failure: {response['error']}")
        if "output" not in response or "token_count" not in response:
            raise ProtocolError(f"response frame is missing fields: {sorted(response)}")
        return GenerationResult(
            output_text=str(response["output"]),
            token_count=int(response["token_count"]),
            duration=time.perf_counter() - started,
        )


class _Handler(socketserver.BaseRequestHandler):
    def handle(self) -> None:  # one frame in, one frame out
        backend: GenerationBackend = self.server.backend  # type: ignore[attr-defined]
        try:
            frame = _recv_frame(self.request)
        except (ProtocolError, TransportError) as exc:
            try:
                _send_frame(self.request, {"version": PROTOCOL_VERSION, "error": str(exc)})
            except OSError:
                pass
            return
        try:
            result = backend.generate(
                GenerationRequest(str(frame["input"]), int(frame["max_tokens"]))
            )
            reply = {
                "version": PROTOCOL_VERSION,
                "output": result.output_text,
                "token_count": result.token_count,
            }
        except Exception as exc:  # surface backend failures to the client
            reply = {"version": PROTOCOL_VERSION, "error": f"{type(exc).__name__}: {exc}"}
        try:
            _send_frame(self.request, reply)
        except OSError:
            pass


class _Server(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True


class BackendServer:
    """Serves a backend over the wire protocol on a background thread."""

    def __init__(self, backend: GenerationBackend, host: str = "127.0.0.1", port: int = 0):
        self._server = _Server((host, port), _Handler)
        self._server.backend = backend  # type: ignore[attr-defined]
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    @property
    def endpoint(self) -> str:
        host, port = self.address
        return f"{host}:{port}"

    def start(self) -> "BackendServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "BackendServer":
        return self.start()

    def __exit__(self, *exc_info: object) -> None:
        self.stop()


def serve(backend: GenerationBackend, host: str = "127.0.0.1", port: int = 0) -> BackendServer:
    """Start serving in the background; returns the running server."""
    return BackendServer(backend, host, port).start()
