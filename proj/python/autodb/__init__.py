"""Python access to the autodb engine, server, client and wire codec."""

from ._autodb import (
    MAX_REQUEST_PAYLOAD,
    MAX_RESPONSE_PAYLOAD,
    Client,
    Database,
    DbError,
    Server,
    decode_frame,
    decode_response,
    encode_frame,
    encode_response,
    run_loadgen,
    serial_oracle,
)

__all__ = [
    "MAX_REQUEST_PAYLOAD",
    "MAX_RESPONSE_PAYLOAD",
    "Client",
    "Database",
    "DbError",
    "Server",
    "decode_frame",
    "decode_response",
    "encode_frame",
    "encode_response",
    "run_loadgen",
    "serial_oracle",
]
